"""Line-oriented parsers for the declarative input documents.

Four document kinds share one surface style: a `#noether-spec v1` magic
first line, then one declaration per line.  Lines starting with `#` are
comments, blank lines are ignored.

  .alg  operator algebras         (parse_algebra)
  .mr   MR structural descriptors (parse_mr_descriptor)
  .sut  mini-language programs    (parse_sut_file)
  .cfg  mutator configuration     (parse_mutator_config)

Parsers are total: any input either parses or raises SpecSyntaxError /
SpecSemanticError with line/column diagnostics, never anything else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import minilang
from .algebra import (
    ActsOn,
    BlockKind,
    Operator,
    OperatorAlgebra,
    Regime,
    RewriteDecl,
    block_from_tag,
    canonical_sorted,
)
from .reachability import MRDescriptor

HEADER = "#noether-spec v1"

HOMOGENEITY_TAGS = ("degree-1", "positive-scale-invariant", "none")

# grammar-level category vocabulary; mirrored by the mutation engine's enum
MUTATOR_CATEGORY_NAMES = (
    "CONDITIONALS_BOUNDARY",
    "INCREMENTS",
    "INVERT_NEGS",
    "MATH",
    "NEGATE_CONDITIONALS",
    "RETURN_VALS",
    "CALL_REMOVAL",
)


class SpecSyntaxError(Exception):
    """Malformed document surface; line and col are 1-based."""

    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        detail = f"line {line}, column {col}: expected {expected}"
        if found:
            detail += f", found {found!r}"
        super().__init__(detail)
        self.line = line
        self.col = col
        self.expected = expected


class SpecSemanticError(Exception):
    """Well-formed surface, inconsistent meaning."""

    def __init__(self, name: str, reason: str):
        super().__init__(f"{name}: {reason}")
        self.name = name
        self.reason = reason


def _content_lines(text: str) -> List[Tuple[int, str]]:
    """(lineno, stripped-line) pairs after header/comment/blank filtering."""
    raw = text.splitlines()
    lines = []
    header_seen = False
    for i, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if not header_seen:
            if stripped != HEADER:
                raise SpecSyntaxError(i, 1, f"header {HEADER!r}", stripped[:40])
            header_seen = True
            continue
        if stripped.startswith("#"):
            continue
        lines.append((i, stripped))
    if not header_seen:
        raise SpecSyntaxError(1, 1, f"header {HEADER!r}", "end of document")
    return lines


def _split_keyword(line: str) -> Tuple[str, str]:
    parts = line.split(None, 1)
    return parts[0], parts[1] if len(parts) > 1 else ""


def _parse_attrs(lineno: int, line: str, tokens: Sequence[str], allowed: Sequence[str]) -> Dict[str, str]:
    attrs: Dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            col = line.find(tok) + 1
            raise SpecSyntaxError(lineno, col, "key=value attribute", tok)
        key, value = tok.split("=", 1)
        if key not in allowed:
            col = line.find(tok) + 1
            raise SpecSyntaxError(lineno, col, f"one of {', '.join(allowed)}", key)
        if key in attrs:
            raise SpecSemanticError(key, f"duplicate attribute on line {lineno}")
        attrs[key] = value
    return attrs


def _parse_int(lineno: int, line: str, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise SpecSyntaxError(lineno, line.find(value) + 1 if value else 1, f"integer for {key}", value)


def _parse_float(lineno: int, line: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise SpecSyntaxError(lineno, line.find(value) + 1 if value else 1, f"decimal for {key}", value)


def _block_list(lineno: int, line: str, value: str) -> Tuple[BlockKind, ...]:
    kinds = []
    for tag in value.split(","):
        tag = tag.strip()
        try:
            kinds.append(block_from_tag(tag))
        except KeyError:
            raise SpecSemanticError(tag, f"unknown block tag on line {lineno}")
    return tuple(kinds)


def _comma_list(value: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in value.split(",") if x.strip())


# ---------------------------------------------------------------------------
# Algebra documents


def parse_algebra(text: str) -> OperatorAlgebra:
    lines = _content_lines(text)
    name: Optional[str] = None
    operators: List[Operator] = []
    generators: Optional[Tuple[str, ...]] = None
    rewrites: List[RewriteDecl] = []
    labels: Dict[BlockKind, str] = {}

    for lineno, line in lines:
        keyword, rest = _split_keyword(line)
        if keyword == "algebra":
            if name is not None:
                raise SpecSemanticError(rest or "algebra", f"second algebra line at {lineno}")
            if not rest:
                raise SpecSyntaxError(lineno, len(line) + 1, "an algebra name")
            name = rest.split()[0]
        elif keyword == "operator":
            operators.append(_parse_operator(lineno, line, rest))
        elif keyword == "generators":
            if generators is not None:
                raise SpecSemanticError("generators", f"second generators line at {lineno}")
            generators = _comma_list(rest)
        elif keyword == "rewrite":
            rewrites.append(_parse_rewrite(lineno, line, rest))
        elif keyword == "label":
            block, text_label = _parse_label(lineno, line, rest)
            if block in labels:
                raise SpecSemanticError(block.tag, f"duplicate label override at line {lineno}")
            labels[block] = text_label
        else:
            raise SpecSyntaxError(
                lineno, 1, "algebra, operator, generators, rewrite or label", keyword
            )

    if name is None:
        raise SpecSyntaxError(len(text.splitlines()) + 1, 1, "an algebra declaration", "end of document")
    try:
        return OperatorAlgebra(
            name=name,
            operators=tuple(operators),
            generators=generators or (),
            semiring_rules=tuple(rewrites),
            label_overrides=labels,
        )
    except ValueError as exc:
        raise SpecSemanticError(name, str(exc))


def _parse_operator(lineno: int, line: str, rest: str) -> Operator:
    tokens = rest.split()
    if not tokens:
        raise SpecSyntaxError(lineno, len(line) + 1, "an operator name")
    op_name = tokens[0]
    attrs = _parse_attrs(lineno, line, tokens[1:], ("acts", "blocks", "regime", "size", "cost"))
    if "acts" not in attrs:
        raise SpecSyntaxError(lineno, len(line) + 1, "acts=<input|output|both|param>")
    if "blocks" not in attrs:
        raise SpecSyntaxError(lineno, len(line) + 1, "blocks=<comma-list>")
    try:
        acts = ActsOn(attrs["acts"])
    except ValueError:
        raise SpecSemanticError(op_name, f"unknown acts value {attrs['acts']!r} on line {lineno}")
    blocks = _block_list(lineno, line, attrs["blocks"])
    regime = Regime.NONE
    if "regime" in attrs:
        if attrs["regime"] not in ("finite", "lie", "trunc"):
            raise SpecSemanticError(op_name, f"unknown regime {attrs['regime']!r} on line {lineno}")
        regime = Regime(attrs["regime"])
        if "size" not in attrs:
            raise SpecSyntaxError(lineno, len(line) + 1, "size=<int> alongside regime")
    size = _parse_int(lineno, line, "size", attrs["size"]) if "size" in attrs else None
    cost = _parse_int(lineno, line, "cost", attrs["cost"]) if "cost" in attrs else 1
    try:
        return Operator(
            name=op_name,
            acts_on=acts,
            block_tags=frozenset(blocks),
            regime=regime,
            group_order_or_dim=size,
            cost_hint=cost,
        )
    except ValueError as exc:
        raise SpecSemanticError(op_name, str(exc))


def _parse_rewrite(lineno: int, line: str, rest: str) -> RewriteDecl:
    tokens = rest.split(None, 1)
    if not tokens:
        raise SpecSyntaxError(lineno, len(line) + 1, "a rewrite rule name")
    rule_name = tokens[0]
    tail = tokens[1] if len(tokens) > 1 else ""
    # lhs and rhs are single tokens; guard swallows the rest of the line
    m = re.match(r"lhs=(\S+)\s+rhs=(\S+)\s+guard=(.*)$", tail)
    if m is None:
        raise SpecSyntaxError(lineno, len(line) + 1, "lhs=<expr> rhs=<expr> guard=<text>")
    return RewriteDecl(rule_name, m.group(1), m.group(2), m.group(3).strip())


def _parse_label(lineno: int, line: str, rest: str) -> Tuple[BlockKind, str]:
    if "=" not in rest:
        raise SpecSyntaxError(lineno, len(line) + 1, "<block-tag>=<label>")
    tag, label = rest.split("=", 1)
    tag = tag.strip()
    label = label.strip()
    try:
        block = block_from_tag(tag)
    except KeyError:
        raise SpecSemanticError(tag, f"unknown block tag on line {lineno}")
    if not label:
        raise SpecSyntaxError(lineno, len(line) + 1, "a nonempty label")
    return block, label


def algebra_to_text(algebra: OperatorAlgebra) -> str:
    out = [HEADER, f"algebra {algebra.name}"]
    for op in algebra.operators:
        parts = [f"operator {op.name}", f"acts={op.acts_on.value}"]
        tags = ",".join(k.tag for k in canonical_sorted(op.block_tags))
        parts.append(f"blocks={tags}")
        if op.regime is not Regime.NONE:
            parts.append(f"regime={op.regime.value}")
            parts.append(f"size={op.group_order_or_dim}")
        if op.cost_hint != 1:
            parts.append(f"cost={op.cost_hint}")
        out.append(" ".join(parts))
    if algebra.generators:
        out.append("generators " + ",".join(algebra.generators))
    for rule in algebra.semiring_rules:
        out.append(f"rewrite {rule.name} lhs={rule.lhs} rhs={rule.rhs} guard={rule.guard}")
    for block in canonical_sorted(algebra.label_overrides):
        out.append(f"label {block.tag}={algebra.label_overrides[block]}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# MR descriptor documents

_MR_KEYS = ("output", "form", "diff_order", "directions", "adjoint", "tolerance")


def parse_mr_descriptor(text: str) -> MRDescriptor:
    lines = _content_lines(text)
    if not lines:
        raise SpecSyntaxError(len(text.splitlines()) + 1, 1, "an mr declaration", "end of document")
    name: Optional[str] = None
    fields: Dict[str, object] = {}
    for lineno, line in lines:
        keyword, rest = _split_keyword(line)
        if keyword == "mr":
            if name is not None:
                raise SpecSemanticError(rest or "mr", f"second mr line at {lineno}")
            if not rest:
                raise SpecSyntaxError(lineno, len(line) + 1, "an MR name")
            name = rest.split()[0]
            continue
        if name is None:
            raise SpecSyntaxError(lineno, 1, "the mr declaration first", keyword)
        if "=" not in line:
            raise SpecSyntaxError(lineno, 1, "key=value", line[:40])
        tokens = line.split()
        attrs = _parse_attrs(lineno, line, tokens, _MR_KEYS + ("unit",))
        for key, value in attrs.items():
            if key in fields:
                raise SpecSemanticError(name, f"duplicate field {key!r} on line {lineno}")
            if key == "diff_order" or key == "directions":
                fields[key] = _parse_int(lineno, line, key, value)
            elif key == "tolerance":
                fields[key] = _parse_float(lineno, line, key, value)
            else:
                fields[key] = value
    if name is None:
        raise SpecSyntaxError(len(text.splitlines()) + 1, 1, "an mr declaration", "end of document")
    kwargs = dict(
        output_domain=fields.get("output", "program-output"),
        relation_form=fields.get("form", "equivariance"),
        difference_order=fields.get("diff_order", 1),
        parameter_directions=fields.get("directions", 1),
        adjoint_indexing=fields.get("adjoint", "fixed"),
        tolerance=fields.get("tolerance", 1e-9),
        unit=fields.get("unit", "absolute"),
    )
    if kwargs["relation_form"] == "mixed-difference" and kwargs["difference_order"] < 2:
        raise SpecSemanticError(name, "mixed-difference form needs diff_order >= 2")
    try:
        return MRDescriptor(name=name, **kwargs)  # type: ignore[arg-type]
    except ValueError as exc:
        raise SpecSemanticError(name, str(exc))


def descriptor_to_text(mr: MRDescriptor) -> str:
    return "\n".join(
        [
            HEADER,
            f"mr {mr.name}",
            f"output={mr.output_domain}",
            f"form={mr.relation_form}",
            f"diff_order={mr.difference_order}",
            f"directions={mr.parameter_directions}",
            f"adjoint={mr.adjoint_indexing}",
            f"tolerance={mr.tolerance!r} unit={mr.unit}",
        ]
    ) + "\n"


# ---------------------------------------------------------------------------
# SUT documents


@dataclass(frozen=True)
class SutDecl:
    """One parsed SUT: header metadata plus the type-checked program."""

    name: str
    params: Tuple[str, ...]
    blocks: frozenset
    homogeneity: str
    domain: str
    program: minilang.Program


def parse_sut_file(text: str) -> Tuple[SutDecl, ...]:
    lines = _content_lines(text)
    decls: List[SutDecl] = []
    i = 0
    while i < len(lines):
        lineno, line = lines[i]
        keyword, rest = _split_keyword(line)
        if keyword != "sut":
            raise SpecSyntaxError(lineno, 1, "a sut declaration", keyword)
        header = _parse_sut_header(lineno, line, rest)
        i += 1
        body: List[Tuple[int, str]] = []
        while i < len(lines) and not lines[i][1].startswith("sut "):
            body.append(lines[i])
            i += 1
        decls.append(_assemble_sut(lineno, header, body))
    if not decls:
        raise SpecSyntaxError(len(text.splitlines()) + 1, 1, "a sut declaration", "end of document")
    names = [d.name for d in decls]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SpecSemanticError(dupes[0], "duplicate sut name")
    return tuple(decls)


def _parse_sut_header(lineno: int, line: str, rest: str):
    open_paren = rest.find("(")
    close_paren = rest.find(")")
    if open_paren < 0 or close_paren < open_paren:
        raise SpecSyntaxError(lineno, len(line) + 1, "sut <name>(<params>)")
    sut_name = rest[:open_paren].strip()
    if not sut_name:
        raise SpecSyntaxError(lineno, line.find("(") + 1, "a sut name before (")
    params = _comma_list(rest[open_paren + 1 : close_paren])
    for p in params:
        if not p.isidentifier():
            raise SpecSyntaxError(lineno, line.find(p) + 1 if p in line else 1, "a parameter identifier", p)
    tokens = rest[close_paren + 1 :].split()
    attrs = _parse_attrs(lineno, line, tokens, ("blocks", "homogeneity", "domain"))
    if "blocks" not in attrs:
        raise SpecSyntaxError(lineno, len(line) + 1, "blocks=<comma-list>")
    blocks = frozenset(_block_list(lineno, line, attrs["blocks"]))
    homogeneity = attrs.get("homogeneity", "none")
    if homogeneity not in HOMOGENEITY_TAGS:
        raise SpecSemanticError(sut_name, f"unknown homogeneity tag {homogeneity!r} on line {lineno}")
    domain = attrs.get("domain", "real")
    if domain not in ("real", "int"):
        raise SpecSemanticError(sut_name, f"unknown domain tag {domain!r} on line {lineno}")
    return sut_name, params, blocks, homogeneity, domain


def _assemble_sut(header_lineno: int, header, body: List[Tuple[int, str]]) -> SutDecl:
    sut_name, params, blocks, homogeneity, domain = header
    statements = []
    for lineno, line in body:
        try:
            statements.append(minilang.parse_statement(line))
        except minilang.ExprSyntaxError as exc:
            raise SpecSyntaxError(lineno, exc.col, exc.expected)
        except minilang.ArityError as exc:
            raise SpecSemanticError(sut_name, f"line {lineno}: {exc}")
    try:
        program = minilang.assemble_program(sut_name, params, statements)
    except (minilang.TypeCheckError, minilang.ArityError) as exc:
        raise SpecSemanticError(sut_name, str(exc))
    return SutDecl(sut_name, tuple(params), blocks, homogeneity, domain, program)


def sut_file_to_text(decls: Sequence[SutDecl]) -> str:
    out = [HEADER]
    for d in decls:
        parts = [f"sut {d.name}({', '.join(d.params)})"]
        parts.append("blocks=" + ",".join(k.tag for k in canonical_sorted(d.blocks)))
        parts.append(f"homogeneity={d.homogeneity}")
        if d.domain != "real":
            parts.append(f"domain={d.domain}")
        out.append(" ".join(parts))
        out.extend(minilang.program_body_lines(d.program))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Mutator configuration documents


@dataclass(frozen=True)
class MutatorConfig:
    categories: Tuple[str, ...] = MUTATOR_CATEGORY_NAMES
    seed: int = 0
    suts: Tuple[str, ...] = ()
    matrix_patches: Mapping = field(default_factory=dict)  # (category, BlockKind) -> effect
    overrides: Mapping = field(default_factory=dict)  # (sut, category, BlockKind) -> effect


def parse_mutator_config(text: str) -> MutatorConfig:
    lines = _content_lines(text)
    categories: Optional[Tuple[str, ...]] = None
    seed = 0
    seed_seen = False
    suts: Tuple[str, ...] = ()
    matrix_patches: Dict = {}
    overrides: Dict = {}
    for lineno, line in lines:
        keyword, rest = _split_keyword(line)
        if keyword == "mutators":
            if categories is not None:
                raise SpecSemanticError("mutators", f"second mutators line at {lineno}")
            cats = _comma_list(rest)
            for c in cats:
                if c not in MUTATOR_CATEGORY_NAMES:
                    raise SpecSemanticError(c, f"unknown mutator category on line {lineno}")
            categories = cats
        elif keyword == "seed":
            if seed_seen:
                raise SpecSemanticError("seed", f"second seed line at {lineno}")
            seed = _parse_int(lineno, line, "seed", rest.strip())
            seed_seen = True
        elif keyword == "suts":
            suts = _comma_list(rest)
        elif keyword == "matrix":
            cat, block, effect = _parse_cell(lineno, line, rest, with_sut=False)[1:]
            key = (cat, block)
            if key in matrix_patches:
                raise SpecSemanticError(cat, f"duplicate matrix patch at line {lineno}")
            matrix_patches[key] = effect
        elif keyword == "override":
            sut, cat, block, effect = _parse_cell(lineno, line, rest, with_sut=True)
            key = (sut, cat, block)
            if key in overrides:
                raise SpecSemanticError(cat, f"duplicate override at line {lineno}")
            overrides[key] = effect
        else:
            raise SpecSyntaxError(lineno, 1, "mutators, seed, suts, matrix or override", keyword)
    return MutatorConfig(
        categories=categories if categories is not None else MUTATOR_CATEGORY_NAMES,
        seed=seed,
        suts=suts,
        matrix_patches=matrix_patches,
        overrides=overrides,
    )


def _parse_cell(lineno: int, line: str, rest: str, with_sut: bool):
    tokens = rest.split()
    want = 3 if with_sut else 2
    if len(tokens) != want:
        shape = "<sut> <CATEGORY> <BLOCK>=<effect>" if with_sut else "<CATEGORY> <BLOCK>=<effect>"
        raise SpecSyntaxError(lineno, len(line) + 1, shape)
    sut = tokens[0] if with_sut else ""
    cat = tokens[-2]
    if cat not in MUTATOR_CATEGORY_NAMES:
        raise SpecSemanticError(cat, f"unknown mutator category on line {lineno}")
    cell = tokens[-1]
    if "=" not in cell:
        raise SpecSyntaxError(lineno, line.find(cell) + 1, "<BLOCK>=<preserves|breaks>", cell)
    tag, effect = cell.split("=", 1)
    try:
        block = block_from_tag(tag)
    except KeyError:
        raise SpecSemanticError(tag, f"unknown block tag on line {lineno}")
    if effect not in ("preserves", "breaks"):
        raise SpecSemanticError(cat, f"effect must be preserves or breaks, got {effect!r}")
    return sut, cat, block, effect


def mutator_config_to_text(cfg: MutatorConfig) -> str:
    out = [HEADER, "mutators " + ",".join(cfg.categories), f"seed {cfg.seed}"]
    if cfg.suts:
        out.append("suts " + ",".join(cfg.suts))
    for (cat, block), effect in sorted(cfg.matrix_patches.items(), key=lambda kv: (kv[0][0], kv[0][1].tag)):
        out.append(f"matrix {cat} {block.tag}={effect}")
    for (sut, cat, block), effect in sorted(cfg.overrides.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2].tag)):
        out.append(f"override {sut} {cat} {block.tag}={effect}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Document sniffing (used by the CLI)


@dataclass(frozen=True)
class SpecDocument:
    kind: str  # algebra | mr | sut | mutators
    payload: object


def load_document(text: str) -> SpecDocument:
    """Parse a document by sniffing its first declaration keyword."""
    lines = _content_lines(text)
    if not lines:
        raise SpecSyntaxError(len(text.splitlines()) + 1, 1, "a declaration", "end of document")
    keyword = lines[0][1].split(None, 1)[0]
    if keyword == "algebra":
        return SpecDocument("algebra", parse_algebra(text))
    if keyword == "mr":
        return SpecDocument("mr", parse_mr_descriptor(text))
    if keyword == "sut":
        return SpecDocument("sut", parse_sut_file(text))
    if keyword in ("mutators", "seed", "suts", "matrix", "override"):
        return SpecDocument("mutators", parse_mutator_config(text))
    raise SpecSyntaxError(lines[0][0], 1, "algebra, mr, sut or mutator configuration", keyword)
