"""Mutation engine over the mini-language.

Seven mutator categories generate one mutant per applicable (site,
category) pair.  Each surviving mutant is classified D1/D2 against the
category-by-block compatibility matrix (with per-subject overrides for
case-dependent cells) and tagged homogeneity-preserving or -breaking by
rule, never by running the kill experiment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from . import minilang, zoo
from .algebra import BlockKind, block_from_tag
from .minilang import Assign, Bin, Call, Cmp, Cond, Const, DomainError, Expr, Neg, Program, Var
from .specfile import MUTATOR_CATEGORY_NAMES, MutatorConfig, SutDecl


class MutatorCategory(enum.Enum):
    CONDITIONALS_BOUNDARY = "CONDITIONALS_BOUNDARY"
    INCREMENTS = "INCREMENTS"
    INVERT_NEGS = "INVERT_NEGS"
    MATH = "MATH"
    NEGATE_CONDITIONALS = "NEGATE_CONDITIONALS"
    RETURN_VALS = "RETURN_VALS"
    CALL_REMOVAL = "CALL_REMOVAL"


assert tuple(c.name for c in MutatorCategory) == MUTATOR_CATEGORY_NAMES

PRESERVES = "preserves"
BREAKS = "breaks"
CASE = "case-dependent"

_MATH_SWAP = {"+": "-", "-": "+", "*": "/", "/": "*", "%": "*"}


class MissingOverride(Exception):
    """A populated case-dependent matrix cell with no per-SUT override."""

    def __init__(self, sut: str, category: str, block: BlockKind):
        super().__init__(
            f"case-dependent cell ({category}, {block.tag}) is populated for "
            f"{sut!r} and has no override"
        )
        self.sut = sut
        self.category = category
        self.block = block


def _row(cats: str) -> Tuple[str, ...]:
    decode = {"o": PRESERVES, "x": BREAKS, "~": CASE}
    return tuple(decode[c] for c in cats)


# column order G, O_le, T_star, T_rev, L_star, D_star, E_star, B_rel
_COLUMNS = (
    BlockKind.G,
    BlockKind.O_LE,
    BlockKind.T_STAR,
    BlockKind.T_REV,
    BlockKind.L_STAR,
    BlockKind.D_STAR,
    BlockKind.E_STAR,
    BlockKind.B_REL,
)

_DEFAULT_ROWS: Mapping[str, Tuple[str, ...]] = {
    "CONDITIONALS_BOUNDARY": _row("oxooo~oo"),
    "INCREMENTS": _row("xxxxx~oo"),
    "INVERT_NEGS": _row("~x~x~~oo"),
    "MATH": _row("x~xxox~o"),
    "NEGATE_CONDITIONALS": _row("xx~x~x~x"),
    "RETURN_VALS": _row("ooxxoo~o"),
    "CALL_REMOVAL": _row("ooooox~o"),
}

DEFAULT_CELLS: Mapping[Tuple[str, BlockKind], str] = {
    (cat, block): effect
    for cat, row in _DEFAULT_ROWS.items()
    for block, effect in zip(_COLUMNS, row)
}

# Overrides for every case-dependent cell a bundled subject actually
# populates with at least one mutation site.  Each records an argued fact
# about the subject body, not a tuning knob.
BUNDLED_OVERRIDES: Mapping[Tuple[str, str, BlockKind], str] = {
    ("midpoint", "MATH", BlockKind.O_LE): PRESERVES,
    ("powerSig", "MATH", BlockKind.O_LE): PRESERVES,
    ("caddSig", "MATH", BlockKind.O_LE): BREAKS,
    ("gcdSig", "MATH", BlockKind.O_LE): BREAKS,
    ("gcdSig", "INVERT_NEGS", BlockKind.G): PRESERVES,
    ("gcdSig", "INVERT_NEGS", BlockKind.L_STAR): PRESERVES,
    ("lcmSig", "INVERT_NEGS", BlockKind.G): PRESERVES,
    ("lcmSig", "INVERT_NEGS", BlockKind.L_STAR): PRESERVES,
    ("gcdSig", "NEGATE_CONDITIONALS", BlockKind.L_STAR): PRESERVES,
    ("lcmSig", "NEGATE_CONDITIONALS", BlockKind.L_STAR): PRESERVES,
    ("clamp", "NEGATE_CONDITIONALS", BlockKind.L_STAR): PRESERVES,
    ("signum", "NEGATE_CONDITIONALS", BlockKind.L_STAR): PRESERVES,
}


@dataclass(frozen=True)
class CompatibilityMatrix:
    cells: Mapping[Tuple[str, BlockKind], str] = field(default_factory=lambda: dict(DEFAULT_CELLS))
    overrides: Mapping[Tuple[str, str, BlockKind], str] = field(
        default_factory=lambda: dict(BUNDLED_OVERRIDES)
    )

    def __post_init__(self):
        for (cat, block), effect in self.cells.items():
            if cat not in MUTATOR_CATEGORY_NAMES or not isinstance(block, BlockKind):
                raise ValueError(f"bad matrix cell key ({cat!r}, {block!r})")
            if effect not in (PRESERVES, BREAKS, CASE):
                raise ValueError(f"bad matrix effect {effect!r}")
        for key, effect in self.overrides.items():
            if effect not in (PRESERVES, BREAKS):
                raise ValueError(f"override {key} must resolve to preserves/breaks")

    def effect(self, sut: str, category: str, block: BlockKind) -> str:
        cell = self.cells[(category, block)]
        if cell != CASE:
            return cell
        override = self.overrides.get((sut, category, block))
        if override is not None:
            return override
        # unpopulated blocks never reach classify; this value backs the
        # vacuous default for reporting paths that print whole rows
        return BREAKS

    def has_override(self, sut: str, category: str, block: BlockKind) -> bool:
        return (sut, category, block) in self.overrides

    def with_config(self, cfg: MutatorConfig) -> "CompatibilityMatrix":
        cells = dict(self.cells)
        for (cat, block), effect in cfg.matrix_patches.items():
            cells[(cat, block)] = effect
        overrides = dict(self.overrides)
        for (sut, cat, block), effect in cfg.overrides.items():
            overrides[(sut, cat, block)] = effect
        return CompatibilityMatrix(cells=cells, overrides=overrides)


DEFAULT_MATRIX = CompatibilityMatrix()


@dataclass(frozen=True)
class Mutant:
    base: str
    category: MutatorCategory
    site: Tuple[int, Tuple[int, ...]]  # (statement index, path within it)
    replacement: Expr
    strata: str  # D1 | D2
    broken_blocks: FrozenSet[BlockKind]
    homogeneity_effect: str  # preserving | breaking
    decl: SutDecl = field(compare=False, repr=False)

    def __post_init__(self):
        if (self.strata == "D1") != bool(self.broken_blocks):
            raise ValueError("strata D1 exactly when some populated block breaks")

    def describe(self) -> str:
        stmt, path = self.site
        return (
            f"{self.base}/{self.category.name}@{stmt}:{'.'.join(map(str, path)) or 'root'}"
            f" -> {minilang.to_source(self.replacement)}"
        )


# ---------------------------------------------------------------------------
# Site enumeration


def _statement_exprs(program: Program) -> List[Expr]:
    return [a.expr for a in program.assigns] + [program.result]


def _rebuild(decl: SutDecl, stmt_index: int, new_expr: Expr) -> SutDecl:
    assigns = list(decl.program.assigns)
    result = decl.program.result
    if stmt_index < len(assigns):
        assigns[stmt_index] = Assign(assigns[stmt_index].name, new_expr)
    else:
        result = new_expr
    program = Program(decl.program.name, decl.program.params, tuple(assigns), result)
    return replace(decl, program=program)


def _is_integral_const(node: Expr) -> bool:
    return isinstance(node, Const) and float(node.value) == int(node.value)


def _candidates(
    decl: SutDecl, categories: Sequence[MutatorCategory]
) -> List[Tuple[MutatorCategory, int, Tuple[int, ...], Expr]]:
    """(category, stmt, path, replacement) in deterministic order."""
    out = []
    exprs = _statement_exprs(decl.program)
    result_index = len(exprs) - 1
    for category in categories:
        if category is MutatorCategory.RETURN_VALS:
            out.append((category, result_index, (), Const(0.0)))
            continue
        for stmt_index, root in enumerate(exprs):
            for path, node in minilang.walk(root):
                if category is MutatorCategory.CONDITIONALS_BOUNDARY:
                    if isinstance(node, Cmp) and node.op in ("<", "<="):
                        flipped = "<=" if node.op == "<" else "<"
                        out.append((category, stmt_index, path, Cmp(flipped, node.left, node.right)))
                elif category is MutatorCategory.INCREMENTS:
                    # only comparison-threshold constants are increment sites
                    if isinstance(node, Cmp):
                        for child_index, child in enumerate((node.left, node.right)):
                            if _is_integral_const(child):
                                out.append(
                                    (
                                        category,
                                        stmt_index,
                                        path + (child_index,),
                                        Const(float(child.value) + 1.0),
                                    )
                                )
                elif category is MutatorCategory.INVERT_NEGS:
                    if isinstance(node, Neg):
                        out.append((category, stmt_index, path, node.operand))
                elif category is MutatorCategory.MATH:
                    if isinstance(node, Bin):
                        out.append(
                            (category, stmt_index, path, Bin(_MATH_SWAP[node.op], node.left, node.right))
                        )
                elif category is MutatorCategory.NEGATE_CONDITIONALS:
                    if isinstance(node, Cond):
                        out.append(
                            (category, stmt_index, path, Cond(node.test, node.other, node.then))
                        )
                elif category is MutatorCategory.CALL_REMOVAL:
                    if isinstance(node, Call):
                        out.append((category, stmt_index, path, Const(1.0)))
    return out


# ---------------------------------------------------------------------------
# Trivial-equivalence filter: two independent routes, either may discard


def _folded_statements(program: Program) -> Tuple[Expr, ...]:
    return tuple(minilang.fold_constants(e) for e in _statement_exprs(program))


def _grid_outcomes(decl: SutDecl, grid: Sequence[Tuple[float, ...]]) -> List[object]:
    fn = minilang.compile_program(decl.program)
    out: List[object] = []
    for point in grid:
        try:
            out.append(fn(*point))
        except DomainError:
            out.append("domain-error")
    return out


def is_trivially_equivalent(base: SutDecl, mutant: SutDecl, grid=None) -> bool:
    if _folded_statements(base.program) == _folded_statements(mutant.program):
        return True
    if grid is None:
        grid = zoo.small_int_grid(len(base.params))
    return _grid_outcomes(base, grid) == _grid_outcomes(mutant, grid)


# ---------------------------------------------------------------------------
# Homogeneity tagging: a four-rule decision list (equivalence is handled
# before tagging).  Order matters: degenerate collapses must be caught
# before the syntactic certificate, which the zero function passes.


class _CertFail(Exception):
    pass


_POLY = object()  # degree of the literal 0: unifies with anything


def _unify(d1, d2):
    if d1 is _POLY:
        return d2
    if d2 is _POLY:
        return d1
    if d1 != d2:
        raise _CertFail()
    return d1


def _expr_degree(expr: Expr, env: Dict[str, object]):
    if isinstance(expr, Const):
        return _POLY if float(expr.value) == 0.0 else 0
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Neg):
        return _expr_degree(expr.operand, env)
    if isinstance(expr, Bin):
        dl = _expr_degree(expr.left, env)
        dr = _expr_degree(expr.right, env)
        if expr.op in ("+", "-"):
            return _unify(dl, dr)
        if expr.op == "*":
            if dl is _POLY or dr is _POLY:
                return _POLY
            return dl + dr
        if expr.op == "/":
            if dl is _POLY:
                return _POLY
            if dr is _POLY:
                raise _CertFail()  # division by a syntactic zero
            return dl - dr
        # floored mod is scale-equivariant at equal operand degree
        return _unify(dl, dr)
    if isinstance(expr, Cmp):
        # comparisons are scale-stable only between same-degree operands
        _unify(_expr_degree(expr.left, env), _expr_degree(expr.right, env))
        return "bool"
    if isinstance(expr, Cond):
        if _expr_degree(expr.test, env) != "bool":
            raise _CertFail()
        return _unify(_expr_degree(expr.then, env), _expr_degree(expr.other, env))
    if isinstance(expr, Call):
        degrees = [_expr_degree(a, env) for a in expr.args]
        if expr.fn == "sqrt":
            d = degrees[0]
            if d is _POLY:
                return _POLY
            if d % 2:
                raise _CertFail()
            return d // 2
        if expr.fn == "abs":
            return degrees[0]
        return _unify(degrees[0], degrees[1])  # min/max, monotone for lam > 0
    raise _CertFail()


def syntactic_degree(program: Program) -> Optional[object]:
    """Program output degree when every input has degree 1, else None."""
    env: Dict[str, object] = {p: 1 for p in program.params}
    try:
        for assign in program.assigns:
            degree = _expr_degree(assign.expr, env)
            if degree == "bool":
                return None
            env[assign.name] = degree
        degree = _expr_degree(program.result, env)
    except _CertFail:
        return None
    return None if degree == "bool" else degree


def homogeneity_effect_of(
    base: SutDecl, mutant: SutDecl, seed: int, budget: int = zoo.SCALING_BUDGET
) -> str:
    """preserving/breaking by rule, on the shared seeded sample."""
    if base.homogeneity == "none":
        # no hypothesis to preserve; refuse to certify preservation
        return "breaking"
    points = zoo.scaling_points(base, seed, budget)
    base_fn = minilang.compile_program(base.program)
    mut_fn = minilang.compile_program(mutant.program)
    base_vals: List[float] = []
    mut_vals: List[float] = []
    for point in points:
        try:
            b = base_fn(*point)
        except DomainError:
            continue  # outside the baseline's domain: not evidence
        try:
            m = mut_fn(*point)
        except DomainError:
            return "breaking"  # rule 2: domain shrank
        base_vals.append(b)
        mut_vals.append(m)
    if len(set(mut_vals)) == 1 and len(set(base_vals)) > 1:
        return "breaking"  # rule 3: collapsed to a constant
    target = 1 if base.homogeneity == "degree-1" else 0
    degree = syntactic_degree(mutant.program)
    if degree is _POLY or degree == target:
        return "preserving"  # rule 4: certificate
    return "breaking"


# ---------------------------------------------------------------------------
# Classification and the public entry point


def classify(
    mutant: Mutant, matrix: CompatibilityMatrix, sut_blocks: FrozenSet[BlockKind]
) -> Tuple[str, FrozenSet[BlockKind]]:
    broken: Set[BlockKind] = set()
    for block in sut_blocks:
        cell = matrix.cells[(mutant.category.name, block)]
        if cell == CASE and not matrix.has_override(mutant.base, mutant.category.name, block):
            raise MissingOverride(mutant.base, mutant.category.name, block)
        if matrix.effect(mutant.base, mutant.category.name, block) == BREAKS:
            broken.add(block)
    strata = "D1" if broken else "D2"
    return strata, frozenset(broken)


def _as_decl(program: Union[SutDecl, "zoo.SutProgram"]) -> SutDecl:
    return program.decl if isinstance(program, zoo.SutProgram) else program


def mutate(
    program: Union[SutDecl, "zoo.SutProgram"],
    categories: Optional[Iterable[MutatorCategory]] = None,
    seed: int = 0,
    matrix: Optional[CompatibilityMatrix] = None,
) -> Tuple[Mutant, ...]:
    """All surviving mutants, fully classified and tagged.

    Deterministic for a fixed seed: sites are enumerated in (category,
    statement, preorder-path) order and the seed fixes the tagging sample.
    """
    decl = _as_decl(program)
    if categories is None:
        cats: Sequence[MutatorCategory] = tuple(MutatorCategory)
    else:
        wanted = set(categories)
        cats = tuple(c for c in MutatorCategory if c in wanted)
    if matrix is None:
        matrix = DEFAULT_MATRIX
    grid = zoo.small_int_grid(len(decl.params))
    exprs = _statement_exprs(decl.program)
    out: List[Mutant] = []
    for category, stmt_index, path, replacement in _candidates(decl, cats):
        mutated = _rebuild(
            decl, stmt_index, minilang.replace_at(exprs[stmt_index], path, replacement)
        )
        if is_trivially_equivalent(decl, mutated, grid):
            continue
        effect = homogeneity_effect_of(decl, mutated, seed)
        probe = Mutant(
            base=decl.name,
            category=category,
            site=(stmt_index, path),
            replacement=replacement,
            strata="D2",
            broken_blocks=frozenset(),
            homogeneity_effect=effect,
            decl=mutated,
        )
        strata, broken = classify(probe, matrix, decl.blocks)
        out.append(replace(probe, strata=strata, broken_blocks=broken))
    return tuple(out)
