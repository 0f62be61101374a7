"""Executable MR instantiation, kill experiments, coverage, verdicts.

Templates become executable checks by binding concrete subjects: symmetry
MRs bind a group action, order MRs bind a monotone coordinate and its
sampling cone, scaling MRs bind the subject's homogeneity declaration.
Kill experiments are two-pass: an MR that is not green on its unmutated
subject is excluded (with a report entry) and can never contribute kills.
"""

from __future__ import annotations

import sys
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from . import minilang, zoo
from .algebra import BLOCK_RELATION_FORM, BlockKind, OperatorAlgebra
from .derive import BLOCK_TUPLE_RULE, BlockInvariant, MRTemplate, construct_mp
from .minilang import DomainError
from .mutate import DEFAULT_MATRIX, Mutant, MutatorCategory
from .mutate import mutate as derive_mutants
from .specfile import SutDecl

DEFAULT_TOLERANCE = 100 * sys.float_info.epsilon
DEFAULT_BUDGET = 64


class UnboundSlot(Exception):
    """An executable MR is missing a binding its tuple rule needs."""


class BaselineRed(Exception):
    """An MR failed on the unmutated subject."""

    def __init__(self, mr_name: str, sut: str, detail: str = ""):
        super().__init__(f"{mr_name} fails on baseline {sut}: {detail}")
        self.mr_name = mr_name
        self.sut = sut


class EmptyMetaPatternSet(Exception):
    pass


@dataclass(frozen=True)
class TupleGroup:
    """One assertion unit: the argument tuples plus rule metadata."""

    members: Tuple[Tuple[float, ...], ...]
    scale: Optional[float] = None  # scaling-rule lambda
    output_transform: str = "same"  # symmetry rule: same | negate


@dataclass
class ExecutableMR:
    name: str
    template: MRTemplate
    binding: Dict[str, object]
    tolerance: float = DEFAULT_TOLERANCE
    sample_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.sample_budget < 0:
            raise ValueError("sample budget must be nonnegative")

    @property
    def block(self) -> BlockKind:
        return self.template.block

    @property
    def sut_name(self) -> str:
        decl = self.binding.get("decl")
        return decl.name if isinstance(decl, SutDecl) else str(self.binding.get("sut", ""))


def _template_for(block: BlockKind, phi_name: str, arity: int = 2) -> MRTemplate:
    invariant = BlockInvariant(
        block=block,
        phi=frozenset({phi_name}),
        pi_template=BLOCK_RELATION_FORM[block],
        arity=arity,
    )
    return MRTemplate(
        block=block,
        tuple_rule=BLOCK_TUPLE_RULE[block],
        assertion_form=invariant.pi_template,
        provenance=invariant,
    )


def _mr_rng(mr: ExecutableMR, seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(mr.name.encode())])


def generate_tuples(mr: ExecutableMR, seed: int) -> List[TupleGroup]:
    """Canonical tuple groups for the MR's block rule; deterministic."""
    decl = mr.binding.get("decl")
    if not isinstance(decl, SutDecl):
        raise UnboundSlot(f"{mr.name}: no subject bound")
    if mr.sample_budget == 0:
        return []
    rng = _mr_rng(mr, seed)
    block = mr.template.block
    if block is BlockKind.G:
        action = mr.binding.get("action")
        if not isinstance(action, zoo.GAction):
            raise UnboundSlot(f"{mr.name}: symmetry MR needs an action binding")
        groups = []
        for _ in range(mr.sample_budget):
            # sample away from the action's fixed points: a fixed point
            # satisfies any equivariance vacuously, and some mutants are
            # only well-defined off it
            base = zoo.sample_args(decl, rng, nonzero=bool(action.flips))
            offset = 0.0
            if action.shift:
                offset = float(rng.integers(-30, 31)) if decl.domain == "int" else float(
                    rng.uniform(-5.0, 5.0)
                )
                if offset == 0.0:
                    offset = 1.0
            moved = action.apply(base, offset)
            groups.append(
                TupleGroup(members=(base, moved), output_transform=action.output)
            )
        return groups
    if block is BlockKind.O_LE:
        spec = mr.binding.get("order")
        if not isinstance(spec, zoo.OrderSpec):
            raise UnboundSlot(f"{mr.name}: order MR needs an order-spec binding")
        groups = []
        for _ in range(mr.sample_budget):
            base = list(zoo.sample_args(decl, rng, cone=spec.cone))
            bumped = list(base)
            delta = float(rng.integers(1, 11)) if decl.domain == "int" else float(
                rng.uniform(0.1, 5.0)
            )
            bumped[spec.coordinate] = base[spec.coordinate] + delta
            groups.append(TupleGroup(members=(tuple(base), tuple(bumped))))
        return groups
    if block is BlockKind.L_STAR:
        if decl.homogeneity == "none":
            raise UnboundSlot(f"{mr.name}: scaling MR needs a homogeneity declaration")
        pairs = zoo.scaling_sample(decl, seed, mr.sample_budget)
        return [
            TupleGroup(members=(base, tuple(lam * a for a in base)), scale=lam)
            for base, lam in pairs
        ]
    raise UnboundSlot(f"{mr.name}: no executable tuple rule for block {block.tag}")


@dataclass(frozen=True)
class MRCheck:
    passed: bool
    failure: str = ""


def check_mr(mr: ExecutableMR, fn, seed: int) -> MRCheck:
    """Evaluate the MR's assertion on a compiled subject."""
    decl: SutDecl = mr.binding["decl"]  # type: ignore[assignment]
    groups = generate_tuples(mr, seed)
    block = mr.template.block
    tol = mr.tolerance
    outputs: List[float] = []
    for group in groups:
        try:
            values = [fn(*args) for args in group.members]
        except DomainError as exc:
            return MRCheck(False, f"domain error on {group.members}: {exc}")
        outputs.extend(values)
        if block is BlockKind.G:
            got, expected = values[1], values[0]
            if group.output_transform == "negate":
                expected = -expected
            bound = tol * max(1.0, abs(values[0]), abs(values[1]))
            if not abs(got - expected) <= bound:
                return MRCheck(False, f"equivariance gap {got - expected!r} at {group.members}")
        elif block is BlockKind.O_LE:
            lo, hi = values
            bound = tol * max(1.0, abs(lo), abs(hi))
            if not lo <= hi + bound:
                return MRCheck(False, f"order violated: {lo!r} > {hi!r} at {group.members}")
        elif block is BlockKind.L_STAR:
            f0, f1 = values
            expected = f0 if decl.homogeneity == "positive-scale-invariant" else group.scale * f0
            bound = tol * max(1.0, abs(f0), abs(f1))
            if not abs(f1 - expected) <= bound:
                return MRCheck(False, f"scaling gap {f1 - expected!r} at {group.members}")
    if block is BlockKind.L_STAR and groups and len(set(outputs)) == 1:
        # a flat output on generically varied inputs satisfies the scaling
        # identity degenerately; the relation treats it as a failure
        return MRCheck(False, f"fixed output {outputs[0]!r} across the whole sample")
    return MRCheck(True)


def build_standard_mrs(
    programs: Mapping[str, zoo.SutProgram],
    tolerance: float = DEFAULT_TOLERANCE,
    budget: int = DEFAULT_BUDGET,
) -> List[ExecutableMR]:
    """The executable relations each subject's declared blocks support."""
    mrs: List[ExecutableMR] = []
    for name in sorted(programs):
        program = programs[name]
        decl = program.decl
        if BlockKind.G in decl.blocks:
            for action in zoo.SUT_G_ACTIONS.get(name, ()):
                mrs.append(
                    ExecutableMR(
                        name=f"{name}:G:{action.name}",
                        template=_template_for(BlockKind.G, action.name),
                        binding={"decl": decl, "action": action},
                        tolerance=tolerance,
                        sample_budget=budget,
                    )
                )
        if BlockKind.O_LE in decl.blocks and name in zoo.SUT_ORDER_SPECS:
            mrs.append(
                ExecutableMR(
                    name=f"{name}:O_le",
                    template=_template_for(BlockKind.O_LE, f"{name}-order"),
                    binding={"decl": decl, "order": zoo.SUT_ORDER_SPECS[name]},
                    tolerance=tolerance,
                    sample_budget=budget,
                )
            )
        if BlockKind.L_STAR in decl.blocks and decl.homogeneity != "none":
            mrs.append(
                ExecutableMR(
                    name=f"{name}:L_scale",
                    template=_template_for(BlockKind.L_STAR, f"{name}-scaling", arity=3),
                    binding={"decl": decl},
                    tolerance=tolerance,
                    sample_budget=zoo.SCALING_BUDGET,
                )
            )
    return mrs


# ---------------------------------------------------------------------------
# Kill experiment


def mutant_id(mutant: Mutant) -> str:
    stmt, path = mutant.site
    suffix = ".".join(map(str, path)) or "root"
    return f"{mutant.base}/{mutant.category.name}@{stmt}:{suffix}"


@dataclass
class KillMatrix:
    mr_names: Tuple[str, ...]
    mutant_ids: Tuple[str, ...]
    cells: Dict[Tuple[str, str], bool]
    strata_labels: Dict[str, str]
    excluded: Tuple[Tuple[str, str, str], ...] = ()  # (mr, sut, reason)

    def killed(self, mutant: str) -> bool:
        return any(self.cells.get((mr, mutant), False) for mr in self.mr_names)

    def kills_by(self, mr: str) -> int:
        return sum(1 for m in self.mutant_ids if self.cells.get((mr, m), False))


def run_kill_experiment(
    mrs: Sequence[ExecutableMR], mutants: Sequence[Mutant], seed: int
) -> KillMatrix:
    """Two-pass kill matrix: baseline-red MRs are excluded up front."""
    green: List[ExecutableMR] = []
    excluded: List[Tuple[str, str, str]] = []
    baseline_fns: Dict[str, object] = {}
    for mr in mrs:
        decl: SutDecl = mr.binding["decl"]  # type: ignore[assignment]
        if decl.name not in baseline_fns:
            baseline_fns[decl.name] = minilang.compile_program(decl.program)
        verdict = check_mr(mr, baseline_fns[decl.name], seed)
        if verdict.passed:
            green.append(mr)
        else:
            excluded.append((mr.name, decl.name, verdict.failure))
    cells: Dict[Tuple[str, str], bool] = {}
    strata: Dict[str, str] = {}
    ids: List[str] = []
    for mutant in mutants:
        mid = mutant_id(mutant)
        ids.append(mid)
        strata[mid] = mutant.strata
        fn = minilang.compile_program(mutant.decl.program)
        for mr in green:
            if mr.sut_name != mutant.base:
                cells[(mr.name, mid)] = False
                continue
            cells[(mr.name, mid)] = not check_mr(mr, fn, seed).passed
    return KillMatrix(
        mr_names=tuple(mr.name for mr in green),
        mutant_ids=tuple(ids),
        cells=cells,
        strata_labels=strata,
        excluded=tuple(excluded),
    )


def require_green(mr: ExecutableMR, seed: int) -> None:
    """Raise BaselineRed instead of excluding (strict single-MR check)."""
    decl: SutDecl = mr.binding["decl"]  # type: ignore[assignment]
    verdict = check_mr(mr, minilang.compile_program(decl.program), seed)
    if not verdict.passed:
        raise BaselineRed(mr.name, decl.name, verdict.failure)


# ---------------------------------------------------------------------------
# Coverage


def _block_of(obj) -> BlockKind:
    if isinstance(obj, BlockKind):
        return obj
    if isinstance(obj, ExecutableMR):
        return obj.template.block
    if isinstance(obj, MRTemplate):
        return obj.block
    block = getattr(obj, "block", None)
    if isinstance(block, BlockKind):
        return block
    raise TypeError(f"cannot determine a block for {obj!r}")


def coverage(mrs: Iterable[object], algebra: OperatorAlgebra) -> Fraction:
    """Fraction of the algebra's MetaPatterns hit by some MR's block."""
    patterns = construct_mp(algebra)
    if not patterns:
        raise EmptyMetaPatternSet(f"algebra {algebra.name} derives no MetaPatterns")
    hit_blocks: Set[BlockKind] = {_block_of(mr) for mr in mrs}
    covered = sum(1 for p in patterns if p.block in hit_blocks)
    return Fraction(covered, len(patterns))


# ---------------------------------------------------------------------------
# Falsification verdict and the scaling-blindness experiment


@dataclass(frozen=True)
class KillSummary:
    sut: str
    kills: int
    mutants: int
    all_killed_breaking: bool = True

    @property
    def rate(self) -> Fraction:
        return Fraction(self.kills, self.mutants) if self.mutants else Fraction(0)


def falsification_verdict(per_sut: Union[Mapping[str, tuple], Iterable[KillSummary]]) -> str:
    """pass/falsified per the one-third outlier rule with the rescue clause."""
    if isinstance(per_sut, Mapping):
        summaries = [
            entry if isinstance(entry, KillSummary) else KillSummary(sut, *entry)
            for sut, entry in per_sut.items()
        ]
    else:
        summaries = list(per_sut)
    outliers = [s for s in summaries if s.mutants and s.rate >= Fraction(1, 3)]
    unrescued = [s for s in outliers if not s.all_killed_breaking]
    return "falsified" if len(unrescued) > 1 else "pass"


@dataclass
class BlindnessReport:
    summaries: Dict[str, KillSummary]
    verdict: str
    preserving_kills: Tuple[str, ...]  # mutant ids; must be empty
    concordance_ok: bool
    concordance_violations: Tuple[str, ...]
    matrix: KillMatrix
    mutants_by_sut: Dict[str, Tuple[Mutant, ...]] = field(default_factory=dict)


def scaling_mr_name(sut: str) -> str:
    return f"{sut}:L_scale"


def concordance_check(
    mutants_by_sut: Mapping[str, Sequence[Mutant]],
    matrix: KillMatrix,
    active_cells: Mapping[Tuple[str, BlockKind], str],
    decls: Mapping[str, SutDecl],
) -> Tuple[bool, Tuple[str, ...]]:
    """Kill/tag concordance against the active compatibility matrix.

    Scope: degree-1 subjects.  A category whose scaling-block cell claims
    `preserves` must not have any rule-preserving mutant killed by the
    scaling relation; one that claims `breaks` must not have rule-preserving
    mutants on these subjects at all.  Case-dependent cells are exempt.
    """
    violations: List[str] = []
    scope = [s for s, d in decls.items() if d.homogeneity == "degree-1" and s in mutants_by_sut]
    categories = sorted({c for (c, _b) in active_cells})
    for category in categories:
        cell = active_cells[(category, BlockKind.L_STAR)]
        if cell == "case-dependent":
            continue
        for sut in scope:
            preserving = [
                m
                for m in mutants_by_sut[sut]
                if m.category.name == category and m.homogeneity_effect == "preserving"
            ]
            if cell == "breaks" and preserving:
                violations.extend(
                    f"{mutant_id(m)}: rule-preserving under a breaks-cell" for m in preserving
                )
            elif cell == "preserves":
                mr = scaling_mr_name(sut)
                for m in preserving:
                    if matrix.cells.get((mr, mutant_id(m)), False):
                        violations.append(f"{mutant_id(m)}: killed despite a preserves-cell")
    return (not violations, tuple(violations))


def run_blindness_experiment(
    cfg=None,
    programs: Optional[Mapping[str, zoo.SutProgram]] = None,
    matrix=None,
) -> BlindnessReport:
    """The full rule-blind scaling kill experiment on the configured suts."""
    if cfg is None:
        cfg = zoo.load_mutator_config()
    if programs is None:
        programs = zoo.load_zoo()
    active_matrix = (matrix or DEFAULT_MATRIX).with_config(cfg)
    chosen = {name: programs[name] for name in cfg.suts} if cfg.suts else dict(programs)
    categories = [MutatorCategory[c] for c in cfg.categories]
    mutants_by_sut: Dict[str, Tuple[Mutant, ...]] = {}
    for name in sorted(chosen):
        mutants_by_sut[name] = derive_mutants(
            chosen[name].decl, categories, seed=cfg.seed, matrix=active_matrix
        )
    mrs = build_standard_mrs(chosen)
    all_mutants = [m for name in sorted(chosen) for m in mutants_by_sut[name]]
    kill_matrix = run_kill_experiment(mrs, all_mutants, seed=cfg.seed)

    summaries: Dict[str, KillSummary] = {}
    preserving_kills: List[str] = []
    for name in sorted(chosen):
        mr = scaling_mr_name(name)
        kills = 0
        all_breaking = True
        for m in mutants_by_sut[name]:
            mid = mutant_id(m)
            if kill_matrix.cells.get((mr, mid), False):
                kills += 1
                if m.homogeneity_effect != "breaking":
                    all_breaking = False
                    preserving_kills.append(mid)
        summaries[name] = KillSummary(
            sut=name,
            kills=kills,
            mutants=len(mutants_by_sut[name]),
            all_killed_breaking=all_breaking,
        )
    verdict = falsification_verdict(summaries.values())
    decls = {name: program.decl for name, program in chosen.items()}
    ok, violations = concordance_check(mutants_by_sut, kill_matrix, active_matrix.cells, decls)
    return BlindnessReport(
        summaries=summaries,
        verdict=verdict,
        preserving_kills=tuple(preserving_kills),
        concordance_ok=ok,
        concordance_violations=violations,
        matrix=kill_matrix,
        mutants_by_sut=mutants_by_sut,
    )


# ---------------------------------------------------------------------------
# Orbit-budget stability audit


def k_sweep_audit(
    mrs: Sequence[ExecutableMR],
    mutants: Sequence[Mutant],
    seed: int,
    factors: Tuple[int, ...] = (1, 2, 4),
    band: float = 0.05,
) -> Tuple[Dict[int, Fraction], bool]:
    """Detection rate at budget multiples {K, 2K, 4K}; stable if the spread
    stays inside the band (five percentage points by default)."""
    rates: Dict[int, Fraction] = {}
    for factor in factors:
        scaled = [replace_budget(mr, factor) for mr in mrs]
        matrix = run_kill_experiment(scaled, mutants, seed)
        killed = sum(1 for m in matrix.mutant_ids if matrix.killed(m))
        rates[factor] = Fraction(killed, len(matrix.mutant_ids)) if matrix.mutant_ids else Fraction(0)
    values = list(rates.values())
    stable = (max(values) - min(values)) <= Fraction(band).limit_denominator(10**6)
    return rates, stable


def replace_budget(mr: ExecutableMR, factor: int) -> ExecutableMR:
    return ExecutableMR(
        name=mr.name,
        template=mr.template,
        binding=dict(mr.binding),
        tolerance=mr.tolerance,
        sample_budget=mr.sample_budget * factor,
    )
