"""Mutation-engine tests: matrix rows, strata, tagging, survivor censuses."""

from collections import Counter

import pytest

from noether.algebra import BlockKind
from noether.minilang import Call, Cmp, Const, DomainError, compile_program
from noether.mutate import (
    BREAKS,
    BUNDLED_OVERRIDES,
    CASE,
    CompatibilityMatrix,
    DEFAULT_CELLS,
    DEFAULT_MATRIX,
    MissingOverride,
    Mutant,
    MutatorCategory,
    PRESERVES,
    classify,
    is_trivially_equivalent,
    mutate,
    syntactic_degree,
)
from noether.specfile import HEADER, MutatorConfig, parse_sut_file
from noether.zoo import LAMBDA_SAMPLES, check_homogeneity, compile_sut, load_zoo, scaling_points, small_int_grid

ZOO = load_zoo()
SEED = 20260816

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

# independently re-encoded compatibility rows (o=preserves x=breaks ~=case)
EXPECTED_ROWS = {
    "CONDITIONALS_BOUNDARY": "oxooo~oo",
    "INCREMENTS": "xxxxx~oo",
    "INVERT_NEGS": "~x~x~~oo",
    "MATH": "x~xxox~o",
    "NEGATE_CONDITIONALS": "xx~x~x~x",
    "RETURN_VALS": "ooxxoo~o",
    "CALL_REMOVAL": "ooooox~o",
}
_DECODE = {"o": PRESERVES, "x": BREAKS, "~": CASE}


class TestMatrix:
    def test_default_cells_match_declared_rows(self):
        assert len(DEFAULT_CELLS) == 7 * 8
        for cat, row in EXPECTED_ROWS.items():
            for block, char in zip(_COLUMNS, row):
                assert DEFAULT_CELLS[(cat, block)] == _DECODE[char], (cat, block)

    def test_overrides_only_resolve_case_cells(self):
        for (sut, cat, block), effect in BUNDLED_OVERRIDES.items():
            assert DEFAULT_CELLS[(cat, block)] == CASE, (sut, cat, block)
            assert effect in (PRESERVES, BREAKS)

    def test_effect_resolution(self):
        m = DEFAULT_MATRIX
        assert m.effect("anything", "MATH", BlockKind.G) == BREAKS
        assert m.effect("midpoint", "MATH", BlockKind.O_LE) == PRESERVES
        assert m.effect("caddSig", "MATH", BlockKind.O_LE) == BREAKS

    def test_with_config_layers_patches_and_overrides(self):
        cfg = MutatorConfig(
            matrix_patches={("MATH", BlockKind.L_STAR): BREAKS},
            overrides={("midpoint", "MATH", BlockKind.O_LE): BREAKS},
        )
        patched = DEFAULT_MATRIX.with_config(cfg)
        assert patched.cells[("MATH", BlockKind.L_STAR)] == BREAKS
        assert patched.effect("midpoint", "MATH", BlockKind.O_LE) == BREAKS
        # the original is untouched
        assert DEFAULT_MATRIX.cells[("MATH", BlockKind.L_STAR)] == PRESERVES

    def test_cell_vocabulary_enforced(self):
        with pytest.raises(ValueError):
            CompatibilityMatrix(cells={("MATH", BlockKind.G): "sometimes"})
        with pytest.raises(ValueError):
            CompatibilityMatrix(overrides={("s", "MATH", BlockKind.G): CASE})


class TestClassify:
    def test_missing_override_raises(self):
        probe = Mutant(
            base="nobody",
            category=MutatorCategory.MATH,
            site=(0, ()),
            replacement=Const(0.0),
            strata="D2",
            broken_blocks=frozenset(),
            homogeneity_effect="breaking",
            decl=ZOO["midpoint"].decl,
        )
        with pytest.raises(MissingOverride):
            classify(probe, DEFAULT_MATRIX, frozenset({BlockKind.O_LE}))

    def test_unpopulated_case_cells_never_consulted(self):
        probe = Mutant(
            base="nobody",
            category=MutatorCategory.MATH,
            site=(0, ()),
            replacement=Const(0.0),
            strata="D2",
            broken_blocks=frozenset(),
            homogeneity_effect="breaking",
            decl=ZOO["midpoint"].decl,
        )
        strata, broken = classify(probe, DEFAULT_MATRIX, frozenset({BlockKind.G}))
        assert strata == "D1" and broken == frozenset({BlockKind.G})

    def test_mutant_strata_consistency_enforced(self):
        with pytest.raises(ValueError):
            Mutant(
                base="x",
                category=MutatorCategory.MATH,
                site=(0, ()),
                replacement=Const(0.0),
                strata="D1",
                broken_blocks=frozenset(),
                homogeneity_effect="breaking",
                decl=ZOO["midpoint"].decl,
            )


# survivor census at the pinned seed: (total, D1, preserving, per-category)
CENSUS = {
    "midpoint": (3, 2, 2, {"MATH": 2, "RETURN_VALS": 1}),
    "clamp": (4, 3, 3, {"NEGATE_CONDITIONALS": 2, "CONDITIONALS_BOUNDARY": 1, "RETURN_VALS": 1}),
    "signum": (
        7,
        6,
        4,
        {"CONDITIONALS_BOUNDARY": 2, "INCREMENTS": 2, "NEGATE_CONDITIONALS": 2, "RETURN_VALS": 1},
    ),
    "gcdSig": (
        32,
        30,
        10,
        {"NEGATE_CONDITIONALS": 15, "INCREMENTS": 12, "MATH": 3, "RETURN_VALS": 1, "CALL_REMOVAL": 1},
    ),
    "lcmSig": (
        37,
        34,
        10,
        {"NEGATE_CONDITIONALS": 16, "INCREMENTS": 13, "MATH": 5, "CALL_REMOVAL": 2, "RETURN_VALS": 1},
    ),
    "hypotSig": (5, 3, 0, {"MATH": 3, "RETURN_VALS": 1, "CALL_REMOVAL": 1}),
}


class TestMutantCensus:
    @pytest.mark.parametrize("name,expected", sorted(CENSUS.items()))
    def test_frozen_counts(self, name, expected):
        total, d1, preserving, by_cat = expected
        mutants = mutate(ZOO[name], seed=SEED)
        assert len(mutants) == total
        assert sum(m.strata == "D1" for m in mutants) == d1
        assert sum(m.homogeneity_effect == "preserving" for m in mutants) == preserving
        assert Counter(m.category.name for m in mutants) == by_cat

    def test_deterministic(self):
        assert mutate(ZOO["gcdSig"], seed=SEED) == mutate(ZOO["gcdSig"], seed=SEED)

    def test_sites_do_not_depend_on_the_tagging_seed(self):
        a = mutate(ZOO["signum"], seed=1)
        b = mutate(ZOO["signum"], seed=2)
        assert [(m.category, m.site) for m in a] == [(m.category, m.site) for m in b]

    def test_category_filter(self):
        only = mutate(ZOO["midpoint"], categories=[MutatorCategory.RETURN_VALS], seed=SEED)
        assert len(only) == 1
        (m,) = only
        assert m.category is MutatorCategory.RETURN_VALS
        assert m.replacement == Const(0.0)
        assert m.site == (len(ZOO["midpoint"].decl.program.assigns), ())

    def test_describe_format(self):
        (m,) = mutate(ZOO["midpoint"], categories=[MutatorCategory.RETURN_VALS], seed=SEED)
        assert m.describe().startswith("midpoint/RETURN_VALS@0:root")


class TestSurvivorSoundness:
    @pytest.mark.parametrize("name", sorted(CENSUS))
    def test_every_survivor_differs_on_the_filter_grid(self, name):
        decl = ZOO[name].decl
        grid = small_int_grid(len(decl.params))
        base_fn = compile_program(decl.program)

        def outcomes(fn):
            out = []
            for p in grid:
                try:
                    out.append(fn(*p))
                except DomainError:
                    out.append("domain-error")
            return out

        base_out = outcomes(base_fn)
        for m in mutate(ZOO[name], seed=SEED):
            assert outcomes(compile_program(m.decl.program)) != base_out, m.describe()
            assert not is_trivially_equivalent(decl, m.decl)

    @pytest.mark.parametrize("name", ("midpoint", "clamp", "gcdSig", "lcmSig", "signum"))
    def test_preserving_tags_are_certified(self, name):
        """Rule-tagged preservers really satisfy the scaling hypothesis."""
        base = ZOO[name]
        points = scaling_points(base.decl, SEED, 40)
        for m in mutate(base, seed=SEED):
            if m.homogeneity_effect != "preserving":
                continue
            assert check_homogeneity(compile_sut(m.decl), LAMBDA_SAMPLES, points, 1e-6), (
                m.describe()
            )

    def test_no_hypothesis_means_breaking(self):
        # exactLog2 declares homogeneity=none: nothing can be tagged preserving
        for m in mutate(ZOO["exactLog2"], seed=SEED):
            assert m.homogeneity_effect == "breaking"


class TestSiteRules:
    def _single(self, body, params=("x",), categories=None):
        text = f"{HEADER}\nsut tiny({', '.join(params)}) blocks=O_le\n{body}\n"
        decl = parse_sut_file(text)[0]
        return mutate(decl, categories=categories, seed=SEED)

    def test_increments_touch_only_comparison_thresholds(self):
        mutants = self._single(
            "return x < 3 ? 0 : x + 2", categories=[MutatorCategory.INCREMENTS]
        )
        assert len(mutants) == 1  # the 3, not the 0 branch constant or the +2
        (m,) = mutants
        assert m.replacement == Const(4.0)

    def test_boundary_flips_strict_to_nonstrict(self):
        mutants = self._single(
            "return x < 3 ? 0 : 1", categories=[MutatorCategory.CONDITIONALS_BOUNDARY]
        )
        (m,) = mutants
        assert isinstance(m.replacement, Cmp) and m.replacement.op == "<="

    def test_call_removal_pins_to_one(self):
        mutants = self._single(
            "return sqrt(x * x)", categories=[MutatorCategory.CALL_REMOVAL]
        )
        (m,) = mutants
        assert m.replacement == Const(1.0)
        assert isinstance(
            ZOO["hypotSig"].decl.program.result, Call
        )  # the zoo exercises the same site rule

    def test_equivalent_candidates_are_filtered(self):
        # negating a symmetric guard changes nothing observable: x*0 == 0*x
        mutants = self._single(
            "return x + 0", categories=[MutatorCategory.MATH]
        )
        # x + 0 -> x - 0 folds to the same tree; the filter must drop it
        assert mutants == ()


class TestDegreeCertificate:
    def test_linear_bodies_certify_degree_one(self):
        decl = ZOO["midpoint"].decl
        assert syntactic_degree(decl.program) == 1

    def test_signum_body_certifies_degree_zero(self):
        assert syntactic_degree(ZOO["signum"].decl.program) == 0

    def test_mixed_degrees_fail(self):
        text = f"{HEADER}\nsut q(x) blocks=O_le\nreturn x * x + x\n"
        decl = parse_sut_file(text)[0]
        assert syntactic_degree(decl.program) is None
