"""Subject-zoo tests: oracles for every subject, samplers, SGD, rotations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noether.specfile import HEADER, parse_sut_file
from noether.zoo import (
    LAMBDA_SAMPLES,
    SCALING_BUDGET,
    SUT_G_ACTIONS,
    SUT_ORDER_SPECS,
    GAction,
    check_homogeneity,
    cloud_signature,
    compile_sut,
    default_point_cloud,
    default_sgd_fixture,
    load_zoo,
    QuadraticLoss,
    random_rotations,
    rotation_invariance_deviation,
    sample_args,
    scaling_points,
    scaling_sample,
    sgd_roundtrip_residual,
    SgdTrajectory,
    small_int_grid,
)

ZOO = load_zoo()

SUBJECT_NAMES = {
    "midpoint",
    "exactLog2",
    "isSequence",
    "clamp",
    "signum",
    "caddSig",
    "gcdSig",
    "lcmSig",
    "hypotSig",
    "powerSig",
}


# --- subject oracles ----------------------------------------------------------


class TestSubjectOracles:
    def test_roster(self):
        assert set(ZOO) == SUBJECT_NAMES

    @given(st.integers(-80, 80), st.integers(-80, 80))
    def test_gcd_matches_stdlib(self, a, b):
        assert ZOO["gcdSig"].fn(float(a), float(b)) == float(math.gcd(a, b))

    @given(st.integers(-60, 60), st.integers(-60, 60))
    def test_lcm_matches_stdlib(self, a, b):
        assert ZOO["lcmSig"].fn(float(a), float(b)) == float(math.lcm(a, b))

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_hypot_matches_stdlib(self, x, y):
        assert ZOO["hypotSig"].fn(x, y) == pytest.approx(math.hypot(x, y), abs=1e-9)

    @given(st.floats(-100, 100), st.floats(-100, 100))
    def test_midpoint(self, a, b):
        assert ZOO["midpoint"].fn(a, b) == (a + b) / 2

    @given(st.integers(-5, 40))
    def test_exact_log2_is_clipped_floor_log(self, x):
        expected = 0 if x < 2 else min(5, x.bit_length() - 1)
        assert ZOO["exactLog2"].fn(float(x)) == float(expected)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(-20, 20))
    def test_clamp(self, x, lo, hi):
        got = ZOO["clamp"].fn(x, lo, hi)
        # declared contract only constrains the valid cone lo <= hi
        if lo <= hi:
            assert got == min(max(x, lo), hi)

    @given(st.floats(-30, 30))
    def test_signum(self, x):
        assert ZOO["signum"].fn(x) == float((x > 0) - (x < 0))

    @given(st.integers(-8, 8), st.integers(-8, 8), st.integers(-8, 8))
    def test_is_sequence(self, a, b, c):
        got = ZOO["isSequence"].fn(float(a), float(b), float(c))
        assert got == float(a <= b <= c)

    @given(st.floats(-40, 40), st.floats(-40, 40), st.floats(-40, 40), st.floats(-40, 40))
    def test_cadd_is_capped_sum_modulus(self, ar, ai, br, bi):
        expected = min(abs(complex(ar, ai) + complex(br, bi)), 1e6)
        assert ZOO["caddSig"].fn(ar, ai, br, bi) == pytest.approx(expected, abs=1e-9)

    @given(st.integers(-20, 20), st.integers(1, 5))
    def test_power_sig(self, x, n):
        expected = float(x**3) if n == 3 else float(x)
        assert ZOO["powerSig"].fn(float(x), float(n)) == expected


# --- executable symmetry metadata ----------------------------------------------


class TestActionTables:
    def test_every_action_names_a_real_subject_and_position(self):
        for sut, actions in SUT_G_ACTIONS.items():
            arity = ZOO[sut].arity
            for action in actions:
                assert all(0 <= i < arity for i in action.flips)

    def test_order_specs_point_at_real_coordinates(self):
        for sut, spec in SUT_ORDER_SPECS.items():
            assert 0 <= spec.coordinate < ZOO[sut].arity

    def test_gcd_declares_order_block_without_executable_encoding(self):
        from noether.algebra import BlockKind

        assert BlockKind.O_LE in ZOO["gcdSig"].blocks
        assert "gcdSig" not in SUT_ORDER_SPECS

    def test_apply_semantics(self):
        flip = GAction("f", flips=(1,))
        assert flip.apply((3.0, 4.0)) == (3.0, -4.0)
        shift = GAction("s", shift=True)
        assert shift.apply((1.0, 2.0), offset=0.5) == (1.5, 2.5)

    @given(st.floats(-20, 20), st.floats(-20, 20))
    def test_declared_relations_hold_on_the_reference_subjects(self, x, y):
        # negate-all on midpoint negates the output
        act = SUT_G_ACTIONS["midpoint"][0]
        assert ZOO["midpoint"].fn(*act.apply((x, y))) == -ZOO["midpoint"].fn(x, y)
        # conjugation preserves the modulus
        cadd = SUT_G_ACTIONS["caddSig"][0]
        assert ZOO["caddSig"].fn(*cadd.apply((x, y, y, x))) == pytest.approx(
            ZOO["caddSig"].fn(x, y, y, x), abs=1e-9
        )


# --- samplers -------------------------------------------------------------------


class TestSamplers:
    def test_sample_args_deterministic(self):
        decl = ZOO["clamp"].decl
        a = sample_args(decl, np.random.default_rng(5))
        b = sample_args(decl, np.random.default_rng(5))
        assert a == b

    @given(st.integers(0, 2**31))
    @settings(max_examples=50)
    def test_cones(self, seed):
        rng = np.random.default_rng(seed)
        nn = sample_args(ZOO["caddSig"].decl, rng, cone="nonneg")
        assert all(v >= 0 for v in nn)
        lh = sample_args(ZOO["clamp"].decl, np.random.default_rng(seed), cone="lo-le-hi")
        assert lh[1] <= lh[2]
        nz = sample_args(ZOO["gcdSig"].decl, np.random.default_rng(seed), nonzero=True)
        assert all(v != 0 for v in nz)

    def test_integer_domain_draws_integers(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            args = sample_args(ZOO["gcdSig"].decl, rng)
            assert all(v == int(v) for v in args)

    def test_scaling_points_are_bases_then_scaled(self):
        decl = ZOO["midpoint"].decl
        pairs = scaling_sample(decl, 11, 6)
        points = scaling_points(decl, 11, 6)
        assert len(pairs) == 6 and len(points) == 12
        assert points[:6] == [base for base, _ in pairs]
        for (base, lam), scaled in zip(pairs, points[6:]):
            assert scaled == tuple(lam * a for a in base)
        lams = [lam for _, lam in pairs]
        assert set(lams) <= set(LAMBDA_SAMPLES)

    def test_scaling_sample_deterministic_in_seed(self):
        decl = ZOO["hypotSig"].decl
        assert scaling_sample(decl, 3, 20) == scaling_sample(decl, 3, 20)
        assert scaling_sample(decl, 3, 20) != scaling_sample(decl, 4, 20)

    def test_small_int_grid_sizes(self):
        assert len(small_int_grid(1)) == 17
        assert len(small_int_grid(2)) == 13**2
        assert len(small_int_grid(3)) == 7**3
        assert len(small_int_grid(4)) == 5**4
        assert all(len(p) == 3 for p in small_int_grid(3))


# --- homogeneity ------------------------------------------------------------------


DEGREE_ONE = ("midpoint", "clamp", "gcdSig", "lcmSig", "hypotSig")


class TestHomogeneity:
    @pytest.mark.parametrize("name", DEGREE_ONE)
    def test_degree_one_subjects_pass(self, name):
        program = ZOO[name]
        points = scaling_points(program.decl, 20260816, 40)
        assert check_homogeneity(program, LAMBDA_SAMPLES, points, 1e-6)

    def test_scale_invariant_subject_passes(self):
        program = ZOO["signum"]
        points = scaling_points(program.decl, 20260816, 40)
        assert check_homogeneity(program, LAMBDA_SAMPLES, points, 0.0)

    def test_affine_offset_fails_degree_one(self):
        text = f"{HEADER}\nsut off(x) blocks=L_star homogeneity=degree-1\nreturn x + 1\n"
        program = compile_sut(parse_sut_file(text)[0])
        assert not check_homogeneity(program, (2.0,), [(3.0,)], 1e-6)

    def test_undeclared_hypothesis_rejected(self):
        with pytest.raises(ValueError):
            check_homogeneity(ZOO["exactLog2"], LAMBDA_SAMPLES, [(2.0,)], 1e-6)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            check_homogeneity(ZOO["midpoint"], (0.0,), [(1.0, 2.0)], 1e-6)

    def test_budget_constant(self):
        assert SCALING_BUDGET == 100


# --- SGD round trip ------------------------------------------------------------


class TestSgdRoundTrip:
    def test_error_order_ratio_near_four(self):
        r1 = sgd_roundtrip_residual(*default_sgd_fixture(eta=1e-3))
        r2 = sgd_roundtrip_residual(*default_sgd_fixture(eta=5e-4))
        ratio = r1 / r2
        assert ratio == pytest.approx(3.9834, abs=1e-3)  # frozen
        assert 3.0 <= ratio <= 5.0

    def test_zero_step_size_has_zero_residual(self):
        assert sgd_roundtrip_residual(*default_sgd_fixture(eta=0.0)) == 0.0

    def test_constant_gradients_cancel_exactly(self):
        dim = 2
        zero = np.zeros((dim, dim))
        loss = QuadraticLoss(
            matrices=(zero, zero),
            centers=(np.zeros(dim), np.zeros(dim)),
            linear_terms=(np.array([0.3, -0.7]), np.array([1.1, 0.2])),
        )
        traj = SgdTrajectory(theta0=(1.0, 2.0), eta=0.05, steps=6, batch_order=(0, 1, 0, 1, 0, 1))
        assert sgd_roundtrip_residual(traj, loss) == 0.0

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            SgdTrajectory(theta0=(0.0,), eta=-0.1, steps=1, batch_order=(0,))
        with pytest.raises(ValueError):
            SgdTrajectory(theta0=(0.0,), eta=0.1, steps=0, batch_order=())
        with pytest.raises(ValueError):
            SgdTrajectory(theta0=(0.0,), eta=0.1, steps=2, batch_order=(0,))


# --- rotation-invariant signature -------------------------------------------------


class TestRotations:
    def test_signature_is_rotation_invariant(self):
        assert rotation_invariance_deviation(default_point_cloud()) <= 1e-9

    def test_rotations_are_special_orthogonal(self):
        for rot in random_rotations(25, seed=3):
            assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-12)

    def test_signature_shape_and_order(self):
        cloud = default_point_cloud(count=8)
        sig = cloud_signature(cloud)
        assert sig.shape == (8 * 7 // 2,)
        assert np.all(np.diff(sig) >= 0)

    def test_translation_changes_nothing_but_scaling_does(self):
        cloud = default_point_cloud()
        shifted = cloud + np.array([5.0, -2.0, 1.0])
        assert np.allclose(cloud_signature(shifted), cloud_signature(cloud), atol=1e-9)
        assert not np.allclose(cloud_signature(2 * cloud), cloud_signature(cloud))
