from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clustergpd.charts import ChartPoint, hamiltonian
from clustergpd.core_algebra import MutationTrace, a2_pair, b2_pair, g2_pair, mutate_trace, walk
from clustergpd.groupoids import FAMILIES, SIDES, GroupoidPoint, LogCanonicalSpace, target
from clustergpd.gpd_mutations import (
    LiftedHamiltonian,
    boundary_limit_study,
    boundary_mutation,
    check_boundary,
    check_flows,
    check_gpd_separation,
    check_intertwining,
    check_lifted_poisson,
    check_mutation_consistency,
    dilog_identity_sum,
    gpd_periodicity_check,
    gpd_separation,
    lifted_flow,
    lifted_hamiltonian,
    lifted_tropical,
    mutate_groupoid,
    mutate_groupoid_composed,
    sample_point,
    source_target_w,
    walk_groupoid,
)
from clustergpd.laurent import all_paths
from clustergpd.numerics import PoleError, residual

from .conftest import PERIODS, frozen_pair

SEEDS = st.integers(0, 10_000)
PAIRS = {"A2": a2_pair(), "B2": b2_pair(), "G2": g2_pair(), "A2r21": a2_pair((2, 1))}
def identity_fiber(family: str, n: int) -> np.ndarray:
    return np.ones(n) if family == "D" else np.zeros(n)


class TestHandExamples:
    seed = MutationTrace.seed(a2_pair())

    def test_d_tropical(self):
        pt = GroupoidPoint("D", "A", [1, 1], [2, 5])
        assert lifted_tropical(pt, a2_pair(), 1, 1).fiber == pytest.approx([0.5, 10])

    def test_g_tropical_at_unit_base(self):
        pt = GroupoidPoint("G", "A", [1, 1], [0.7, -0.3])
        assert lifted_tropical(pt, a2_pair(), 1, 1).fiber[0] == pytest.approx(-0.7)

    def test_d_mutation(self):
        # s'_2 = 5 * 2 * ((1 + 1/2) / (1 + 1))
        pt = GroupoidPoint("D", "A", [1, 1], [2, 5])
        out = mutate_groupoid(pt, self.seed, 1)
        assert out.fiber == pytest.approx([0.5, 7.5], abs=1e-14)
        assert out.base == pytest.approx([2, 1])

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("side", SIDES)
    def test_identity_to_identity(self, family, side):
        N = 2
        pt = GroupoidPoint(family, side, [0.8, 1.7], identity_fiber(family, N))
        for fn in (lambda p: mutate_groupoid(p, self.seed, 2),
                   lambda p: lifted_tropical(p, a2_pair(), 2, -1),
                   lambda p: lifted_flow(p, a2_pair(), 1, 1, 0.6)):
            assert residual(fn(pt).fiber, identity_fiber(family, N)) < 1e-14

    def test_flow_at_zero_time(self):
        pt = sample_point(np.random.default_rng(0), b2_pair(), "A", "B")
        out = lifted_flow(pt, b2_pair(), 1, 1, 0.0)
        assert residual(out.fiber, pt.fiber) == 0 and residual(out.base, pt.base) == 0


class TestLiftedHamiltonian:
    @given(SEEDS, st.sampled_from(FAMILIES), st.sampled_from(SIDES), st.sampled_from([1, -1]))
    def test_source_minus_target(self, seed, family, side, eps):
        pair = list(PAIRS.values())[seed % len(PAIRS)]
        gen = np.random.default_rng(seed)
        pt = sample_point(gen, pair, side, family)
        k = int(gen.integers(1, 3))
        space = LogCanonicalSpace.of(pair, side)
        h_src = hamiltonian(ChartPoint(side, pt.base, pt.z), pair, k, eps)
        h_tgt = hamiltonian(ChartPoint(side, target(space, pt), pt.z), pair, k, eps)
        assert lifted_hamiltonian(pt, pair, k, eps) == pytest.approx(h_src - h_tgt, abs=1e-10)

    def test_vanishes_on_identities(self):
        H = LiftedHamiltonian(1, 1, "X", "G")
        assert H(GroupoidPoint("G", "X", [1.3, 0.4], [0, 0]), b2_pair()) == 0.0
        with pytest.raises(ValueError):
            H(GroupoidPoint("D", "X", [1.3, 0.4], [1, 1]), b2_pair())

    @given(SEEDS, st.floats(0.2, 3.0))
    def test_palindromic_sign_flip(self, seed, z1):
        # for Z = Z*: H(-1) - H(+1) = -(r/2d) (log^2 wb - log^2 wa)
        pair = a2_pair((2, 1))
        gen = np.random.default_rng(seed)
        pt = sample_point(gen, pair, "X", "D", z=((z1,), ()))
        wa, wb = source_target_w(pt, pair, 1)
        want = -(2 / 2) * (math.log(wb) ** 2 - math.log(wa) ** 2) / pair.D[0]
        got = lifted_hamiltonian(pt, pair, 1, -1) - lifted_hamiltonian(pt, pair, 1, 1)
        assert got == pytest.approx(want, abs=1e-10)


class TestMutationConsistency:
    @pytest.mark.parametrize("name", sorted(PAIRS))
    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("side", SIDES)
    def test_closed_form_composed_involution(self, name, family, side):
        rep = check_mutation_consistency(PAIRS[name], family, side, 4, np.random.default_rng(11))
        assert rep.passed, rep

    @pytest.mark.parametrize("family", FAMILIES)
    def test_frozen(self, family):
        for side in SIDES:
            assert check_mutation_consistency(frozen_pair(), family, side, 3, np.random.default_rng(2)).passed

    @given(SEEDS, st.sampled_from(FAMILIES), st.sampled_from(SIDES))
    def test_at_negative_sign_vertices(self, seed, family, side):
        pair = PAIRS["B2"]
        gen = np.random.default_rng(seed)
        tr = walk(MutationTrace.seed(pair), (1, 2, 1))[-1]
        pt = sample_point(gen, pair, side, family)
        for k in (1, 2):
            direct = mutate_groupoid(pt, tr, k)
            composed = mutate_groupoid_composed(pt, tr, k)
            assert residual(direct.fiber, composed.fiber) < 1e-10
            back = mutate_groupoid(direct, mutate_trace(tr, k), k)
            assert residual(back.fiber, pt.fiber) < 1e-10

    def test_a_update_closed_form(self):
        # Z = (1 + u)^2: int 1/(1+u)^2 = 1/(1+wa) - 1/(1+wb)
        pair = a2_pair((2, 1))
        pt = sample_point(np.random.default_rng(4), pair, "A", "G", z=((2.0,), ()))
        wa, wb = source_target_w(pt, pair, 1)
        out = mutate_groupoid(pt, MutationTrace.seed(pair), 1)
        want = pt.a[0][0] + (1 / (1 + wa) - 1 / (1 + wb)) / pair.D[0]
        assert out.a[0][0] == pytest.approx(want, abs=1e-11)


class TestIntertwiningAndPoisson:
    @pytest.mark.parametrize("name", ["A2", "B2", "A2r21"])
    @pytest.mark.parametrize("family", FAMILIES)
    def test_intertwining(self, name, family):
        for side in SIDES:
            assert check_intertwining(PAIRS[name], family, side, 3, np.random.default_rng(5)).passed

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("side", SIDES)
    def test_lifted_poisson(self, family, side):
        assert check_lifted_poisson(PAIRS["A2r21"], family, side, 2, np.random.default_rng(6)).passed

    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("side", SIDES)
    def test_flows(self, family, side):
        assert check_flows(PAIRS["B2"], family, side, 2, np.random.default_rng(7)).passed


class TestBoundary:
    seed = MutationTrace.seed(a2_pair())

    @pytest.mark.parametrize("family", ["G", "B"])
    def test_b_jk_plus_one(self, family):
        # k=2, j=1: B_12 = 1, prod_{i != 1} x_i^{B_i2} = 1, z_{2,1} = 1
        x2, f1, f2 = 1.4, 0.3, -0.6
        pt = GroupoidPoint(family, "A", [0.0, x2], [f1, f2], allow_boundary=True)
        out = boundary_mutation(pt, self.seed, 2)
        if family == "G":
            want = f1 - (math.exp(-f2 * x2) - 1)
        else:
            want = f1 - ((f2 * x2 + 1) ** -1 - 1)
        assert out.fiber[0] == pytest.approx(want, abs=1e-14)

    @pytest.mark.parametrize("family", ["G", "B"])
    def test_b_jk_minus_one(self, family):
        # k=1, j=2: B_21 = -1, prod_{i != 2} x_i^{-B_i1} = 1, z_{1,0} = 1
        x1, f1, f2 = 0.9, 0.4, 0.2
        pt = GroupoidPoint(family, "A", [x1, 0.0], [f1, f2], allow_boundary=True)
        out = boundary_mutation(pt, self.seed, 1)
        if family == "G":
            want = f2 + (math.exp(f1 * x1) - 1)
        else:
            want = f2 + ((f1 * x1 + 1) - 1)
        assert out.fiber[1] == pytest.approx(want, abs=1e-14)

    @pytest.mark.parametrize("family", ["G", "B"])
    def test_large_entry_leaves_fiber(self, family):
        # B2: B_21 = -2
        pt = GroupoidPoint(family, "A", [1.1, 0.0], [0.4, 0.25], allow_boundary=True)
        out = boundary_mutation(pt, MutationTrace.seed(b2_pair()), 1)
        assert out.fiber[1] == 0.25

    def test_generalized_coefficient(self):
        # r_1 = 2 with z_{1,1} = 3: B_21 = -1 picks z_{1, r-1} = z_{1,1}
        pair = a2_pair((2, 1))
        pt = GroupoidPoint("G", "A", [0.9, 0.0], [0.4, 0.2], z=((3.0,), ()), allow_boundary=True)
        out = boundary_mutation(pt, MutationTrace.seed(pair), 1)
        assert out.fiber[1] == pytest.approx(0.2 + 3.0 * math.expm1(0.4 * 0.9), abs=1e-13)

    @pytest.mark.parametrize("name", sorted(PAIRS))
    @pytest.mark.parametrize("family", FAMILIES)
    def test_continuity(self, name, family):
        rep = check_boundary(PAIRS[name], family, 2, np.random.default_rng(8))
        assert rep.passed, rep

    def test_limit_study_converges(self):
        pt = GroupoidPoint("G", "A", [0.0, 1.4], [0.3, -0.6], allow_boundary=True)
        diffs = boundary_limit_study(pt, self.seed, 2, 1)
        assert diffs[0] > diffs[1] > diffs[2] and diffs[2] < 1e-6

    def test_excluded_locus(self):
        pair = frozen_pair()
        # k=1: B_31 = 1 and B_21 = -1, so x_2 = x_3 = 0 is excluded
        pt = GroupoidPoint("G", "A", [1.0, 0.0, 0.0, 1.0], [0.1, 0.2, 0.3, 0.4], allow_boundary=True)
        with pytest.raises(ValueError):
            boundary_mutation(pt, MutationTrace.seed(pair), 1)

    def test_x_side_rejected(self):
        with pytest.raises(ValueError):
            boundary_mutation(GroupoidPoint("G", "X", [1, 1], [0, 0]), self.seed, 1)


class TestSeparation:
    def test_seed_path_is_identity(self):
        pt = sample_point(np.random.default_rng(0), a2_pair(), "A", "D")
        assert residual(gpd_separation(a2_pair(), (), pt).fiber, pt.fiber) == 0

    def test_length_one_is_mutation(self):
        pt = GroupoidPoint("D", "A", [1, 1], [2, 5])
        assert gpd_separation(a2_pair(), (1,), pt).fiber == pytest.approx([0.5, 7.5])

    @given(SEEDS, st.sampled_from(FAMILIES), st.sampled_from(SIDES))
    def test_a2_path_12(self, seed, family, side):
        gen = np.random.default_rng(seed)
        pt = sample_point(gen, a2_pair(), side, family)
        closed = gpd_separation(a2_pair(), (1, 2), pt)
        stepped = walk_groupoid(pt, MutationTrace.seed(a2_pair()), (1, 2))[0][-1]
        assert residual(closed.fiber, stepped.fiber) < 1e-8
        assert residual(closed.base, stepped.base) < 1e-8

    @pytest.mark.parametrize("name", sorted(PAIRS))
    def test_paths_up_to_4(self, name):
        rep = check_gpd_separation(PAIRS[name], list(all_paths(2, 4, 1)), 1, np.random.default_rng(9))
        assert rep.passed, rep


class TestPeriodicity:
    @pytest.mark.parametrize("name", sorted(PERIODS))
    def test_known(self, name):
        pair, seq, sigma = PERIODS[name]
        rep = gpd_periodicity_check(pair, seq, sigma, 3, np.random.default_rng(10))
        assert rep.passed, rep.notes

    def test_trivial(self):
        rep = gpd_periodicity_check(b2_pair(), (2, 2), (1, 2), 3, np.random.default_rng(0), tol=1e-10)
        assert rep.passed

    def test_not_a_period(self):
        rep = gpd_periodicity_check(a2_pair(), (1, 2, 1, 2, 1), (1, 2), 2, np.random.default_rng(0))
        assert not rep.passed


class TestDilog:
    @pytest.mark.parametrize("variant", ["source_target", "zero"])
    def test_trivial_period(self, variant):
        pt = sample_point(np.random.default_rng(0), a2_pair(), "X", "D")
        assert abs(dilog_identity_sum(a2_pair(), (1, 1), 1, 1, pt, variant)) < 1e-14

    @pytest.mark.parametrize("variant", ["source_target", "zero"])
    def test_pentagon(self, variant):
        gen = np.random.default_rng(12)
        for _ in range(10):
            pt = sample_point(gen, a2_pair(), "X", "D")
            assert abs(dilog_identity_sum(a2_pair(), (1, 2, 1, 2, 1), 1, 1, pt, variant)) < 1e-8

    @pytest.mark.parametrize("variant", ["source_target", "zero"])
    @pytest.mark.parametrize("family", FAMILIES)
    def test_generalized_a_coordinate(self, variant, family):
        pair = a2_pair((2, 1))
        gen = np.random.default_rng(13)
        for _ in range(5):
            pt = sample_point(gen, pair, "X", family)
            assert abs(dilog_identity_sum(pair, (1, 2) * 3, 1, 1, pt, variant)) < 1e-8

    @pytest.mark.xfail(strict=True, reason="not implied by periodicity: no a-coordinate at j = r_ell")
    @pytest.mark.parametrize("pair,seq,ell,j", [
        (a2_pair(), (1, 2, 1, 2, 1), 2, 1),
        (a2_pair((2, 1)), (1, 2) * 3, 1, 2),
    ])
    def test_top_index(self, pair, seq, ell, j):
        pt = sample_point(np.random.default_rng(14), pair, "X", "D")
        assert abs(dilog_identity_sum(pair, seq, ell, j, pt)) < 1e-8

    def test_divergent_zero_variant(self):
        pt = sample_point(np.random.default_rng(0), a2_pair(), "X", "D")
        with pytest.raises(PoleError):
            dilog_identity_sum(a2_pair(), (2, 1, 2, 1, 2), 2, 1, pt, "zero")

    def test_argument_checks(self):
        pt = sample_point(np.random.default_rng(0), a2_pair(), "X", "D")
        with pytest.raises(ValueError):
            dilog_identity_sum(a2_pair(), (1, 1), 1, 2, pt)
        with pytest.raises(ValueError):
            dilog_identity_sum(a2_pair(), (1, 1), 1, 1, pt, "bogus")
        with pytest.raises(ValueError):
            dilog_identity_sum(a2_pair(), (1, 1), 1, 1, pt.replace(side="A"))
