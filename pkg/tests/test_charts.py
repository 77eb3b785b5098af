from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from clustergpd.charts import (
    ChartPoint,
    bracket,
    chart_periodicity,
    chart_poisson_report,
    flow,
    hamiltonian,
    mutate_chart,
    mutate_chart_composed,
    random_chart_point,
    rho,
    tropical,
    walk_chart,
    yhat_values,
)
from clustergpd.core_algebra import CompatiblePair, MutationTrace, a2_pair, b2_pair, g2_pair, random_pair, walk
from clustergpd.numerics import PoleError, residual

from .conftest import PERIODS, frozen_pair

SEEDS = st.integers(0, 10_000)
PAIRS = [a2_pair(), b2_pair(), g2_pair(), a2_pair((2, 1)), a2_pair((3, 2))]


def rank3(seed: int) -> CompatiblePair:
    return random_pair(np.random.default_rng(seed), 3, 1)


def random_vertex(pair, gen, max_len=4):
    path = [int(k) for k in gen.integers(1, pair.n + 1, size=int(gen.integers(0, max_len + 1)))]
    return walk(MutationTrace.seed(pair), path)[-1]


class TestRho:
    def test_examples(self):
        assert rho(ChartPoint("A", [1, 1]), a2_pair()).base.tolist() == [1, 1]
        assert rho(ChartPoint("A", [2, 3]), a2_pair()).base == pytest.approx([1 / 3, 2])

    def test_frozen_factor(self):
        assert rho(ChartPoint("A", [2, 3, 5, 7]), frozen_pair()).base == pytest.approx([5 / 3, 14])

    def test_rejects_x_side(self):
        with pytest.raises(ValueError):
            rho(ChartPoint("X", [1, 1]), a2_pair())

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            ChartPoint("A", [1, 0])

    @given(SEEDS)
    def test_poisson(self, seed):
        pair = rank3(seed)
        gen = np.random.default_rng(seed)
        pts = [random_chart_point(gen, pair, "A") for _ in range(3)]
        assert chart_poisson_report("rho", lambda p: rho(p, pair), "A", pair, pair, pts, tol=1e-7).passed


class TestHamiltonian:
    def test_dilog_at_one(self):
        h = hamiltonian(ChartPoint("X", [1.0, 1.0]), a2_pair(), 1, 1)
        assert h == pytest.approx(-math.pi ** 2 / 12, abs=1e-9)
        assert h == pytest.approx(float(mpmath.polylog(2, -1)), abs=1e-9)

    @given(st.floats(0.01, 20), st.sampled_from([1, -1]), st.sampled_from([0, 1]))
    def test_cluster_case_is_li2(self, w, eps, side):
        pair = b2_pair()  # D = (2, 1)
        k = 1
        if side == 0:
            pt = ChartPoint("X", [w ** eps, 1.3])
        else:
            pt = ChartPoint("A", [0.7, w ** (eps * -0.5)])  # yhat_1 = x2^-2
        want = eps / pair.D[0] * float(mpmath.polylog(2, -w))
        assert hamiltonian(pt, pair, k, eps) == pytest.approx(want, abs=1e-10)

    def test_small_leading_order(self):
        y = 1e-4
        h = hamiltonian(ChartPoint("X", [y, 1.0], ((1.0,), ())), a2_pair((2, 1)), 1, 1)
        assert h == pytest.approx(-y, rel=1e-3)
        assert hamiltonian(ChartPoint("X", [1e-300, 1.0]), a2_pair(), 1, 1) == pytest.approx(0, abs=1e-299)

    def test_pole(self):
        with pytest.raises(PoleError):
            hamiltonian(ChartPoint("X", [1.0, 1.0], ((-3.0,), ())), a2_pair((2, 1)), 1, 1)


class TestFlow:
    def test_example(self):
        assert flow(ChartPoint("X", [1, 1]), a2_pair(), 1, 1, 1.0).base == pytest.approx([1, 0.5])

    def test_zero_time(self):
        p = ChartPoint("A", [1.2, 0.4])
        assert np.array_equal(flow(p, a2_pair(), 2, -1, 0.0).base, p.base)

    @given(SEEDS, st.floats(-2, 2), st.sampled_from(["X", "A"]))
    def test_group_property_and_conservation(self, seed, t, side):
        pair = PAIRS[seed % len(PAIRS)]
        gen = np.random.default_rng(seed)
        p = random_chart_point(gen, pair, side)
        k = int(gen.integers(1, pair.n + 1))
        eps = int(gen.choice([1, -1]))
        q = flow(p, pair, k, eps, t)
        assert residual(flow(q, pair, k, eps, -t).base, p.base) < 1e-12
        if side == "X":
            assert q.base[k - 1] == pytest.approx(p.base[k - 1], rel=1e-12)
        else:
            assert yhat_values(q.base, pair)[k - 1] == pytest.approx(yhat_values(p.base, pair)[k - 1], rel=1e-11)
        s = float(gen.uniform(-1, 1))
        assert residual(flow(flow(p, pair, k, eps, s), pair, k, eps, t).base,
                        flow(p, pair, k, eps, s + t).base) < 1e-12


class TestTropical:
    def test_a_side_example(self):
        out = tropical(ChartPoint("A", [2, 3]), a2_pair(), 1, 1)
        assert out.base == pytest.approx([3 / 2, 3])

    def test_x_side_inverts(self):
        out = tropical(ChartPoint("X", [2, 3]), a2_pair(), 1, 1)
        assert out.base[0] == 0.5

    @given(SEEDS, st.sampled_from(["X", "A"]))
    def test_opposite_signs_invert(self, seed, side):
        pair = PAIRS[seed % len(PAIRS)]
        gen = np.random.default_rng(seed)
        p = random_chart_point(gen, pair, side)
        k = int(gen.integers(1, pair.n + 1))
        eps = int(gen.choice([1, -1]))
        from clustergpd.core_algebra import mutate_pair

        mid = tropical(p, pair, k, eps)
        back = tropical(mid, mutate_pair(pair, k, eps), k, -eps)
        assert residual(back.base, p.base) < 1e-13 and back.z == p.z


class TestMutateChart:
    def test_a2_example(self):
        out = mutate_chart(ChartPoint("A", [1, 1]), MutationTrace.seed(a2_pair()), 1)
        assert out.base.tolist() == [2, 1]

    def test_x_side_inverts_exactly(self):
        out = mutate_chart(ChartPoint("X", [3.0, 5.0]), MutationTrace.seed(b2_pair()), 2)
        assert out.base[1] == 1 / 5

    @given(SEEDS, st.sampled_from(["X", "A"]))
    def test_composition_and_involution(self, seed, side):
        pair = PAIRS[seed % len(PAIRS)]
        gen = np.random.default_rng(seed)
        tr = random_vertex(pair, gen)
        p = random_chart_point(gen, pair, side)
        k = int(gen.integers(1, pair.n + 1))
        direct = mutate_chart(p, tr, k)
        assert residual(direct.base, mutate_chart_composed(p, tr, k).base) < 1e-12
        pts, _ = walk_chart(p, tr, [k, k])
        assert residual(pts[-1].base, p.base) < 1e-10 and pts[-1].z == p.z

    @given(SEEDS, st.sampled_from(["X", "A"]))
    def test_poisson(self, seed, side):
        pair = rank3(seed)
        gen = np.random.default_rng(seed)
        tr = random_vertex(pair, gen, 2)
        k = int(gen.integers(1, 4))
        pts = [random_chart_point(gen, pair, side) for _ in range(2)]
        # finite differences are meaningless once an image coordinate leaves ~e^{+-8}
        assume(all(np.max(np.abs(np.log(mutate_chart(p, tr, k).base))) < 8 for p in pts))
        out_pair = walk(tr, [k])[-1].pair
        rep = chart_poisson_report("mu", lambda p: mutate_chart(p, tr, k), side, tr.pair, out_pair, pts,
                                   tol=1e-6)
        assert rep.passed, rep

    def test_bracket_is_skew(self):
        P = bracket("X", b2_pair())(np.array([1.5, 2.0]))
        assert np.allclose(P, -P.T)


class TestChartPeriodicity:
    @pytest.mark.parametrize("name", sorted(PERIODS))
    @pytest.mark.parametrize("side", ["X", "A"])
    def test_known(self, name, side):
        pair, seq, sigma = PERIODS[name]
        gen = np.random.default_rng(5)
        pts = [random_chart_point(gen, pair, side) for _ in range(5)]
        assert chart_periodicity(MutationTrace.seed(pair), seq, sigma, pts).passed

    def test_wrong_sigma_fails(self):
        pair = a2_pair()
        gen = np.random.default_rng(0)
        pts = [random_chart_point(gen, pair, "X") for _ in range(3)]
        assert not chart_periodicity(MutationTrace.seed(pair), (1, 2, 1, 2, 1), (1, 2), pts).passed
