"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest, or directly with ``python -m tests.test_acceptance`` for the
summary lines alone.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
import pytest

from clustergpd.charts import (
    ChartPoint,
    flow,
    hamiltonian,
    mutate_chart,
    mutate_chart_composed,
    random_chart_point,
    yhat_values,
)
from clustergpd.core_algebra import MutationTrace, a2_pair, b2_pair, g2_pair, random_pair
from clustergpd.groupoids import (
    FAMILIES,
    SIDES,
    LogCanonicalSpace,
    check_axioms,
    check_inverse_pair,
    check_multiplicativity,
    random_point,
    spray_flow,
    top_power_coefficient,
)
from clustergpd.gpd_mutations import (
    check_boundary,
    check_gpd_separation,
    check_mutation_consistency,
    dilog_identity_sum,
    gpd_periodicity_check,
    sample_point,
)
from clustergpd.laurent import (
    ExchangePoly,
    FPolyFamily,
    all_paths,
    laurent_check,
    mutate_F,
    periodicity_exact,
    verify_separation,
)
from clustergpd.numerics import residual

from .conftest import frozen_pair

RANK2 = (a2_pair(), b2_pair(), g2_pair())


@dataclass
class Outcome:
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self, number: int, title: str) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {number:>2}. {title:<34s} {self.detail} ({self.seconds:.2f} s)"


def timed(fn: Callable[[], tuple[bool, str]]) -> Outcome:
    start = time.perf_counter()
    ok, detail = fn()
    return Outcome(ok, detail, time.perf_counter() - start)


def mixed_pairs(count: int) -> list:
    gen = np.random.default_rng(2024)
    return [random_pair(gen, 2, 0) for _ in range(count)] + [random_pair(gen, 3, 1) for _ in range(count)]


def c1_exact_periodicity():
    cases = [(a2_pair(), (1, 2) * 2 + (1,), (2, 1)), (b2_pair(), (1, 2) * 3, (1, 2)),
             (g2_pair(), (1, 2) * 4, (1, 2))]
    start = time.perf_counter()
    reps = [periodicity_exact(p, s, sig) for p, s, sig in cases]
    took = time.perf_counter() - start
    ok = all(r.passed for r in reps) and took < 1.0
    return ok, f"lengths 5/6/8, {sum(len(r.notes['failures']) for r in reps)} violated equalities"


def c2_laurent():
    exchange = (ExchangePoly.symbolic(1, 2), ExchangePoly.binomial(2, 1))
    roots = [FPolyFamily.seed(MutationTrace.seed(p)) for p in RANK2]
    roots.append(FPolyFamily.seed(MutationTrace.seed(a2_pair((2, 1))), exchange))
    count, bad = 0, 0

    def visit(fam, depth):
        nonlocal count, bad
        count += 1
        if not laurent_check(fam).passed or any(f.constant_term() != 1 for f in fam.F):
            bad += 1
        if depth < 6:
            for k in (1, 2):
                visit(mutate_F(fam, k), depth + 1)

    start = time.perf_counter()
    for root in roots:
        visit(root, 0)
    took = time.perf_counter() - start
    return bad == 0 and took < 10.0, f"{count} seeds checked, {bad} failures"


def c3_separation():
    pairs = RANK2 + (a2_pair((2, 1)),)
    reps = [verify_separation(p, None, 5) for p in pairs]
    return all(r.passed for r in reps), f"{sum(r.samples for r in reps)} vertices, exact"


def c4_axioms():
    start = time.perf_counter()
    worst = {"GB": 0.0, "D": 0.0}
    gen = np.random.default_rng(4)
    ok = True
    for pair in mixed_pairs(2):
        for side in SIDES:
            space = LogCanonicalSpace.of(pair, side)
            for fam in FAMILIES:
                tol = 1e-12 if fam == "D" else 1e-9
                rep = check_axioms(space, fam, 100, gen, tol=tol)
                key = "D" if fam == "D" else "GB"
                worst[key] = max(worst[key], rep.max_residual)
                ok &= rep.passed
    took = time.perf_counter() - start
    return ok and took < 30.0, f"max {worst['GB']:.1e} (G,B), {worst['D']:.1e} (D)"


def c5_symplectic():
    gen = np.random.default_rng(5)
    ok, worst_inv, worst_vol = True, 0.0, 0.0
    for pair in mixed_pairs(1):
        for side in SIDES:
            space = LogCanonicalSpace.of(pair, side)
            for fam in FAMILIES:
                rep = check_inverse_pair(space, fam, 100, gen, tol=1e-10)
                ok &= rep.passed
                worst_inv = max(worst_inv, rep.max_residual)
            want = math.factorial(space.dim)
            for _ in range(100):
                got = top_power_coefficient(space, random_point(gen, space, "G", spread=1.0))
                worst_vol = max(worst_vol, abs(got - want) / want)
    ok &= worst_vol <= 1e-10
    return ok, f"inverse pair {worst_inv:.1e}, volume coefficient {worst_vol:.1e}"


def c6_multiplicativity():
    gen = np.random.default_rng(6)
    ok, worst = True, 0.0
    for pair in (a2_pair(), b2_pair()):
        for side in SIDES:
            for fam in ("G", "B"):
                rep = check_multiplicativity(LogCanonicalSpace.of(pair, side), fam, 50, gen, tol=1e-6)
                ok &= rep.passed
                worst = max(worst, rep.max_residual)
    return ok, f"max {worst:.1e}"


def c7_hamiltonian():
    gen = np.random.default_rng(7)
    chart = fiber = cons = 0.0
    pairs = RANK2 + (a2_pair((2, 1)),)
    for pair in pairs:
        tr = MutationTrace.seed(pair)
        for side in SIDES:
            for _ in range(20):
                p = random_chart_point(gen, pair, side)
                for k in (1, 2):
                    chart = max(chart, residual(mutate_chart(p, tr, k).base,
                                                mutate_chart_composed(p, tr, k).base))
                    q = flow(p, pair, k, 1, 1.3)
                    if side == "X":
                        cons = max(cons, abs(q.base[k - 1] / p.base[k - 1] - 1))
                    else:
                        ratio = yhat_values(q.base, pair)[k - 1] / yhat_values(p.base, pair)[k - 1]
                        cons = max(cons, abs(ratio - 1))
            for fam in FAMILIES:
                rep = check_mutation_consistency(pair, fam, side, 10, gen, tol=1e-10)
                fiber = max(fiber, rep.max_residual)
            space = LogCanonicalSpace.of(pair, side)
            for _ in range(20):
                pt = random_point(gen, space, "G")
                out = spray_flow(space, pt, float(gen.uniform(-3, 3)))
                cons = max(cons, residual(out.base * out.fiber, pt.base * pt.fiber))
    h = hamiltonian(ChartPoint("X", [1.0, 1.0]), a2_pair(), 1, 1)
    series = float(mpmath.nsum(lambda n: (-1) ** n / n ** 2, [1, mpmath.inf]))
    li2 = max(abs(h + math.pi ** 2 / 12), abs(h - series))
    ok = chart <= 1e-12 and fiber <= 1e-10 and cons <= 1e-11 and li2 <= 1e-9
    return ok, f"chart {chart:.1e}, fiber {fiber:.1e}, conserved {cons:.1e}, Li2(-1) {li2:.1e}"


def c8_gpd_periodicity():
    gen = np.random.default_rng(8)
    reps = [gpd_periodicity_check(a2_pair(), (1, 2, 1, 2, 1), (2, 1), 25, gen, tol=1e-8),
            gpd_periodicity_check(b2_pair(), (1, 2) * 3, (1, 2), 25, gen, tol=1e-8)]
    return all(r.passed for r in reps), f"max {max(r.max_residual for r in reps):.1e}"


def c9_gpd_separation():
    gen = np.random.default_rng(9)
    paths = list(all_paths(2, 5, 1))
    reps = [check_gpd_separation(p, paths, 2, gen, tol=1e-8) for p in RANK2 + (a2_pair((2, 1)),)]
    return all(r.passed for r in reps), f"{len(paths)} paths per pair, max rel {max(r.max_residual for r in reps):.1e}"


def c10_dilog():
    gen = np.random.default_rng(10)
    worst = 0.0
    for _ in range(10):
        pt = sample_point(gen, a2_pair(), "X", "D")
        for variant in ("source_target", "zero"):
            worst = max(worst, abs(dilog_identity_sum(a2_pair(), (1, 2, 1, 2, 1), 1, 1, pt, variant)))
    return worst < 1e-8, f"ell=1 j=1, both variants, max {worst:.1e}"


def c11_boundary():
    gen = np.random.default_rng(11)
    ok, worst = True, 0.0
    for pair in (a2_pair(), b2_pair(), g2_pair(), a2_pair((2, 1)), frozen_pair()):
        for fam in FAMILIES:
            rep = check_boundary(pair, fam, 3, gen, x_small=1e-7, tol=1e-5)
            ok &= rep.passed
            worst = max(worst, rep.max_residual)
    return ok, f"x_j = 1e-7, max {worst:.1e}"


CRITERIA = [
    (1, "exact periodicity combinatorics", c1_exact_periodicity),
    (2, "Laurent phenomenon", c2_laurent),
    (3, "chart separation of additions", c3_separation),
    (4, "groupoid axioms", c4_axioms),
    (5, "symplectic structure", c5_symplectic),
    (6, "multiplicativity", c6_multiplicativity),
    (7, "Hamiltonian structure", c7_hamiltonian),
    (8, "groupoid periodicity", c8_gpd_periodicity),
    (9, "groupoid separation of additions", c9_gpd_separation),
    (10, "dilogarithm identities", c10_dilog),
    (11, "boundary continuity", c11_boundary),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn, capsys):
    outcome = timed(fn)
    with capsys.disabled():
        print("\n" + outcome.line(number, title))
    assert outcome.passed, outcome.detail


if __name__ == "__main__":
    for number, title, fn in CRITERIA:
        print(timed(fn).line(number, title))
