"""Numeric cluster charts on the positive orthant.

X-side points carry ``y`` (length n), A-side points carry ``x`` (length m).
Both carry the middle coefficients ``z[l]`` of every exchange polynomial.
Direction arguments are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .core_algebra import CompatiblePair, MutationTrace, mutate_trace, tropical_sign
from .numerics import (
    DEFAULT_TOLERANCES,
    PoleError,
    VerificationReport,
    check_poisson_map,
    poly_eval,
    quad_log_over_u,
    residual,
)

Side = Literal["X", "A"]


@dataclass(frozen=True)
class ChartPoint:
    side: Side
    base: np.ndarray
    z: tuple[tuple[float, ...], ...] = ()
    allow_boundary: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.side not in ("X", "A"):
            raise ValueError(f"side must be 'X' or 'A', got {self.side!r}")
        base = np.array(self.base, dtype=float)
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "z", tuple(tuple(float(v) for v in zk) for zk in self.z))
        bad = base < 0 if self.allow_boundary else base <= 0
        if np.any(bad) or not np.all(np.isfinite(base)):
            raise ValueError(f"base point must lie in the positive orthant: {base}")

    def replace(self, base: np.ndarray | None = None, z=None) -> "ChartPoint":
        return ChartPoint(self.side, self.base if base is None else base,
                          self.z if z is None else z, self.allow_boundary)


def trivial_z(pair: CompatiblePair, fill: float = 1.0) -> tuple[tuple[float, ...], ...]:
    return tuple((fill,) * (r - 1) for r in pair.r)


def _pair(obj: CompatiblePair | MutationTrace) -> CompatiblePair:
    return obj.pair if isinstance(obj, MutationTrace) else obj


def normalize_z(z: Sequence[Sequence[float]], pair: CompatiblePair) -> tuple[tuple[float, ...], ...]:
    """Fill in ``z`` when every ``r_l = 1`` and none was given; else check degrees."""
    if not z and all(r == 1 for r in pair.r):
        return ((),) * pair.n
    if len(z) != pair.n or any(len(zl) != r - 1 for zl, r in zip(z, pair.r)):
        raise ValueError(f"z does not match degrees r={pair.r}")
    return tuple(tuple(zl) for zl in z)


def _prep(point: ChartPoint, pair: CompatiblePair) -> ChartPoint:
    z = normalize_z(point.z, pair)
    return point if z == point.z else point.replace(z=z)


def z_coeffs(z: Sequence[Sequence[float]], k: int, eps: int = 1) -> list[float]:
    """Ascending coefficients of ``Z°_k``: ``Z_k`` for ``eps=+1``, ``Z_k*`` otherwise."""
    c = [1.0, *z[k - 1], 1.0]
    return c if eps == 1 else c[::-1]


def star_z(z: Sequence[Sequence[float]], k: int) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(reversed(zl)) if l == k - 1 else tuple(zl) for l, zl in enumerate(z))


def Z_value(z: Sequence[Sequence[float]], k: int, eps: int, w: float) -> float:
    val = poly_eval(z_coeffs(z, k, eps), w)
    if not val > 0:
        raise PoleError(f"Z°_{k} = {val} is not positive at {w}")
    return val


def pp(a: float) -> float:
    return a if a > 0 else 0.0


def yhat_values(x: np.ndarray, pair: CompatiblePair) -> np.ndarray:
    """``yhat_k = prod_i x_i^{B_ik}``; exact zeros of ``x`` are allowed where the exponent is >= 0."""
    B = pair.B_array
    out = np.ones(pair.n)
    for k in range(pair.n):
        for i in range(pair.m):
            if B[i, k]:
                out[k] *= x[i] ** B[i, k]
    return out


def rho(point: ChartPoint, pair: CompatiblePair | MutationTrace) -> ChartPoint:
    """The ensemble map, ``y_k = prod_i x_i^{B_ik}``; ``z`` passes through."""
    if point.side != "A":
        raise ValueError("rho takes an A-side point")
    return ChartPoint("X", yhat_values(point.base, _pair(pair)), point.z)


def _w(point: ChartPoint, pair: CompatiblePair, k: int) -> float:
    if point.side == "X":
        return float(point.base[k - 1])
    return float(yhat_values(point.base, pair)[k - 1])


def hamiltonian(point: ChartPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
                tol: float | None = None) -> float:
    """``-(eps/d_k) int_0^{w} log Z°_k(u)/u du`` with ``w = y_k^eps`` or ``yhat_k^eps``."""
    pair = _pair(pair)
    point = _prep(point, pair)
    w = _w(point, pair, k) ** eps
    return -(eps / pair.D[k - 1]) * quad_log_over_u(z_coeffs(point.z, k, eps), 0.0, w, tol)


def flow(point: ChartPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
         t: float) -> ChartPoint:
    """Time-``t`` flow of the Hamiltonian in direction ``k``."""
    pair = _pair(pair)
    point = _prep(point, pair)
    kk = k - 1
    base = point.base.copy()
    if point.side == "X":
        Zv = Z_value(point.z, k, eps, base[kk] ** eps)
        for l in range(pair.n):
            base[l] *= Zv ** (-t * pair.B[kk][l])
    else:
        Zv = Z_value(point.z, k, eps, yhat_values(base, pair)[kk] ** eps)
        base[kk] *= Zv ** (-t)
    return point.replace(base=base)


def tropical(point: ChartPoint, pair: CompatiblePair | MutationTrace, k: int,
             eps: int) -> ChartPoint:
    """Monomial part of the mutation, into the chart mutated at ``k``."""
    pair = _pair(pair)
    point = _prep(point, pair)
    kk, rk = k - 1, pair.r[k - 1]
    b = point.base
    out = b.copy()
    if point.side == "X":
        out[kk] = 1.0 / b[kk]
        for l in range(pair.n):
            if l != kk:
                out[l] = b[l] * b[kk] ** pp(eps * rk * pair.B[kk][l])
    else:
        val = 1.0 / b[kk]
        for i in range(pair.m):
            e = pp(-eps * pair.B[i][kk] * rk)
            if e:
                val *= b[i] ** e
        out[kk] = val
    return point.replace(base=out, z=star_z(point.z, k))


def exchange_value(x: np.ndarray, pair: CompatiblePair, z, k: int, eps: int) -> float:
    """``prod_i x_i^{[-eps B_ik r_k]_+} Z°_k(yhat_k^eps)`` expanded as a polynomial in ``x``.

    Every exponent is non-negative, so this is finite on the closed orthant.
    """
    kk, rk = k - 1, pair.r[k - 1]
    coeffs = z_coeffs(z, k, eps)
    total = 0.0
    for c, zc in enumerate(coeffs):
        term = zc
        for i in range(pair.m):
            e = pp(-eps * pair.B[i][kk] * rk) + c * eps * pair.B[i][kk]
            if e:
                term *= x[i] ** e
        total += term
    return total


def mutate_chart(point: ChartPoint, trace: MutationTrace, k: int) -> ChartPoint:
    """Cluster mutation in direction ``k`` at the trace's tropical sign (direct formulas)."""
    pair = trace.pair
    point = _prep(point, pair)
    eps = tropical_sign(trace.C, k)
    kk, rk = k - 1, pair.r[k - 1]
    b = point.base
    out = b.copy()
    if point.side == "X":
        Zv = Z_value(point.z, k, eps, b[kk] ** eps)
        out[kk] = 1.0 / b[kk]
        for l in range(pair.n):
            if l != kk:
                B = pair.B[kk][l]
                out[l] = b[l] * b[kk] ** pp(eps * rk * B) * Zv ** (-B)
    else:
        out[kk] = exchange_value(b, pair, point.z, k, eps) / b[kk]
    return point.replace(base=out, z=star_z(point.z, k))


def mutate_chart_composed(point: ChartPoint, trace: MutationTrace, k: int) -> ChartPoint:
    """The same mutation as ``tropical o flow(t=1)``."""
    eps = tropical_sign(trace.C, k)
    return tropical(flow(point, trace, k, eps, 1.0), trace, k, eps)


def walk_chart(point: ChartPoint, trace: MutationTrace, path: Sequence[int]
               ) -> tuple[list[ChartPoint], list[MutationTrace]]:
    points, traces = [point], [trace]
    for k in path:
        points.append(mutate_chart(points[-1], traces[-1], k))
        traces.append(mutate_trace(traces[-1], k))
    return points, traces


def bracket(side: Side, pair: CompatiblePair) -> Callable[[np.ndarray], np.ndarray]:
    """Log-canonical Poisson tensor of the chart: ``P_ab = {z_a, z_b}``."""
    W = pair.Omega_X if side == "X" else pair.Omega_array

    def P(b: np.ndarray) -> np.ndarray:
        return W * np.outer(b, b)

    return P


def chart_poisson_report(name: str, fn: Callable[[ChartPoint], ChartPoint], side: Side,
                         pair_in: CompatiblePair, pair_out: CompatiblePair, points: Sequence[ChartPoint],
                         tol: float | None = None) -> VerificationReport:
    """check_poisson_map for a chart map, holding ``z`` fixed at each sample."""
    worst = 0.0
    out_side = fn(points[0]).side
    for p in points:
        def f(b, p=p):
            return fn(p.replace(base=b)).base

        rep = check_poisson_map(f, [p.base], bracket(side, pair_in), bracket(out_side, pair_out),
                                name=name, tol=tol)
        worst = max(worst, rep.max_residual)
    return VerificationReport(name, len(points), worst, DEFAULT_TOLERANCES.tol(name) if tol is None else tol)


def chart_periodicity(trace: MutationTrace, sequence: Sequence[int], sigma: Sequence[int],
                      points: Sequence[ChartPoint], tol: float = 1e-9) -> VerificationReport:
    """Numeric check that the composed mutations return ``base[sigma(i)]`` and ``z[sigma(l)]``.

    ``sigma`` is a 1-based permutation of ``1..m`` (A side) or ``1..n`` (X side).
    """
    worst = 0.0
    for p in points:
        outs, _ = walk_chart(p, trace, sequence)
        out = outs[-1]
        perm = [s - 1 for s in sigma[: len(p.base)]]
        worst = max(worst, residual(out.base, p.base[perm]))
        n = len(p.z)
        zin = [p.z[s - 1] for s in sigma[:n]]
        for a, b in zip(out.z, zin):
            worst = max(worst, residual(np.array(a), np.array(b)))
    side = points[0].side if points else "?"
    return VerificationReport(f"chart_periodicity_{side}", len(points), worst, tol,
                              {"sequence": list(sequence), "sigma": list(sigma)})


def random_chart_point(rng: np.random.Generator, pair: CompatiblePair, side: Side,
                       spread: float = 0.7, z_range: tuple[float, float] = (0.2, 2.0)) -> ChartPoint:
    size = pair.n if side == "X" else pair.m
    base = np.exp(rng.uniform(-spread, spread, size=size))
    z = tuple(tuple(rng.uniform(*z_range, size=r - 1)) for r in pair.r)
    return ChartPoint(side, base, z)

