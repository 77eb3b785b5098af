"""Mutations lifted to the G, B and D groupoid charts.

Every fiber map below is computed through ``ell_i = log s_i`` (``x p``,
``log(x u + 1)`` or ``log s``).  The lifted flow changes ``ell`` by a
multiple of ``log R``, where ``R`` compares ``Z°`` at the target and source
images of ``y_k^eps`` (or ``yhat_k^eps``).  The lifted tropical map is linear
in ``ell``.  :func:`mutate_groupoid` writes out the closed forms family by
family instead, so the two routes can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .charts import (
    ChartPoint,
    Z_value,
    flow as chart_flow,
    mutate_chart,
    normalize_z,
    pp,
    star_z,
    tropical,
    yhat_values,
    z_coeffs,
)
from .core_algebra import CompatiblePair, MutationTrace, mutate_trace
from .groupoids import (
    FAMILIES,
    GroupoidPoint,
    LogCanonicalSpace,
    fiber_from_log_s,
    log_s,
    poisson_tensor,
    random_point,
    target,
)
from .laurent import FPolyFamily, default_exchange, walk_F
from .numerics import (
    PoleError,
    VerificationReport,
    adaptive_simpson,
    canonical_block,
    jacobian,
    poly_eval,
    quad_log_over_u,
    quad_rational,
    residual,
)


def _pair(obj: CompatiblePair | MutationTrace) -> CompatiblePair:
    return obj.pair if isinstance(obj, MutationTrace) else obj


def _prep(pt: GroupoidPoint, pair: CompatiblePair) -> GroupoidPoint:
    z = normalize_z(pt.z, pair)
    return pt if z == pt.z else pt.replace(z=z)


def _check_size(pt: GroupoidPoint, pair: CompatiblePair) -> None:
    want = pair.m if pt.side == "A" else pair.n
    if pt.dim != want:
        raise ValueError(f"{pt.side}-side point must have {want} coordinates, got {pt.dim}")


def space_for(pt: GroupoidPoint, pair: CompatiblePair) -> LogCanonicalSpace:
    return LogCanonicalSpace.of(pair, pt.side)


def source_target_w(pt: GroupoidPoint, pair: CompatiblePair, k: int) -> tuple[float, float]:
    """``(alpha^* w, beta^* w)`` for ``w = y_k`` (X) or ``yhat_k`` (A)."""
    kk = k - 1
    ls = log_s(pt)
    if pt.side == "X":
        w = float(pt.base[kk])
        return w, w * float(np.exp(pair.Omega_X[:, kk] @ ls))
    w = float(yhat_values(pt.base, pair)[kk])
    return w, w * float(np.exp(-pair.D[kk] * ls[kk]))


@dataclass(frozen=True)
class LiftedHamiltonian:
    """``H = alpha^* h - beta^* h`` for the chart Hamiltonian ``h`` of direction ``k``."""

    k: int
    eps: int
    side: str
    family: str

    def __call__(self, pt: GroupoidPoint, pair: CompatiblePair | MutationTrace) -> float:
        if pt.side != self.side or pt.family != self.family:
            raise ValueError("point does not belong to this Hamiltonian's groupoid")
        return lifted_hamiltonian(pt, pair, self.k, self.eps)


def lifted_hamiltonian(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
                       tol: float | None = None) -> float:
    """``(eps/d_k) int log Z°(u)/u du`` from ``alpha^* w^eps`` to ``beta^* w^eps``."""
    pair = _pair(pair)
    pt = _prep(pt, pair)
    wa, wb = source_target_w(pt, pair, k)
    return (eps / pair.D[k - 1]) * quad_log_over_u(z_coeffs(pt.z, k, eps), wa ** eps, wb ** eps, tol)


def _a_drift(pt: GroupoidPoint, pair: CompatiblePair, k: int, eps: int, wa: float, wb: float,
             index) -> list[float]:
    """``(eps/d_k) int u^{eps j - 1}/Z_k(u^eps) du`` over ``[wa^eps, wb^eps]`` for each ``j``.

    ``index(j)`` picks the exponent's index, letting callers use ``j`` or ``j*``.
    """
    rk = pair.r[k - 1]
    coeffs = z_coeffs(pt.z, k, 1)
    lo, hi = wa ** eps, wb ** eps
    out = []
    for j in range(1, rk):
        if lo == hi or (lo == 0 and hi == 0) or (np.isinf(lo) and np.isinf(hi)):
            out.append(0.0)
            continue
        out.append((eps / pair.D[k - 1]) * quad_rational(coeffs, index(j), eps, lo, hi))
    return out


def lifted_flow(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
                t: float) -> GroupoidPoint:
    """Time-``t`` flow of the multiplicative Hamiltonian, including the ``a`` drift."""
    pair = _pair(pair)
    pt = _prep(pt, pair)
    _check_size(pt, pair)
    kk, dk = k - 1, pair.D[k - 1]
    wa, wb = source_target_w(pt, pair, k)
    Za = Z_value(pt.z, k, eps, wa ** eps)
    Zb = Z_value(pt.z, k, eps, wb ** eps)
    logR = np.log(Zb / Za)
    ls = log_s(pt).copy()
    base = pt.base.copy()
    if pt.side == "A":
        ls -= t * pair.B_array[:, kk] / dk * logR
        base[kk] *= Za ** (-t)
    else:
        ls[kk] -= t / dk * logR
        base *= Za ** (-t * pair.B_array[kk, :])
    a = [list(al) for al in pt.a]
    for j, v in enumerate(_a_drift(pt, pair, k, eps, wa, wb, lambda j: j), start=1):
        a[kk][j - 1] += t * v
    return pt.replace(base=base, fiber=fiber_from_log_s(pt.family, base, ls),
                      a=tuple(tuple(al) for al in a))


def _tropical_log_s(ls: np.ndarray, pair: CompatiblePair, side: str, k: int, eps: int) -> np.ndarray:
    kk, rk = k - 1, pair.r[k - 1]
    B = pair.B_array
    out = ls.copy()
    if side == "A":
        E = np.maximum(-eps * B[:, kk] * rk, 0)
        out += E * ls[kk]
        out[kk] = -ls[kk]
    else:
        Q = np.maximum(eps * rk * B[kk, :], 0)
        out[kk] = -ls[kk] + Q @ ls
    return out


def _star_a(a, k: int):
    return tuple(tuple(reversed(al)) if l == k - 1 else al for l, al in enumerate(a))


def lifted_tropical(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int,
                    eps: int) -> GroupoidPoint:
    """The monomial groupoid morphism into the chart mutated at ``k``."""
    pair = _pair(pair)
    pt = _prep(pt, pair)
    _check_size(pt, pair)
    base = tropical(ChartPoint(pt.side, pt.base, pt.z), pair, k, eps).base
    ls = _tropical_log_s(log_s(pt), pair, pt.side, k, eps)
    return pt.replace(base=base, fiber=fiber_from_log_s(pt.family, base, ls),
                      z=star_z(pt.z, k), a=_star_a(pt.a, k))


def mutate_groupoid_composed(pt: GroupoidPoint, trace: MutationTrace, k: int) -> GroupoidPoint:
    """``lifted_tropical o lifted_flow(t=1)`` at the trace's tropical sign."""
    eps = trace.sign(k)
    return lifted_tropical(lifted_flow(pt, trace, k, eps, 1.0), trace, k, eps)


def mutate_groupoid(pt: GroupoidPoint, trace: MutationTrace, k: int) -> GroupoidPoint:
    """Groupoid mutation in direction ``k`` from the family-specific closed forms."""
    pair = trace.pair
    pt = _prep(pt, pair)
    _check_size(pt, pair)
    eps = trace.sign(k)
    kk, dk, rk = k - 1, pair.D[k - 1], pair.r[k - 1]
    B = pair.B_array
    x, f = pt.base, pt.fiber
    Zo = lambda w: Z_value(pt.z, k, eps, w)  # noqa: E731
    if pt.side == "A":
        wa = float(yhat_values(x, pair)[kk]) ** eps
        Za = Zo(wa)
        E = np.maximum(-eps * B[:, kk] * rk, 0)
        damp = float(np.prod(x ** -E))
        new = np.empty_like(f)
        if pt.family == "G":
            L = np.log(Zo(wa * np.exp(-eps * dk * f[kk] * x[kk])) / Za)
            new[:] = f + E * f[kk] * x[kk] / x - B[:, kk] / (dk * x) * L
            new[kk] = -f[kk] * x[kk] ** 2 * damp / Za
        elif pt.family == "B":
            sk = f[kk] * x[kk] + 1
            R = Zo(wa * sk ** (-eps * dk)) / Za
            new[:] = ((f * x + 1) * sk ** E * R ** (-B[:, kk] / dk) - 1) / x
            new[kk] = x[kk] * (1 / sk - 1) * damp / Za
        else:
            R = Zo(wa * f[kk] ** (-eps * dk)) / Za
            new[:] = f * f[kk] ** E * R ** (-B[:, kk] / dk)
            new[kk] = 1 / f[kk]
        wb = wa * float(np.exp(-eps * dk * log_s(pt)[kk]))
    else:
        wa = float(x[kk]) ** eps
        Za = Zo(wa)
        Q = np.maximum(eps * rk * B[kk, :], 0)
        dB = pair.Omega_X[:, kk]
        yk = x[kk]
        new = np.empty_like(f)
        if pt.family == "G":
            lam = np.exp(eps * (dB @ (f * x)))
            L = np.log(Zo(wa * lam) / Za)
            new[:] = f * yk ** -Q * Za ** B[kk, :]
            new[kk] = -f[kk] * yk ** 2 + (Q @ (f * x)) * yk + yk / dk * L
        elif pt.family == "B":
            s = f * x + 1
            R = Zo(wa * float(np.prod(s ** (eps * dB)))) / Za
            new[:] = f * yk ** -Q * Za ** B[kk, :]
            new[kk] = yk * (float(np.prod(s ** Q)) / s[kk] * R ** (1 / dk) - 1)
        else:
            R = Zo(wa * float(np.prod(f ** (eps * dB)))) / Za
            new[:] = f
            new[kk] = float(np.prod(f ** Q)) / f[kk] * R ** (1 / dk)
        wb = wa * float(np.exp(eps * (dB @ log_s(pt))))
    base = mutate_chart(ChartPoint(pt.side, x, pt.z, pt.allow_boundary), trace, k).base
    a = [list(al) for al in pt.a]
    if rk > 1:
        drift = _a_drift(pt, pair, k, eps, wa ** eps, wb ** eps, lambda j: rk - j)
        a[kk] = [pt.a[kk][rk - 1 - j] + drift[j - 1] for j in range(1, rk)]
    return pt.replace(base=base, fiber=new, z=star_z(pt.z, k), a=tuple(tuple(al) for al in a))


def walk_groupoid(pt: GroupoidPoint, trace: MutationTrace, path: Sequence[int],
                  composed: bool = False) -> tuple[list[GroupoidPoint], list[MutationTrace]]:
    step = mutate_groupoid_composed if composed else mutate_groupoid
    points, traces = [pt], [trace]
    for k in path:
        points.append(step(points[-1], traces[-1], k))
        traces.append(mutate_trace(traces[-1], k))
    return points, traces


# boundary ---------------------------------------------------------------------

def _scaled_exchange(x: np.ndarray, pair: CompatiblePair, z, k: int, eps: int, lam: float) -> float:
    """``prod_i x_i^{[-eps B_ik r_k]_+} Z°_k(yhat_k^eps lam)`` as a polynomial in ``x``."""
    kk, rk = k - 1, pair.r[k - 1]
    total = 0.0
    for c, zc in enumerate(z_coeffs(z, k, eps)):
        term = zc * lam ** c
        for i in range(pair.m):
            e = pp(-eps * pair.B[i][kk] * rk) + c * eps * pair.B[i][kk]
            if e:
                term *= x[i] ** e
        total += term
    return total


def _monomial(x: np.ndarray, exps: np.ndarray, skip: int) -> float:
    val = 1.0
    for i, e in enumerate(exps):
        if i == skip or not e:
            continue
        if x[i] == 0:
            if e < 0:
                raise ValueError(f"mutation is not defined where x_{i + 1} = 0 on this locus")
            return 0.0
        val *= x[i] ** e
    return val


def boundary_mutation(pt: GroupoidPoint, trace: MutationTrace, k: int) -> GroupoidPoint:
    """A-side groupoid mutation where some ``x_j = 0`` (``j != k``), using the limit values.

    The exchange polynomial is expanded so every exponent of ``x`` is
    non-negative; coordinates with ``x_j = 0`` receive the removable-singularity
    values.  The ``a`` integrals vanish when ``yhat_k^eps`` is ``0`` or infinite.
    """
    if pt.side != "A":
        raise ValueError("boundary mutation is an A-side construction")
    pair = trace.pair
    pt = _prep(pt, pair)
    _check_size(pt, pair)
    eps = trace.sign(k)
    kk, dk, rk = k - 1, pair.D[k - 1], pair.r[k - 1]
    B = pair.B_array
    x, f = pt.base, pt.fiber
    if x[kk] <= 0:
        raise ValueError("x_k must be positive")
    ls = log_s(pt)
    N1 = _scaled_exchange(x, pair, pt.z, k, eps, 1.0)
    if not N1 > 0:
        raise ValueError("the exchange binomial vanishes; this locus is excluded")
    lam = float(np.exp(-eps * dk * ls[kk]))
    logR = np.log(_scaled_exchange(x, pair, pt.z, k, eps, lam) / N1)
    E = np.maximum(-eps * B[:, kk] * rk, 0)
    coeff = [1.0, *pt.z[kk], 1.0]
    new = np.empty_like(f)
    for j in range(pair.m):
        if j == kk:
            continue
        shift = E[j] * ls[kk] - B[j, kk] / dk * logR
        if pt.family == "D":
            new[j] = f[j] * np.exp(shift)
        elif x[j] > 0:
            new[j] = fiber_from_log_s(pt.family, x[j:j + 1], np.array([ls[j] + shift]))[0]
        elif abs(B[j, kk]) != 1:
            new[j] = f[j]
        else:
            b = B[j, kk]
            mono = _monomial(x, b * B[:, kk], j)
            c = coeff[1] if b == 1 else coeff[rk - 1]
            if pt.family == "G":
                new[j] = f[j] - b / dk * mono * c * np.expm1(-b * dk * ls[kk])
            else:
                new[j] = f[j] - b / dk * mono * c * (np.exp(-b * dk * ls[kk]) - 1)
    xk_new = N1 / x[kk]
    if pt.family == "G":
        new[kk] = -ls[kk] / xk_new
    elif pt.family == "B":
        new[kk] = np.expm1(-ls[kk]) / xk_new
    else:
        new[kk] = 1 / f[kk]
    base = x.copy()
    base[kk] = xk_new
    a = [list(al) for al in pt.a]
    if rk > 1:
        yh = _monomial(x, B[:, kk], -1) if not np.any((x == 0) & (B[:, kk] < 0)) else np.inf
        if yh == 0 or np.isinf(yh):
            wa = 0.0 if (yh == 0) == (eps == 1) else np.inf
        else:
            wa = yh ** eps
        if wa == 0 or np.isinf(wa):
            a[kk] = list(reversed(pt.a[kk]))
        else:
            wb = wa * float(np.exp(-eps * dk * ls[kk]))
            drift = _a_drift(pt, pair, k, eps, wa ** eps, wb ** eps, lambda j: rk - j)
            a[kk] = [pt.a[kk][rk - 1 - j] + drift[j - 1] for j in range(1, rk)]
    return pt.replace(base=base, fiber=new, z=star_z(pt.z, k), a=tuple(tuple(al) for al in a))


def boundary_limit_study(pt: GroupoidPoint, trace: MutationTrace, k: int, j: int,
                         xs: Sequence[float] = (1e-3, 1e-5, 1e-7)) -> list[float]:
    """Distance between the boundary value and interior mutations at ``x_j = xs``."""
    bnd = boundary_mutation(pt, trace, k)
    out = []
    for xj in xs:
        base = pt.base.copy()
        base[j - 1] = xj
        inner = mutate_groupoid(pt.replace(base=base, allow_boundary=False), trace, k)
        out.append(float(np.max(np.abs(inner.fiber - bnd.fiber))))
    return out


# full tensors and conserved quantities ----------------------------------------

def coords(pt: GroupoidPoint) -> np.ndarray:
    """``(base, fiber, z, a)`` flattened."""
    zf = [v for zl in pt.z for v in zl]
    af = [v for al in pt.a for v in al]
    return np.concatenate([pt.base, pt.fiber, zf, af])


def from_coords(template: GroupoidPoint, v: np.ndarray) -> GroupoidPoint:
    N = template.dim
    shape = [len(zl) for zl in template.z]
    nz = sum(shape)
    zf, af = v[2 * N: 2 * N + nz], v[2 * N + nz:]
    z, a, i = [], [], 0
    for s in shape:
        z.append(tuple(zf[i:i + s]))
        a.append(tuple(af[i:i + s]))
        i += s
    return template.replace(base=v[:N], fiber=v[N:2 * N], z=tuple(z), a=tuple(a))


def full_poisson_tensor(pt: GroupoidPoint, pair: CompatiblePair) -> np.ndarray:
    """Groupoid tensor on ``(base, fiber)`` plus ``{z, a} = 1`` on the cotangent factor."""
    P = poisson_tensor(space_for(pt, pair), pt)
    nz = sum(len(zl) for zl in pt.z)
    out = np.zeros((P.shape[0] + 2 * nz,) * 2)
    out[: P.shape[0], : P.shape[0]] = P
    out[P.shape[0]:, P.shape[0]:] = canonical_block(nz)
    return out


def hamiltonian_vector_field(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
                             step: float = 1e-6) -> np.ndarray:
    """``dz_b/dt = sum_a dH/dz_a P[a, b]`` from a finite-difference gradient."""
    pair = _pair(pair)
    pt = _prep(pt, pair)
    v0 = coords(pt)

    def H(v):
        return np.array([lifted_hamiltonian(from_coords(pt, v), pair, k, eps, tol=1e-13)])

    grad = jacobian(H, v0, step)[0]
    return grad @ full_poisson_tensor(pt, pair)


def flow_velocity(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int, eps: int,
                  h: float = 1e-5) -> np.ndarray:
    """Central difference of :func:`lifted_flow` in time at ``t = 0``."""
    pair = _pair(pair)
    pt = _prep(pt, pair)
    fwd = coords(lifted_flow(pt, pair, k, eps, h))
    bwd = coords(lifted_flow(pt, pair, k, eps, -h))
    return (fwd - bwd) / (2 * h)


def conserved_quantities(pt: GroupoidPoint, pair: CompatiblePair | MutationTrace, k: int,
                         eps: int) -> np.ndarray:
    """Quantities fixed by the lifted flow in direction ``k``: ``y_k`` or ``yhat_k``,
    and the source and target images of ``y_k^eps`` / ``yhat_k^eps``."""
    pair = _pair(pair)
    wa, wb = source_target_w(pt, pair, k)
    return np.array([wa, wa ** eps, wb ** eps])


# separation of additions -------------------------------------------------------

@lru_cache(maxsize=256)
def _walk_cache(pair: CompatiblePair, path: tuple[int, ...]) -> tuple[FPolyFamily, ...]:
    root = FPolyFamily.seed(MutationTrace.seed(pair), default_exchange(pair))
    return tuple(walk_F(root, path))


def separation_families(pair: CompatiblePair, path: Sequence[int]) -> tuple[FPolyFamily, ...]:
    """F-polynomial families along ``path`` with symbolic seed coefficients (cached)."""
    return _walk_cache(pair, tuple(path))


def _eval_F(fam: FPolyFamily, u: np.ndarray, z) -> np.ndarray:
    values = {f"u{i + 1}": float(v) for i, v in enumerate(u)}
    for l, zl in enumerate(z):
        for j, v in enumerate(zl, start=1):
            values[f"z{l + 1}_{j}"] = float(v)
    return np.array([F.evaluate(values) for F in fam.F])


def _separation_point(fam: FPolyFamily, pt0: GroupoidPoint) -> GroupoidPoint:
    """Base, fiber and ``z`` at ``fam``'s vertex from the closed forms (``a`` untouched)."""
    tr = fam.trace
    pair0, pair = tr.initial, tr.pair
    n = pair.n
    D = np.asarray(pair.D, dtype=float)
    ls0 = log_s(pt0)
    z0 = pt0.z
    if pt0.side == "A":
        x0 = pt0.base
        yh = yhat_values(x0, pair0)
        ybeta = yh * np.exp(-D * ls0[:n])
        F, Fb = _eval_F(fam, yh, z0), _eval_F(fam, ybeta, z0)
        if np.any(F <= 0) or np.any(Fb <= 0):
            raise PoleError("F vanishes at the evaluation point")
        logratio = np.log(Fb[:n] / F[:n])
        G = np.array(tr.G, dtype=float)
        base = np.exp(np.log(x0) @ G) * F
        ls = np.array(tr.Cdual, dtype=float) @ ls0 + (pair.B_array / D) @ logratio
    else:
        y0 = pt0.base
        ybeta = y0 * np.exp(pair0.Omega_X.T @ ls0)
        F, Fb = _eval_F(fam, y0, z0)[:n], _eval_F(fam, ybeta, z0)[:n]
        if np.any(F <= 0) or np.any(Fb <= 0):
            raise PoleError("F vanishes at the evaluation point")
        C = np.array(tr.C, dtype=float)[:n, :n]
        base = np.exp(np.log(y0) @ C + np.log(F) @ pair.B_array[:n, :])
        ls = np.array(tr.Gdual, dtype=float) @ ls0 + np.log(Fb / F) / D
    z = tuple(tuple(reversed(zl)) if odd else zl for zl, odd in zip(z0, tr.z_parity))
    return pt0.replace(base=base, fiber=fiber_from_log_s(pt0.family, base, ls), z=z)


def gpd_separation(pair: CompatiblePair, path: Sequence[int], pt0: GroupoidPoint) -> GroupoidPoint:
    """Groupoid coordinates after ``path`` from the seed, in closed form.

    ``a`` follows the cotangent formula: each step in direction ``l`` adds
    ``(eps/d_l) int u^{eps j° - 1}/Z_l(u^eps) du`` between the closed-form
    source and target images at that step, with ``j° = j*`` when an odd
    number of later-or-equal steps are in direction ``l``.
    """
    pt0 = _prep(pt0, pair)
    _check_size(pt0, pair)
    fams = separation_families(pair, path)
    path = tuple(path)
    final = _separation_point(fams[-1], pt0)
    a = []
    for l, al in enumerate(pt0.a):
        count = path.count(l + 1)
        a.append(list(reversed(al)) if count % 2 else list(al))
    for i, k in enumerate(path):
        rk = pair.r[k - 1]
        if rk == 1:
            continue
        here = _separation_point(fams[i], pt0)
        tr = fams[i].trace
        eps = tr.sign(k)
        wa, wb = source_target_w(here, tr.pair, k)
        odd = path[i:].count(k) % 2 == 1
        drift = _a_drift(here, tr.pair, k, eps, wa, wb, (lambda j, r=rk: r - j) if odd else (lambda j: j))
        for j in range(1, rk):
            a[k - 1][j - 1] += drift[j - 1]
    return final.replace(a=tuple(tuple(al) for al in a))


def check_gpd_separation(pair: CompatiblePair, paths, samples: int, rng: np.random.Generator,
                         families: Sequence[str] = FAMILIES, sides: Sequence[str] = ("X", "A"),
                         tol: float = 1e-8, z=None) -> VerificationReport:
    worst, count = 0.0, 0
    trace0 = MutationTrace.seed(pair)
    for path in paths:
        for side in sides:
            for fam in families:
                for _ in range(samples):
                    pt = sample_point(rng, pair, side, fam, z=z)
                    try:
                        closed = gpd_separation(pair, path, pt)
                    except PoleError:
                        continue
                    stepped = walk_groupoid(pt, trace0, path)[0][-1]
                    worst = max(worst, _rel(closed, stepped))
                    count += 1
    return VerificationReport("groupoid_separation", count, worst, tol)


# periodicity and dilogarithm sums ---------------------------------------------

def sample_point(rng: np.random.Generator, pair: CompatiblePair, side: str, family: str,
                 spread: float = 0.5, z_range: tuple[float, float] = (0.3, 2.0),
                 z=None) -> GroupoidPoint:
    """Random point near the identity section; ``z`` is drawn unless given."""
    if z is None:
        z = tuple(tuple(rng.uniform(*z_range, size=r - 1)) for r in pair.r)
    return random_point(rng, LogCanonicalSpace.of(pair, side), family, z=normalize_z(z, pair), spread=spread)


def _rel(p: GroupoidPoint, q: GroupoidPoint) -> float:
    r = max(residual(p.base, q.base), residual(p.fiber, q.fiber))
    for x1, x2 in zip(p.z, q.z):
        r = max(r, residual(np.array(x1), np.array(x2)))
    for x1, x2 in zip(p.a, q.a):
        r = max(r, residual(np.array(x1), np.array(x2)))
    return r


def permuted(pt: GroupoidPoint, sigma: Sequence[int]) -> GroupoidPoint:
    """``pt`` with every coordinate family re-indexed by ``sigma`` (1-based)."""
    N = pt.dim
    perm = [s - 1 for s in sigma[:N]]
    n = len(pt.z)
    zp = [s - 1 for s in sigma[:n]]
    return pt.replace(base=pt.base[perm], fiber=pt.fiber[perm],
                      z=tuple(pt.z[i] for i in zp), a=tuple(pt.a[i] for i in zp))


def gpd_periodicity_check(pair: CompatiblePair, sequence: Sequence[int], sigma: Sequence[int],
                          samples: int, rng: np.random.Generator,
                          families: Sequence[str] = FAMILIES, sides: Sequence[str] = ("X", "A"),
                          tol: float = 1e-8, z=None) -> VerificationReport:
    """Every fiber coordinate (and ``a``) returns as ``out[l] = in[sigma(l)]``."""
    trace0 = MutationTrace.seed(pair)
    worst, parts = 0.0, {}
    for side in sides:
        for fam in families:
            key = f"{fam}_{side}"
            parts[key] = 0.0
            for _ in range(samples):
                pt = sample_point(rng, pair, side, fam, z=z)
                out = walk_groupoid(pt, trace0, sequence)[0][-1]
                r = _rel(out, permuted(pt, sigma))
                parts[key] = max(parts[key], r)
                worst = max(worst, r)
    return VerificationReport("groupoid_periodicity", samples * len(sides) * len(families), worst, tol,
                              {"sequence": list(sequence), "sigma": list(sigma), "parts": parts})


def _fp_integral(coeffs: Sequence[float], j: int, eps: int, w: float) -> tuple[float, float]:
    """``int_0^w u^{eps j - 1}/Z(u^eps) du`` as ``(finite part, residue)``.

    A regular integrand has residue ``0``.  With a simple pole at ``0`` the
    integral from a cutoff ``delta`` equals the finite part minus
    ``residue * log(delta)``, so sums whose residues cancel have a limit.
    Higher-order poles raise :class:`PoleError`.
    """
    c = [float(v) for v in coeffs]
    power = j - 1 if eps == 1 else len(c) - 2 - j
    q = c if eps == 1 else c[::-1]
    if power >= 0:
        return quad_rational(coeffs, j, eps, 0.0, w), 0.0
    if power < -1:
        raise PoleError("integrand has a pole of order > 1 at u = 0")

    def g(u: float) -> float:
        if u == 0.0:
            return -q[1] / q[0] ** 2
        return (1.0 / poly_eval(q, u) - 1.0 / q[0]) / u

    return adaptive_simpson(g, 0.0, w, 1e-12) + np.log(w) / q[0], 1.0 / q[0]


def dilog_identity_sum(pair: CompatiblePair, sequence: Sequence[int], ell: int, j: int,
                       pt: GroupoidPoint, variant: str = "source_target") -> float:
    """Signed sum of the integrals attached to the steps in direction ``ell``.

    ``variant="source_target"`` integrates between the source and target
    images along the walk of the X-side groupoid point ``pt``;
    ``variant="zero"`` integrates from ``0`` to the chart value; terms with a
    simple pole at ``0`` are taken as the limit of a common cutoff, which
    exists only when their residues cancel (otherwise :class:`PoleError`).
    ``j°`` is ``j*`` when an odd number of earlier steps are in direction ``ell``.
    """
    if pt.side != "X":
        raise ValueError("the identities are stated on the X side")
    if variant not in ("source_target", "zero"):
        raise ValueError(f"unknown variant {variant!r}")
    pt = _prep(pt, pair)
    rl = pair.r[ell - 1]
    if not 1 <= j <= rl:
        raise ValueError(f"j must lie in 1..{rl}")
    points, traces = walk_groupoid(pt, MutationTrace.seed(pair), sequence)
    total, residue, seen = 0.0, 0.0, 0
    for i, k in enumerate(sequence):
        if k != ell:
            continue
        jo = rl - j if seen % 2 else j
        seen += 1
        here, tr = points[i], traces[i]
        eps = tr.sign(k)
        coeffs = z_coeffs(here.z, k, 1)
        wa, wb = source_target_w(here, tr.pair, k)
        scale = eps / pair.D[ell - 1]
        if variant == "zero":
            val, res = _fp_integral(coeffs, jo, eps, wa ** eps)
            residue += scale * res
        else:
            val = quad_rational(coeffs, jo, eps, wa ** eps, wb ** eps)
        total += scale * val
    if abs(residue) > 1e-12:
        raise PoleError(f"the integrals diverge at 0 with net residue {residue}")
    return total


# sampled checks ------------------------------------------------------------------

def _report(name: str, samples: int, worst: float, tol: float, **notes) -> VerificationReport:
    return VerificationReport(name, samples, float(worst), tol, notes)


def check_mutation_consistency(pair: CompatiblePair, family: str, side: str, samples: int,
                               rng: np.random.Generator, tol: float = 1e-10, z=None) -> VerificationReport:
    """Closed forms vs ``tau o phi^1``, involutivity and identity-to-identity."""
    trace = MutationTrace.seed(pair)
    worst = 0.0
    for _ in range(samples):
        pt = sample_point(rng, pair, side, family, z=z)
        for k in range(1, pair.n + 1):
            direct = mutate_groupoid(pt, trace, k)
            worst = max(worst, _rel(direct, mutate_groupoid_composed(pt, trace, k)))
            worst = max(worst, _rel(mutate_groupoid(direct, mutate_trace(trace, k), k), pt))
            one = pt.replace(fiber=np.ones(pt.dim) if family == "D" else np.zeros(pt.dim),
                             a=tuple((0.0,) * len(al) for al in pt.a))
            img = mutate_groupoid(one, trace, k)
            worst = max(worst, residual(img.fiber, one.fiber))
    return _report(f"mutation_consistency_{family}_{side}", samples, worst, tol)


def check_intertwining(pair: CompatiblePair, family: str, side: str, samples: int,
                       rng: np.random.Generator, tol: float = 1e-9, t: float = 0.7, z=None) -> VerificationReport:
    """Source and target commute with the chart maps for ``phi^t``, ``tau`` and ``mu``."""
    trace = MutationTrace.seed(pair)
    space = LogCanonicalSpace.of(pair, side)
    worst = 0.0
    for _ in range(samples):
        pt = sample_point(rng, pair, side, family, z=z)
        for k in range(1, pair.n + 1):
            eps = trace.sign(k)
            space_k = LogCanonicalSpace.of(mutate_trace(trace, k).pair, side)
            images = (lifted_flow(pt, pair, k, eps, t), lifted_tropical(pt, pair, k, eps),
                      mutate_groupoid(pt, trace, k))
            spaces = (space, space_k, space_k)
            for end in ("source", "target"):
                base = pt.base if end == "source" else target(space, pt)
                cp = ChartPoint(side, base, pt.z)
                charts_ = (chart_flow(cp, pair, k, eps, t), tropical(cp, pair, k, eps),
                           mutate_chart(cp, trace, k))
                for img, sp, ch in zip(images, spaces, charts_):
                    got = img.base if end == "source" else target(sp, img)
                    worst = max(worst, residual(got, ch.base))
    return _report(f"intertwining_{family}_{side}", samples, worst, tol)


def check_lifted_poisson(pair: CompatiblePair, family: str, side: str, samples: int,
                         rng: np.random.Generator, tol: float = 1e-6, z=None) -> VerificationReport:
    """Groupoid mutation pushes the full tensor to the mutated chart's tensor."""
    trace = MutationTrace.seed(pair)
    worst = 0.0
    for _ in range(samples):
        pt = sample_point(rng, pair, side, family, z=z)
        v0 = coords(pt)
        for k in range(1, pair.n + 1):
            pair2 = mutate_trace(trace, k).pair

            def fn(v, k=k):
                return coords(mutate_groupoid(from_coords(pt, v), trace, k))

            J = jacobian(fn, v0)
            out = from_coords(mutate_groupoid(pt, trace, k), fn(v0))
            lhs = J @ full_poisson_tensor(pt, pair) @ J.T
            rhs = full_poisson_tensor(out, pair2)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs)))))
    return _report(f"lifted_poisson_{family}_{side}", samples, worst, tol)


def check_flows(pair: CompatiblePair, family: str, side: str, samples: int, rng: np.random.Generator,
                tol: float = 1e-6, z=None) -> VerificationReport:
    """Flow velocity equals the Hamiltonian vector field; conserved quantities
    hold along ``t``; ``H`` vanishes on identities."""
    worst, cons = 0.0, 0.0
    for _ in range(samples):
        pt = sample_point(rng, pair, side, family, z=z)
        for k in range(1, pair.n + 1):
            for eps in (1, -1):
                v1 = hamiltonian_vector_field(pt, pair, k, eps)
                v2 = flow_velocity(pt, pair, k, eps)
                worst = max(worst, float(np.max(np.abs(v1 - v2))) / max(1.0, float(np.max(np.abs(v2)))))
                c0 = conserved_quantities(pt, pair, k, eps)
                c1 = conserved_quantities(lifted_flow(pt, pair, k, eps, 0.8), pair, k, eps)
                cons = max(cons, residual(c1, c0))
                one = pt.replace(fiber=np.ones(pt.dim) if family == "D" else np.zeros(pt.dim))
                cons = max(cons, abs(lifted_hamiltonian(one, pair, k, eps)))
    return _report(f"flows_{family}_{side}", samples, max(worst, cons), tol,
                   vector_field=float(worst), conserved=float(cons))


def check_boundary(pair: CompatiblePair, family: str, samples: int, rng: np.random.Generator,
                   x_small: float = 1e-7, tol: float = 1e-5, z=None, depth: int = 2) -> VerificationReport:
    """Boundary values against interior mutations with one ``x_j`` set to ``x_small``.

    Runs at every vertex within ``depth`` steps of the seed, so both tropical
    signs occur.
    """
    seed = MutationTrace.seed(pair)
    traces = [seed]
    frontier = [seed]
    for _ in range(depth):
        frontier = [mutate_trace(t, k) for t in frontier for k in range(1, pair.n + 1)
                    if not t.path or t.path[-1][0] != k]
        traces += frontier
    worst, count = 0.0, 0
    for trace in traces:
        for _ in range(samples):
            pt = sample_point(rng, trace.pair, "A", family, z=z)
            for k in range(1, pair.n + 1):
                for j in range(1, pair.m + 1):
                    if j == k:
                        continue
                    base = pt.base.copy()
                    base[j - 1] = 0.0
                    edge = pt.replace(base=base, allow_boundary=True)
                    try:
                        diff = boundary_limit_study(edge, trace, k, j, (x_small,))[0]
                    except ValueError:
                        continue  # excluded locus
                    worst = max(worst, diff)
                    count += 1
    return _report(f"boundary_{family}_A", count, worst, tol, vertices=len(traces))
