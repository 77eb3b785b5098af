"""The G, B and D groupoid charts over a log-canonical Poisson space.

Conventions
-----------
* ``multiply(space, g, h)`` needs ``source(g) == target(h)``; the result has
  the source of ``h`` and the target of ``g``.
* A bivector matrix ``P`` has ``P[a, b] = {z_a, z_b}``.  A 2-form matrix
  ``W`` has ``omega = sum_{a<b} W[a, b] dz_a ^ dz_b``.  Mutual inverses
  satisfy ``W @ P = I``.
* Coordinates are ordered ``(base, fiber)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .core_algebra import CompatiblePair
from .numerics import VerificationReport, jacobian, pfaffian, pullback_2form, residual

Family = Literal["G", "B", "D"]
FAMILIES: tuple[Family, ...] = ("G", "B", "D")
SIDES = ("X", "A")
COMPOSABLE_TOL = 1e-9


@dataclass(frozen=True)
class LogCanonicalSpace:
    """``{b_i, b_j} = Omega_ij b_i b_j`` on ``dim`` coordinates."""

    Omega: np.ndarray
    side: str = "A"
    positive: bool = True

    def __post_init__(self) -> None:
        W = np.array(self.Omega, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or not np.array_equal(W, -W.T):
            raise ValueError("Omega must be a square skew matrix")
        W.setflags(write=False)
        object.__setattr__(self, "Omega", W)

    @property
    def dim(self) -> int:
        return self.Omega.shape[0]

    @classmethod
    def A(cls, pair: CompatiblePair) -> "LogCanonicalSpace":
        return cls(pair.Omega_array, "A")

    @classmethod
    def X(cls, pair: CompatiblePair) -> "LogCanonicalSpace":
        return cls(pair.Omega_X, "X")

    @classmethod
    def of(cls, pair: CompatiblePair, side: str) -> "LogCanonicalSpace":
        return cls.A(pair) if side == "A" else cls.X(pair)

    def __hash__(self) -> int:
        return hash((self.Omega.tobytes(), self.side))

    def __eq__(self, other) -> bool:
        return isinstance(other, LogCanonicalSpace) and self.side == other.side and np.array_equal(
            self.Omega, other.Omega)


@dataclass(frozen=True)
class GroupoidPoint:
    """Base point, fiber coordinates and the cotangent ``(z, a)`` factor.

    ``fiber`` is ``p`` (G), ``u`` (B) or ``s`` (D) on the A side and
    ``q``, ``v``, ``t`` on the X side.
    """

    family: Family
    side: str
    base: np.ndarray
    fiber: np.ndarray
    z: tuple[tuple[float, ...], ...] = ()
    a: tuple[tuple[float, ...], ...] = ()
    allow_boundary: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES or self.side not in SIDES:
            raise ValueError(f"unknown family/side {self.family}/{self.side}")
        base = np.array(self.base, dtype=float)
        fiber = np.array(self.fiber, dtype=float)
        if base.shape != fiber.shape or base.ndim != 1:
            raise ValueError("base and fiber must be vectors of equal length")
        base.setflags(write=False)
        fiber.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "fiber", fiber)
        object.__setattr__(self, "z", tuple(tuple(float(v) for v in zl) for zl in self.z))
        a = self.a if self.a else tuple((0.0,) * len(zl) for zl in self.z)
        object.__setattr__(self, "a", tuple(tuple(float(v) for v in al) for al in a))
        if [len(v) for v in self.a] != [len(v) for v in self.z]:
            raise ValueError("a and z must have matching shapes")
        if (np.any(base < 0) if self.allow_boundary else np.any(base <= 0)) or not np.all(np.isfinite(base)):
            raise ValueError(f"base outside the positive orthant: {base}")
        if not np.all(np.isfinite(fiber)):
            raise ValueError("non-finite fiber coordinates")
        if self.family == "B" and np.any(base * fiber + 1 <= 0):
            raise ValueError("B-family needs x_i u_i + 1 > 0")
        if self.family == "D" and np.any(fiber <= 0):
            raise ValueError("D-family needs s_i > 0 on the positive orthant")

    def replace(self, **kw) -> "GroupoidPoint":
        data = dict(family=self.family, side=self.side, base=self.base, fiber=self.fiber,
                    z=self.z, a=self.a, allow_boundary=self.allow_boundary)
        data.update(kw)
        return GroupoidPoint(**data)

    @property
    def dim(self) -> int:
        return self.base.size


def log_s(pt: GroupoidPoint) -> np.ndarray:
    """The logarithm of the D-coordinate: ``x p``, ``log(x u + 1)`` or ``log s``."""
    b, f = pt.base, pt.fiber
    if pt.family == "G":
        return b * f
    if pt.family == "B":
        return np.log1p(b * f)
    return np.log(f)


def fiber_from_log_s(family: Family, base: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Inverse of :func:`log_s` over the given base (positive base required for G, B)."""
    if family == "G":
        return ls / base
    if family == "B":
        return np.expm1(ls) / base
    return np.exp(ls)


def source(space: LogCanonicalSpace, pt: GroupoidPoint) -> np.ndarray:
    return pt.base.copy()


def target(space: LogCanonicalSpace, pt: GroupoidPoint) -> np.ndarray:
    return pt.base * np.exp(space.Omega.T @ log_s(pt))


def identity_at(space: LogCanonicalSpace, family: Family, x: Sequence[float], side: str | None = None,
                z=()) -> GroupoidPoint:
    x = np.asarray(x, dtype=float)
    fib = np.ones_like(x) if family == "D" else np.zeros_like(x)
    return GroupoidPoint(family, side or space.side, x, fib, z)


def _a_neg(a):
    return tuple(tuple(-v for v in al) for al in a)


def _a_add(a1, a2):
    return tuple(tuple(v + w for v, w in zip(x, y)) for x, y in zip(a1, a2))


def inverse(space: LogCanonicalSpace, pt: GroupoidPoint) -> GroupoidPoint:
    b, f = pt.base, pt.fiber
    c = np.exp(space.Omega.T @ log_s(pt))
    if pt.family == "G":
        fib = -f / c
    elif pt.family == "B":
        fib = -f / (c * (b * f + 1))
    else:
        fib = 1.0 / f
    return pt.replace(base=b * c, fiber=fib, a=_a_neg(pt.a))


def composable(space: LogCanonicalSpace, g: GroupoidPoint, h: GroupoidPoint,
               tol: float = COMPOSABLE_TOL) -> bool:
    return residual(source(space, g), target(space, h)) <= tol and g.z == h.z


def multiply(space: LogCanonicalSpace, g: GroupoidPoint, h: GroupoidPoint,
             tol: float = COMPOSABLE_TOL) -> GroupoidPoint:
    """``g h`` for ``source(g) = target(h)``."""
    if g.family != h.family or g.side != h.side:
        raise ValueError("points belong to different groupoids")
    if not composable(space, g, h, tol):
        raise ValueError("pair is not composable: source(g) != target(h)")
    c = np.exp(space.Omega.T @ log_s(h))
    x, f = h.base, h.fiber
    if h.family == "G":
        fib = c * g.fiber + f
    elif h.family == "B":
        fib = g.fiber * (x * f + 1) * c + f
    else:
        fib = g.fiber * f
    return h.replace(fiber=fib, a=_a_add(g.a, h.a))


def poisson_tensor(space: LogCanonicalSpace, pt: GroupoidPoint) -> np.ndarray:
    """The multiplicative Poisson tensor on ``(base, fiber)``."""
    W, x, f = space.Omega, pt.base, pt.fiber
    N = x.size
    P = np.zeros((2 * N, 2 * N))
    P[:N, :N] = W * np.outer(x, x)
    if pt.family == "G":
        XF = -np.eye(N) - W * np.outer(x, f)
        P[N:, N:] = W * np.outer(f, f)
    elif pt.family == "B":
        XF = -np.diag(x * f + 1) - W * np.outer(x, f)
        P[N:, N:] = W * np.outer(f, f)
    else:
        XF = -np.diag(x * f)
    P[:N, N:] = XF
    P[N:, :N] = -XF.T
    return P


def symplectic_form(space: LogCanonicalSpace, pt: GroupoidPoint) -> np.ndarray:
    """The multiplicative symplectic form on ``(base, fiber)``."""
    W, x, f = space.Omega, pt.base, pt.fiber
    N = x.size
    S = np.zeros((2 * N, 2 * N))
    if pt.family == "G":
        S[:N, :N] = W * np.outer(f, f)
        XF = np.eye(N) + W * np.outer(f, x)
        S[N:, N:] = W * np.outer(x, x)
    elif pt.family == "B":
        s = x * f + 1
        inv = np.outer(1 / s, 1 / s)
        S[:N, :N] = W * np.outer(f, f) * inv
        XF = np.diag(1 / s) + W * np.outer(f, x) * inv
        S[N:, N:] = W * np.outer(x, x) * inv
    else:
        if np.any(x == 0):
            raise ValueError("the D-family form is singular where a base coordinate vanishes")
        XF = np.diag(1 / (x * f))
        S[N:, N:] = W * np.outer(1 / f, 1 / f)
    S[:N, N:] = XF
    S[N:, :N] = -XF.T
    return S


def top_power_coefficient(space: LogCanonicalSpace, pt: GroupoidPoint) -> float:
    """Coefficient of ``dx_1^dp_1^...^dx_N^dp_N`` in ``omega^N``: ``N!`` times a Pfaffian."""
    N = pt.dim
    perm = [v for i in range(N) for v in (i, N + i)]
    S = symplectic_form(space, pt)
    return math.factorial(N) * pfaffian(S[np.ix_(perm, perm)])


# maps between the three groupoids -------------------------------------------

def kappa(pt: GroupoidPoint) -> GroupoidPoint:
    """G -> B, ``u = (e^{xp} - 1)/x`` with the value ``p`` where ``x = 0``."""
    if pt.family != "G":
        raise ValueError("kappa takes a G-family point")
    x, p = pt.base, pt.fiber
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(x == 0, p, np.expm1(x * p) / np.where(x == 0, 1.0, x))
    return pt.replace(family="B", fiber=u)


def nu(pt: GroupoidPoint) -> GroupoidPoint:
    """B -> D, ``s = x u + 1``."""
    if pt.family != "B":
        raise ValueError("nu takes a B-family point")
    return pt.replace(family="D", fiber=pt.base * pt.fiber + 1)


def lam(pt: GroupoidPoint) -> GroupoidPoint:
    """G -> D, ``s = e^{x p}``."""
    if pt.family != "G":
        raise ValueError("lambda takes a G-family point")
    return pt.replace(family="D", fiber=np.exp(pt.base * pt.fiber))


def spray_flow(space: LogCanonicalSpace, pt: GroupoidPoint, t: float) -> GroupoidPoint:
    """Flow of the Poisson spray: ``(a^t x, a^{-t} p)``, conserving ``x_j p_j``."""
    if pt.family != "G":
        raise ValueError("the spray lives on the G-family chart")
    c = np.exp(t * (space.Omega.T @ (pt.base * pt.fiber)))
    return pt.replace(base=pt.base * c, fiber=pt.fiber / c)


def exp_map(space: LogCanonicalSpace, pt: GroupoidPoint) -> GroupoidPoint:
    """Time-one spray flow from a cotangent vector ``(x, p)``."""
    return spray_flow(space, pt, 1.0)


# ensemble lifts ---------------------------------------------------------------

def _yhat(x: np.ndarray, pair: CompatiblePair) -> np.ndarray:
    return np.exp(pair.B_array.T @ np.log(x))


def ensemble_lift_comorphism(pt_X: GroupoidPoint, x: Sequence[float], pair: CompatiblePair) -> GroupoidPoint:
    """Pull an X-side fiber at ``y = yhat(x)`` back to an A-side point over ``x``."""
    if pt_X.side != "X":
        raise ValueError("comorphism takes an X-side groupoid point")
    x = np.asarray(x, dtype=float)
    yh = _yhat(x, pair)
    if residual(pt_X.base, yh) > COMPOSABLE_TOL:
        raise ValueError("X-side point does not sit over yhat(x)")
    B = pair.B_array
    f = pt_X.fiber
    if pt_X.family == "G":
        fib = (B @ (yh * f)) / x
    elif pt_X.family == "B":
        fib = np.expm1(B @ np.log1p(yh * f)) / x
    else:
        fib = np.exp(B @ np.log(f))
    return GroupoidPoint(pt_X.family, "A", x, fib, pt_X.z, pt_X.a)


def ensemble_lift_morphism(pt_A: GroupoidPoint, pair: CompatiblePair) -> GroupoidPoint:
    """Square case: push an A-side point to the X side over ``yhat(x)``.

    ``log t_l = -(1/d_l) sum_j Omega_lj log s_j``; the G and B fibers follow
    through ``t = e^{q y}`` and ``t = v y + 1``.
    """
    if pair.m != pair.n:
        raise ValueError("the morphism exists only for square B")
    if pt_A.side != "A":
        raise ValueError("morphism takes an A-side groupoid point")
    x = pt_A.base
    y = _yhat(x, pair)
    D = np.asarray(pair.D, dtype=float)
    lt = -(pair.Omega_array @ log_s(pt_A)) / D
    return GroupoidPoint(pt_A.family, "X", y, fiber_from_log_s(pt_A.family, y, lt), pt_A.z, pt_A.a)


# sampling and verification ---------------------------------------------------

def random_fiber(rng: np.random.Generator, family: Family, base: np.ndarray, spread: float = 0.6) -> np.ndarray:
    ls = rng.uniform(-spread, spread, size=base.size)
    return fiber_from_log_s(family, base, ls)


def random_point(rng: np.random.Generator, space: LogCanonicalSpace, family: Family,
                 base: np.ndarray | None = None, z=(), spread: float = 0.6) -> GroupoidPoint:
    if base is None:
        base = np.exp(rng.uniform(-spread, spread, size=space.dim))
    a = tuple(tuple(rng.uniform(-1, 1, size=len(zl))) for zl in z)
    return GroupoidPoint(family, space.side, base, random_fiber(rng, family, base, spread), z, a)


def _pt_residual(p: GroupoidPoint, q: GroupoidPoint) -> float:
    r = max(residual(p.base, q.base), residual(p.fiber, q.fiber))
    for a1, a2 in zip(p.a, q.a):
        r = max(r, residual(np.array(a1), np.array(a2)))
    return r


def check_axioms(space: LogCanonicalSpace, family: Family, samples: int, rng: np.random.Generator,
                 tol: float | None = None) -> VerificationReport:
    """Identity, source/target, associativity and inverse axioms on sampled triples."""
    if tol is None:
        tol = 1e-12 if family == "D" else 1e-9
    worst = 0.0
    parts: dict[str, float] = {}

    def note(key: str, r: float) -> None:
        nonlocal worst
        parts[key] = max(parts.get(key, 0.0), r)
        worst = max(worst, r)

    for _ in range(samples):
        h = random_point(rng, space, family)
        g = random_point(rng, space, family, base=target(space, h))
        f = random_point(rng, space, family, base=target(space, g))
        x = h.base
        one = identity_at(space, family, x)
        note("identity_source_target", max(residual(source(space, one), x), residual(target(space, one), x)))
        gh = multiply(space, g, h)
        note("product_source", residual(source(space, gh), source(space, h)))
        note("product_target", residual(target(space, gh), target(space, g)))
        note("associativity", _pt_residual(multiply(space, multiply(space, f, g), h),
                                           multiply(space, f, gh)))
        note("unit_left", _pt_residual(multiply(space, identity_at(space, family, target(space, h)), h), h))
        note("unit_right", _pt_residual(multiply(space, h, one), h))
        hi = inverse(space, h)
        note("inverse_source_target", max(residual(source(space, hi), target(space, h)),
                                          residual(target(space, hi), source(space, h))))
        note("inverse_left", _pt_residual(multiply(space, hi, h), one))
        note("inverse_right", _pt_residual(multiply(space, h, hi),
                                           identity_at(space, family, target(space, h))))
        note("inverse_identity", _pt_residual(inverse(space, one), one))
    return VerificationReport(f"axioms_{family}_{space.side}", samples, worst, tol,
                              {"parts": parts, "dim": space.dim})


def _pair_maps(space: LogCanonicalSpace, family: Family, side: str):
    N = space.dim

    def split(xi):
        return xi[:N], xi[N:2 * N], xi[2 * N:]

    def h_of(xi):
        x, fh, _ = split(xi)
        return GroupoidPoint(family, side, x, fh)

    def g_of(xi):
        x, fh, fg = split(xi)
        return GroupoidPoint(family, side, target(space, h_of(xi)), fg)

    def m_of(xi):
        gh = multiply(space, g_of(xi), h_of(xi))
        return np.concatenate([gh.base, gh.fiber])

    def pr1(xi):
        g = g_of(xi)
        return np.concatenate([g.base, g.fiber])

    def pr2(xi):
        return np.asarray(xi[: 2 * N], dtype=float).copy()

    return h_of, g_of, m_of, pr1, pr2


def check_multiplicativity(space: LogCanonicalSpace, family: Family, samples: int,
                           rng: np.random.Generator, tol: float = 1e-6,
                           identity_fibers: bool = False) -> VerificationReport:
    """Residual of ``m* omega - pr1* omega - pr2* omega`` on composable pairs.

    Pairs are parametrised by ``(x, fiber_h, fiber_g)``, ``g`` sitting over
    ``target(h)``.
    """
    N = space.dim
    side = space.side
    h_of, g_of, m_of, pr1, pr2 = _pair_maps(space, family, side)
    worst = 0.0
    for _ in range(samples):
        h = random_point(rng, space, family)
        g = random_point(rng, space, family, base=target(space, h))
        if identity_fibers:
            h = identity_at(space, family, h.base)
            g = identity_at(space, family, h.base)
        xi = np.concatenate([h.base, h.fiber, g.fiber])
        gh = multiply(space, g, h)
        Jm, J1, J2 = (jacobian(fn, xi) for fn in (m_of, pr1, pr2))
        R = (pullback_2form(Jm, symplectic_form(space, gh))
             - pullback_2form(J1, symplectic_form(space, g))
             - pullback_2form(J2, symplectic_form(space, h)))
        worst = max(worst, float(np.max(np.abs(R))))
    return VerificationReport(f"multiplicativity_{family}_{side}", samples, worst, tol, {"dim": N})


def check_inverse_pair(space: LogCanonicalSpace, family: Family, samples: int,
                       rng: np.random.Generator, tol: float = 1e-10) -> VerificationReport:
    """``W @ P = I`` for the symplectic form ``W`` and Poisson tensor ``P``."""
    worst = 0.0
    for _ in range(samples):
        pt = random_point(rng, space, family)
        M = symplectic_form(space, pt) @ poisson_tensor(space, pt)
        worst = max(worst, float(np.max(np.abs(M - np.eye(M.shape[0])))))
    return VerificationReport(f"sigma_omega_{family}_{space.side}", samples, worst, tol)


def check_source_target_poisson(space: LogCanonicalSpace, family: Family, samples: int,
                                rng: np.random.Generator, tol: float = 1e-7) -> VerificationReport:
    """``source`` pushes the tensor to ``pi`` and ``target`` pushes it to ``-pi``."""
    N = space.dim
    worst = 0.0
    side = space.side
    for _ in range(samples):
        pt = random_point(rng, space, family)
        z0 = np.concatenate([pt.base, pt.fiber])
        P = poisson_tensor(space, pt)

        def alpha(v):
            return v[:N]

        def beta(v):
            return target(space, GroupoidPoint(family, side, v[:N], v[N:]))

        for fn, sign in ((alpha, 1.0), (beta, -1.0)):
            J = jacobian(fn, z0)
            img = fn(z0)
            pi = space.Omega * np.outer(img, img)
            worst = max(worst, float(np.max(np.abs(J @ P @ J.T - sign * pi))) / max(1.0, float(np.max(np.abs(pi)))))
    return VerificationReport(f"source_target_poisson_{family}_{side}", samples, worst, tol)


def check_morphism(fn, space: LogCanonicalSpace, family_in: Family, samples: int,
                   rng: np.random.Generator, tol: float = 1e-10, name: str = "morphism") -> VerificationReport:
    """A fiberwise map over the identity intertwines source, target, product and inverse."""
    worst = 0.0
    for _ in range(samples):
        h = random_point(rng, space, family_in)
        g = random_point(rng, space, family_in, base=target(space, h))
        fh, fg = fn(h), fn(g)
        worst = max(worst, residual(source(space, fh), source(space, h)),
                    residual(target(space, fh), target(space, h)),
                    _pt_residual(fn(multiply(space, g, h)), multiply(space, fg, fh)),
                    _pt_residual(fn(inverse(space, h)), inverse(space, fh)))
    return VerificationReport(name, samples, worst, tol)
