"""Shared numeric kernels: quadrature, finite-difference Jacobians, tensor
pullbacks, Pfaffians, tolerance profiles and verification reports."""

from __future__ import annotations

import json
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

TOLERANCE_ENV = "CLUSTERGPD_TOLERANCE_PROFILE"

SERIES_CUTOFF = 1e-3
SERIES_ORDER = 8


@dataclass
class ToleranceProfile:
    quad_abs_tol: float = 1e-11
    fd_step: float = 1e-5
    residual_tol: dict[str, float] = field(default_factory=dict)
    default_residual: float = 1e-7

    def __post_init__(self) -> None:
        values = [self.quad_abs_tol, self.fd_step, self.default_residual, *self.residual_tol.values()]
        if any(not v > 0 for v in values):
            raise ValueError("tolerances must be positive")

    def tol(self, name: str, default: float | None = None) -> float:
        if name in self.residual_tol:
            return self.residual_tol[name]
        return self.default_residual if default is None else default

    def with_overrides(self, overrides: dict[str, float]) -> "ToleranceProfile":
        base = {k: v for k, v in overrides.items() if k in ("quad_abs_tol", "fd_step", "default_residual")}
        resid = dict(self.residual_tol)
        resid.update({k: v for k, v in overrides.items() if k not in base})
        return ToleranceProfile(
            quad_abs_tol=base.get("quad_abs_tol", self.quad_abs_tol),
            fd_step=base.get("fd_step", self.fd_step),
            residual_tol=resid,
            default_residual=base.get("default_residual", self.default_residual),
        )

    @classmethod
    def load(cls, path: str | os.PathLike[str]) -> "ToleranceProfile":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            quad_abs_tol=float(data.get("quad_abs_tol", 1e-11)),
            fd_step=float(data.get("fd_step", 1e-5)),
            residual_tol={k: float(v) for k, v in data.get("residual_tol", {}).items()},
            default_residual=float(data.get("default_residual", 1e-7)),
        )

    @classmethod
    def from_env(cls) -> "ToleranceProfile":
        path = os.environ.get(TOLERANCE_ENV)
        return cls.load(path) if path else cls()


DEFAULT_TOLERANCES = ToleranceProfile()


@contextmanager
def active_profile(profile: ToleranceProfile) -> Iterator[ToleranceProfile]:
    """Make ``profile`` the module default for the duration of the block."""
    saved = replace(DEFAULT_TOLERANCES, residual_tol=dict(DEFAULT_TOLERANCES.residual_tol))
    for f in fields(ToleranceProfile):
        setattr(DEFAULT_TOLERANCES, f.name, getattr(profile, f.name))
    try:
        yield DEFAULT_TOLERANCES
    finally:
        for f in fields(ToleranceProfile):
            setattr(DEFAULT_TOLERANCES, f.name, getattr(saved, f.name))


@dataclass
class VerificationReport:
    """Outcome of one check.  ``passed`` is derived: residual <= tol."""

    name: str
    samples: int
    max_residual: float
    tol: float
    notes: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tol) and not math.isnan(self.max_residual)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "tol": self.tol,
            "passed": self.passed,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "VerificationReport":
        rep = cls(str(data["name"]), int(data["samples"]), float(data["max_residual"]),
                  float(data["tol"]), dict(data.get("notes", {})))
        if "passed" in data and bool(data["passed"]) != rep.passed:
            raise ValueError("inconsistent pass flag in serialized report")
        return rep

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} n={self.samples:<5d} max={self.max_residual:.3e}  tol={self.tol:.1e}"


def residual(a: np.ndarray | float, b: np.ndarray | float) -> float:
    """Max abs difference scaled by ``max(1, |b|)`` entrywise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    d = np.abs(a - b) / np.maximum(1.0, np.abs(b))
    return float(np.max(d)) if np.all(np.isfinite(d)) else math.nan


# polynomial helpers ---------------------------------------------------------

def poly_eval(coeffs: Sequence[float], u: float) -> float:
    """Evaluate ``sum coeffs[i] u^i`` (ascending order) by Horner."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def log_series(coeffs: Sequence[float], order: int = SERIES_ORDER) -> list[float]:
    """Taylor coefficients ``l_1..l_order`` of ``log Z(u)`` for ``Z(0) = 1``."""
    c = list(coeffs) + [0.0] * (order + 1)
    if abs(c[0] - 1.0) > 1e-15:
        raise ValueError("log series needs constant term 1")
    l = [0.0] * (order + 1)
    for n in range(1, order + 1):
        l[n] = c[n] - sum(i * l[i] * c[n - i] for i in range(1, n)) / n
    return l[1:]


# quadrature -----------------------------------------------------------------

class QuadratureError(RuntimeError):
    pass


class PoleError(ValueError):
    """The integrand's denominator or log argument fails to stay positive."""


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    c = 0.5 * (a + b)
    fc = f(c)
    whole = (b - a) * (fa + 4 * fc + fb) / 6
    stack = [(a, b, fa, fc, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a0, b0, fa, fc, fb, whole, eps, depth = stack.pop()
        c0 = 0.5 * (a0 + b0)
        d, e = 0.5 * (a0 + c0), 0.5 * (c0 + b0)
        fd, fe = f(d), f(e)
        left = (c0 - a0) * (fa + 4 * fd + fc) / 6
        right = (b0 - c0) * (fc + 4 * fe + fb) / 6
        delta = left + right - whole
        if abs(delta) <= 15 * eps or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15 * eps:
                raise QuadratureError(f"no convergence on [{a0}, {b0}]")
            total += left + right + delta / 15
        else:
            stack.append((a0, c0, fa, fd, fc, left, eps / 2, depth + 1))
            stack.append((c0, b0, fc, fe, fb, right, eps / 2, depth + 1))
    return total


def _require_positive(g: Callable[[float], float], a: float, b: float, what: str) -> None:
    lo, hi = min(a, b), max(a, b)
    grid = np.linspace(lo, hi, 65)
    vals = [g(t) for t in grid]
    for t0, t1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if v0 <= 0:
            raise PoleError(f"{what} is non-positive at u={t0:.6g}")
        if v1 <= 0:
            # bisect for the first crossing, for the diagnostic
            x0, x1 = t0, t1
            for _ in range(60):
                mid = 0.5 * (x0 + x1)
                if g(mid) > 0:
                    x0 = mid
                else:
                    x1 = mid
            raise PoleError(f"{what} changes sign near u={x1:.6g}")


def quad_log_over_u(coeffs: Sequence[float], a: float, b: float,
                    tol: float | None = None) -> float:
    """``int_a^b log(Z(u))/u du`` for ``Z`` with ascending ``coeffs``, ``Z(0) = 1``.

    Both endpoints must be ``>= 0``.  The piece inside ``[0, 1e-3]`` is
    integrated from the Taylor series of ``log Z``.
    """
    tol = DEFAULT_TOLERANCES.quad_abs_tol if tol is None else tol
    if a == b:
        return 0.0
    if a > b:
        return -quad_log_over_u(coeffs, b, a, tol)
    if a < 0:
        raise ValueError("integration bounds must be non-negative")
    coeffs = [float(c) for c in coeffs]
    _require_positive(lambda u: poly_eval(coeffs, u), a, b, "Z")
    total = 0.0
    if a < SERIES_CUTOFF:
        top = min(b, SERIES_CUTOFF)
        ls = log_series(coeffs)
        # int u^{n-1} = u^n / n
        total += sum(l * (top ** n - a ** n) / n for n, l in enumerate(ls, start=1))
        a = top
    if a < b:
        total += adaptive_simpson(lambda u: math.log(poly_eval(coeffs, u)) / u, a, b, tol)
    return total


def quad_rational(coeffs: Sequence[float], j: int, eps: int, a: float, b: float,
                  tol: float | None = None) -> float:
    """``int_a^b u^(eps*j - 1) / Z(u^eps) du``.

    For ``eps = -1`` the integrand is rewritten as ``u^(r-j-1) / Z*(u)``,
    which is regular at ``u = 0`` whenever ``j <= r - 1``.
    """
    tol = DEFAULT_TOLERANCES.quad_abs_tol if tol is None else tol
    if a == b:
        return 0.0
    if a > b:
        return -quad_rational(coeffs, j, eps, b, a, tol)
    coeffs = [float(c) for c in coeffs]
    if eps == 1:
        power = j - 1
    else:
        power = len(coeffs) - 2 - j
        coeffs = coeffs[::-1]
    if a < 0:
        raise ValueError("integration bounds must be non-negative")
    if a == 0 and power < 0:
        raise PoleError("integrand is singular at u = 0")
    _require_positive(lambda u: poly_eval(coeffs, u), a, b, "Z(u^eps)")

    def f(u: float) -> float:
        if u == 0.0:
            return 1.0 / coeffs[0] if power == 0 else 0.0
        return u ** power / poly_eval(coeffs, u)

    return adaptive_simpson(f, a, b, tol)


# differentiation and tensors -----------------------------------------------

def jacobian(fn: Callable[[np.ndarray], np.ndarray], point: np.ndarray,
             step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian ``J[a, b] = d fn_a / d z_b``."""
    h = DEFAULT_TOLERANCES.fd_step if step is None else step
    z = np.asarray(point, dtype=float)
    cols = []
    for b in range(z.size):
        e = np.zeros_like(z)
        e[b] = h
        cols.append((np.asarray(fn(z + e), dtype=float) - np.asarray(fn(z - e), dtype=float)) / (2 * h))
    return np.stack(cols, axis=1)


def pushforward_bivector(J: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``J P J^T``: the bivector pushed along a map with Jacobian ``J``."""
    return J @ P @ J.T


def pullback_2form(J: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``J^T W J``: the 2-form pulled back along a map with Jacobian ``J``."""
    return J.T @ W @ J


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a real skew matrix by pivoted 2x2 Schur complements."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(A[k, k + 1:])))
        if piv != k + 1:
            A[[k + 1, piv], :] = A[[piv, k + 1], :]
            A[:, [k + 1, piv]] = A[:, [piv, k + 1]]
            pf = -pf
        if A[k, k + 1] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            A[k + 2:, k + 2:] += np.outer(A[k + 1, k + 2:], tau) - np.outer(tau, A[k + 1, k + 2:])
    return float(pf)


def canonical_block(dim: int) -> np.ndarray:
    """Bivector of the pairing block ``{z_i, a_i} = +1`` on ``2*dim`` coordinates."""
    P = np.zeros((2 * dim, 2 * dim))
    P[:dim, dim:] = np.eye(dim)
    P[dim:, :dim] = -np.eye(dim)
    return P


def check_poisson_map(fn: Callable[[np.ndarray], np.ndarray], points: Sequence[np.ndarray],
                      bracket_in: Callable[[np.ndarray], np.ndarray],
                      bracket_out: Callable[[np.ndarray], np.ndarray],
                      name: str = "poisson_map", tol: float | None = None,
                      step: float | None = None) -> VerificationReport:
    """Compare ``J P_in J^T`` with ``P_out(fn(z))`` over a point cloud."""
    tol = DEFAULT_TOLERANCES.tol(name) if tol is None else tol
    worst = 0.0
    for z in points:
        z = np.asarray(z, dtype=float)
        J = jacobian(fn, z, step)
        lhs = pushforward_bivector(J, bracket_in(z))
        rhs = bracket_out(np.asarray(fn(z), dtype=float))
        scale = max(1.0, float(np.max(np.abs(rhs))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    return VerificationReport(name, len(points), worst, tol)
