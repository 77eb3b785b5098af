"""Exact linear algebra for exchange data, compatible pairs and mutation traces.

Matrices are stored as tuples of tuples so that every value is hashable and
immutable.  Integer matrices hold ``int``; Omega holds ``Fraction``.  Direction
indices in the public API are 1-based, matching the usual mathematical
labelling; internal loops are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .numerics import VerificationReport

IntMatrix = tuple[tuple[int, ...], ...]
RatMatrix = tuple[tuple[Fraction, ...], ...]


class SignCoherenceError(ValueError):
    """A column of the C-matrix has entries of both signs."""


class InvariantError(AssertionError):
    """An internal invariant failed after a mutation (an implementation bug)."""


def pos(a: int | Fraction) -> int | Fraction:
    """The positive part ``[a]_+``."""
    return a if a > 0 else 0


def _int_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    out = []
    for row in rows:
        new_row = []
        for v in row:
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    raise ValueError(f"non-integer entry {v}")
                v = v.numerator
            if isinstance(v, float):
                if not v.is_integer():
                    raise ValueError(f"non-integer entry {v}")
                v = int(v)
            new_row.append(int(v))
        out.append(tuple(new_row))
    return tuple(out)


def _rat_matrix(rows: Sequence[Sequence[int | Fraction | str]]) -> RatMatrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def identity(m: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(m)) for i in range(m))


def transpose(A: Sequence[Sequence]) -> tuple:
    return tuple(zip(*A)) if A else ()


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> tuple:
    Bt = transpose(B)
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in Bt) for row in A)


def rational_inverse(A: Sequence[Sequence[int | Fraction]]) -> RatMatrix:
    """Gauss-Jordan inverse over the rationals; raises on a singular matrix."""
    n = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return tuple(tuple(row[n:]) for row in M)


def rational_rank(A: Sequence[Sequence[int | Fraction]]) -> int:
    M = [[Fraction(v) for v in row] for row in A]
    if not M:
        return 0
    rows, cols = len(M), len(M[0])
    rank = 0
    for col in range(cols):
        piv = next((r for r in range(rank, rows) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(rows):
            if r != rank and M[r][col] != 0:
                f = M[r][col] / M[rank][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class ExchangeData:
    """Exchange matrix ``B`` (m x n), symmetrizer ``D`` and degrees ``r``."""

    B: IntMatrix
    D: tuple[int, ...]
    r: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "B", _int_matrix(self.B))
        object.__setattr__(self, "D", tuple(int(d) for d in self.D))
        object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        m, n = self.m, self.n
        if n < 1 or m < n:
            raise ValueError(f"need 1 <= n <= m, got m={m}, n={n}")
        if any(len(row) != n for row in self.B):
            raise ValueError("B must be rectangular m x n")
        if len(self.D) != n or any(d <= 0 for d in self.D):
            raise ValueError("D must list n positive integers")
        if len(self.r) != n or any(v <= 0 for v in self.r):
            raise ValueError("r must list n positive integers")
        for k in range(n):
            if self.B[k][k] != 0:
                raise ValueError(f"principal diagonal entry B[{k + 1}][{k + 1}] is nonzero")
            for l in range(n):
                if self.D[k] * self.B[k][l] != -self.D[l] * self.B[l][k]:
                    raise ValueError(f"DB is not skew at ({k + 1},{l + 1})")
        if rational_rank(self.B) != n:
            raise ValueError("B must have full column rank n")

    @property
    def m(self) -> int:
        return len(self.B)

    @property
    def n(self) -> int:
        return len(self.B[0]) if self.B else 0


@dataclass(frozen=True)
class CompatiblePair:
    """A D-compatible pair: ``B^T Omega = [D 0]`` with Omega skew."""

    exchange: ExchangeData
    Omega: RatMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "Omega", _rat_matrix(self.Omega))
        m, n = self.m, self.n
        W = self.Omega
        if len(W) != m or any(len(row) != m for row in W):
            raise ValueError("Omega must be m x m")
        for i in range(m):
            for j in range(m):
                if W[i][j] != -W[j][i]:
                    raise ValueError(f"Omega is not skew at ({i + 1},{j + 1})")
        BtW = matmul(transpose(self.B), W)
        for k in range(n):
            for j in range(m):
                want = self.D[k] if j == k else 0
                if BtW[k][j] != want:
                    raise ValueError(f"B^T Omega != [D 0] at ({k + 1},{j + 1})")

    @classmethod
    def build(
        cls,
        B: Sequence[Sequence[int]],
        D: Sequence[int],
        r: Sequence[int] | None = None,
        Omega: Sequence[Sequence[int | Fraction | str]] | None = None,
    ) -> "CompatiblePair":
        """Validate ``B, D, r`` and attach Omega, solving for it when m = n."""
        exchange = ExchangeData(B, D, r if r is not None else (1,) * len(D))
        if Omega is None:
            if exchange.m != exchange.n:
                raise ValueError("Omega must be supplied when there are frozen rows")
            Omega = solve_omega(exchange)
        return cls(exchange, Omega)

    @property
    def B(self) -> IntMatrix:
        return self.exchange.B

    @property
    def D(self) -> tuple[int, ...]:
        return self.exchange.D

    @property
    def r(self) -> tuple[int, ...]:
        return self.exchange.r

    @property
    def m(self) -> int:
        return self.exchange.m

    @property
    def n(self) -> int:
        return self.exchange.n

    # float views for the numeric modules
    @cached_property
    def B_array(self) -> np.ndarray:
        return np.array(self.B, dtype=float)

    @cached_property
    def Omega_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.Omega])

    @cached_property
    def Omega_X(self) -> np.ndarray:
        """The X-side log-canonical matrix ``(d_k B_kl)`` on the principal part."""
        n = self.n
        return np.array([[self.D[k] * self.B[k][l] for l in range(n)] for k in range(n)], dtype=float)


def solve_omega(exchange: ExchangeData) -> RatMatrix:
    """Solve ``B^T Omega = D`` exactly for square ``B`` and check skewness."""
    if exchange.m != exchange.n:
        raise ValueError("Omega can only be solved for square B")
    n = exchange.n
    inv_Bt = rational_inverse(transpose(exchange.B))
    Dm = [[Fraction(exchange.D[i]) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    W = matmul(inv_Bt, Dm)
    for i in range(n):
        for j in range(n):
            if W[i][j] != -W[j][i]:
                raise ValueError("solved Omega is not skew-symmetric")
    return W


def _check_direction(pair: CompatiblePair, k: int) -> int:
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= pair.n:
        raise ValueError(f"direction k={k} outside 1..{pair.n}")
    return int(k) - 1


def _check_sign(eps: int) -> int:
    if eps not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {eps}")
    return int(eps)


def e_matrix(pair: CompatiblePair, k: int, eps: int) -> IntMatrix:
    """The involutive matrix E with ``Omega' = E^T Omega E``."""
    kk = _check_direction(pair, k)
    eps = _check_sign(eps)
    rk = pair.r[kk]
    m = pair.m
    rows = []
    for i in range(m):
        row = [int(i == j) for j in range(m)]
        row[kk] = -1 if i == kk else pos(-eps * pair.B[i][kk] * rk)
        rows.append(tuple(row))
    return tuple(rows)


def mutate_B(exchange: ExchangeData, k: int, eps: int) -> IntMatrix:
    kk = k - 1
    B, rk = exchange.B, exchange.r[kk]
    out = []
    for i in range(exchange.m):
        row = []
        for j in range(exchange.n):
            if i == kk or j == kk:
                row.append(-B[i][j])
            else:
                row.append(B[i][j] + pos(-eps * B[i][kk] * rk) * B[kk][j]
                           + B[i][kk] * pos(eps * rk * B[kk][j]))
        out.append(tuple(row))
    return tuple(out)


def mutate_pair(pair: CompatiblePair, k: int, eps: int) -> CompatiblePair:
    """Mutate the compatible pair in direction ``k`` with sign ``eps``."""
    _check_direction(pair, k)
    eps = _check_sign(eps)
    B2 = mutate_B(pair.exchange, k, eps)
    E = e_matrix(pair, k, eps)
    W2 = matmul(matmul(transpose(E), pair.Omega), E)
    try:
        return CompatiblePair(ExchangeData(B2, pair.D, pair.r), W2)
    except ValueError as exc:  # pragma: no cover - would be a bug
        raise InvariantError(f"mutation broke compatibility: {exc}") from exc


def tropical_sign(C: Sequence[Sequence[int]], k: int) -> int:
    """Common sign of column ``k`` (1-based) of C."""
    col = [row[k - 1] for row in C]
    if all(v == 0 for v in col):
        raise SignCoherenceError(f"column {k} of C is zero")
    if all(v >= 0 for v in col):
        return 1
    if all(v <= 0 for v in col):
        return -1
    raise SignCoherenceError(f"column {k} of C is not sign-coherent: {col}")


@dataclass(frozen=True)
class MutationTrace:
    """Current compatible pair plus C, G, C-dual, G-dual along a mutation path.

    ``path`` records ``(k, eps)`` for each step.  ``z_parity[l]`` is True when
    an odd number of mutations in direction ``l + 1`` has been applied.
    """

    pair: CompatiblePair
    C: IntMatrix
    G: IntMatrix
    Cdual: IntMatrix
    Gdual: IntMatrix
    path: tuple[tuple[int, int], ...] = ()
    z_parity: tuple[bool, ...] = ()
    seed_pair: CompatiblePair | None = field(default=None, compare=False)

    @classmethod
    def seed(cls, pair: CompatiblePair) -> "MutationTrace":
        m, n = pair.m, pair.n
        return cls(pair, identity(m), identity(m), identity(m), identity(n), (), (False,) * n, pair)

    @property
    def initial(self) -> CompatiblePair:
        return self.seed_pair if self.seed_pair is not None else self.pair

    @property
    def directions(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.path)

    def sign(self, k: int) -> int:
        return tropical_sign(self.C, k)


def mutate_trace(trace: MutationTrace, k: int) -> MutationTrace:
    """Mutate every matrix of the trace in direction ``k`` at its tropical sign."""
    pair = trace.pair
    kk = _check_direction(pair, k)
    eps = tropical_sign(trace.C, k)
    m, n = pair.m, pair.n
    B, rk = pair.B, pair.r[kk]

    def bkj(j: int) -> int:
        return B[kk][j] if j < n else 0

    C = trace.C
    C2 = tuple(
        tuple(-C[i][j] if j == kk else C[i][j] + C[i][kk] * pos(eps * rk * bkj(j)) for j in range(m))
        for i in range(m)
    )
    G = trace.G
    newcol = [-G[i][kk] + sum(G[i][l] * pos(-eps * B[l][kk] * rk) for l in range(m)) for i in range(m)]
    G2 = tuple(tuple(newcol[i] if j == kk else G[i][j] for j in range(m)) for i in range(m))
    Cd = trace.Cdual
    Cd2 = tuple(
        tuple(-Cd[i][j] if i == kk else Cd[i][j] + pos(-eps * B[i][kk] * rk) * Cd[kk][j] for j in range(m))
        for i in range(m)
    )
    Gd = trace.Gdual
    newrow = [-Gd[kk][j] + sum(pos(eps * rk * B[kk][l]) * Gd[l][j] for l in range(n)) for j in range(n)]
    Gd2 = tuple(tuple(newrow[j] if i == kk else Gd[i][j] for j in range(n)) for i in range(n))
    parity = tuple(not p if l == kk else p for l, p in enumerate(trace.z_parity))
    out = MutationTrace(mutate_pair(pair, k, eps), C2, G2, Cd2, Gd2, trace.path + ((k, eps),),
                        parity, trace.initial)
    for j in range(n):
        if any(out.C[i][j] > 0 for i in range(m)) and any(out.C[i][j] < 0 for i in range(m)):
            raise SignCoherenceError(
                f"column {j + 1} of C lost sign-coherence after path {out.directions}")
    return out


def walk(trace: MutationTrace, path: Sequence[int]) -> list[MutationTrace]:
    """All traces visited along ``path``, starting with ``trace`` itself."""
    out = [trace]
    for k in path:
        out.append(mutate_trace(out[-1], k))
    return out


def check_duality(trace: MutationTrace) -> VerificationReport:
    """Exact check of ``d_k Cd_kl = d_l C_lk`` and ``d_k Gd_kl = d_l G_lk``."""
    D, n = trace.pair.D, trace.pair.n
    worst = 0
    bad = []
    for k in range(n):
        for l in range(n):
            e1 = abs(D[k] * trace.Cdual[k][l] - D[l] * trace.C[l][k])
            e2 = abs(D[k] * trace.Gdual[k][l] - D[l] * trace.G[l][k])
            if e1 or e2:
                bad.append((k + 1, l + 1))
            worst = max(worst, e1, e2)
    return VerificationReport(
        name="duality", samples=n * n, max_residual=float(worst), tol=0.0,
        notes={"path": list(trace.directions), "D": list(D), "violations": bad},
    )


# standard seeds ------------------------------------------------------------

def rank2_pair(b: int, c: int, r: Sequence[int] = (1, 1)) -> CompatiblePair:
    """Rank-2 seed ``B = [[0, b], [-c, 0]]`` with ``D = (c/g, b/g)``."""
    from math import gcd

    g = gcd(b, c)
    return CompatiblePair.build([[0, b], [-c, 0]], (c // g, b // g), tuple(r))


def a2_pair(r: Sequence[int] = (1, 1)) -> CompatiblePair:
    return rank2_pair(1, 1, r)


def b2_pair(r: Sequence[int] = (1, 1)) -> CompatiblePair:
    return rank2_pair(1, 2, r)


def g2_pair(r: Sequence[int] = (1, 1)) -> CompatiblePair:
    return rank2_pair(1, 3, r)


def random_pair(rng: np.random.Generator, n: int, frozen: int = 0, max_entry: int = 2,
                max_d: int = 2) -> CompatiblePair:
    """Random compatible pair with ``n`` mutable and ``frozen`` frozen directions.

    A square invertible skew-symmetrizable matrix of size ``m = n + frozen``
    is drawn, Omega is solved from it, and its first ``n`` columns are kept.
    ``m`` must be even, since odd skew-symmetrizable matrices are singular.
    """
    m = n + frozen
    if m % 2:
        raise ValueError("n + frozen must be even")
    for _ in range(1000):
        D = [int(v) for v in rng.integers(1, max_d + 1, size=m)]
        B = [[0] * m for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                lcm = D[i] * D[j] // np.gcd(D[i], D[j])
                s = int(rng.integers(-max_entry, max_entry + 1)) * lcm
                B[i][j] = s // D[i]
                B[j][i] = -s // D[j]
        try:
            full = ExchangeData(B, D, (1,) * m)
        except ValueError:
            continue
        W = solve_omega(full)
        Bt = [row[:n] for row in B]
        r = [int(v) for v in rng.integers(1, 3, size=n)]
        return CompatiblePair(ExchangeData(Bt, D[:n], r), W)
    raise RuntimeError("failed to draw an invertible exchange matrix")
