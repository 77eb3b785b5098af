"""Sparse exact Laurent polynomials, exchange polynomials and F-polynomials.

A :class:`LaurentPoly` is a map from integer exponent tuples to nonzero
``Fraction`` coefficients over an ordered tuple of variable names (the
registry).  Two polynomials interact only when their registries agree.

The separation-of-additions checks compare closed forms against
step-by-step mutation.  On the A side the step-by-step cluster variables are
themselves computed by exact Laurent division, so an inexact division there
is a failure of the Laurent phenomenon.  On the X side the coordinates are
rational functions, kept as (numerator, denominator) pairs and compared by
cross-multiplication one step at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .core_algebra import CompatiblePair, MutationTrace, mutate_trace, pos
from .numerics import VerificationReport

Exp = tuple[int, ...]
Coeff = Union[Fraction, str]


class InexactDivision(ArithmeticError):
    pass


def _add_exp(a: Exp, b: Exp) -> Exp:
    return tuple(x + y for x, y in zip(a, b))


def _sub_exp(a: Exp, b: Exp) -> Exp:
    return tuple(x - y for x, y in zip(a, b))


class LaurentPoly:
    """Immutable sparse Laurent polynomial with rational coefficients."""

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars: Sequence[str], terms: Mapping[Exp, int | Fraction] | None = None):
        self.vars = tuple(vars)
        clean: dict[Exp, Fraction] = {}
        for e, c in (terms or {}).items():
            if len(e) != len(self.vars):
                raise ValueError("exponent length does not match the registry")
            c = Fraction(c)
            if c:
                clean[tuple(int(v) for v in e)] = c
        self.terms = dict(sorted(clean.items()))
        self._hash: int | None = None

    # constructors
    @classmethod
    def const(cls, vars: Sequence[str], c: int | Fraction = 1) -> "LaurentPoly":
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def var(cls, vars: Sequence[str], name: str, power: int = 1) -> "LaurentPoly":
        vars = tuple(vars)
        e = [0] * len(vars)
        e[vars.index(name)] = power
        return cls(vars, {tuple(e): 1})

    @classmethod
    def monomial(cls, vars: Sequence[str], exps: Sequence[int], c: int | Fraction = 1) -> "LaurentPoly":
        return cls(vars, {tuple(exps): c})

    @property
    def zero_exp(self) -> Exp:
        return (0,) * len(self.vars)

    def _coerce(self, other: "LaurentPoly | int | Fraction") -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.vars != self.vars:
                raise ValueError(f"registry mismatch: {self.vars} vs {other.vars}")
            return other
        return LaurentPoly.const(self.vars, other)

    # arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return LaurentPoly(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[Exp, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _add_exp(e1, e2)
                out[e] = out.get(e, 0) + c1 * c2
        return LaurentPoly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if not self.is_monomial():
                raise InexactDivision("negative power of a non-monomial")
            (e, c), = self.terms.items()
            return LaurentPoly(self.vars, {tuple(k * v for v in e): Fraction(1) / c ** (-k)})
        result = LaurentPoly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(self.vars, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.vars, tuple(self.terms.items())))
        return self._hash

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_polynomial(self) -> bool:
        return all(v >= 0 for e in self.terms for v in e)

    def constant_term(self) -> Fraction:
        return self.terms.get(self.zero_exp, Fraction(0))

    def degree_bounds(self) -> tuple[Exp, Exp]:
        es = list(self.terms)
        return tuple(min(c) for c in zip(*es)), tuple(max(c) for c in zip(*es))

    def divide_exact(self, other: "LaurentPoly") -> "LaurentPoly":
        """Exact quotient in the Laurent ring (lex division); raises if inexact."""
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return self
        if other.is_monomial():
            (e, c), = other.terms.items()
            return LaurentPoly(self.vars, {_sub_exp(k, e): v / c for k, v in self.terms.items()})
        lead_b = max(other.terms)
        cb = other.terms[lead_b]
        floor = _sub_exp(min(self.terms), min(other.terms))
        rem = dict(self.terms)
        quot: dict[Exp, Fraction] = {}
        while rem:
            lead = max(rem)
            q = _sub_exp(lead, lead_b)
            if q < floor:
                raise InexactDivision("division leaves a remainder")
            c = rem[lead] / cb
            quot[q] = c
            for e, v in other.terms.items():
                key = _add_exp(q, e)
                nv = rem.get(key, 0) - c * v
                if nv:
                    rem[key] = nv
                else:
                    rem.pop(key, None)
        return LaurentPoly(self.vars, quot)

    def substitute(self, target_vars: Sequence[str],
                   images: Sequence["LaurentPoly"]) -> "LaurentPoly":
        """Replace variable ``i`` by ``images[i]`` (all over ``target_vars``)."""
        target_vars = tuple(target_vars)
        if len(images) != len(self.vars):
            raise ValueError("need one image per variable")
        cache: dict[tuple[int, int], LaurentPoly] = {}

        def power(i: int, e: int) -> LaurentPoly:
            if (i, e) not in cache:
                cache[(i, e)] = images[i] ** e
            return cache[(i, e)]

        acc: dict[Exp, Fraction] = {}
        for e, c in self.terms.items():
            term = LaurentPoly.const(target_vars, c)
            for i, v in enumerate(e):
                if v:
                    term = term * power(i, v)
            for k2, v2 in term.terms.items():
                acc[k2] = acc.get(k2, 0) + v2
        return LaurentPoly(target_vars, acc)

    def evaluate(self, values: Mapping[str, float] | Sequence[float]) -> float:
        if isinstance(values, Mapping):
            values = [values[name] for name in self.vars]
        vals = np.asarray(values, dtype=float)
        total = 0.0
        for e, c in self.terms.items():
            total += float(c) * float(np.prod(vals ** np.asarray(e, dtype=float)))
        return total

    def compiled(self) -> tuple[np.ndarray, np.ndarray]:
        """``(exponents, coefficients)`` arrays for fast repeated evaluation."""
        if not self.terms:
            return np.zeros((0, len(self.vars))), np.zeros(0)
        exps = np.array(list(self.terms), dtype=float).reshape(len(self.terms), len(self.vars))
        coeffs = np.array([float(c) for c in self.terms.values()])
        return exps, coeffs

    def to_text(self) -> str:
        """Canonical text: terms by total degree then exponent, ``*`` and ``^``."""
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (sum(e), tuple(-v for v in e))):
            c = self.terms[e]
            mono = "*".join(name if v == 1 else f"{name}^{v}" for name, v in zip(self.vars, e) if v)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    __str__ = to_text

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_text()!r})"


@dataclass(frozen=True)
class RationalFunction:
    """A ``num / den`` pair of Laurent polynomials without normalisation."""

    num: LaurentPoly
    den: LaurentPoly

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.num, self.den * other.den)

    def inverse(self) -> "RationalFunction":
        return RationalFunction(self.den, self.num)

    def __pow__(self, k: int) -> "RationalFunction":
        if k < 0:
            return RationalFunction(self.den ** (-k), self.num ** (-k))
        return RationalFunction(self.num ** k, self.den ** k)

    def equals(self, other: "RationalFunction") -> bool:
        return self.num * other.den == other.num * self.den

    def evaluate(self, values) -> float:
        return self.num.evaluate(values) / self.den.evaluate(values)


# exchange polynomials -----------------------------------------------------

@dataclass(frozen=True)
class ExchangePoly:
    """``Z_k(u) = 1 + z_1 u + ... + z_{r-1} u^{r-1} + u^r``.

    Each ``z`` entry is a ``Fraction`` or the name of a formal variable.
    """

    k: int
    r: int
    z: tuple[Coeff, ...] = ()

    def __post_init__(self) -> None:
        z = tuple(v if isinstance(v, str) else Fraction(v) for v in self.z)
        object.__setattr__(self, "z", z)
        if self.r < 1 or len(z) != self.r - 1:
            raise ValueError(f"Z_{self.k} of degree {self.r} needs {self.r - 1} middle coefficients")

    @classmethod
    def symbolic(cls, k: int, r: int) -> "ExchangePoly":
        return cls(k, r, tuple(f"z{k}_{j}" for j in range(1, r)))

    @classmethod
    def binomial(cls, k: int, r: int = 1) -> "ExchangePoly":
        """``Z_k(u) = (1 + u)^r``, the cluster case when ``r = 1``."""
        from math import comb

        return cls(k, r, tuple(Fraction(comb(r, j)) for j in range(1, r)))

    def coefficient(self, j: int) -> Coeff:
        if j == 0 or j == self.r:
            return Fraction(1)
        return self.z[j - 1]

    def star(self) -> "ExchangePoly":
        return ExchangePoly(self.k, self.r, tuple(reversed(self.z)))

    @property
    def is_symbolic(self) -> bool:
        return any(isinstance(v, str) for v in self.z)

    def variables(self) -> tuple[str, ...]:
        return tuple(v for v in self.z if isinstance(v, str))

    def values(self) -> tuple[float, ...]:
        if self.is_symbolic:
            raise ValueError("exchange polynomial has formal coefficients")
        return tuple(float(v) for v in self.z)


def z_variables(exchange: Sequence[ExchangePoly]) -> tuple[str, ...]:
    out: list[str] = []
    for Z in exchange:
        out.extend(v for v in Z.variables() if v not in out)
    return tuple(out)


def default_exchange(pair: CompatiblePair, symbolic: bool = True) -> tuple[ExchangePoly, ...]:
    make = ExchangePoly.symbolic if symbolic else ExchangePoly.binomial
    return tuple(make(k + 1, pair.r[k]) for k in range(pair.n))


def star(Z: ExchangePoly) -> ExchangePoly:
    return Z.star()


def star_index(j: int, r: int) -> int:
    """``j* = r - j``."""
    return r - j


def z_coefficient(exchange: Sequence[ExchangePoly], parity: Sequence[bool], k: int, j: int,
                  eps: int, vars: Sequence[str]) -> LaurentPoly:
    """Coefficient of ``u^j`` in ``Z°_{k;t}`` written in the seed's z-variables.

    The chart at ``t`` carries ``Z_{k;t}``, which is the seed polynomial
    starred once per mutation in direction ``k``; ``eps = -1`` stars again.
    """
    Z = exchange[k - 1]
    flip = bool(parity[k - 1]) != (eps == -1)
    c = Z.coefficient(Z.r - j if flip else j)
    if isinstance(c, str):
        return LaurentPoly.var(vars, c)
    return LaurentPoly.const(vars, c)


# registries -----------------------------------------------------------------

def u_vars(n: int, zvars: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"u{i}" for i in range(1, n + 1)) + tuple(zvars)


def x_vars(m: int, zvars: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(1, m + 1)) + tuple(zvars)


def y_vars(n: int, zvars: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"y{i}" for i in range(1, n + 1)) + tuple(zvars)


# F-polynomials --------------------------------------------------------------

@dataclass(frozen=True)
class FPolyFamily:
    """F-polynomials at the vertex described by ``trace``.

    ``exchange`` holds the seed's exchange polynomials; the coefficients of
    the polynomials at the current vertex are recovered from the trace's
    parities.
    """

    F: tuple[LaurentPoly, ...]
    trace: MutationTrace
    exchange: tuple[ExchangePoly, ...]

    @classmethod
    def seed(cls, trace: MutationTrace, exchange: Sequence[ExchangePoly] | None = None) -> "FPolyFamily":
        exchange = tuple(exchange) if exchange is not None else default_exchange(trace.pair)
        if len(exchange) != trace.pair.n or any(Z.r != r for Z, r in zip(exchange, trace.pair.r)):
            raise ValueError("exchange polynomials must match r")
        vars = u_vars(trace.pair.n, z_variables(exchange))
        one = LaurentPoly.const(vars, 1)
        return cls((one,) * trace.pair.m, trace, exchange)

    @property
    def vars(self) -> tuple[str, ...]:
        return self.F[0].vars

    @property
    def zvars(self) -> tuple[str, ...]:
        return z_variables(self.exchange)


def mutate_F(family: FPolyFamily, k: int) -> FPolyFamily:
    """One step of the F-polynomial recursion in direction ``k``."""
    trace = family.trace
    pair = trace.pair
    n, kk = pair.n, k - 1
    eps = trace.sign(k)
    B, rk = pair.B, pair.r[kk]
    vars = family.vars
    Cexp = [0] * len(vars)
    for l in range(n):
        Cexp[l] = eps * trace.C[l][kk]
    if any(v < 0 for v in Cexp):  # pragma: no cover - sign coherence guards this
        raise ArithmeticError("sign-incoherent c-vector")
    M = LaurentPoly.monomial(vars, Cexp)
    cache: dict[tuple[int, int], LaurentPoly] = {}

    def fpow(l: int, e: int) -> LaurentPoly:
        if (l, e) not in cache:
            cache[(l, e)] = family.F[l] ** e
        return cache[(l, e)]

    num = LaurentPoly(vars)
    for c in range(rk + 1):
        term = z_coefficient(family.exchange, trace.z_parity, k, c, eps, vars) * M ** c
        for l in range(n):
            e = pos(-eps * B[l][kk] * rk) + c * eps * B[l][kk]
            if e:
                term = term * fpow(l, e)
        num = num + term
    newF = num.divide_exact(family.F[kk])
    if newF.constant_term() != 1:
        raise ArithmeticError(f"F_{k} has constant term {newF.constant_term()}")
    F = tuple(newF if j == kk else f for j, f in enumerate(family.F))
    return FPolyFamily(F, mutate_trace(trace, k), family.exchange)


def walk_F(family: FPolyFamily, path: Sequence[int]) -> list[FPolyFamily]:
    out = [family]
    for k in path:
        out.append(mutate_F(out[-1], k))
    return out


def yhat(trace_or_pair: MutationTrace | CompatiblePair, zvars: Sequence[str] = ()) -> list[LaurentPoly]:
    """``yhat_k = prod_i x_i^{B_ik}`` for the current ``B``."""
    pair = trace_or_pair.pair if isinstance(trace_or_pair, MutationTrace) else trace_or_pair
    vars = x_vars(pair.m, zvars)
    pad = (0,) * len(zvars)
    return [LaurentPoly.monomial(vars, tuple(pair.B[i][k] for i in range(pair.m)) + pad)
            for k in range(pair.n)]


def _f_images(target: Sequence[str], args: Sequence[LaurentPoly], zvars: Sequence[str]) -> list[LaurentPoly]:
    return list(args) + [LaurentPoly.var(target, z) for z in zvars]


def separation_a(family: FPolyFamily) -> list[LaurentPoly]:
    """Closed-form cluster variables ``x_{j;t}`` in the seed's ``x`` and ``z``."""
    trace = family.trace
    pair0 = trace.initial
    m = pair0.m
    zv = family.zvars
    vars = x_vars(m, zv)
    yh = yhat(pair0, zv)
    images = _f_images(vars, yh, zv)
    out = []
    for j in range(m):
        mono = LaurentPoly.monomial(vars, tuple(trace.G[i][j] for i in range(m)) + (0,) * len(zv))
        out.append(mono * family.F[j].substitute(vars, images))
    return out


def separation_x(family: FPolyFamily) -> list[RationalFunction]:
    """Closed-form X coordinates ``y_{l;t}`` as rational functions of the seed's ``y``."""
    trace = family.trace
    n = trace.pair.n
    zv = family.zvars
    vars = y_vars(n, zv)
    ys = [LaurentPoly.var(vars, f"y{i}") for i in range(1, n + 1)]
    images = _f_images(vars, ys, zv)
    Fy = [family.F[k].substitute(vars, images) for k in range(n)]
    one = LaurentPoly.const(vars, 1)
    out = []
    for l in range(n):
        mono = LaurentPoly.monomial(vars, tuple(trace.C[k][l] for k in range(n)) + (0,) * len(zv))
        num, den = mono, one
        for k in range(n):
            e = trace.pair.B[k][l]
            if e > 0:
                num = num * Fy[k] ** e
            elif e < 0:
                den = den * Fy[k] ** (-e)
        out.append(RationalFunction(num, den))
    return out


# step-by-step mutation on symbolic coordinates ------------------------------

def a_mutation_step(xs: Sequence[LaurentPoly], trace: MutationTrace, exchange: Sequence[ExchangePoly],
                    k: int) -> list[LaurentPoly]:
    """Apply the cluster A-mutation at ``trace``'s vertex to Laurent coordinates."""
    pair = trace.pair
    kk = k - 1
    eps = trace.sign(k)
    vars = xs[0].vars
    rk = pair.r[kk]
    num = LaurentPoly(vars)
    for c in range(rk + 1):
        term = z_coefficient(exchange, trace.z_parity, k, c, eps, vars)
        for i in range(pair.m):
            e = pos(-eps * pair.B[i][kk] * rk) + c * eps * pair.B[i][kk]
            if e:
                term = term * xs[i] ** e
        num = num + term
    out = list(xs)
    out[kk] = num.divide_exact(xs[kk])
    return out


def x_mutation_step(ys: Sequence[RationalFunction], trace: MutationTrace,
                    exchange: Sequence[ExchangePoly], k: int) -> list[RationalFunction]:
    """Apply the cluster X-mutation at ``trace``'s vertex to rational coordinates."""
    pair = trace.pair
    kk = k - 1
    eps = trace.sign(k)
    rk = pair.r[kk]
    yk = ys[kk] if eps == 1 else ys[kk].inverse()
    vars = yk.num.vars
    # Z°(N/D) = (sum_c z_c N^c D^(r-c)) / D^r
    hom = LaurentPoly(vars)
    for c in range(rk + 1):
        hom = hom + z_coefficient(exchange, trace.z_parity, k, c, eps, vars) * yk.num ** c * yk.den ** (rk - c)
    Zval = RationalFunction(hom, yk.den ** rk)
    out = []
    for l in range(pair.n):
        if l == kk:
            out.append(ys[kk].inverse())
            continue
        b = pair.B[kk][l]
        out.append(ys[l] * ys[kk] ** pos(eps * rk * b) * Zval ** (-b))
    return out


def seed_a_coordinates(pair: CompatiblePair, zvars: Sequence[str]) -> list[LaurentPoly]:
    vars = x_vars(pair.m, zvars)
    return [LaurentPoly.var(vars, f"x{i}") for i in range(1, pair.m + 1)]


def seed_x_coordinates(pair: CompatiblePair, zvars: Sequence[str]) -> list[RationalFunction]:
    vars = y_vars(pair.n, zvars)
    one = LaurentPoly.const(vars, 1)
    return [RationalFunction(LaurentPoly.var(vars, f"y{i}"), one) for i in range(1, pair.n + 1)]


def laurent_check(family: FPolyFamily) -> VerificationReport:
    """Recompute the cluster variables at ``family``'s vertex by exact Laurent
    division along its path and compare with the closed form."""
    trace = family.trace
    seed = FPolyFamily.seed(MutationTrace.seed(trace.initial), family.exchange)
    xs = seed_a_coordinates(trace.initial, family.zvars)
    fails: list[str] = []
    cur = seed
    for k in trace.directions:
        try:
            xs = a_mutation_step(xs, cur.trace, family.exchange, k)
        except InexactDivision:
            fails.append(f"division not exact at direction {k}")
            break
        cur = mutate_F(cur, k)
    if not fails:
        for j, (a, b) in enumerate(zip(xs, separation_a(family))):
            if a != b:
                fails.append(f"x{j + 1} differs from the closed form")
        for j, f in enumerate(family.F):
            if f.constant_term() != 1:
                fails.append(f"F{j + 1} has constant term {f.constant_term()}")
            if not f.is_polynomial():
                fails.append(f"F{j + 1} has negative exponents")
    return VerificationReport("laurent", len(xs), float(len(fails)), 0.0,
                              {"path": list(trace.directions), "failures": fails})


def all_paths(n: int, max_len: int, min_len: int = 0) -> Iterable[tuple[int, ...]]:
    for L in range(min_len, max_len + 1):
        yield from product(range(1, n + 1), repeat=L)


def verify_separation(pair: CompatiblePair, exchange: Sequence[ExchangePoly] | None,
                      max_len: int) -> VerificationReport:
    """Closed forms vs step-by-step mutation on every path up to ``max_len``.

    The tree of paths is explored depth first, so each vertex is reached by
    one mutation from its parent.  A-side coordinates are composed exactly;
    X-side closed forms are compared with one mutation of the parent's
    closed form, which by induction equals the full composition.
    """
    exchange = tuple(exchange) if exchange is not None else default_exchange(pair)
    root = FPolyFamily.seed(MutationTrace.seed(pair), exchange)
    zv = root.zvars
    fails: list[str] = []
    count = 0
    xs0 = seed_a_coordinates(pair, zv)
    ys0 = seed_x_coordinates(pair, zv)
    if separation_a(root) != xs0 or not all(a.equals(b) for a, b in zip(separation_x(root), ys0)):
        fails.append("seed closed form is not the identity")

    def visit(fam: FPolyFamily, xs: list[LaurentPoly], ysep: list[RationalFunction], depth: int) -> None:
        nonlocal count
        if depth == max_len:
            return
        for k in range(1, pair.n + 1):
            path = fam.trace.directions + (k,)
            try:
                xs2 = a_mutation_step(xs, fam.trace, exchange, k)
            except InexactDivision:
                fails.append(f"path {path}: inexact division")
                continue
            ys_step = x_mutation_step(ysep, fam.trace, exchange, k)
            child = mutate_F(fam, k)
            count += 1
            if xs2 != separation_a(child):
                fails.append(f"path {path}: A-side closed form differs")
            ysep2 = separation_x(child)
            if not all(a.equals(b) for a, b in zip(ys_step, ysep2)):
                fails.append(f"path {path}: X-side closed form differs")
            visit(child, xs2, ysep2, depth + 1)

    visit(root, xs0, separation_x(root), 0)
    return VerificationReport("separation_symbolic", count, float(len(fails)), 0.0,
                              {"max_len": max_len, "failures": fails[:20]})


def periodicity_exact(pair: CompatiblePair, sequence: Sequence[int], sigma: Sequence[int],
                      exchange: Sequence[ExchangePoly] | None = None) -> VerificationReport:
    """Exact check that ``(sequence; sigma)`` is a periodicity starting at the seed.

    ``sigma`` is a 1-based permutation of ``1..m`` fixing the frozen indices.
    Checked equalities, each with zero tolerance: X and A coordinates and the
    exchange coefficients are permuted, ``B`` and ``Omega`` are conjugated, and
    the columns of ``C``, ``G`` and the F-polynomials are permuted.  The
    report's ``failures`` lists violated equalities in that order.
    """
    m, n = pair.m, pair.n
    sig = [s - 1 for s in sigma]
    if sorted(sig) != list(range(m)) or any(sig[i] != i for i in range(n, m)):
        raise ValueError(f"sigma must permute 1..{m} and fix {n + 1}..{m}")
    exchange = tuple(exchange) if exchange is not None else default_exchange(pair)
    fam = walk_F(FPolyFamily.seed(MutationTrace.seed(pair), exchange), sequence)[-1]
    tr = fam.trace
    zv = fam.zvars
    fails: list[str] = []
    ys0 = seed_x_coordinates(pair, zv)
    for l, y in enumerate(separation_x(fam)):
        if not y.equals(ys0[sig[l]]):
            fails.append(f"y{l + 1} at the end != y{sig[l] + 1} at the start")
    xs0 = seed_a_coordinates(pair, zv)
    for j, x in enumerate(separation_a(fam)):
        if x != xs0[sig[j]]:
            fails.append(f"x{j + 1} at the end != x{sig[j] + 1} at the start")
    for l in range(n):
        for j in range(1, pair.r[l]):
            got = z_coefficient(exchange, tr.z_parity, l + 1, j, 1, zv)
            want = z_coefficient(exchange, (False,) * n, sig[l] + 1, j, 1, zv)
            if got != want:
                fails.append(f"z{l + 1},{j} != z{sig[l] + 1},{j}")
    B1, Bw = pair.B, tr.pair.B
    for i in range(m):
        for j in range(n):
            if B1[i][j] != Bw[sig[i]][sig[j]]:
                fails.append(f"B[{i + 1},{j + 1}] != B'[{sig[i] + 1},{sig[j] + 1}]")
    W1, Ww = pair.Omega, tr.pair.Omega
    for i in range(m):
        for j in range(m):
            if W1[i][j] != Ww[sig[i]][sig[j]]:
                fails.append(f"Omega[{i + 1},{j + 1}] != Omega'[{sig[i] + 1},{sig[j] + 1}]")
    start = MutationTrace.seed(pair)
    for name, M1, Mw in (("C", start.C, tr.C), ("G", start.G, tr.G)):
        for i in range(m):
            for j in range(m):
                if M1[i][j] != Mw[i][sig[j]]:
                    fails.append(f"{name}[{i + 1},{j + 1}] != {name}'[{i + 1},{sig[j] + 1}]")
    one = LaurentPoly.const(fam.vars, 1)
    for j in range(m):
        if fam.F[sig[j]] != one:
            fails.append(f"F{sig[j] + 1} at the end is not F{j + 1} = 1")
    return VerificationReport("periodicity_exact", 1, float(len(fails)), 0.0,
                              {"sequence": list(sequence), "sigma": list(sigma), "failures": fails})
