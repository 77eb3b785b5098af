"""Command line entry point: ``python -m clustergpd {mutate,verify,periodicity}``.

Exit codes: 0 pass, 1 a check failed, 2 bad input, 3 sign-coherence violated.

Scenarios are JSON documents.  Exact data (``B``, ``D``, ``r``, ``Omega``,
``Z``) must be integers or ``"p/q"`` strings; floats are rejected.  Random
sampling uses numpy's PCG64 generator, ``np.random.default_rng(seed)``.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .charts import (
    ChartPoint,
    chart_periodicity,
    chart_poisson_report,
    mutate_chart,
    mutate_chart_composed,
    random_chart_point,
)
from .core_algebra import (
    CompatiblePair,
    MutationTrace,
    SignCoherenceError,
    check_duality,
    mutate_trace,
    walk,
)
from .groupoids import (
    FAMILIES,
    SIDES,
    LogCanonicalSpace,
    check_axioms,
    check_inverse_pair,
    check_multiplicativity,
    check_source_target_poisson,
)
from .gpd_mutations import (
    check_boundary,
    check_flows,
    check_gpd_separation,
    check_intertwining,
    check_lifted_poisson,
    check_mutation_consistency,
    dilog_identity_sum,
    gpd_periodicity_check,
    sample_point,
)
from .laurent import (
    ExchangePoly,
    FPolyFamily,
    all_paths,
    periodicity_exact,
    verify_separation,
    walk_F,
)
from .numerics import PoleError, ToleranceProfile, VerificationReport, active_profile, residual

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ASSUMPTION = 0, 1, 2, 3

SUITES = ("axioms", "multiplicativity", "poisson", "flows", "mutations", "separation")
_RATIONAL = re.compile(r"^\s*-?\d+(\s*/\s*-?\d+)?\s*$")


class ScenarioError(ValueError):
    """The scenario or a command argument is malformed."""


# scenario ------------------------------------------------------------------------

def _exact(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise ScenarioError(f"{where}: {value!r} is not exact; write integers or 'p/q' strings")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str) and _RATIONAL.match(value):
        try:
            return Fraction(value.replace(" ", ""))
        except ZeroDivisionError:
            raise ScenarioError(f"{where}: zero denominator in {value!r}") from None
    raise ScenarioError(f"{where}: cannot read {value!r} as a rational")


def _integer(value: Any, where: str) -> int:
    q = _exact(value, where)
    if q.denominator != 1:
        raise ScenarioError(f"{where}: {value!r} must be an integer")
    return int(q)


def _rows(data: Any, where: str, conv: Callable[[Any, str], Any]) -> tuple[tuple, ...]:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise ScenarioError(f"{where} must be a non-empty list of rows")
    return tuple(tuple(conv(v, f"{where}[{i + 1}][{j + 1}]") for j, v in enumerate(row))
                 for i, row in enumerate(data))


def _vector(data: Any, where: str) -> tuple[int, ...]:
    if not isinstance(data, list) or not data:
        raise ScenarioError(f"{where} must be a non-empty list")
    return tuple(_integer(v, f"{where}[{i + 1}]") for i, v in enumerate(data))


@dataclass(frozen=True)
class Scenario:
    name: str
    pair: CompatiblePair
    exchange: tuple[ExchangePoly, ...]
    orthant: str = "positive"
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=dict)

    @property
    def numeric(self) -> bool:
        return not any(Z.is_symbolic for Z in self.exchange)

    def z_values(self) -> tuple[tuple[float, ...], ...] | None:
        """Fixed numeric ``z`` when every coefficient is given, else ``None``."""
        return tuple(Z.values() for Z in self.exchange) if self.numeric else None

    @classmethod
    def from_dict(cls, data: Any) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        known = {"name", "m", "n", "B", "Omega", "D", "r", "Z", "orthant", "seed", "tolerances"}
        extra = sorted(set(data) - known)
        if extra:
            raise ScenarioError(f"unknown scenario keys: {', '.join(extra)}")
        for key in ("B", "D"):
            if key not in data:
                raise ScenarioError(f"scenario is missing {key!r}")
        B = _rows(data["B"], "B", _integer)
        D = _vector(data["D"], "D")
        n = len(D)
        r = _vector(data["r"], "r") if "r" in data else (1,) * n
        Omega = _rows(data["Omega"], "Omega", _exact) if data.get("Omega") is not None else None
        for key, want in (("m", len(B)), ("n", len(B[0]))):
            if key in data and _integer(data[key], key) != want:
                raise ScenarioError(f"{key}={data[key]} disagrees with B ({want})")
        try:
            pair = CompatiblePair.build(B, D, r, Omega)
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"invalid exchange data: {exc}") from None
        exchange = cls._exchange(data.get("Z"), pair)
        orthant = data.get("orthant", "positive")
        if orthant not in ("positive", "closed"):
            raise ScenarioError(f"orthant must be 'positive' or 'closed', got {orthant!r}")
        seed = _integer(data.get("seed", 0), "seed")
        tols = data.get("tolerances", {})
        if not isinstance(tols, dict):
            raise ScenarioError("tolerances must be an object")
        tolerances = {}
        for key, val in tols.items():
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
                raise ScenarioError(f"tolerance {key!r} must be a positive number")
            tolerances[str(key)] = float(val)
        return cls(str(data.get("name", "scenario")), pair, exchange, orthant, seed, tolerances)

    @staticmethod
    def _exchange(Z: Any, pair: CompatiblePair) -> tuple[ExchangePoly, ...]:
        if Z is None:
            Z = ["symbolic"] * pair.n
        if not isinstance(Z, list) or len(Z) != pair.n:
            raise ScenarioError(f"Z must list one entry per direction ({pair.n})")
        out = []
        for k, (zk, rk) in enumerate(zip(Z, pair.r), start=1):
            if zk == "symbolic":
                out.append(ExchangePoly.symbolic(k, rk))
                continue
            if not isinstance(zk, list) or len(zk) != rk - 1:
                raise ScenarioError(f"Z[{k}] needs {rk - 1} middle coefficients or 'symbolic'")
            vals = tuple(_exact(v, f"Z[{k}][{j + 1}]") for j, v in enumerate(zk))
            if any(v <= 0 for v in vals):
                raise ScenarioError(f"Z[{k}] coefficients must be positive on the positive orthant")
            out.append(ExchangePoly(k, rk, vals))
        return tuple(out)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(data)


# argument parsing helpers ----------------------------------------------------------

def parse_path(text: str, n: int) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        path = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ScenarioError(f"cannot read path {text!r}; expected comma-separated directions") from None
    bad = [k for k in path if not 1 <= k <= n]
    if bad:
        raise ScenarioError(f"direction {bad[0]} is outside 1..{n}")
    return path


def parse_sigma(text: str, m: int, n: int) -> tuple[int, ...]:
    """Cycle notation ``"(1 2)"``, ``"id"``, or a one-line image list ``"2,1"``."""
    text = text.strip()
    perm = list(range(1, m + 1))
    if text in ("", "id", "()"):
        return tuple(perm)
    if text.startswith("("):
        cycles = re.findall(r"\(([^()]*)\)", text)
        if re.sub(r"\([^()]*\)", "", text).strip():
            raise ScenarioError(f"cannot read permutation {text!r}")
        seen: set[int] = set()
        for cyc in cycles:
            try:
                items = [int(t) for t in cyc.replace(",", " ").split()]
            except ValueError:
                raise ScenarioError(f"cannot read cycle ({cyc})") from None
            if any(not 1 <= i <= m for i in items) or seen & set(items) or len(set(items)) != len(items):
                raise ScenarioError(f"cycle ({cyc}) is not a valid cycle on 1..{m}")
            seen |= set(items)
            for a, b in zip(items, items[1:] + items[:1]):
                perm[a - 1] = b
    else:
        try:
            images = [int(t) for t in text.split(",")]
        except ValueError:
            raise ScenarioError(f"cannot read permutation {text!r}") from None
        if len(images) not in (n, m) or sorted(images) != list(range(1, len(images) + 1)):
            raise ScenarioError(f"{text!r} is not a permutation of 1..{len(images)}")
        perm[: len(images)] = images
    if any(perm[i] != i + 1 for i in range(n, m)):
        raise ScenarioError(f"sigma must fix the frozen indices {n + 1}..{m}")
    return tuple(perm)


def parse_overrides(items: Iterable[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, val = item.partition("=")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            sep = ""
        if not sep or not name.strip() or not out[name.strip()] > 0:
            raise ScenarioError(f"--tol-override expects name=positive_value, got {item!r}")
    return out


def parse_dilog(items: Iterable[str], pair: CompatiblePair) -> list[tuple[int, int]]:
    out = []
    for item in items:
        try:
            ell, j = (int(t) for t in item.split(":"))
        except ValueError:
            raise ScenarioError(f"--dilog expects ell:j, got {item!r}") from None
        if not 1 <= ell <= pair.n or not 1 <= j <= pair.r[ell - 1]:
            raise ScenarioError(f"--dilog {item}: need 1 <= ell <= n and 1 <= j <= r_ell")
        out.append((ell, j))
    return out


# formatting ----------------------------------------------------------------------------

def _fmt(v: Any) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def fmt_matrix(M: Sequence[Sequence[Any]]) -> str:
    return "[" + ", ".join("[" + ", ".join(_fmt(v) for v in row) + "]" for row in M) + "]"


def mutate_text(scenario: Scenario, path: Sequence[int]) -> str:
    fam = walk_F(FPolyFamily.seed(MutationTrace.seed(scenario.pair), scenario.exchange), path)[-1]
    tr = fam.trace
    lines = [
        f"scenario: {scenario.name}",
        f"path: {','.join(map(str, path)) or '(empty)'}",
        f"signs: {[eps for _, eps in tr.path]}",
        f"B = {fmt_matrix(tr.pair.B)}",
        f"Omega = {fmt_matrix(tr.pair.Omega)}",
        f"D = {list(tr.pair.D)}",
        f"r = {list(tr.pair.r)}",
        f"C = {fmt_matrix(tr.C)}",
        f"G = {fmt_matrix(tr.G)}",
        f"Cdual = {fmt_matrix(tr.Cdual)}",
        f"Gdual = {fmt_matrix(tr.Gdual)}",
    ]
    lines += [f"F{i + 1} = {f.to_text()}" for i, f in enumerate(fam.F)]
    return "\n".join(lines)


@dataclass
class SuiteReport:
    """The structured form of a ``verify`` or ``periodicity`` run."""

    command: str
    scenario: str
    seed: int
    samples: int
    reports: list[VerificationReport]
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "scenario": self.scenario,
            "seed": self.seed,
            "samples": self.samples,
            "params": self.params,
            "passed": self.passed,
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SuiteReport":
        d = json.loads(text)
        out = cls(d["command"], d["scenario"], int(d["seed"]), int(d["samples"]),
                  [VerificationReport.from_dict(r) for r in d["reports"]], dict(d.get("params", {})))
        if bool(d.get("passed", out.passed)) != out.passed:
            raise ValueError("inconsistent pass flag in serialized suite")
        return out


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Fraction):
        return _fmt(obj)
    return obj


def normalize_report(rep: VerificationReport) -> VerificationReport:
    """Coerce notes to plain JSON types so that emit/parse is the identity."""
    return VerificationReport(rep.name, int(rep.samples), float(rep.max_residual), float(rep.tol),
                              json.loads(json.dumps(_json_safe(rep.notes))))


# verify suites -------------------------------------------------------------------------

Check = Callable[[], VerificationReport]


def _families_sides(fn: Callable[[str, str], VerificationReport]) -> list[Check]:
    return [lambda f=f, s=s: fn(f, s) for s in SIDES for f in FAMILIES]


def suite_checks(suite: str, sc: Scenario, samples: int, rng: np.random.Generator) -> list[tuple[str, Check]]:
    """Ordered ``(kind, thunk)`` pairs; the order fixes how ``rng`` is consumed."""
    pair, z = sc.pair, sc.z_values()
    spaces = {s: LogCanonicalSpace.of(pair, s) for s in SIDES}
    trace0 = MutationTrace.seed(pair)
    out: list[tuple[str, Check]] = []

    def add(kind: str, checks: Iterable[Check]) -> None:
        out.extend((kind, c) for c in checks)

    def chart_points(side: str, count: int) -> list[ChartPoint]:
        pts = [random_chart_point(rng, pair, side) for _ in range(count)]
        return pts if z is None else [p.replace(z=z) for p in pts]

    if suite == "axioms":
        add("axioms", _families_sides(lambda f, s: check_axioms(spaces[s], f, samples, rng)))
    elif suite == "multiplicativity":
        add("multiplicativity", _families_sides(
            lambda f, s: check_multiplicativity(spaces[s], f, samples, rng)))
    elif suite == "poisson":
        add("sigma_omega", _families_sides(lambda f, s: check_inverse_pair(spaces[s], f, samples, rng)))
        add("source_target_poisson", _families_sides(
            lambda f, s: check_source_target_poisson(spaces[s], f, samples, rng)))
        add("lifted_poisson", _families_sides(
            lambda f, s: check_lifted_poisson(pair, f, s, max(1, samples // 5), rng, z=z)))
        for side in SIDES:
            for k in range(1, pair.n + 1):
                pair_k = mutate_trace(trace0, k).pair
                add("chart_poisson", [lambda side=side, k=k, pair_k=pair_k: chart_poisson_report(
                    f"chart_poisson_mu{k}_{side}", lambda p, k=k: mutate_chart(p, trace0, k), side,
                    pair, pair_k, chart_points(side, max(1, samples // 5)), tol=1e-6)])
    elif suite == "flows":
        add("flows", _families_sides(lambda f, s: check_flows(pair, f, s, max(1, samples // 5), rng, z=z)))
    elif suite == "mutations":
        add("chart_mutation", [lambda side=side: _chart_mutation(pair, side, chart_points(side, samples))
                               for side in SIDES])
        add("duality", [lambda: _duality(pair)])
        add("mutation_consistency", _families_sides(
            lambda f, s: check_mutation_consistency(pair, f, s, samples, rng, z=z)))
        add("intertwining", _families_sides(
            lambda f, s: check_intertwining(pair, f, s, samples, rng, z=z)))
        if sc.orthant == "closed":
            add("boundary", [lambda f=f: check_boundary(pair, f, max(1, samples // 5), rng, z=z)
                             for f in FAMILIES])
    elif suite == "separation":
        add("separation_symbolic", [lambda: verify_separation(pair, sc.exchange, 4)])
        paths = list(all_paths(pair.n, 3, 1))
        add("groupoid_separation", [
            lambda f=f, s=s: _named(check_gpd_separation(pair, paths, max(1, samples // 25), rng,
                                                         families=(f,), sides=(s,), z=z),
                                    f"groupoid_separation_{f}_{s}")
            for s in SIDES for f in FAMILIES])
    else:  # pragma: no cover - argparse restricts the choices
        raise ScenarioError(f"unknown suite {suite!r}")
    return out


def _named(rep: VerificationReport, name: str) -> VerificationReport:
    rep.name = name
    return rep


def _chart_mutation(pair: CompatiblePair, side: str, points: Sequence[ChartPoint]) -> VerificationReport:
    """Direct mutation against ``tau o phi^1`` and involutivity."""
    trace = MutationTrace.seed(pair)
    worst = 0.0
    for p in points:
        for k in range(1, pair.n + 1):
            q = mutate_chart(p, trace, k)
            worst = max(worst, residual(q.base, mutate_chart_composed(p, trace, k).base),
                        residual(mutate_chart(q, mutate_trace(trace, k), k).base, p.base))
    return VerificationReport(f"chart_mutation_{side}", len(points), worst, 1e-12)


def _duality(pair: CompatiblePair, max_len: int = 4) -> VerificationReport:
    worst, count, bad = 0.0, 0, []
    for path in all_paths(pair.n, max_len, 1):
        rep = check_duality(walk(MutationTrace.seed(pair), path)[-1])
        count += 1
        if not rep.passed:
            bad.append(list(path))
        worst = max(worst, rep.max_residual)
    return VerificationReport("duality", count, worst, 0.0, {"failing_paths": bad[:10]})


def apply_tolerance(rep: VerificationReport, kind: str, profile: ToleranceProfile) -> VerificationReport:
    """Override lookup order: the full report name, then the check kind."""
    rep.tol = profile.tol(rep.name, profile.tol(kind, rep.tol))
    return rep


def run_suite(sc: Scenario, suite: str, samples: int, seed: int,
              profile: ToleranceProfile) -> SuiteReport:
    rng = np.random.default_rng(seed)
    suites = SUITES if suite == "all" else (suite,)
    reports = []
    for name in suites:
        for kind, check in suite_checks(name, sc, samples, rng):
            reports.append(normalize_report(apply_tolerance(check(), kind, profile)))
    return SuiteReport("verify", sc.name, seed, samples, reports, {"suite": suite})


# periodicity ---------------------------------------------------------------------------

def default_dilog_pairs(pair: CompatiblePair) -> list[tuple[int, int]]:
    """Identities that follow from periodicity of the ``a`` coordinates: ``1 <= j < r_ell``."""
    return [(ell, j) for ell in range(1, pair.n + 1) for j in range(1, pair.r[ell - 1])]


def _dilog_report(sc: Scenario, sequence, ell: int, j: int, variant: str, samples: int,
                  rng: np.random.Generator, tol: float) -> VerificationReport:
    worst, notes = 0.0, {}
    for _ in range(samples):
        pt = sample_point(rng, sc.pair, "X", "D", z=sc.z_values())
        try:
            worst = max(worst, abs(dilog_identity_sum(sc.pair, sequence, ell, j, pt, variant)))
        except PoleError as exc:
            worst, notes = float("inf"), {"error": str(exc)}
            break
    return VerificationReport(f"dilog_{variant}_l{ell}_j{j}", samples, worst, tol, notes)


def run_periodicity(sc: Scenario, sequence, sigma, samples: int, seed: int, profile: ToleranceProfile,
                    dilog: list[tuple[int, int]] | None = None) -> tuple[SuiteReport, list[str]]:
    """Levels in order: exact, chart numeric, groupoid, dilogarithm sums.

    Later levels run only when the exact level passes.
    """
    pair = sc.pair
    rng = np.random.default_rng(seed)
    levels: list[str] = []
    reports: list[VerificationReport] = []

    def add(level: str, rep: VerificationReport, kind: str) -> None:
        rep.notes = dict(rep.notes, level=level)
        levels.append(level)
        reports.append(normalize_report(apply_tolerance(rep, kind, profile)))

    add("chart_exact", periodicity_exact(pair, sequence, sigma, sc.exchange), "periodicity_exact")
    if reports[0].passed:
        z = sc.z_values()
        trace0 = MutationTrace.seed(pair)
        for side in SIDES:
            pts = [random_chart_point(rng, pair, side) for _ in range(samples)]
            if z is not None:
                pts = [p.replace(z=z) for p in pts]
            add("chart_numeric", chart_periodicity(trace0, sequence, sigma, pts), "chart_periodicity")
        for side in SIDES:
            for f in FAMILIES:
                rep = gpd_periodicity_check(pair, sequence, sigma, samples, rng, families=(f,),
                                            sides=(side,), z=z)
                add("groupoid", _named(rep, f"groupoid_periodicity_{f}_{side}"), "groupoid_periodicity")
        for ell, j in (default_dilog_pairs(pair) if dilog is None else dilog):
            for variant in ("source_target", "zero"):
                add("dilog", _dilog_report(sc, sequence, ell, j, variant, samples, rng, 1e-8), "dilog")
    params = {"sequence": list(sequence), "sigma": list(sigma)}
    return SuiteReport("periodicity", sc.name, seed, samples, reports, params), levels


# commands ------------------------------------------------------------------------------

def _profile(args: argparse.Namespace, sc: Scenario) -> ToleranceProfile:
    try:
        profile = ToleranceProfile.from_env()
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot load tolerance profile: {exc}") from None
    return profile.with_overrides(sc.tolerances).with_overrides(parse_overrides(args.tol_override or ()))


def _write_report(path: str | None, suite: SuiteReport) -> None:
    if path:
        try:
            Path(path).write_text(suite.to_json(), encoding="utf-8")
        except OSError as exc:
            raise ScenarioError(f"cannot write report {path}: {exc.strerror}") from None


def cmd_mutate(args: argparse.Namespace, out) -> int:
    sc = Scenario.load(args.scenario)
    path = parse_path(args.path, sc.pair.n)
    print(mutate_text(sc, path), file=out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, out) -> int:
    sc = Scenario.load(args.scenario)
    if args.samples < 1:
        raise ScenarioError("--samples must be positive")
    seed = sc.seed if args.seed is None else args.seed
    profile = _profile(args, sc)
    with active_profile(profile):
        suite = run_suite(sc, args.suite, args.samples, seed, profile)
    print(f"verify {args.suite}: scenario={sc.name} seed={seed} samples={args.samples}", file=out)
    for rep in suite.reports:
        print(rep.line(), file=out)
    failed = sum(not r.passed for r in suite.reports)
    print(f"{len(suite.reports) - failed}/{len(suite.reports)} checks passed", file=out)
    _write_report(args.report, suite)
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_periodicity(args: argparse.Namespace, out) -> int:
    sc = Scenario.load(args.scenario)
    pair = sc.pair
    sequence = parse_path(args.sequence, pair.n)
    sigma = parse_sigma(args.sigma, pair.m, pair.n)
    dilog = parse_dilog(args.dilog, pair) if args.dilog else None
    seed = sc.seed if args.seed is None else args.seed
    profile = _profile(args, sc)
    with active_profile(profile):
        suite, levels = run_periodicity(sc, sequence, sigma, args.samples, seed, profile, dilog)
    print(f"periodicity: scenario={sc.name} sequence={args.sequence} sigma={list(sigma)} seed={seed}",
          file=out)
    for level, rep in zip(levels, suite.reports):
        print(f"[{level:<13s}] {rep.line()}", file=out)
    first = next((r for r in suite.reports if not r.passed), None)
    if first is not None:
        detail = first.notes.get("failures") or first.notes.get("error") or []
        what = detail[0] if isinstance(detail, list) and detail else detail or first.name
        print(f"not a periodicity: first violated equality: {what}", file=out)
    else:
        print("periodicity holds at every level", file=out)
    _write_report(args.report, suite)
    return EXIT_OK if first is None else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clustergpd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mutate", help="print the trace state after a mutation path")
    m.add_argument("--scenario", required=True)
    m.add_argument("--path", default="")
    m.set_defaults(func=cmd_mutate)

    def common(q: argparse.ArgumentParser, samples: int) -> None:
        q.add_argument("--scenario", required=True)
        q.add_argument("--samples", type=int, default=samples)
        q.add_argument("--seed", type=int, default=None, help="defaults to the scenario's seed")
        q.add_argument("--tol-override", action="append", metavar="NAME=VAL")
        q.add_argument("--report", metavar="FILE", help="write the structured JSON report here")

    v = sub.add_parser("verify", help="run a verification suite")
    common(v, 50)
    v.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("periodicity", help="check a periodicity at every level")
    common(q, 10)
    q.add_argument("--sequence", required=True)
    q.add_argument("--sigma", default="id")
    q.add_argument("--dilog", action="append", metavar="ELL:J",
                   help="dilogarithm sums to check; default: every ell with 1 <= j < r_ell")
    q.set_defaults(func=cmd_periodicity)
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    except SignCoherenceError as exc:
        print(f"sign-coherence violated: {exc}", file=err)
        return EXIT_ASSUMPTION
