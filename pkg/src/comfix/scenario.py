"""Scenario files: TOML description of a space, named maps and a problem.

Layout::

    name = "example1"
    dimension = 1
    metric = "euclidean"          # euclidean | chebyshev | manhattan

    [domain]                      # sampling box, must be bounded
    lower = [1.0]
    upper = [10.0]
    space_lower = [1.0]           # optional: the space X when it is larger
    space_upper = [inf]           #   than the box (defaults to the box)

    [maps]
    f = "x^2"
    g = "x^3"
    fg = { compose = ["f", "g"] }          # f(g(x))
    g3 = { iterate = { of = "g", n = 3 } }
    e = "identity"

    [problem]
    type = "pair"                 # pair | chain | expansive
    contractor = "f"
    dominator = "g"
    x0 = [1.0]

    [numerics]                    # every key optional
    tol = 1e-10
"""

from __future__ import annotations

import dataclasses
import math
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Union

from .errors import InputError, ParseError, ScenarioError
from .maps import IDENTITY, Compose, Expr, Identity, Iterate, MapDef, MapTable, parse_map
from .metric import BoxDomain, Metric, Point, as_point

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BOUND_MODES = ("aposteriori", "apriori")


@dataclass(frozen=True)
class Numerics:
    tol: float = 1e-10
    tol_cert: float = 1e-8
    max_iter: int = 100_000
    n_samples: int = 91
    seed: int = 0
    slack: float | None = None  # 1e-9 * diameter
    radius_cap: float | None = None  # 1e6 * diameter
    max_steps: int = 10_000
    bound_mode: str = "aposteriori"
    k_margin: float = 0.02
    tol_zero: float = 1e-9
    ratio_floor: float | None = None  # 1e-12 * diameter
    tol_commute: float | None = None  # 1e-9 * (1 + diameter)
    rtol_commute: float = 1e-12
    tol_step: float | None = None  # 1e-13 * diameter
    grid_n: int | None = None  # per-axis grid for candidate scans; auto by dimension

    def resolved(self, diameter: float) -> "Numerics":
        """Fill the diameter-relative defaults."""
        defaults = {
            "slack": 1e-9 * diameter,
            "radius_cap": 1e6 * max(diameter, 1.0),
            "ratio_floor": 1e-12 * diameter,
            "tol_commute": 1e-9 * (1.0 + diameter),
            "tol_step": 1e-13 * diameter,
        }
        fill = {k: v for k, v in defaults.items() if getattr(self, k) is None}
        return dataclasses.replace(self, **fill)

    def validate(self) -> None:
        positive = ("tol", "tol_cert", "max_iter", "n_samples", "max_steps", "grid_n")
        for name in positive:
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ScenarioError(f"must be > 0, got {getattr(self, name)!r}", f"numerics.{name}")
        for name in ("slack", "radius_cap", "ratio_floor", "tol_commute", "tol_step", "tol_zero", "rtol_commute"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ScenarioError(f"must be >= 0, got {value!r}", f"numerics.{name}")
        if not 0 <= self.k_margin < 1:
            raise ScenarioError("must lie in [0, 1)", "numerics.k_margin")
        if self.bound_mode not in BOUND_MODES:
            raise ScenarioError(f"must be one of {BOUND_MODES}", "numerics.bound_mode")
        if not self.tol < self.tol_cert:
            raise ScenarioError("tol must be smaller than tol_cert", "numerics.tol")


@dataclass(frozen=True)
class PairProblem:
    contractor: str
    dominator: str
    k_declared: float | None = None
    kind: str = field(default="pair", init=False)

    @property
    def map_names(self) -> tuple[str, ...]:
        return (self.contractor, self.dominator)


@dataclass(frozen=True)
class ChainProblem:
    """``h`` contracts against ``g``, ``g`` against ``f``; ``f`` is the final dominator."""

    f: str
    g: str
    h: str
    kind: str = field(default="chain", init=False)

    @property
    def map_names(self) -> tuple[str, ...]:
        return (self.f, self.g, self.h)


@dataclass(frozen=True)
class ExpansiveProblem:
    map: str
    n: int = 1
    kind: str = field(default="expansive", init=False)

    @property
    def map_names(self) -> tuple[str, ...]:
        return (self.map,)


Problem = Union[PairProblem, ChainProblem, ExpansiveProblem]


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    dim: int
    metric: Metric
    domain: BoxDomain
    space: BoxDomain
    maps: MapTable
    map_sources: dict[str, Any]
    problem: Problem
    x0: Point
    numerics: Numerics

    @property
    def diameter(self) -> float:
        return self.domain.diameter(self.metric)

    def settings(self) -> Numerics:
        return self.numerics.resolved(self.diameter)

    def with_numerics(self, **changes) -> "ScenarioSpec":
        numerics = dataclasses.replace(self.numerics, **changes)
        numerics.validate()
        return dataclasses.replace(self, numerics=numerics)

    def with_problem(self, problem: Problem) -> "ScenarioSpec":
        return dataclasses.replace(self, problem=problem)

    def with_x0(self, x0) -> "ScenarioSpec":
        return dataclasses.replace(self, x0=as_point(x0))


# -- loading -----------------------------------------------------------------

_TOP_KEYS = {"name", "dimension", "metric", "domain", "maps", "problem", "numerics"}
_DOMAIN_KEYS = {"lower", "upper", "space_lower", "space_upper"}
_PROBLEM_KEYS = {
    "pair": {"type", "contractor", "dominator", "x0", "k_declared"},
    "chain": {"type", "f", "g", "h", "x0"},
    "expansive": {"type", "map", "n", "x0"},
}
_NUMERIC_FIELDS = {f.name: f for f in dataclasses.fields(Numerics)}
_INT_FIELDS = {"max_iter", "n_samples", "seed", "max_steps", "grid_n"}


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ScenarioError("missing required field", f"{where}{key}")
    return table[key]


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ScenarioError(f"unknown field (allowed: {', '.join(sorted(allowed))})", f"{where}{key}")


def _vector(value, dim: int, name: str, finite: bool = True) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool) and dim == 1:
        value = [value]
    if not isinstance(value, list) or len(value) != dim:
        raise ScenarioError(f"expected a list of {dim} number(s)", name)
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(f"expected numbers, got {v!r}", name)
        if math.isnan(v) or (finite and math.isinf(v)):
            raise ScenarioError(f"non-finite value {v!r}", name)
        out.append(float(v))
    return tuple(out)


def _map_def(name: str, value, dim: int) -> MapDef:
    where = f"maps.{name}"
    if isinstance(value, str):
        if value.strip() == IDENTITY:
            return Identity()
        try:
            return Expr(parse_map(value, dim), value)
        except ParseError as exc:
            raise ScenarioError(str(exc), where) from None
    if isinstance(value, dict) and len(value) == 1:
        (kind, arg), = value.items()
        if kind == "compose":
            if not (isinstance(arg, list) and len(arg) == 2 and all(isinstance(a, str) for a in arg)):
                raise ScenarioError("compose expects [outer, inner]", where)
            return Compose(arg[0], arg[1])
        if kind == "iterate":
            if not isinstance(arg, dict) or set(arg) != {"of", "n"}:
                raise ScenarioError("iterate expects { of = <name>, n = <count> }", where)
            n = arg["n"]
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ScenarioError("iterate count must be an integer >= 1", where)
            return Iterate(str(arg["of"]), n)
    raise ScenarioError("expected an expression string, \"identity\", {compose=...} or {iterate=...}", where)


def _problem(table: dict, maps: MapTable) -> Problem:
    kind = _require(table, "type", "problem.")
    if kind not in _PROBLEM_KEYS:
        raise ScenarioError(f"unknown problem type {kind!r}", "problem.type")
    _check_keys(table, _PROBLEM_KEYS[kind], "problem.")
    if kind == "pair":
        k_declared = table.get("k_declared")
        if k_declared is not None and not (isinstance(k_declared, (int, float)) and 0 < k_declared < 1):
            raise ScenarioError("must lie in (0, 1)", "problem.k_declared")
        problem: Problem = PairProblem(
            str(_require(table, "contractor", "problem.")),
            str(_require(table, "dominator", "problem.")),
            None if k_declared is None else float(k_declared),
        )
        names = {"contractor": problem.contractor, "dominator": problem.dominator}
    elif kind == "chain":
        problem = ChainProblem(*(str(_require(table, k, "problem.")) for k in ("f", "g", "h")))
        names = {"f": problem.f, "g": problem.g, "h": problem.h}
    else:
        n = table.get("n", 1)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ScenarioError("must be an integer >= 1", "problem.n")
        problem = ExpansiveProblem(str(_require(table, "map", "problem.")), n)
        names = {"map": problem.map}
    for key, ref in names.items():
        if ref not in maps:
            raise ScenarioError(f"refers to undefined map `{ref}`", f"problem.{key}")
    return problem


def _numerics(table: dict) -> Numerics:
    values = {}
    for key, value in table.items():
        if key not in _NUMERIC_FIELDS:
            raise ScenarioError("unknown numeric setting", f"numerics.{key}")
        if key == "bound_mode":
            if not isinstance(value, str):
                raise ScenarioError("expected a string", "numerics.bound_mode")
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError("expected an integer", f"numerics.{key}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError("expected a number", f"numerics.{key}")
        else:
            value = float(value)
        values[key] = value
    numerics = Numerics(**values)
    numerics.validate()
    return numerics


def build_scenario(doc: dict) -> ScenarioSpec:
    """Validate a parsed scenario document and build the immutable spec."""
    _check_keys(doc, _TOP_KEYS, "")
    name = str(doc.get("name", "unnamed"))
    dim = _require(doc, "dimension", "")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ScenarioError("must be an integer >= 1", "dimension")
    try:
        metric = Metric.parse(doc.get("metric", "euclidean"))
    except InputError as exc:
        raise ScenarioError(str(exc), "metric") from None

    dom_t = _require(doc, "domain", "")
    _check_keys(dom_t, _DOMAIN_KEYS, "domain.")
    lower = _vector(_require(dom_t, "lower", "domain."), dim, "domain.lower")
    upper = _vector(_require(dom_t, "upper", "domain."), dim, "domain.upper")
    try:
        domain = BoxDomain(lower, upper)
        space = BoxDomain(
            _vector(dom_t.get("space_lower", list(lower)), dim, "domain.space_lower", finite=False),
            _vector(dom_t.get("space_upper", list(upper)), dim, "domain.space_upper", finite=False),
        )
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError(str(exc), "domain") from None
    if not (space.contains(domain.lower) and space.contains(domain.upper)):
        raise ScenarioError("the sampling box must lie inside the space", "domain")

    maps_t = _require(doc, "maps", "")
    if not isinstance(maps_t, dict):
        raise ScenarioError("expected a table", "maps")
    defs = {str(k): _map_def(str(k), v, dim) for k, v in maps_t.items()}
    try:
        table = MapTable(defs, dim)
    except InputError as exc:
        raise ScenarioError(str(exc), "maps") from None

    prob_t = _require(doc, "problem", "")
    problem = _problem(prob_t, table)
    x0 = _vector(_require(prob_t, "x0", "problem."), dim, "problem.x0")
    if not domain.contains(x0):
        raise ScenarioError(f"x0 = {list(x0)} lies outside the domain", "problem.x0")

    numerics = _numerics(doc.get("numerics", {}))
    return ScenarioSpec(
        name=name,
        dim=dim,
        metric=metric,
        domain=domain,
        space=space,
        maps=table,
        map_sources=dict(maps_t),
        problem=problem,
        x0=x0,
        numerics=numerics,
    )


def _decode_line(exc: Exception) -> int | None:
    line = getattr(exc, "lineno", None)
    if line is None:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else None
    return line


def loads_scenario(text: str) -> ScenarioSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML parse error: {exc}", line=_decode_line(exc)) from None
    return build_scenario(doc)


def shipped_scenarios() -> list[str]:
    root = resources.files("comfix") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_path(path: "str | Path") -> Path:
    """Return ``path``, or the shipped scenario of that name if no such file exists."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".toml") else p.name
    if p.parent == Path(".") and name in shipped_scenarios():
        return Path(str(resources.files("comfix") / "scenarios" / f"{name}.toml"))
    return p


def load_scenario(path: "str | Path") -> ScenarioSpec:
    p = resolve_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror or exc}") from None
    return loads_scenario(text)
