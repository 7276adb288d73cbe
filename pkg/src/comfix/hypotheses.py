"""Numerical checks for the hypotheses of the common fixed point theorem.

The contraction constant, commutativity, self-mapping and the expansive
constant are all estimated from a deterministic sample: the box's sample
points, every unordered pair among them, and short "diagonal" probes
around each point. The probes matter because the supremum of a pair ratio
for a smooth map is usually attained in the limit ``x -> y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError
from .metric import BoxDomain, Metric, Point, contains, dist, dist_rows, sample

MapFn = Callable[[Point], Point]

PROBE_SCALES = (1e-2, 1e-4, 1e-6)
MAX_LISTED_VIOLATIONS = 16


# -- sampling ------------------------------------------------------------------


@dataclass(frozen=True)
class PairSample:
    points: list[Point]
    first: np.ndarray  # indices into points
    second: np.ndarray


def _probe_steps(dom: BoxDomain) -> list[np.ndarray]:
    width = np.asarray(dom.upper) - np.asarray(dom.lower)
    dirs = []
    for i in range(dom.dim):
        if width[i] > 0:
            e = np.zeros(dom.dim)
            e[i] = width[i]
            dirs.append(e)
    if dom.dim > 1 and np.count_nonzero(width) > 1:
        dirs.append(width.copy())
    return [s * d for d in dirs for s in PROBE_SCALES]


def sample_pairs(dom: BoxDomain, n: int, seed: int) -> PairSample:
    """All pairs among ``sample(dom, n, seed)`` plus diagonal probes.

    Pair sets are nested in ``n``: every pair drawn for ``n`` is also drawn
    for any larger ``n`` with the same seed.
    """
    base = sample(dom, n, seed)
    points = list(base)
    first, second = [], []
    for j in range(len(base)):
        for i in range(j):
            first.append(i)
            second.append(j)
    steps = _probe_steps(dom)
    for i, x in enumerate(base):
        xa = np.asarray(x)
        for step in steps:
            y = xa + step
            if not contains(dom, y):
                y = xa - step
            points.append(tuple(float(v) for v in y))
            first.append(i)
            second.append(len(points) - 1)
    return PairSample(points, np.asarray(first, dtype=int), np.asarray(second, dtype=int))


def _images(fn: MapFn, points: Sequence[Point]) -> np.ndarray:
    return np.asarray([fn(p) for p in points], dtype=float)


# -- contraction constant ------------------------------------------------------


@dataclass
class ContractionEstimate:
    contractor: str
    dominator: str
    k_hat: float | None
    witness: tuple[Point, Point] | None
    n_pairs: int
    n_degenerate: int
    violations: list[tuple[Point, Point]] = field(default_factory=list)
    n_violations: int = 0
    error: str | None = None
    error_point: Point | None = None

    @property
    def inconclusive(self) -> bool:
        return self.error is None and self.k_hat is None and self.n_violations == 0

    def verified(self, k_margin: float, k_declared: float | None = None) -> bool:
        if self.error is not None or self.k_hat is None or self.n_violations:
            return False
        if not self.k_hat < 1.0 - k_margin:
            return False
        return k_declared is None or self.k_hat <= k_declared


def estimate_k(
    contractor: MapFn,
    dominator: MapFn,
    dom: BoxDomain,
    metric: Metric,
    n_samples: int,
    seed: int,
    *,
    ratio_floor: float | None = None,
    tol_zero: float = 1e-9,
    names: tuple[str, str] = ("g", "f"),
) -> ContractionEstimate:
    """Sampled supremum of d(g(x), g(y)) / d(f(x), f(y)), g the contractor."""
    if ratio_floor is None:
        ratio_floor = 1e-12 * dom.diameter(metric)
    pairs = sample_pairs(dom, n_samples, seed)
    g_img = _images(contractor, pairs.points)
    f_img = _images(dominator, pairs.points)
    pts = np.asarray(pairs.points)
    d_x = dist_rows(metric, pts[pairs.first], pts[pairs.second])
    d_g = dist_rows(metric, g_img[pairs.first], g_img[pairs.second])
    d_f = dist_rows(metric, f_img[pairs.first], f_img[pairs.second])

    distinct = d_x > 0
    usable = distinct & (d_f > ratio_floor)
    bad = distinct & ~usable & (d_g > tol_zero)
    bad_idx = np.flatnonzero(bad)
    violations = [
        (pairs.points[pairs.first[i]], pairs.points[pairs.second[i]])
        for i in bad_idx[:MAX_LISTED_VIOLATIONS]
    ]
    est = ContractionEstimate(
        contractor=names[0],
        dominator=names[1],
        k_hat=None,
        witness=None,
        n_pairs=int(np.count_nonzero(distinct)),
        n_degenerate=int(np.count_nonzero(distinct & ~usable)),
        violations=violations,
        n_violations=int(bad_idx.size),
    )
    if np.any(usable):
        ratios = np.full(d_g.shape, -np.inf)
        ratios[usable] = d_g[usable] / d_f[usable]
        best = int(np.argmax(ratios))
        est.k_hat = float(ratios[best])
        est.witness = (pairs.points[pairs.first[best]], pairs.points[pairs.second[best]])
    return est


def pair_ratio(contractor: MapFn, dominator: MapFn, metric: Metric, x: Point, y: Point) -> float:
    return dist(metric, contractor(x), contractor(y)) / dist(metric, dominator(x), dominator(y))


@dataclass
class ContractionPair:
    """Ordered pair (contractor g, dominator f) with its estimated constant."""

    contractor: str
    dominator: str
    k_hat: float | None = None
    k_declared: float | None = None

    def verified(self, k_margin: float) -> bool:
        if self.k_hat is None or not self.k_hat < 1.0 - k_margin:
            return False
        return self.k_declared is None or self.k_hat <= self.k_declared

    def k_used(self, k_margin: float) -> float:
        """Constant used for error bounds: the estimate inflated by the margin."""
        if self.k_hat is None:
            raise ValueError("contraction constant not estimated")
        k = min(self.k_hat / (1.0 - k_margin), 0.999)
        if self.k_declared is not None:
            k = max(k, self.k_declared)
        return k


# -- commutativity -------------------------------------------------------------


@dataclass
class CommutativityResult:
    first: str
    second: str
    defect: float
    witness: Point | None
    tolerance: float
    rtol: float
    commuting: bool
    worst_excess: Point | None = None
    error: str | None = None
    error_point: Point | None = None


def commutativity_defect(
    f: MapFn,
    g: MapFn,
    dom: BoxDomain,
    metric: Metric,
    n_samples: int,
    seed: int,
    *,
    tol_commute: float | None = None,
    rtol_commute: float = 1e-12,
    names: tuple[str, str] = ("f", "g"),
) -> CommutativityResult:
    """Largest sampled d(f(g(x)), g(f(x))).

    A sample point passes when its defect is at most
    ``tol_commute + rtol_commute * max(|f(g(x))|, |g(f(x))|)``; the relative
    term absorbs rounding in compositions whose values are large.
    """
    if tol_commute is None:
        tol_commute = 1e-9 * (1.0 + dom.diameter(metric))
    worst, witness = -1.0, None
    commuting, worst_excess, excess_max = True, None, -math.inf
    for x in sample(dom, n_samples, seed):
        fg, gf = f(g(x)), g(f(x))
        d = dist(metric, fg, gf)
        if d > worst:
            worst, witness = d, x
        scale = max(max(abs(v) for v in fg), max(abs(v) for v in gf))
        excess = d - (tol_commute + rtol_commute * scale)
        if excess > excess_max:
            excess_max, worst_excess = excess, x
        if excess > 0:
            commuting = False
    return CommutativityResult(
        first=names[0],
        second=names[1],
        defect=max(worst, 0.0),
        witness=witness,
        tolerance=tol_commute,
        rtol=rtol_commute,
        commuting=commuting,
        worst_excess=None if commuting else worst_excess,
    )


# -- self-mapping --------------------------------------------------------------


@dataclass
class SelfMapResult:
    map: str
    ok: bool
    escaping_point: Point | None = None
    image: Point | None = None
    error: str | None = None


def self_map_check(
    m: MapFn,
    dom: BoxDomain,
    n_samples: int,
    seed: int,
    slack: float,
    *,
    space: BoxDomain | None = None,
    name: str = "m",
) -> SelfMapResult:
    """Check ``m(x)`` lies in ``space`` (default ``dom``) for sampled ``x`` in ``dom``."""
    target = dom if space is None else space
    for x in sample(dom, n_samples, seed):
        try:
            y = m(x)
        except EvaluationError as exc:
            return SelfMapResult(name, False, escaping_point=x, error=str(exc))
        if not contains(target, y, slack):
            return SelfMapResult(name, False, escaping_point=x, image=y)
    return SelfMapResult(name, True)


# -- orbit boundedness ---------------------------------------------------------

BOUNDED, UNBOUNDED, UNKNOWN = "bounded", "unbounded", "unknown"

# number of consecutive dyadic windows whose radius must grow by GROWTH_FACTOR
# before an orbit is declared unbounded without reaching radius_cap
GROWTH_WINDOWS = 4
GROWTH_FACTOR = 1.5
GROWTH_MIN_STEPS = 16


@dataclass
class OrbitResult:
    verdict: str
    radius: float
    steps: int
    reason: str
    last: Point | None = None

    @property
    def bounded(self) -> bool:
        return self.verdict == BOUNDED


def orbit_bounded(
    m: MapFn,
    x0: Point,
    metric: Metric,
    max_steps: int = 10_000,
    radius_cap: float = 1e6,
    *,
    tol_step: float = 0.0,
    growth_floor: float = 0.0,
) -> OrbitResult:
    """Three-valued boundedness verdict for the orbit x0, m(x0), m(m(x0)), ...

    Unbounded: the orbit leaves the ball of radius ``radius_cap``, overflows,
    or its running radius grows by ``GROWTH_FACTOR`` across
    ``GROWTH_WINDOWS`` consecutive dyadic windows while exceeding
    ``growth_floor``. Bounded: a step shorter than ``tol_step`` (numerically
    stationary) or no new radius record in the second half of the run.
    """
    x = tuple(x0)
    radius = 0.0
    radius_half = 0.0
    window_radii: list[float] = []
    next_window = GROWTH_MIN_STEPS
    for step in range(1, max_steps + 1):
        try:
            y = m(x)
        except EvaluationError as exc:
            if exc.kind == "overflow":
                return OrbitResult(UNBOUNDED, math.inf, step, "evaluation overflowed", x)
            return OrbitResult(UNKNOWN, radius, step, f"evaluation failed: {exc}", x)
        r = dist(metric, y, x0)
        if not math.isfinite(r) or r > radius_cap:
            return OrbitResult(UNBOUNDED, r, step, f"left the ball of radius {radius_cap:g}", y)
        radius = max(radius, r)
        if dist(metric, y, x) <= tol_step:
            return OrbitResult(BOUNDED, radius, step, "orbit is numerically stationary", y)
        if step == next_window:
            window_radii.append(radius)
            next_window *= 2
            recent = window_radii[-(GROWTH_WINDOWS + 1):]
            if (
                len(recent) == GROWTH_WINDOWS + 1
                and radius > growth_floor
                and all(b >= GROWTH_FACTOR * a > 0 for a, b in zip(recent, recent[1:]))
            ):
                return OrbitResult(UNBOUNDED, radius, step, "radius keeps doubling", y)
        if step == max_steps // 2:
            radius_half = radius
        x = y
    if max_steps >= 2 and radius <= radius_half:
        return OrbitResult(BOUNDED, radius, max_steps, "orbit stayed inside its early radius", x)
    return OrbitResult(UNKNOWN, radius, max_steps, "radius still growing at max_steps", x)


# -- expansive condition ---------------------------------------------------------


@dataclass
class ExpansiveResult:
    map: str
    n: int
    k_low: float | None
    witness: tuple[Point, Point] | None
    holds: bool
    error: str | None = None


def expansive_check(
    f: MapFn,
    n: int,
    dom: BoxDomain,
    metric: Metric,
    n_samples: int,
    seed: int,
    *,
    k_margin: float = 0.02,
    name: str = "f",
) -> ExpansiveResult:
    """Sampled infimum of d(f^n(x), f^n(y)) / d(x, y)."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def fn(x):
        for _ in range(n):
            x = f(x)
        return x

    pairs = sample_pairs(dom, n_samples, seed)
    img = _images(fn, pairs.points)
    pts = np.asarray(pairs.points)
    d_x = dist_rows(metric, pts[pairs.first], pts[pairs.second])
    d_f = dist_rows(metric, img[pairs.first], img[pairs.second])
    ok = d_x > 0
    if not np.any(ok):
        return ExpansiveResult(name, n, None, None, False)
    ratios = np.full(d_x.shape, np.inf)
    ratios[ok] = d_f[ok] / d_x[ok]
    best = int(np.argmin(ratios))
    k_low = float(ratios[best])
    witness = (pairs.points[pairs.first[best]], pairs.points[pairs.second[best]])
    return ExpansiveResult(name, n, k_low, witness, k_low > 1.0 + k_margin)


# -- power envelope ------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopeViolation:
    x: Point
    y: Point
    n: int
    lhs: float
    rhs: float


def power_envelope(
    contractor: MapFn,
    dominator: MapFn,
    pairs: Sequence[tuple[Point, Point]],
    k: float,
    metric: Metric,
    n_max: int = 8,
    atol: float = 1e-9,
) -> list[EnvelopeViolation]:
    """Pairs and powers where d(g^n x, g^n y) > k^n d(f^n x, f^n y) + atol (1 + d(f^n x, f^n y)).

    Holds for commuting pairs satisfying the contraction condition with ``k``.
    """
    out = []
    for x, y in pairs:
        gx, gy, fx, fy = x, y, x, y
        for n in range(1, n_max + 1):
            gx, gy = contractor(gx), contractor(gy)
            fx, fy = dominator(fx), dominator(fy)
            d_g = dist(metric, gx, gy)
            d_f = dist(metric, fx, fy)
            rhs = k**n * d_f + atol * (1.0 + d_f)
            if d_g > rhs:
                out.append(EnvelopeViolation(x, y, n, d_g, rhs))
    return out


# -- scenario-level aggregation --------------------------------------------------


@dataclass
class HypothesisReport:
    contraction: list[ContractionEstimate] = field(default_factory=list)
    commutativity: list[CommutativityResult] = field(default_factory=list)
    self_mapping: list[SelfMapResult] = field(default_factory=list)
    orbit: OrbitResult | None = None
    orbit_map: str | None = None
    expansive: ExpansiveResult | None = None
    k_margin: float = 0.02
    k_declared: float | None = None
    failures: list[str] = field(default_factory=list)
    unknowns: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.unknowns

    def contraction_for(self, contractor: str, dominator: str) -> ContractionEstimate | None:
        for est in self.contraction:
            if (est.contractor, est.dominator) == (contractor, dominator):
                return est
        return None


def _check_contraction(sc, report: HypothesisReport, contractor: str, dominator: str, k_declared=None):
    cfg = sc.settings()
    label = f"contraction({contractor},{dominator})"
    try:
        est = estimate_k(
            sc.maps.fn(contractor),
            sc.maps.fn(dominator),
            sc.domain,
            sc.metric,
            cfg.n_samples,
            cfg.seed,
            ratio_floor=cfg.ratio_floor,
            tol_zero=cfg.tol_zero,
            names=(contractor, dominator),
        )
    except EvaluationError as exc:
        est = ContractionEstimate(contractor, dominator, None, None, 0, 0, error=str(exc), error_point=exc.point)
    report.contraction.append(est)
    if est.inconclusive:
        report.unknowns.append(label)
    elif not est.verified(cfg.k_margin, k_declared):
        report.failures.append(label)


def _check_commuting(sc, report: HypothesisReport, a: str, b: str):
    cfg = sc.settings()
    try:
        res = commutativity_defect(
            sc.maps.fn(a),
            sc.maps.fn(b),
            sc.domain,
            sc.metric,
            cfg.n_samples,
            cfg.seed,
            tol_commute=cfg.tol_commute,
            rtol_commute=cfg.rtol_commute,
            names=(a, b),
        )
    except EvaluationError as exc:
        res = CommutativityResult(a, b, math.inf, None, cfg.tol_commute, cfg.rtol_commute, False,
                                  error=str(exc), error_point=exc.point)
    report.commutativity.append(res)
    if not res.commuting:
        report.failures.append(f"commutativity({a},{b})")


def _check_self_maps(sc, report: HypothesisReport, names):
    cfg = sc.settings()
    for name in dict.fromkeys(names):
        res = self_map_check(sc.maps.fn(name), sc.domain, cfg.n_samples, cfg.seed, cfg.slack,
                             space=sc.space, name=name)
        report.self_mapping.append(res)
        if not res.ok:
            report.failures.append(f"self_mapping({name})")


def check_orbit(sc, name: str, x0: Point) -> OrbitResult:
    cfg = sc.settings()
    return orbit_bounded(
        sc.maps.fn(name),
        x0,
        sc.metric,
        cfg.max_steps,
        cfg.radius_cap,
        tol_step=cfg.tol_step,
        growth_floor=sc.diameter,
    )


def _check_orbit(sc, report: HypothesisReport, name: str):
    report.orbit = check_orbit(sc, name, sc.x0)
    report.orbit_map = name
    if report.orbit.verdict == UNBOUNDED:
        report.failures.append(f"orbit({name})")
    elif report.orbit.verdict == UNKNOWN:
        report.unknowns.append(f"orbit({name})")


def check_expansive(sc, report: HypothesisReport):
    cfg = sc.settings()
    prob = sc.problem
    try:
        res = expansive_check(sc.maps.fn(prob.map), prob.n, sc.domain, sc.metric, cfg.n_samples,
                              cfg.seed, k_margin=cfg.k_margin, name=prob.map)
    except EvaluationError as exc:
        res = ExpansiveResult(prob.map, prob.n, None, None, False, error=str(exc))
    report.expansive = res
    if not res.holds:
        report.failures.append(f"expansive({prob.map})")


def check_scenario(sc) -> HypothesisReport:
    """Run every hypothesis check that applies to the scenario's problem."""
    cfg = sc.settings()
    prob = sc.problem
    report = HypothesisReport(k_margin=cfg.k_margin)
    if prob.kind == "pair":
        report.k_declared = prob.k_declared
        _check_contraction(sc, report, prob.contractor, prob.dominator, prob.k_declared)
        _check_commuting(sc, report, prob.dominator, prob.contractor)
        _check_self_maps(sc, report, prob.map_names)
        _check_orbit(sc, report, prob.dominator)
    elif prob.kind == "chain":
        _check_contraction(sc, report, prob.h, prob.g)
        _check_contraction(sc, report, prob.g, prob.f)
        _check_commuting(sc, report, prob.f, prob.g)
        _check_commuting(sc, report, prob.g, prob.h)
        _check_commuting(sc, report, prob.f, prob.h)
        _check_self_maps(sc, report, prob.map_names)
        _check_orbit(sc, report, prob.f)
    else:
        check_expansive(sc, report)
        _check_self_maps(sc, report, prob.map_names)
        _check_orbit(sc, report, prob.map)
    return report
