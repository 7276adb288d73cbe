"""Constructive two-stage iteration for the common fixed point of a commuting pair.

Stage A iterates the composition ``f o g`` from ``x0`` to a limit ``l``;
stage B iterates the contractor ``g`` from ``l`` to ``l1``, which is then
certified as a fixed point of ``f``, ``g`` and ``f o g``. Here ``g`` is the
contractor and ``f`` the dominator, ``d(g x, g y) <= k d(f x, f y)``.

Stage A's geometric envelope is ``d(u_n, u_{n+1}) <= s k^n``; stage B's is
``d(v_n, v_{n-1}) <= c k^((n-1)/2)`` with
``c = max(d(g l, l), sqrt(k) d(f l, l))``. Both give a-priori and a-posteriori
distance-to-limit bounds; one of them is chosen as the stopping rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    CertificationFailed,
    ComfixError,
    EvaluationError,
    HypothesisFailed,
    Inconclusive,
    InputError,
    NonConvergence,
    SelfMappingViolation,
)
from .hypotheses import (
    BOUNDED,
    ContractionPair,
    HypothesisReport,
    check_orbit,
    check_scenario,
)
from .maps import compose
from .metric import BoxDomain, Metric, Point, contains, dist

MapFn = Callable[[Point], Point]

APRIORI, APOSTERIORI = "apriori", "aposteriori"
ENVELOPE_RTOL = 1e-9
# bounds degenerate at k == 0; a constant contractor is handled as k = K_FLOOR
K_FLOOR = 1e-12


@dataclass(frozen=True)
class SolveConfig:
    x0: Point
    tol: float = 1e-10
    max_iter: int = 100_000
    tol_cert: float = 1e-8
    bound_mode: str = APOSTERIORI
    space: BoxDomain | None = None
    slack: float = 0.0

    def __post_init__(self):
        if not self.tol < self.tol_cert:
            raise InputError("tol must be smaller than tol_cert")
        if self.bound_mode not in (APRIORI, APOSTERIORI):
            raise InputError(f"unknown bound mode {self.bound_mode!r}")


@dataclass
class StageResult:
    limit: Point
    iters: int
    constant: float
    bound: float
    apriori: float
    aposteriori: float
    envelope_violations: int = 0
    trace: list[float] = field(default_factory=list, repr=False, metadata={"report": False})


def _log(v: float) -> float:
    return math.log(v) if v > 0 else -math.inf


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _step(fn: MapFn, x: Point, stage: str, n: int, cfg: SolveConfig) -> Point:
    y = fn(x)
    if cfg.space is not None and not contains(cfg.space, y, cfg.slack):
        raise SelfMappingViolation(stage, n, y)
    return y


def stage_a(f: MapFn, g: MapFn, cfg: SolveConfig, metric: Metric, k: float) -> StageResult:
    """Iterate u_{n+1} = f(g(u_n)) from x0 until the selected bound is <= tol.

    ``constant`` is the running estimate of s, the largest
    ``d(u_n, u_{n+1}) / k^n`` observed. A-priori bound for u_n:
    ``s k^n / (1 - k)``; a-posteriori: ``d(u_{n-1}, u_n) k / (1 - k)``.
    """
    k = max(k, K_FLOOR)
    log_k = math.log(k)
    fg = compose(f, g)
    u = tuple(cfg.x0)
    log_s = -math.inf
    trace: list[float] = []
    bound = apriori = aposteriori = math.inf
    for n in range(1, cfg.max_iter + 1):
        nxt = _step(fg, u, "A", n, cfg)
        r = dist(metric, u, nxt)
        trace.append(r)
        log_s = max(log_s, _log(r) - (n - 1) * log_k)
        apriori = _exp(log_s + n * log_k) / (1.0 - k)
        aposteriori = r * k / (1.0 - k)
        bound = apriori if cfg.bound_mode == APRIORI else aposteriori
        u = nxt
        if bound <= cfg.tol:
            break
    else:
        raise NonConvergence("A", cfg.max_iter, bound)
    s_hat = _exp(log_s)
    violations = sum(
        1 for j, r in enumerate(trace) if r > _exp(log_s + j * log_k) * (1 + ENVELOPE_RTOL)
    )
    return StageResult(u, len(trace), s_hat, bound, apriori, aposteriori, violations, trace)


def stage_b(f: MapFn, g: MapFn, l: Point, cfg: SolveConfig, metric: Metric, k: float) -> StageResult:
    """Iterate v_{n+1} = g(v_n) from l until the selected bound is <= tol.

    A-priori bound for v_n: ``c k^(n/2) / (1 - sqrt k)``; a-posteriori:
    ``d(v_{n-1}, v_n) sqrt(k) / (1 - sqrt k)``. Steps exceeding the envelope
    ``c k^((n-1)/2)`` are counted in ``envelope_violations``.
    """
    k = max(k, K_FLOOR)
    q = math.sqrt(k)
    log_q = math.log(q)
    l = tuple(l)
    g_l = g(l)
    c_hat = max(dist(metric, g_l, l), q * dist(metric, f(l), l))
    if c_hat == 0.0:
        return StageResult(l, 0, 0.0, 0.0, 0.0, 0.0)
    log_c = math.log(c_hat)
    v = l
    trace: list[float] = []
    violations = 0
    bound = apriori = aposteriori = math.inf
    for n in range(1, cfg.max_iter + 1):
        nxt = _step(g, v, "B", n, cfg)
        r = dist(metric, v, nxt)
        trace.append(r)
        if r > _exp(log_c + (n - 1) * log_q) * (1 + ENVELOPE_RTOL):
            violations += 1
        apriori = _exp(log_c + n * log_q) / (1.0 - q)
        aposteriori = r * q / (1.0 - q)
        bound = apriori if cfg.bound_mode == APRIORI else aposteriori
        v = nxt
        if bound <= cfg.tol:
            break
    else:
        raise NonConvergence("B", cfg.max_iter, bound)
    return StageResult(v, len(trace), c_hat, bound, apriori, aposteriori, violations, trace)


# -- reports -------------------------------------------------------------------


@dataclass
class ProbeResult:
    second_start: Point | None
    answer: Point | None
    distance: float | None
    verdict: str  # agree | disagree | inconclusive
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict != "disagree"


@dataclass
class SolveReport:
    l: Point
    l1: Point
    iters_a: int
    iters_b: int
    s_hat: float
    c_hat: float
    k_hat: float | None
    k_used: float
    residual_f: float
    residual_g: float
    residual_fg: float
    residuals: dict[str, float]
    bound_a: float
    bound_b: float
    apriori_a: float
    aposteriori_a: float
    apriori_b: float
    aposteriori_b: float
    envelope_violations_a: int
    envelope_violations_b: int
    bound_mode: str
    contractor: str
    dominator: str
    tol_cert: float
    certified: bool = False
    unique_probe: ProbeResult | None = None
    pair_constants: dict[str, float] | None = None
    base_certifications: dict[str, dict] | None = None
    trace_a: list[float] = field(default_factory=list, repr=False, metadata={"report": False})
    trace_b: list[float] = field(default_factory=list, repr=False, metadata={"report": False})


def _config(sc, x0: Point | None = None) -> SolveConfig:
    cfg = sc.settings()
    return SolveConfig(
        x0=tuple(sc.x0 if x0 is None else x0),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        tol_cert=cfg.tol_cert,
        bound_mode=cfg.bound_mode,
        space=sc.space,
        slack=cfg.slack,
    )


def _residual(metric: Metric, fn: MapFn, p: Point) -> float:
    try:
        return dist(metric, fn(p), p)
    except EvaluationError:
        return math.inf


def _run_pair(sc, contractor: str, dominator: str, k_hat, k_used: float, cfg: SolveConfig) -> SolveReport:
    f, g = sc.maps.fn(dominator), sc.maps.fn(contractor)
    a = stage_a(f, g, cfg, sc.metric, k_used)
    b = stage_b(f, g, a.limit, cfg, sc.metric, k_used)
    l1 = b.limit
    res_f = _residual(sc.metric, f, l1)
    res_g = _residual(sc.metric, g, l1)
    res_fg = _residual(sc.metric, compose(f, g), l1)
    return SolveReport(
        l=a.limit,
        l1=l1,
        iters_a=a.iters,
        iters_b=b.iters,
        s_hat=a.constant,
        c_hat=b.constant,
        k_hat=k_hat,
        k_used=k_used,
        residual_f=res_f,
        residual_g=res_g,
        residual_fg=res_fg,
        residuals={dominator: res_f, contractor: res_g},
        bound_a=a.bound,
        bound_b=b.bound,
        apriori_a=a.apriori,
        aposteriori_a=a.aposteriori,
        apriori_b=b.apriori,
        aposteriori_b=b.aposteriori,
        envelope_violations_a=a.envelope_violations,
        envelope_violations_b=b.envelope_violations,
        bound_mode=cfg.bound_mode,
        contractor=contractor,
        dominator=dominator,
        tol_cert=cfg.tol_cert,
        trace_a=a.trace,
        trace_b=b.trace,
    )


def _certify(report: SolveReport, extra: dict[str, float] | None = None) -> None:
    checks = {
        f"residual_f({report.dominator})": report.residual_f,
        f"residual_g({report.contractor})": report.residual_g,
        "residual_fg": report.residual_fg,
    }
    checks.update(extra or {})
    failing = {k: v for k, v in checks.items() if not v <= report.tol_cert}
    report.certified = not failing
    if failing:
        exc = CertificationFailed(failing, report.tol_cert)
        exc.report = report
        raise exc


def _gate(hyp: HypothesisReport, force: bool) -> None:
    if force:
        return
    if hyp.failures:
        raise HypothesisFailed(hyp.failures, hyp)
    if hyp.unknowns:
        raise Inconclusive(hyp.unknowns, hyp)


def farthest_corner(dom: BoxDomain, x0: Point, metric: Metric) -> Point:
    corners = dom.corners()
    return max(corners, key=lambda c: dist(metric, c, x0))


def uniqueness_probe(
    sc,
    answer: Point,
    *,
    contractor: str | None = None,
    dominator: str | None = None,
    k_used: float | None = None,
) -> ProbeResult:
    """Solve again from the box corner farthest from x0 and compare answers.

    A second start whose dominator orbit is not bounded, or whose solve
    fails, makes the probe inconclusive rather than failed: boundedness
    is a property of the starting point.
    """
    prob = sc.problem
    contractor = contractor or prob.contractor
    dominator = dominator or prob.dominator
    start = farthest_corner(sc.domain, sc.x0, sc.metric)
    if start == tuple(sc.x0):
        return ProbeResult(None, None, None, "inconclusive", "domain has no second corner")
    orbit = check_orbit(sc, dominator, start)
    if orbit.verdict != BOUNDED:
        return ProbeResult(start, None, None, "inconclusive",
                           f"dominator orbit from second start is {orbit.verdict}: {orbit.reason}")
    if k_used is None:
        hyp = check_scenario(sc)
        est = hyp.contraction_for(contractor, dominator)
        k_hat = est.k_hat if est is not None else None
        k_used = 0.999 if k_hat is None else ContractionPair(contractor, dominator, k_hat).k_used(sc.settings().k_margin)
    cfg = _config(sc, start)
    try:
        second = _run_pair(sc, contractor, dominator, None, k_used, cfg)
    except ComfixError as exc:
        return ProbeResult(start, None, None, "inconclusive", f"second solve failed: {exc}")
    if max(second.residual_f, second.residual_g) > cfg.tol_cert:
        return ProbeResult(start, second.l1, None, "inconclusive", "second answer not certified")
    d = dist(sc.metric, answer, second.l1)
    verdict = "agree" if d <= 2 * cfg.tol_cert else "disagree"
    return ProbeResult(start, second.l1, d, verdict)


def _finish(sc, report: SolveReport, probe: bool) -> SolveReport:
    if probe:
        report.unique_probe = uniqueness_probe(
            sc, report.l1, contractor=report.contractor, dominator=report.dominator, k_used=report.k_used
        )
        if not report.unique_probe.passed:
            exc = CertificationFailed({"unique_probe.distance": report.unique_probe.distance},
                                      2 * report.tol_cert)
            exc.report = report
            raise exc
    return report


def _base_certifications(sc, report: SolveReport) -> dict[str, dict] | None:
    names = []
    for name in (report.contractor, report.dominator):
        for leaf in sc.maps.leaves(name):
            if leaf not in names:
                names.append(leaf)
    if not names:
        return None
    tol = report.tol_cert
    out = {}
    for name in names:
        r = _residual(sc.metric, sc.maps.fn(name), report.l1)
        out[name] = {"residual": r, "certified": r <= tol}
    return out


def solve_common_fixed_point(sc, hypotheses: HypothesisReport | None = None, *,
                             force: bool = False, probe: bool = True) -> SolveReport:
    """Find and certify the common fixed point of the scenario's pair.

    Raises HypothesisFailed/Inconclusive when the checks do not pass (unless
    ``force``), NonConvergence, SelfMappingViolation or CertificationFailed.
    Pairs built with compose/iterate also get their base maps certified.
    """
    prob = sc.problem
    if prob.kind == "chain":
        return solve_chain(sc, hypotheses, force=force, probe=probe)
    if prob.kind != "pair":
        raise InputError(f"cannot solve a {prob.kind} problem; use scan")
    hyp = hypotheses if hypotheses is not None else check_scenario(sc)
    _gate(hyp, force)
    cfg = sc.settings()
    est = hyp.contraction_for(prob.contractor, prob.dominator)
    k_hat = est.k_hat if est is not None else None
    if k_hat is None:
        k_used = prob.k_declared if prob.k_declared is not None else 0.999
    else:
        k_used = ContractionPair(prob.contractor, prob.dominator, k_hat, prob.k_declared).k_used(cfg.k_margin)
    report = _run_pair(sc, prob.contractor, prob.dominator, k_hat, k_used, _config(sc))
    report.base_certifications = _base_certifications(sc, report)
    _certify(report)
    return _finish(sc, report, probe)


def solve_reduction(sc, hypotheses: HypothesisReport | None = None, *,
                    force: bool = False, probe: bool = True) -> SolveReport:
    """Solve a pair built from compose/iterate combinators.

    The combinator pair is certified as usual; every base map it references
    is reported in ``base_certifications`` with its own residual.
    """
    report = solve_common_fixed_point(sc, hypotheses, force=force, probe=probe)
    if report.base_certifications is None:
        report.base_certifications = {}
    return report


def solve_chain(sc, hypotheses: HypothesisReport | None = None, *,
                force: bool = False, probe: bool = True) -> SolveReport:
    """Three commuting maps with h contracting against g and g against f.

    The pair (h, f) is solved with the product of the two constants, and the
    answer is certified as a fixed point of f, g and h.
    """
    prob = sc.problem
    if prob.kind != "chain":
        raise InputError("solve_chain needs a chain problem")
    hyp = hypotheses if hypotheses is not None else check_scenario(sc)
    _gate(hyp, force)
    cfg = sc.settings()
    k_hg = hyp.contraction_for(prob.h, prob.g)
    k_gf = hyp.contraction_for(prob.g, prob.f)
    constants = {
        f"{prob.h},{prob.g}": k_hg.k_hat if k_hg else None,
        f"{prob.g},{prob.f}": k_gf.k_hat if k_gf else None,
    }
    if None in constants.values():
        k_chain, k_used = None, 0.999
    else:
        k_chain = constants[f"{prob.h},{prob.g}"] * constants[f"{prob.g},{prob.f}"]
        k_used = ContractionPair(prob.h, prob.f, k_chain).k_used(cfg.k_margin)
    report = _run_pair(sc, prob.h, prob.f, k_chain, k_used, _config(sc))
    report.pair_constants = dict(constants, chain=k_chain)
    report.residuals[prob.g] = _residual(sc.metric, sc.maps.fn(prob.g), report.l1)
    _certify(report, {f"residual_middle({prob.g})": report.residuals[prob.g]})
    return _finish(sc, report, probe)


# -- fixed point candidates for the expansive case ----------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
AUTO_GRID = {1: 201, 2: 101, 3: 31}


def _golden_min(fn: Callable[[float], float], a: float, b: float, iters: int = 200) -> tuple[float, float]:
    """Golden-section minimum of a unimodal ``fn`` on [a, b]; returns (x, fn(x))."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a <= 4 * math.ulp(max(abs(a), abs(b), 1e-300)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    best = min(((fc, c), (fd, d), (fn(a), a), (fn(b), b)))
    return best[1], best[0]


def find_fixed_candidates(
    f: MapFn,
    dom: BoxDomain,
    grid_n: int | None,
    tol_cert: float,
    metric: Metric,
    sweeps: int = 8,
) -> list[Point]:
    """Points of the box with d(f(x), x) <= tol_cert found by a grid scan.

    Grid local minima of the residual are refined by golden-section line
    searches along each axis (cyclic coordinate descent inside the
    neighbouring grid cell), then deduplicated within ``10 * tol_cert``,
    keeping the smaller residual.
    """
    d = dom.dim
    if d > 3:
        raise InputError("candidate scan supports dimension <= 3")
    n = grid_n or AUTO_GRID[d]
    axes = [np.linspace(lo, hi, n) if hi > lo else np.asarray([lo]) for lo, hi in zip(dom.lower, dom.upper)]

    def residual(p) -> float:
        try:
            return dist(metric, f(tuple(p)), tuple(p))
        except EvaluationError:
            return math.inf

    shape = tuple(len(a) for a in axes)
    r = np.empty(shape)
    for idx in itertools.product(*(range(s) for s in shape)):
        r[idx] = residual([axes[i][j] for i, j in enumerate(idx)])

    found: list[tuple[float, Point]] = []
    for idx in itertools.product(*(range(s) for s in shape)):
        here = r[idx]
        if not math.isfinite(here):
            continue
        is_min = True
        for ax in range(d):
            for step in (-1, 1):
                j = idx[ax] + step
                if 0 <= j < shape[ax]:
                    nb = list(idx)
                    nb[ax] = j
                    if r[tuple(nb)] < here:
                        is_min = False
        if not is_min:
            continue
        p = [float(axes[i][j]) for i, j in enumerate(idx)]
        best = here
        lo = [float(axes[i][max(j - 1, 0)]) for i, j in enumerate(idx)]
        hi = [float(axes[i][min(j + 1, shape[i] - 1)]) for i, j in enumerate(idx)]
        for _ in range(sweeps if best > 0 else 0):
            before = best
            for ax in range(d):
                if hi[ax] <= lo[ax]:
                    continue

                def along(t, ax=ax):
                    q = list(p)
                    q[ax] = t
                    return residual(q)

                t, val = _golden_min(along, lo[ax], hi[ax])
                if val < best:
                    p[ax], best = t, val
            if best == 0.0 or best >= before:
                break
        if best <= tol_cert:
            found.append((best, tuple(p)))

    found.sort()
    kept: list[tuple[float, Point]] = []
    for res, p in found:
        if all(dist(metric, p, q) > 10 * tol_cert for _, q in kept):
            kept.append((res, p))
    return [p for _, p in kept]


@dataclass
class Candidate:
    point: Point
    residual: float
    orbit: str
    orbit_reason: str


@dataclass
class ScanReport:
    map: str
    n: int
    candidates: list[Candidate]
    hypothesis_holds: bool
    k_low: float | None


def scan_expansive(sc, hypotheses: HypothesisReport | None = None) -> ScanReport:
    """Expansive-map check plus candidate search and per-candidate orbit verdicts."""
    from .hypotheses import check_expansive

    prob = sc.problem
    if prob.kind != "expansive":
        raise InputError("scan needs an expansive problem")
    if sc.dim > 3:
        raise InputError("scan supports dimension <= 3")
    hyp = hypotheses
    if hyp is None or hyp.expansive is None:
        hyp = HypothesisReport()
        check_expansive(sc, hyp)
    cfg = sc.settings()
    fn = sc.maps.fn(prob.map)
    cands = []
    for p in find_fixed_candidates(fn, sc.domain, cfg.grid_n, cfg.tol_cert, sc.metric):
        orbit = check_orbit(sc, prob.map, p)
        cands.append(Candidate(p, _residual(sc.metric, fn, p), orbit.verdict, orbit.reason))
    return ScanReport(prob.map, prob.n, cands, hyp.expansive.holds, hyp.expansive.k_low)
