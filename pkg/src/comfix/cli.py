"""Command line interface: ``comfix {check,solve,certify,scan} SCENARIO``.

Exit codes: 0 ok, 1 hypothesis failed, 2 solve/certify failed,
3 input error, 4 inconclusive.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import (
    ComfixError,
    EvaluationError,
    HypothesisFailed,
    Inconclusive,
    InputError,
    SelfMappingViolation,
)
from .hypotheses import HypothesisReport, OrbitResult, check_orbit, check_scenario
from .metric import Point, as_point, dist
from .report import build_report, dumps
from .scenario import BOUND_MODES, ScenarioSpec, load_scenario, shipped_scenarios
from .solver import ScanReport, scan_expansive, solve_common_fixed_point

EXIT_OK, EXIT_HYPOTHESIS, EXIT_SOLVE, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4


@dataclass
class CertifyReport:
    point: Point
    residuals: dict[str, float]
    tol_cert: float
    certified: bool
    orbit_map: str
    orbit: OrbitResult


def _dominator(sc: ScenarioSpec) -> str:
    prob = sc.problem
    return {"pair": lambda: prob.dominator, "chain": lambda: prob.f, "expansive": lambda: prob.map}[prob.kind]()


def _check_exit(hyp: HypothesisReport) -> int:
    if hyp.failures:
        return EXIT_HYPOTHESIS
    if hyp.unknowns:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_check(sc: ScenarioSpec) -> tuple[int, dict]:
    hyp = check_scenario(sc)
    return _check_exit(hyp), {"hypotheses": hyp}


def _scan_exit(scan: ScanReport) -> int:
    if not scan.candidates:
        return EXIT_SOLVE
    if not scan.hypothesis_holds:
        return EXIT_HYPOTHESIS
    if len(scan.candidates) != 1:
        return EXIT_SOLVE
    return EXIT_OK


def cmd_scan(sc: ScenarioSpec) -> tuple[int, dict]:
    if sc.problem.kind != "expansive":
        raise InputError(f"scan needs an expansive problem, scenario has {sc.problem.kind!r}")
    hyp = HypothesisReport(k_margin=sc.settings().k_margin)
    from .hypotheses import check_expansive

    check_expansive(sc, hyp)
    scan = scan_expansive(sc, hyp)
    return _scan_exit(scan), {"hypotheses": hyp, "scan": scan}


def cmd_solve(sc: ScenarioSpec, force: bool = False) -> tuple[int, dict]:
    if sc.problem.kind == "expansive":
        return cmd_scan(sc)
    hyp = check_scenario(sc)
    parts: dict = {"hypotheses": hyp}
    code = _check_exit(hyp)
    if code != EXIT_OK and not force:
        return code, parts
    try:
        parts["solve"] = solve_common_fixed_point(sc, hyp, force=True)
    except (HypothesisFailed, Inconclusive, SelfMappingViolation) as exc:
        parts["error"] = str(exc)
        return exc.exit_code, parts
    except (ComfixError, EvaluationError) as exc:
        parts["error"] = str(exc)
        if getattr(exc, "report", None) is not None:
            parts["solve"] = exc.report
        return EXIT_SOLVE, parts
    return EXIT_OK, parts


def parse_point(text: str, dim: int) -> Point:
    try:
        coords = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise InputError(f"cannot parse point {text!r}") from None
    if len(coords) != dim:
        raise InputError(f"point has {len(coords)} coordinate(s), scenario dimension is {dim}")
    return as_point(coords)


def cmd_certify(sc: ScenarioSpec, point: Point) -> tuple[int, dict]:
    cfg = sc.settings()
    residuals = {}
    for name in dict.fromkeys(sc.problem.map_names):
        try:
            residuals[name] = dist(sc.metric, sc.maps.fn(name)(point), point)
        except EvaluationError:
            residuals[name] = float("inf")
    certified = all(r <= cfg.tol_cert for r in residuals.values())
    dom = _dominator(sc)
    orbit = check_orbit(sc, dom, point)
    rep = CertifyReport(point, residuals, cfg.tol_cert, certified, dom, orbit)
    return (EXIT_OK if certified else EXIT_SOLVE), {"certify": rep}


# -- argument handling -------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario TOML file, or the name of a shipped scenario")
    common.add_argument("--report", metavar="PATH", help="write the JSON report here (default stdout)")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--tol", type=float, help="iteration tolerance")
    common.add_argument("--n-samples", type=int, help="number of sample points")
    common.add_argument("--force", action="store_true", help="solve even if hypothesis checks fail")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the report")
    common.add_argument("--bound-mode", choices=BOUND_MODES, help="stopping rule")

    parser = argparse.ArgumentParser(
        prog="comfix",
        description="Find and certify common fixed points of commuting contraction pairs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="verify the hypotheses")
    sub.add_parser("solve", parents=[common], help="check, then find and certify the fixed point")
    cert = sub.add_parser("certify", parents=[common], help="certify a given point")
    cert.add_argument("--point", required=True, help="comma-separated coordinates")
    sub.add_parser("scan", parents=[common], help="expansive map: hypothesis and candidate scan")
    sub.add_parser("list", help="list shipped scenarios").set_defaults(scenario=None)
    return parser


def _apply_overrides(sc: ScenarioSpec, args) -> ScenarioSpec:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.tol is not None:
        changes["tol"] = args.tol
    if args.n_samples is not None:
        changes["n_samples"] = args.n_samples
    if args.bound_mode is not None:
        changes["bound_mode"] = args.bound_mode
    return sc.with_numerics(**changes) if changes else sc


def run(args) -> tuple[int, dict]:
    name = None
    try:
        sc = _apply_overrides(load_scenario(args.scenario), args)
        name = sc.name
        if args.command == "check":
            code, parts = cmd_check(sc)
        elif args.command == "solve":
            code, parts = cmd_solve(sc, force=args.force)
        elif args.command == "certify":
            code, parts = cmd_certify(sc, parse_point(args.point, sc.dim))
        else:
            code, parts = cmd_scan(sc)
    except InputError as exc:
        code, parts = EXIT_INPUT, {"error": str(exc)}
    report = build_report(
        command=args.command,
        exit_code=code,
        scenario_name=name,
        timestamp=not args.no_timestamp,
        **parts,
    )
    return code, report


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command == "list":
        for name in shipped_scenarios():
            print(name)
        return EXIT_OK
    code, report = run(args)
    text = dumps(report)
    if args.report:
        try:
            Path(args.report).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"comfix: cannot write report: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    summary = report["status"] if not report.get("error") else f"{report['status']}: {report['error']}"
    print(f"comfix {args.command}: {summary}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
