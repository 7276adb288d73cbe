"""Common fixed points of commuting F-contraction pairs on boxes in R^d."""

__version__ = "0.1.0"

from .errors import (
    CertificationFailed,
    ComfixError,
    EvaluationError,
    HypothesisFailed,
    Inconclusive,
    InputError,
    NonConvergence,
    ParseError,
    ScenarioError,
    SelfMappingViolation,
)
from .hypotheses import (
    ContractionPair,
    HypothesisReport,
    check_scenario,
    commutativity_defect,
    estimate_k,
    expansive_check,
    power_envelope,
    orbit_bounded,
    self_map_check,
)
from .maps import Compose, Expr, Identity, Iterate, MapTable, evaluate, format_map, parse_map
from .metric import BoxDomain, Metric, contains, dist, sample
from .scenario import ScenarioSpec, load_scenario, loads_scenario
from .solver import (
    SolveConfig,
    SolveReport,
    find_fixed_candidates,
    solve_chain,
    solve_common_fixed_point,
    solve_reduction,
    stage_a,
    stage_b,
    uniqueness_probe,
)
