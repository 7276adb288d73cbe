"""Exception hierarchy.

Every exception maps onto one CLI exit code through its ``exit_code``
attribute, so callers can catch ``ComfixError`` and stay total.
"""

from __future__ import annotations


class ComfixError(Exception):
    exit_code = 2


class InputError(ComfixError, ValueError):
    """Malformed user input: scenario files, expressions, points."""

    exit_code = 3


class ParseError(InputError):
    def __init__(self, message: str, offset: int, source: str = ""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} (at byte offset {offset})")


class ScenarioError(InputError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        prefix = f"[{field}] " if field else ""
        suffix = f" (line {line})" if line is not None and f"line {line}" not in message else ""
        super().__init__(f"{prefix}{message}{suffix}")


class EvaluationError(ComfixError, ArithmeticError):
    """A map could not be evaluated at ``point`` (domain error or overflow)."""

    def __init__(self, message: str, point, kind: str = "domain"):
        self.point = tuple(point)
        self.kind = kind
        super().__init__(f"{message} at point {list(self.point)}")


class HypothesisFailed(ComfixError):
    exit_code = 1

    def __init__(self, failed: list[str], report=None):
        self.failed = list(failed)
        self.report = report
        super().__init__("hypothesis failed: " + ", ".join(self.failed))


class Inconclusive(ComfixError):
    exit_code = 4

    def __init__(self, reasons: list[str], report=None):
        self.reasons = list(reasons)
        self.report = report
        super().__init__("inconclusive: " + ", ".join(self.reasons))


class NonConvergence(ComfixError):
    def __init__(self, stage: str, iterations: int, last_bound: float):
        self.stage = stage
        self.iterations = iterations
        self.last_bound = last_bound
        super().__init__(
            f"stage {stage} did not converge in {iterations} iterations "
            f"(last bound {last_bound:.3e})"
        )


class SelfMappingViolation(ComfixError):
    """An iterate left the space mid-iteration."""

    exit_code = 1

    def __init__(self, stage: str, step: int, point):
        self.stage = stage
        self.step = step
        self.point = tuple(point)
        super().__init__(
            f"stage {stage} iterate {step} left the space: {list(self.point)}"
        )


class CertificationFailed(ComfixError):
    def __init__(self, residuals: dict[str, float], tol_cert: float):
        self.residuals = dict(residuals)
        self.tol_cert = tol_cert
        worst = max(self.residuals, key=self.residuals.get)
        super().__init__(
            f"certification failed: residual {worst}={self.residuals[worst]:.3e} "
            f"> tol_cert={tol_cert:.1e}"
        )
