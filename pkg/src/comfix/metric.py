"""Points, axis-aligned boxes and the three standard metrics on R^d."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

Point = tuple[float, ...]


def as_point(coords: Iterable[float]) -> Point:
    p = tuple(float(c) for c in coords)
    if not p:
        raise InputError("a point needs at least one coordinate")
    if not all(math.isfinite(c) for c in p):
        raise InputError(f"point has non-finite coordinates: {list(p)}")
    return p


def _check_dims(x: Sequence[float], y: Sequence[float]) -> None:
    if len(x) != len(y):
        raise InputError(f"dimension mismatch: {len(x)} vs {len(y)}")


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    CHEBYSHEV = "chebyshev"
    MANHATTAN = "manhattan"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InputError(f"unknown metric {value!r} (expected one of {choices})") from None


def dist(metric: Metric, x: Sequence[float], y: Sequence[float]) -> float:
    _check_dims(x, y)
    diffs = [abs(a - b) for a, b in zip(x, y)]
    if metric is Metric.EUCLIDEAN:
        return math.hypot(*diffs)
    if metric is Metric.CHEBYSHEV:
        return max(diffs)
    if metric is Metric.MANHATTAN:
        return math.fsum(diffs)
    raise InputError(f"unknown metric {metric!r}")


def dist_rows(metric: Metric, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distances between two (n, d) arrays."""
    diff = np.abs(a - b)
    if metric is Metric.EUCLIDEAN:
        return np.sqrt(np.sum(diff * diff, axis=1))
    if metric is Metric.CHEBYSHEV:
        return np.max(diff, axis=1)
    return np.sum(diff, axis=1)


def norm(metric: Metric, x: Sequence[float]) -> float:
    return dist(metric, x, (0.0,) * len(x))


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``lower <= x <= upper``.

    Bounds may be infinite, which is how a half-line such as ``[1, inf)``
    is described; such a box can be tested for containment but not sampled.
    """

    lower: Point
    upper: Point

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if not lower or len(lower) != len(upper):
            raise InputError(
                f"box bounds must have the same non-zero dimension, got {len(lower)} and {len(upper)}"
            )
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if math.isnan(lo) or math.isnan(hi):
                raise InputError(f"box bound on axis {i + 1} is NaN")
            if lo > hi:
                raise InputError(f"box axis {i + 1} has lower {lo} > upper {hi}")
            if lo == math.inf or hi == -math.inf:
                raise InputError(f"box axis {i + 1} is empty: [{lo}, {hi}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(v) for v in self.lower + self.upper)

    def _require_bounded(self) -> None:
        if not self.bounded:
            raise InputError("operation needs a bounded box")

    def diameter(self, metric: Metric = Metric.EUCLIDEAN) -> float:
        self._require_bounded()
        return dist(metric, self.lower, self.upper)

    @property
    def center(self) -> Point:
        self._require_bounded()
        return tuple(lo + (hi - lo) / 2 for lo, hi in zip(self.lower, self.upper))

    def corners(self) -> list[Point]:
        self._require_bounded()
        return [tuple(c) for c in itertools.product(*zip(self.lower, self.upper))]

    def contains(self, x: Sequence[float], slack: float = 0.0) -> bool:
        return contains(self, x, slack)


def contains(dom: BoxDomain, x: Sequence[float], slack: float = 0.0) -> bool:
    _check_dims(dom.lower, x)
    return all(lo - slack <= v <= hi + slack for lo, v, hi in zip(dom.lower, x, dom.upper))


def sample(dom: BoxDomain, n: int, seed: int) -> list[Point]:
    """First ``n`` points of the box's deterministic sample sequence.

    The sequence is: the 2^d corners, the center, then uniform points drawn
    from ``numpy.random.default_rng(seed)``. Because every call reads a
    prefix of the same sequence, samples for increasing ``n`` are nested.
    """
    if n < 1:
        raise InputError("sample size must be at least 1")
    structured = dom.corners() + [dom.center]
    if n <= len(structured):
        return structured[:n]
    rng = np.random.default_rng(seed)
    lo = np.asarray(dom.lower)
    width = np.asarray(dom.upper) - lo
    fill = lo + width * rng.random((n - len(structured), dom.dim))
    # rounding in lo + width*u may overshoot the upper face by an ulp
    fill = np.minimum(fill, np.asarray(dom.upper))
    return structured + [tuple(float(v) for v in row) for row in fill]
