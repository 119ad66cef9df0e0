"""Core domain types and closed-form evaluation of the power-family curve.

The curve family is ``f(x) = c - a * x**(-b)`` with ``a > 0`` and ``b > 0``:
positive, strictly increasing and concave on (0, inf), with horizontal
asymptote ``y = c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Observation:
    """One (training-set size, accuracy) sample of a learning curve."""

    position: int
    accuracy: float

    def __post_init__(self):
        if not isinstance(self.position, int) or self.position < 1:
            raise ValueError(f"position must be a positive integer, got {self.position!r}")
        if not math.isfinite(self.accuracy) or not 0.0 < self.accuracy <= 100.0:
            raise ValueError(f"accuracy must be in (0, 100], got {self.accuracy!r}")


@dataclass(frozen=True)
class ObservationSeries:
    """Ordered observations produced by a kernel + constant-step schedule.

    ``kernel_size`` and ``step`` describe the nominal sampling schedule; the
    actual positions are authoritative and only need to be strictly
    increasing (schedules snapped to sentence boundaries are not exactly
    regular).
    """

    points: tuple[Observation, ...]
    kernel_size: int
    step: int

    def __post_init__(self):
        if self.kernel_size < 1 or self.step < 1:
            raise ValueError("kernel_size and step must be positive")
        pos = [p.position for p in self.points]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("positions must be strictly increasing")
        if pos and pos[0] < self.kernel_size:
            raise ValueError("first position must be >= kernel_size")

    @classmethod
    def from_points(cls, points) -> "ObservationSeries":
        """Build a series inferring the nominal schedule from the data."""
        pts = tuple(points)
        if not pts:
            return cls(pts, kernel_size=1, step=1)
        kernel = pts[0].position
        step = pts[1].position - pts[0].position if len(pts) > 1 else kernel
        return cls(pts, kernel_size=kernel, step=max(step, 1))

    def __len__(self) -> int:
        return len(self.points)

    def positions(self) -> tuple[int, ...]:
        return tuple(p.position for p in self.points)

    def accuracies(self) -> tuple[float, ...]:
        return tuple(p.accuracy for p in self.points)

    def prefix(self, level: int) -> tuple[Observation, ...]:
        """First ``level`` observations."""
        if level > len(self.points):
            raise ValueError(f"series has {len(self.points)} points, prefix {level} requested")
        return self.points[:level]

    def with_point(self, obs: Observation) -> "ObservationSeries":
        """New series with one observation appended (positions must grow)."""
        return ObservationSeries.from_points(self.points + (obs,))


@dataclass(frozen=True)
class PowerLawParams:
    """Parameters of one fitted curve: scale ``a``, decay ``b``, asymptote ``c``.

    ``c`` is intentionally not capped at 100: early fits may overshoot, and
    the prediction level is precisely the point where the asymptote first
    drops back into the feasible range.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.a <= 0.0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if self.b <= 0.0:
            raise ValueError(f"b must be > 0, got {self.b}")


@dataclass(frozen=True)
class LearningTrend:
    """Curve fitted to the first ``level`` observations.

    ``residuals`` are observed minus fitted, one per observation used.
    ``anchor_residual`` is the residual of the pseudo-observation at
    infinity when the fit was anchored, else None.
    """

    level: int
    params: PowerLawParams
    residuals: tuple[float, ...]
    position: int
    anchor_residual: float | None = None
    converged: bool = True

    def __post_init__(self):
        if self.level < 3:
            raise ValueError("a trend needs at least three observations")
        if len(self.residuals) != self.level:
            raise ValueError("residual count must equal the trend level")


def eval_pattern(params: PowerLawParams, x: float) -> float:
    """Curve value at position ``x > 0``."""
    if x <= 0:
        raise ValueError(f"position must be > 0, got {x}")
    return params.c - params.a * float(x) ** (-params.b)


def pattern_slope(params: PowerLawParams, x: float) -> float:
    """First derivative at ``x > 0``; always positive for valid params."""
    if x <= 0:
        raise ValueError(f"position must be > 0, got {x}")
    return params.a * params.b * float(x) ** (-(params.b + 1.0))


def asymptote(params: PowerLawParams) -> float:
    """Limit of the curve as the position grows without bound."""
    return params.c
