"""Detection of the working and prediction levels on an asymptote sequence.

The working level is the first level from which the backbone's consecutive
slopes stay under a verticality bound over a look-ahead window; the
prediction level is the first level at or after it whose asymptote is a
feasible accuracy (<= 100).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

FIRST_OPERATIVE_LEVEL = 3


@dataclass(frozen=True)
class LevelParams:
    """Verticality threshold, slow-down exponent and look-ahead window."""

    nu: float = 2e-5
    slowdown: int = 1
    lookahead: int = 5

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must be in (0, 1), got {self.nu}")
        if self.slowdown < 1:
            raise ValueError(f"slowdown must be >= 1, got {self.slowdown}")
        if self.lookahead < 0:
            raise ValueError(f"lookahead must be >= 0, got {self.lookahead}")


def verticality_limit(params: LevelParams) -> float:
    """Maximum permissible backbone slope: nu**(1/slowdown) / (1 - nu)."""
    return params.nu ** (1.0 / params.slowdown) / (1.0 - params.nu)


def working_level(
    backbone: Sequence[float],
    positions: Sequence[int],
    params: LevelParams,
    levels: Sequence[int] | None = None,
) -> int | None:
    """Smallest level whose full look-ahead window keeps every slope under
    the verticality limit, or None if no window passes yet.

    ``levels`` maps backbone entries to their level numbers; by default the
    first entry is level 3 and entries are consecutive. A window is only
    judged once all of it is observable, so the answer is stable under data
    growth: later entries can never retract an already-reported level.
    """
    if len(backbone) != len(positions):
        raise ValueError("backbone and positions must have equal length")
    if levels is None:
        levels = range(FIRST_OPERATIVE_LEVEL, FIRST_OPERATIVE_LEVEL + len(backbone))
    limit = verticality_limit(params)
    n = len(backbone)
    slopes = [
        abs(backbone[i + 1] - backbone[i]) / (positions[i + 1] - positions[i])
        for i in range(n - 1)
    ]
    window = params.lookahead + 1
    for start in range(n - window):
        if all(slopes[i] <= limit for i in range(start, start + window)):
            return levels[start]
    return None


def prediction_level(
    backbone: Sequence[float],
    omega: int,
    levels: Sequence[int] | None = None,
) -> int | None:
    """Smallest level >= ``omega`` whose asymptote is <= 100, or None."""
    if levels is None:
        levels = range(FIRST_OPERATIVE_LEVEL, FIRST_OPERATIVE_LEVEL + len(backbone))
    for level, alpha in zip(levels, backbone):
        if level >= omega and alpha <= 100.0:
            return level
    return None
