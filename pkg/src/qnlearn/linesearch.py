"""Armijo backtracking line search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LineSearchFailure


@dataclass(frozen=True)
class LineSearchConfig:
    enabled: bool = True
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 30
    initial_trial: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink factor must be in (0, 1)")
        if not 0.0 < self.armijo < 1.0:
            raise ValueError("armijo fraction must be in (0, 1)")

    @property
    def smallest_trial(self) -> float:
        return self.initial_trial * self.shrink ** self.max_backtracks


def backtracking_search(objective, x, direction, config: LineSearchConfig,
                        *, grad_at_x, f_at_x=None) -> float:
    """Largest t = initial * shrink^j meeting the Armijo decrease test.

    Raises LineSearchFailure once j exceeds max_backtracks (callers fall
    back to the smallest trial); this is the expected outcome for ascent
    directions.
    """
    f0 = float(objective(x)) if f_at_x is None else float(f_at_x)
    slope = float(np.dot(grad_at_x, direction))
    t = config.initial_trial
    for _ in range(config.max_backtracks + 1):
        if float(objective(x + t * direction)) <= f0 + config.armijo * t * slope:
            return t
        t *= config.shrink
    raise LineSearchFailure(
        f"no Armijo step within {config.max_backtracks} backtracks",
        last_trial=t / config.shrink,
    )


def search_or_smallest(objective, x, direction, config: LineSearchConfig,
                       *, grad_at_x, f_at_x=None) -> float:
    """Backtracking step, falling back to the smallest trial on failure."""
    try:
        return backtracking_search(objective, x, direction, config,
                                   grad_at_x=grad_at_x, f_at_x=f_at_x)
    except LineSearchFailure:
        return config.smallest_trial
