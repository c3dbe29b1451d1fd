"""One-dimensional grid search over calibration temperatures."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class TemperatureGrid:
    """Evenly spaced temperatures ``lo, lo + step, ..., hi``.

    When the best temperature sits on an edge of the grid, the search widens
    that edge by a factor of two (lower edge halved, upper edge doubled) and
    searches again, at most ``max_extensions`` times.
    """

    lo: float = 0.1
    hi: float = 10.0
    step: float = 0.01
    max_extensions: int = 2

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or self.step <= 0:
            raise InvalidArgumentError(
                f"invalid temperature grid lo={self.lo}, hi={self.hi}, step={self.step}"
            )
        if self.max_extensions < 0:
            raise InvalidArgumentError("max_extensions must be >= 0")

    def points(self) -> np.ndarray:
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return np.round(self.lo + self.step * np.arange(count), 10)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "step": self.step,
                "max_extensions": self.max_extensions}


DEFAULT_GRID = TemperatureGrid()


@dataclass(frozen=True)
class GridResult:
    temperature: float
    value: float
    evaluations: int
    extensions: int
    grid: TemperatureGrid


def argmin_nearest_one(points: np.ndarray, values: np.ndarray) -> int:
    """Index of the minimum; exact ties go to the temperature closest to 1."""
    best = np.flatnonzero(values == values.min())
    return int(best[np.argmin(np.abs(points[best] - 1.0))])


def grid_minimize(objective: Callable[[float], float],
                  grid: TemperatureGrid = DEFAULT_GRID) -> GridResult:
    evaluations = 0
    for extension in range(grid.max_extensions + 1):
        points = grid.points()
        values = np.array([objective(float(t)) for t in points])
        evaluations += len(points)
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("objective returned a non-finite value on the grid")
        i = argmin_nearest_one(points, values)
        if extension == grid.max_extensions:
            break
        if i == 0:
            grid = replace(grid, lo=grid.lo / 2)
        elif i == len(points) - 1:
            grid = replace(grid, hi=grid.hi * 2)
        else:
            break
    return GridResult(float(points[i]), float(values[i]), evaluations, extension, grid)
