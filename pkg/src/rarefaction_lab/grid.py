"""
Uniform cell-centred grids shared by the profile, the hyperbolic wave and the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, ResolutionError

# Cells per δ below which δ-scale features are considered unresolved
MIN_CELLS_PER_DELTA = 16
MIN_CELLS = 64


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n_cells`` cells on [x_left, x_right]."""

    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ConfigurationError("x_left must be smaller than x_right", field="grid")
        if self.n_cells < 2:
            raise ConfigurationError("at least two cells are required", field="grid.n_cells")

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> NDArray[np.float64]:
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> NDArray[np.float64]:
        return self.x_left + np.arange(self.n_cells + 1) * self.dx

    def refined(self, factor: int = 2) -> Grid1D:
        return Grid1D(self.x_left, self.x_right, self.n_cells * factor)

    def coarsened(self, factor: int = 2) -> Grid1D:
        return Grid1D(self.x_left, self.x_right, max(self.n_cells // factor, 2))

    def require_resolution(self, delta: float, cells_per_delta: int = MIN_CELLS_PER_DELTA) -> None:
        """Raise ResolutionError when fewer than ``cells_per_delta`` cells cover a width δ."""
        if delta / self.dx < cells_per_delta - 1e-9:
            raise ResolutionError(
                f"grid does not resolve delta={delta:.4g}: {delta / self.dx:.1f} cells per delta, "
                f"need {cells_per_delta}"
            )

    @classmethod
    def for_fan(
        cls,
        b_minus: float,
        b_plus: float,
        delta: float,
        t_final: float,
        cells_per_delta: int = 24,
        min_cells: int = MIN_CELLS,
    ) -> Grid1D:
        """
        Truncated domain around the fan: [B₋T − 10δ − 1, B₊T + 10δ + 1] with dx ≤ δ/cells_per_delta.

        The tanh tails of the smoothed data have decayed below test tolerances at the edges.
        """
        x_left = min(b_minus * t_final, 0.0) - 10.0 * delta - 1.0
        x_right = max(b_plus * t_final, 0.0) + 10.0 * delta + 1.0
        n_cells = max(math.ceil((x_right - x_left) * cells_per_delta / delta), min_cells)
        return cls(x_left, x_right, n_cells)


def output_times(t_final: float, per_unit: int) -> NDArray[np.float64]:
    """Snapshot stamps 0, 1/per_unit, ..., t_final (t_final always included)."""
    count = max(int(round(t_final * per_unit)), 1)
    return np.linspace(0.0, t_final, count + 1)


def lp_norm(values: NDArray[np.float64], cell_volume: float, p: float) -> float:
    """Midpoint-quadrature L^p norm of cell values; ``p`` is 1, 2 or inf."""
    values = np.abs(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(values))
    return float((np.sum(values**p) * cell_volume) ** (1.0 / p))
