"""
Log-space least-squares fits for decay laws and convergence rates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import FitError

MIN_FIT_SAMPLES = 3


@dataclass(frozen=True)
class PowerFit:
    """log y = slope · log x + intercept."""

    slope: float
    intercept: float
    residual: float
    n: int


@dataclass(frozen=True)
class RateFit:
    """y ≈ C · ε^α · |ln ε|^β with β held fixed."""

    alpha: float
    beta: float
    constant: float
    residual: float
    n: int

    def envelope(self, eps: ArrayLike) -> NDArray[np.float64]:
        eps = np.asarray(eps, dtype=np.float64)
        return self.constant * eps**self.alpha * np.abs(np.log(eps)) ** self.beta

    def to_dict(self) -> dict:
        return asdict(self)


def _positive_samples(xs: ArrayLike, ys: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise FitError(f"samples must be two 1D arrays of equal length, got {xs.shape} and {ys.shape}")
    if xs.size < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} samples for a fit, got {xs.size}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise FitError("samples must be finite")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise FitError("samples must be strictly positive for a log-space fit")
    if np.ptp(np.log(xs)) == 0.0:
        raise FitError("abscissae are all equal; slope is undetermined")
    return xs, ys


def fit_power_law(xs: ArrayLike, ys: ArrayLike) -> PowerFit:
    """Least-squares line through (log x, log y)."""
    xs, ys = _positive_samples(xs, ys)
    log_x, log_y = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = float(np.sqrt(np.mean((log_y - (slope * log_x + intercept)) ** 2)))
    return PowerFit(float(slope), float(intercept), residual, int(xs.size))


def fit_rate(xs: ArrayLike, ys: ArrayLike, beta: float = 0.0) -> RateFit:
    """
    Fit (α, C) in y = C ε^α |ln ε|^β with β fixed.

    Args:
        xs: ε values, in (0, 1) whenever beta is nonzero
        ys: Measured positive values
        beta: Fixed log-power

    Raises:
        FitError: fewer than three samples or non-positive values
    """
    xs, ys = _positive_samples(xs, ys)
    if beta != 0.0 and np.any(xs >= 1.0):
        raise FitError("a log-power needs every eps strictly inside (0, 1)")
    adjusted = ys / np.abs(np.log(xs)) ** beta if beta != 0.0 else ys
    power = fit_power_law(xs, adjusted)
    return RateFit(power.slope, float(beta), math.exp(power.intercept), power.residual, power.n)
