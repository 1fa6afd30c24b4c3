"""
Planar 3-rarefaction waves: the exact self-similar fan and its smooth
approximation built from the Burgers equation.

The smooth wave is obtained from the Burgers solution B̄(t, x₁) with tanh
initial data of width δ by inverting λ₃(ρ̄, v̄₁, θ̄) = B̄ along the 3-wave
curve. Derivatives up to order three come from exact implicit
differentiation of the characteristic map, never from nested differences.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from .errors import ContractError, DomainError, NotARarefactionError
from .fitting import fit_power_law
from .gas_dynamics import PrimitiveState, eigenvalues, riemann_invariants_3, sound_speed
from .grid import Grid1D, lp_norm
from .models import GasModel

logger = logging.getLogger(__name__)

# Characteristic root-finder
ROOT_TOLERANCE = 1e-13
ROOT_MAX_ITERATIONS = 200

# Below this log-range of the predicted scale a slope is meaningless
MIN_LOG_RANGE = 0.5

FIELD_NAMES = ("rho", "v1", "theta")


@dataclass(frozen=True)
class RiemannData:
    """End states of a single 3-rarefaction wave."""

    left: PrimitiveState
    right: PrimitiveState
    connected: bool = True

    @classmethod
    def from_left(cls, gas: GasModel, left: PrimitiveState, v1_plus: float) -> RiemannData:
        return cls(left=left, right=connect_right_state(gas, left, v1_plus), connected=True)

    def wave_speeds(self, gas: GasModel) -> tuple[float, float]:
        """Edge speeds (B₋, B₊) = (λ₃(left), λ₃(right))."""
        return float(eigenvalues(gas, self.left)[2]), float(eigenvalues(gas, self.right)[2])

    def sigma1(self, gas: GasModel) -> float:
        return float(riemann_invariants_3(gas, self.left)[0])

    def density_factor(self, gas: GasModel) -> float:
        """K in ρ = K c^{2/(γ−1)} along the wave curve."""
        c_minus = float(sound_speed(gas, self.left.rho, self.left.theta))
        return float(self.left.rho) / c_minus ** (2.0 / (gas.gamma - 1.0))


@dataclass(frozen=True)
class DeltaRule:
    """Binding δ = ε^b |ln ε|."""

    eps: float
    b: float

    @property
    def delta(self) -> float:
        return delta_rule(self.eps, self.b)


@dataclass(frozen=True)
class SmoothFanParams:
    """Edge speeds and smoothing width of the tanh Burgers data."""

    b_minus: float
    b_plus: float
    delta: float
    rule: DeltaRule | None = None

    def __post_init__(self):
        if not self.b_minus <= self.b_plus:
            raise DomainError(f"fan edges must satisfy b_minus <= b_plus, got {self.b_minus}, {self.b_plus}")
        if not self.delta > 0.0:
            raise DomainError(f"delta must be positive, got {self.delta}")

    @classmethod
    def for_data(cls, gas: GasModel, data: RiemannData, delta: float, rule: DeltaRule | None = None) -> SmoothFanParams:
        b_minus, b_plus = data.wave_speeds(gas)
        return cls(b_minus, b_plus, delta, rule)

    @classmethod
    def from_rule(cls, gas: GasModel, data: RiemannData, eps: float, b: float) -> SmoothFanParams:
        rule = DeltaRule(eps, b)
        return cls.for_data(gas, data, rule.delta, rule)


@dataclass
class ProfileSample:
    """Smooth rarefaction on a grid at one time, with x₁-derivatives stacked as (ρ, v₁, θ)."""

    t: float
    x1: NDArray[np.float64]
    state: PrimitiveState
    b: NDArray[np.float64]
    d1: NDArray[np.float64] | None = None
    d2: NDArray[np.float64] | None = None
    d3: NDArray[np.float64] | None = None

    def derivative(self, order: int) -> NDArray[np.float64]:
        value = {1: self.d1, 2: self.d2, 3: self.d3}.get(order)
        if value is None:
            raise ContractError(f"profile sample carries no derivatives of order {order}")
        return value


@dataclass
class NormRow:
    field: str
    order: int
    p: float
    value: float
    predicted_scale: float


@dataclass
class NormTable:
    """Discrete L^p norms of profile derivatives next to their predicted decay scale."""

    t: float
    delta: float
    rows: list[NormRow] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        columns = ["field", "order", "p", "value", "predicted_scale"]
        return pd.DataFrame([vars(row) for row in self.rows], columns=columns)

    def lookup(self, field_name: str, order: int, p: float) -> NormRow:
        for row in self.rows:
            if row.field == field_name and row.order == order and row.p == p:
                return row
        raise KeyError((field_name, order, p))


@dataclass
class DecayFit:
    """Agreement of one norm family with its predicted scale across a δ-sweep."""

    field: str
    order: int
    p: float
    kind: str  # "slope" or "ratio"
    slope: float | None
    spread: float
    passed: bool


# =============================================================================
# WAVE CURVE
# =============================================================================


def connect_right_state(gas: GasModel, left: PrimitiveState, v1_plus: float) -> PrimitiveState:
    """
    Right state on the 3-rarefaction curve through ``left`` with velocity ``v1_plus``.

    Raises:
        NotARarefactionError: v1_plus below the left velocity (compressive wave)
    """
    left.validate()
    v1_minus = float(left.v1)
    if v1_plus < v1_minus:
        raise NotARarefactionError(f"v1_plus={v1_plus} < v1_minus={v1_minus}: the 3-eigenvalue would not expand")
    if v1_plus == v1_minus:
        return PrimitiveState(left.rho, left.v1, left.theta)

    c_minus = float(sound_speed(gas, left.rho, left.theta))
    c_plus = c_minus + 0.5 * (gas.gamma - 1.0) * (v1_plus - v1_minus)
    theta_plus = c_plus**2 / (gas.gamma * gas.R)
    rho_plus = float(left.rho) * (theta_plus / float(left.theta)) ** (1.0 / (gas.gamma - 1.0))
    return PrimitiveState(rho_plus, v1_plus, theta_plus)


def _state_on_curve(gas: GasModel, data: RiemannData, lambda3: NDArray[np.float64]) -> PrimitiveState:
    """State on the 3-wave curve whose third eigenvalue equals ``lambda3``."""
    c = (gas.gamma - 1.0) * (lambda3 - data.sigma1(gas)) / (gas.gamma + 1.0)
    theta = c**2 / (gas.gamma * gas.R)
    rho = data.density_factor(gas) * c ** (2.0 / (gas.gamma - 1.0))
    return PrimitiveState(rho, lambda3 - c, theta)


def exact_fan(gas: GasModel, data: RiemannData, t: float, x1: ArrayLike) -> PrimitiveState:
    """Self-similar fan at time t > 0."""
    if t <= 0.0:
        raise DomainError(f"exact fan needs t > 0, got {t}")
    x1 = np.asarray(x1, dtype=np.float64)
    b_minus, b_plus = data.wave_speeds(gas)
    xi = np.clip(x1 / t, b_minus, b_plus)
    inside = _state_on_curve(gas, data, xi)
    left_side = x1 <= b_minus * t
    right_side = x1 >= b_plus * t

    def select(left_value, inner, right_value):
        return np.where(left_side, left_value, np.where(right_side, right_value, inner))

    return PrimitiveState(
        select(data.left.rho, inside.rho, data.right.rho),
        select(data.left.v1, inside.v1, data.right.v1),
        select(data.left.theta, inside.theta, data.right.theta),
    )


# =============================================================================
# BURGERS SMOOTHING
# =============================================================================


def delta_rule(eps: float, b: float) -> float:
    """δ = ε^b |ln ε| for ε in (0, 1)."""
    if not 0.0 < eps < 1.0:
        raise DomainError(f"delta rule needs eps in (0, 1), got {eps}")
    return eps**b * abs(math.log(eps))


def burgers_initial_derivatives(
    params: SmoothFanParams, x1: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """B̄₀ and its first three derivatives."""
    x1 = np.asarray(x1, dtype=np.float64)
    delta = params.delta
    half_jump = 0.5 * (params.b_plus - params.b_minus)
    tanh = np.tanh(x1 / delta)
    sech_sq = 1.0 - tanh**2
    b0 = 0.5 * (params.b_plus + params.b_minus) + half_jump * tanh
    b0_x = half_jump / delta * sech_sq
    b0_xx = half_jump / delta**2 * (-2.0 * tanh) * sech_sq
    b0_xxx = half_jump / delta**3 * (-2.0 + 6.0 * tanh**2) * sech_sq
    return b0, b0_x, b0_xx, b0_xxx


def burgers_initial(params: SmoothFanParams, x1: ArrayLike) -> NDArray[np.float64]:
    """B̄₀(x₁) = (B₊+B₋)/2 + (B₊−B₋)/2 · tanh(x₁/δ)."""
    return burgers_initial_derivatives(params, x1)[0]


def _characteristic_feet(params: SmoothFanParams, t: float, x1: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Solve x₁ = x₀ + t·B̄₀(x₀) for x₀.

    Safeguarded Newton with bisection fallback inside [x₁ − B₊t, x₁ − B₋t];
    the map is strictly increasing so the bracket holds exactly one root.
    """
    if t == 0.0:
        return x1.copy()
    lo = x1 - params.b_plus * t
    hi = x1 - params.b_minus * t
    x0 = np.clip(x1 - t * burgers_initial(params, x1), lo, hi)
    tolerance = ROOT_TOLERANCE * (1.0 + np.abs(x1))

    for _ in range(ROOT_MAX_ITERATIONS):
        b0, b0_x, _, _ = burgers_initial_derivatives(params, x0)
        residual = x0 + t * b0 - x1
        if np.all(np.abs(residual) <= tolerance):
            return x0
        lo = np.where(residual < 0.0, x0, lo)
        hi = np.where(residual > 0.0, x0, hi)
        newton = x0 - residual / (1.0 + t * b0_x)
        bisect = 0.5 * (lo + hi)
        x0 = np.where((newton > lo) & (newton < hi), newton, bisect)

    residual = x0 + t * burgers_initial(params, x0) - x1
    if np.all(np.abs(residual) <= 10.0 * tolerance):
        return x0
    raise RuntimeError(f"characteristic root-finder did not converge (max residual {np.max(np.abs(residual)):.3e})")


def burgers_smooth(
    params: SmoothFanParams, t: float, x1: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Classical Burgers solution with tanh data and its x₁-derivatives up to order three.

    With q = 1/(1 + t·B̄₀′(x₀)): B̄ₓ = B̄₀′q, B̄ₓₓ = B̄₀″q³, B̄ₓₓₓ = B̄₀‴q⁴ − 3tB̄₀″²q⁵.
    """
    if t < 0.0:
        raise DomainError(f"Burgers solution needs t >= 0, got {t}")
    x1 = np.asarray(x1, dtype=np.float64)
    x0 = _characteristic_feet(params, t, x1)
    b0, b0_x, b0_xx, b0_xxx = burgers_initial_derivatives(params, x0)
    q = 1.0 / (1.0 + t * b0_x)
    b_x = b0_x * q
    b_xx = b0_xx * q**3
    b_xxx = b0_xxx * q**4 - 3.0 * t * b0_xx**2 * q**5
    return b0, b_x, b_xx, b_xxx


def burgers_residual(params: SmoothFanParams, t: float, grid: Grid1D, dt: float | None = None) -> float:
    """Max of |B̄_t + B̄B̄ₓ| with both derivatives taken by central differences."""
    dt = grid.dx if dt is None else dt
    if t - dt < 0.0:
        raise DomainError(f"central time difference needs t >= dt, got t={t}, dt={dt}")
    x = grid.centers
    b_now = burgers_smooth(params, t, x)[0]
    b_t = (burgers_smooth(params, t + dt, x)[0] - burgers_smooth(params, t - dt, x)[0]) / (2.0 * dt)
    b_x = (b_now[2:] - b_now[:-2]) / (2.0 * grid.dx)
    return float(np.max(np.abs(b_t[1:-1] + b_now[1:-1] * b_x)))


# =============================================================================
# SMOOTH RAREFACTION
# =============================================================================


def smooth_rarefaction(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    t: float,
    x1: ArrayLike,
) -> ProfileSample:
    """
    Smooth 3-rarefaction (ρ̄, v̄₁, θ̄) solving λ₃ = B̄ with constant 3-invariants.

    Raises:
        ContractError: fan edges do not match λ₃ of the end states
    """
    b_minus, b_plus = data.wave_speeds(gas)
    if abs(b_minus - params.b_minus) > 1e-10 or abs(b_plus - params.b_plus) > 1e-10:
        raise ContractError("SmoothFanParams edges must equal lambda_3 of the Riemann end states")

    x1 = np.asarray(x1, dtype=np.float64)
    b, b_x, b_xx, b_xxx = burgers_smooth(params, t, x1)
    state = _state_on_curve(gas, data, b)

    g = gas.gamma
    k = (g - 1.0) / (g + 1.0)
    n = 2.0 / (g - 1.0)
    big_k = data.density_factor(gas)
    gr = g * gas.R

    c = (g - 1.0) * (b - data.sigma1(gas)) / (g + 1.0)
    c_x, c_xx, c_xxx = k * b_x, k * b_xx, k * b_xxx
    v_x, v_xx, v_xxx = b_x - c_x, b_xx - c_xx, b_xxx - c_xxx

    theta_x = 2.0 * c * c_x / gr
    theta_xx = 2.0 * (c_x**2 + c * c_xx) / gr
    theta_xxx = 2.0 * (3.0 * c_x * c_xx + c * c_xxx) / gr

    rho_x = big_k * n * c ** (n - 1.0) * c_x
    rho_xx = big_k * n * ((n - 1.0) * c ** (n - 2.0) * c_x**2 + c ** (n - 1.0) * c_xx)
    rho_xxx = big_k * n * (
        (n - 1.0) * (n - 2.0) * c ** (n - 3.0) * c_x**3
        + 3.0 * (n - 1.0) * c ** (n - 2.0) * c_x * c_xx
        + c ** (n - 1.0) * c_xxx
    )

    return ProfileSample(
        t=t,
        x1=x1,
        state=state,
        b=b,
        d1=np.stack([rho_x, v_x, theta_x]),
        d2=np.stack([rho_xx, v_xx, theta_xx]),
        d3=np.stack([rho_xxx, v_xxx, theta_xxx]),
    )


def density_slope_constant(
    gas: GasModel, data: RiemannData, sample: ProfileSample
) -> tuple[NDArray[np.float64], float]:
    """
    Measured ratio ρ̄ₓ/(ρ̄^{(3−γ)/2} v̄₁ₓ) on the sample and its closed form 1/√(Rγρ₊^{1−γ}θ₊).

    Cells where v̄₁ₓ underflows are returned as NaN.
    """
    rho_x, v_x = sample.d1[0], sample.d1[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = rho_x / (sample.state.rho ** ((3.0 - gas.gamma) / 2.0) * v_x)
    ratio = np.where(v_x > 1e-300, ratio, np.nan)
    rho_plus, theta_plus = float(data.right.rho), float(data.right.theta)
    closed = 1.0 / math.sqrt(gas.R * gas.gamma * rho_plus ** (1.0 - gas.gamma) * theta_plus)
    return ratio, closed


def predicted_decay_scale(order: int, p: float, delta: float, t: float) -> float:
    """(δ+t)^{−1+1/p}, (δ+t)^{−1}δ^{−1+1/p}, (δ+t)^{−1}δ^{−2+1/p} for orders 1, 2, 3."""
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if order == 1:
        return (delta + t) ** (-1.0 + inv_p)
    if order in (2, 3):
        return (delta + t) ** (-1.0) * delta ** (-(order - 1) + inv_p)
    raise ContractError(f"decay scales exist for orders 1..3, got {order}")


def derivative_decay_norms(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    t: float,
    p: float | list[float],
    grid: Grid1D,
) -> NormTable:
    """
    Discrete L^p norms of the first three x₁-derivatives of (ρ̄, v̄₁, θ̄).

    Raises:
        ResolutionError: fewer than 16 cells across δ
    """
    grid.require_resolution(params.delta)
    p_values = p if isinstance(p, list) else [p]
    sample = smooth_rarefaction(gas, data, params, t, grid.centers)
    table = NormTable(t=t, delta=params.delta)
    for order in (1, 2, 3):
        derivs = sample.derivative(order)
        for p_value in p_values:
            scale = predicted_decay_scale(order, p_value, params.delta, t)
            for index, name in enumerate(FIELD_NAMES):
                value = lp_norm(derivs[index], grid.dx, p_value)
                table.rows.append(NormRow(name, order, float(p_value), value, scale))
    return table


def fit_decay_laws(
    gas: GasModel,
    data: RiemannData,
    deltas: list[float],
    t: float,
    p_values: list[float],
    cells_per_delta: int = 24,
    slope_tolerance: float = 0.1,
    ratio_band: float = 2.0,
) -> list[DecayFit]:
    """
    Compare measured derivative norms with their predicted scale across a δ-sweep.

    Families whose predicted scale barely moves over the sweep (log-range below
    0.5, e.g. ‖v̄₁ₓ‖_{L¹}) are judged by the spread of value/scale instead of a slope.
    """
    tables = []
    for delta in deltas:
        params = SmoothFanParams.for_data(gas, data, delta)
        grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, t, cells_per_delta)
        tables.append(derivative_decay_norms(gas, data, params, t, list(p_values), grid))

    fits = []
    for order in (1, 2, 3):
        for p in p_values:
            for name in FIELD_NAMES:
                rows = [table.lookup(name, order, float(p)) for table in tables]
                scales = np.array([row.predicted_scale for row in rows])
                values = np.array([row.value for row in rows])
                ratios = values / scales
                spread = float(np.max(ratios) / np.min(ratios))
                if np.ptp(np.log(scales)) < MIN_LOG_RANGE:
                    fits.append(DecayFit(name, order, float(p), "ratio", None, spread, spread <= ratio_band))
                else:
                    slope = fit_power_law(scales, values).slope
                    passed = abs(slope - 1.0) <= slope_tolerance
                    fits.append(DecayFit(name, order, float(p), "slope", slope, spread, passed))
    logger.debug(f"Decay-law fits at t={t}: {sum(f.passed for f in fits)}/{len(fits)} within tolerance")
    return fits


def fan_distance(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    t: float,
    grid: Grid1D,
) -> float:
    """Grid sup of |(ρ̄, v̄₁, θ̄)(t, ·) − (ρʳ, v₁ʳ, θʳ)(·/t)| over all three components."""
    if t <= 0.0:
        raise DomainError(f"fan distance needs t > 0, got {t}")
    x = grid.centers
    smooth = smooth_rarefaction(gas, data, params, t, x).state.stack()
    exact = exact_fan(gas, data, t, x).stack()
    return float(np.max(np.abs(smooth - exact)))


def fan_distance_envelope(delta: float, t: float) -> float:
    """δ[ln(1+t) + |ln δ|]/t, the decay envelope of the fan distance."""
    if t <= 0.0 or not 0.0 < delta < 1.0:
        raise DomainError(f"fan envelope needs t > 0 and 0 < delta < 1, got t={t}, delta={delta}")
    return delta * (math.log1p(t) + abs(math.log(delta))) / t


def fan_distance_ratios(
    gas: GasModel,
    data: RiemannData,
    deltas: list[float],
    t: float = 1.0,
    cells_per_delta: int = 16,
) -> NDArray[np.float64]:
    """fan_distance / fan_distance_envelope along a δ-sweep; a bounded spread means the envelope is sharp."""
    ratios = []
    for delta in deltas:
        params = SmoothFanParams.for_data(gas, data, delta)
        grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, t, cells_per_delta)
        ratios.append(fan_distance(gas, data, params, t, grid) / fan_distance_envelope(delta, t))
    logger.debug(f"Fan distance over envelope at t={t}: {np.round(ratios, 4).tolist()}")
    return np.array(ratios)
