"""
Diagnostics of solver trajectories against the composite profile and the exact fan.

Spatial axes are the trailing axes of every field: (..., n1) for planar runs,
(..., n1, n2) for slab runs, in which case ``spacing`` is the pair (dx₁, dx₂)
and x₂ derivatives wrap periodically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .errors import ContractError, DomainError
from .gas_dynamics import PrimitiveState
from .grid import lp_norm
from .models import GasModel
from .rarefaction_waves import RiemannData, exact_fan
from .solver.core import Trajectory
from .wave_profile import CompositeProfile

logger = logging.getLogger(__name__)

# Highest derivative order a public norm may request
MAX_NORM_ORDER = 2

Spacing = float | tuple[float, float]


# =============================================================================
# DISCRETE NORMS
# =============================================================================


def _derivatives(values: NDArray[np.float64], spacing: Spacing, order: int) -> list[NDArray[np.float64]]:
    """All partial derivatives of the given order (central differences, one-sided at the x₁ ends)."""
    if isinstance(spacing, tuple):
        dx, dy = spacing

        def d1(v):
            return np.gradient(v, dx, axis=-2, edge_order=2)

        def d2(v):
            return (np.roll(v, -1, axis=-1) - np.roll(v, 1, axis=-1)) / (2.0 * dy)

        result = []
        for along_x1 in range(order, -1, -1):
            current = values
            for _ in range(along_x1):
                current = d1(current)
            for _ in range(order - along_x1):
                current = d2(current)
            result.append(current)
        return result

    current = values
    for _ in range(order):
        current = np.gradient(current, spacing, axis=-1, edge_order=2)
    return [current]


def _cell_volume(spacing: Spacing) -> float:
    return spacing[0] * spacing[1] if isinstance(spacing, tuple) else spacing


def _magnitude(values: NDArray[np.float64], spacing: Spacing, order: int) -> NDArray[np.float64]:
    spatial_ndim = 2 if isinstance(spacing, tuple) else 1
    squares = sum(d**2 for d in _derivatives(np.asarray(values, dtype=np.float64), spacing, order))
    component_axes = tuple(range(squares.ndim - spatial_ndim))
    return np.sqrt(np.sum(squares, axis=component_axes)) if component_axes else np.sqrt(squares)


def discrete_norm(values: NDArray[np.float64], spacing: Spacing, p: float = 2.0, order: int = 0) -> float:
    """
    Midpoint-quadrature L^p norm of the order-th derivative of a (vector) field.

    Leading axes are components; the pointwise magnitude is Euclidean over
    components and partial derivatives.

    Raises:
        ContractError: order outside 0..2
    """
    if not 0 <= order <= MAX_NORM_ORDER:
        raise ContractError(f"derivative order {order} is beyond the stored stencil (0..{MAX_NORM_ORDER})")
    return lp_norm(_magnitude(values, spacing, order), _cell_volume(spacing), p)


# =============================================================================
# PERTURBATION AND RELATIVE ENTROPY
# =============================================================================


@dataclass
class PerturbationField:
    """(φ, Ψ, ξ) = (ρ − ρ̃, v − ṽ, θ − θ̃); Ψ carries one row per velocity component."""

    phi: NDArray[np.float64]
    psi: NDArray[np.float64]
    xi: NDArray[np.float64]
    spacing: Spacing

    def stacked(self) -> NDArray[np.float64]:
        return np.concatenate([self.phi[None], self.psi, self.xi[None]])

    def norm(self, order: int = 0, p: float = 2.0) -> float:
        return discrete_norm(self.stacked(), self.spacing, p, order)

    def sup(self) -> float:
        return float(np.max(np.abs(self.stacked())))

    def reconstruct(self, reference: PrimitiveState) -> PrimitiveState:
        """Profile + perturbation."""
        v2 = self.psi[1] if self.psi.shape[0] > 1 else 0.0
        return PrimitiveState(reference.rho + self.phi, reference.v1 + self.psi[0], reference.theta + self.xi, v2)


@dataclass
class EntropyField:
    eta_star: NDArray[np.float64]
    integral: float


@dataclass(frozen=True)
class EquivalenceBand:
    """Range of η*/|(φ, Ψ, ξ)|² over sampled states; C₀ = max(1/lower, upper)."""

    lower: float
    upper: float
    n: int

    @property
    def constant(self) -> float:
        return max(1.0 / self.lower, self.upper)


def _broadcast_reference(reference: PrimitiveState, shape: tuple[int, ...]) -> PrimitiveState:
    def expand(values):
        values = np.asarray(values)
        while values.ndim < len(shape):
            values = values[..., None]
        return np.broadcast_to(values, shape)

    return PrimitiveState(expand(reference.rho), expand(reference.v1), expand(reference.theta), expand(reference.v2))


def perturbation_field(state: PrimitiveState, reference: PrimitiveState, spacing: Spacing) -> PerturbationField:
    """Perturbation of ``state`` against a (planar) reference, broadcast along x₂ in slab runs."""
    reference = _broadcast_reference(reference, np.shape(state.rho))
    psi = [state.v1 - reference.v1]
    if isinstance(spacing, tuple):
        psi.append(np.broadcast_to(state.v2 - reference.v2, np.shape(state.rho)))
    return PerturbationField(state.rho - reference.rho, np.stack(psi), state.theta - reference.theta, spacing)


def phi_function(s: NDArray[np.float64]) -> NDArray[np.float64]:
    """Φ(s) = s − ln s − 1, evaluated as (s−1) − log1p(s−1) to stay nonnegative near s = 1."""
    s = np.asarray(s, dtype=np.float64)
    return (s - 1.0) - np.log1p(s - 1.0)


def relative_entropy(
    gas: GasModel,
    state: PrimitiveState,
    reference: PrimitiveState,
    cell_volume: float = 1.0,
) -> EntropyField:
    """
    η* = Rρθ̃Φ(ρ̃/ρ) + R/(γ−1)·ρθ̃Φ(θ/θ̃) + ½ρ|v − ṽ|².

    Raises:
        DomainError: either field inadmissible
    """
    state.validate()
    reference.validate()
    reference = _broadcast_reference(reference, np.shape(state.rho))
    rho, theta = state.rho, state.theta
    velocity_sq = (state.v1 - reference.v1) ** 2 + (state.v2 - reference.v2) ** 2
    eta = (
        gas.R * rho * reference.theta * phi_function(reference.rho / rho)
        + gas.R / (gas.gamma - 1.0) * rho * reference.theta * phi_function(theta / reference.theta)
        + 0.5 * rho * velocity_sq
    )
    return EntropyField(eta_star=eta, integral=float(np.sum(eta) * cell_volume))


def equivalence_band(
    gas: GasModel,
    center: PrimitiveState,
    radius: float = 0.1,
    n: int = 1000,
    seed: int = 0,
) -> EquivalenceBand:
    """
    Sample n states with |(φ, Ψ, ξ)| ≤ radius around ``center`` and measure η*/|(φ, Ψ, ξ)|².

    Raises:
        DomainError: radius reaches vacuum or zero temperature
    """
    rho0, theta0 = float(center.rho), float(center.theta)
    if radius >= min(rho0, theta0):
        raise DomainError(f"radius {radius} reaches the boundary of the admissible set")
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(3, n))
    directions /= np.linalg.norm(directions, axis=0)
    radii = radius * rng.uniform(0.05, 1.0, size=n) ** (1.0 / 3.0)
    phi, psi, xi = directions * radii
    state = PrimitiveState(rho0 + phi, float(center.v1) + psi, theta0 + xi)
    reference = PrimitiveState(np.full(n, rho0), np.full(n, float(center.v1)), np.full(n, theta0))
    ratios = relative_entropy(gas, state, reference).eta_star / radii**2
    return EquivalenceBand(float(np.min(ratios)), float(np.max(ratios)), n)


# =============================================================================
# DISTANCE TO THE FAN
# =============================================================================


def _spacing(trajectory: Trajectory) -> Spacing:
    if trajectory.snapshots[0].shape[0] == 4:
        return (trajectory.grid.dx, trajectory.cell_volume / trajectory.grid.dx)
    return trajectory.grid.dx


def _window(times: NDArray[np.float64], h: float, T: float) -> NDArray[np.intp]:
    tol = 1e-12 * max(1.0, T)
    indices = np.flatnonzero((times >= h - tol) & (times <= T + tol))
    if indices.size == 0:
        raise ContractError(f"no snapshot in the window [{h}, {T}]")
    return indices


def fan_error_series(gas: GasModel, trajectory: Trajectory, data: RiemannData) -> NDArray[np.float64]:
    """Grid sup of the componentwise distance to the exact fan, per snapshot (NaN at t = 0)."""
    x1 = trajectory.grid.centers
    errors = np.full(trajectory.times.size, np.nan)
    for index, t in enumerate(trajectory.times):
        if t <= 0.0:
            continue
        state = trajectory.primitive(index)
        exact = _broadcast_reference(exact_fan(gas, data, float(t), x1), np.shape(state.rho))
        errors[index] = max(
            float(np.max(np.abs(state.rho - exact.rho))),
            float(np.max(np.abs(state.v1 - exact.v1))),
            float(np.max(np.abs(state.theta - exact.theta))),
        )
    return errors


def sup_error_vs_fan(gas: GasModel, trajectory: Trajectory, data: RiemannData, h: float, T: float) -> float:
    """
    sup over snapshots with t ∈ [h, T] of ‖(ρ, v₁, θ) − fan(x₁/t)‖_∞.

    Raises:
        ContractError: h ≤ 0 or no snapshot in the window
    """
    if h <= 0.0:
        raise ContractError(f"the error window needs h > 0, got {h}")
    indices = _window(trajectory.times, h, T)
    return float(np.max(fan_error_series(gas, trajectory, data)[indices]))


# =============================================================================
# PERTURBATION NORMS
# =============================================================================


@dataclass
class PerturbationSeries:
    """
    Per-snapshot squared norms ‖∇ⁱ(φ, Ψ, ξ)‖², cumulative dissipation ∫ε‖∇^{1+i}(Ψ, ξ)‖²,
    cumulative ∫‖v̄₁ₓ^{1/2}∇ⁱφ‖², the perturbation sup norm and ∫η*.
    """

    times: NDArray[np.float64]
    orders: tuple[int, ...]
    norms: dict[int, NDArray[np.float64]] = field(default_factory=dict)
    dissipation: dict[int, NDArray[np.float64]] = field(default_factory=dict)
    weighted: dict[int, NDArray[np.float64]] = field(default_factory=dict)
    sup: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    entropy: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    entropy_min: float = 0.0

    def max_norm(self, order: int) -> float:
        """sup_t ‖∇ⁱ(φ, Ψ, ξ)(t)‖ (not squared)."""
        if order not in self.norms:
            raise ContractError(f"order {order} was not measured")
        return math.sqrt(float(np.max(self.norms[order])))

    def to_frame(self) -> pd.DataFrame:
        """Long table (t, quantity, value)."""
        columns: dict[str, NDArray[np.float64]] = {}
        for order in self.orders:
            columns[f"norm_sq_{order}"] = self.norms[order]
            columns[f"dissipation_{order}"] = self.dissipation[order]
            columns[f"weighted_{order}"] = self.weighted[order]
        columns["sup"] = self.sup
        columns["relative_entropy"] = self.entropy
        frames = [
            pd.DataFrame({"t": self.times, "quantity": name, "value": values}) for name, values in columns.items()
        ]
        return pd.concat(frames, ignore_index=True)


def _cumulative(times: NDArray[np.float64], values: NDArray[np.float64]) -> NDArray[np.float64]:
    increments = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(increments)])


def perturbation_norms(
    gas: GasModel,
    trajectory: Trajectory,
    profile: CompositeProfile,
    orders: tuple[int, ...] = (0, 1, 2),
    eps: float | None = None,
) -> PerturbationSeries:
    """
    Perturbation of every snapshot against the profile at the same time.

    Raises:
        ContractError: times or grid differ, or an order outside 0..2
    """
    for order in orders:
        if not 0 <= order <= MAX_NORM_ORDER:
            raise ContractError(f"derivative order {order} is beyond the stored stencil (0..{MAX_NORM_ORDER})")
    if trajectory.times.shape != profile.times.shape or not np.allclose(trajectory.times, profile.times, atol=1e-12):
        raise ContractError("trajectory and profile must share their snapshot times")
    if trajectory.grid != profile.grid:
        raise ContractError("trajectory and profile must share their grid")

    eps = profile.eps if eps is None else eps
    spacing = _spacing(trajectory)
    volume = _cell_volume(spacing)
    nt = trajectory.times.size
    norms = {order: np.zeros(nt) for order in orders}
    dissipation_rate = {order: np.zeros(nt) for order in orders}
    weighted_rate = {order: np.zeros(nt) for order in orders}
    sup = np.zeros(nt)
    entropy = np.zeros(nt)
    entropy_min = math.inf

    for index in range(nt):
        state = trajectory.primitive(index)
        reference = profile.primitive(index)
        pert = perturbation_field(state, reference, spacing)
        stacked = pert.stacked()
        sup[index] = pert.sup()
        eta = relative_entropy(gas, state, reference, volume)
        entropy[index] = eta.integral
        entropy_min = min(entropy_min, float(np.min(eta.eta_star)))

        v_bar_x = np.maximum(profile.smooth[index].d1[1], 0.0)
        if isinstance(spacing, tuple):
            v_bar_x = v_bar_x[:, None]
        for order in orders:
            norms[order][index] = lp_norm(_magnitude(stacked, spacing, order), volume, 2.0) ** 2
            velocity_temperature = stacked[1:]
            gradient = _magnitude(velocity_temperature, spacing, order + 1)
            dissipation_rate[order][index] = eps * lp_norm(gradient, volume, 2.0) ** 2
            phi_derivative = _magnitude(pert.phi, spacing, order)
            weighted_rate[order][index] = float(np.sum(v_bar_x * phi_derivative**2) * volume)

    times = trajectory.times
    return PerturbationSeries(
        times=times,
        orders=tuple(orders),
        norms=norms,
        dissipation={order: _cumulative(times, dissipation_rate[order]) for order in orders},
        weighted={order: _cumulative(times, weighted_rate[order]) for order in orders},
        sup=sup,
        entropy=entropy,
        entropy_min=entropy_min,
    )


@dataclass(frozen=True)
class APrioriCheck:
    """max_t ‖∇(φ,Ψ,ξ)‖ and ‖∇²(φ,Ψ,ξ)‖ against ε^{a₁}|ln ε|^{−1} and ε^{a₂}|ln ε|^{−1}."""

    first: float
    second: float
    first_envelope: float
    second_envelope: float

    @property
    def passed(self) -> bool:
        return self.first <= self.first_envelope and self.second <= self.second_envelope

    def to_dict(self) -> dict:
        return {
            "first": self.first,
            "second": self.second,
            "first_envelope": self.first_envelope,
            "second_envelope": self.second_envelope,
            "passed": self.passed,
        }


def a_priori_check(series: PerturbationSeries, eps: float, a1: float = 0.75, a2: float = 0.25) -> APrioriCheck:
    """
    Raises:
        ContractError: orders 1 and 2 missing, or eps outside (0, 1)
    """
    if not 0.0 < eps < 1.0:
        raise ContractError(f"the a priori envelope needs eps in (0, 1), got {eps}")
    log_eps = abs(math.log(eps))
    return APrioriCheck(
        first=series.max_norm(1),
        second=series.max_norm(2),
        first_envelope=eps**a1 / log_eps,
        second_envelope=eps**a2 / log_eps,
    )
