"""
Composite approximate profile: smooth rarefaction plus hyperbolic wave.

Conserved variables add exactly (ρ̃ = ρ̄ + z₁, m̃₁ = m̄₁ + z₂, 𝓔̃ = 𝓔̄ + z₃).
The primitive perturbations are kept in closed form so that z ≡ 0 reproduces
the smooth wave bit for bit:

    ṽ₁ − v̄₁ = w/ρ̃,  w = z₂ − v̄₁z₁
    θ̃ − θ̄ = (γ−1)/(Rρ̃) · [z₃ − Rθ̄z₁/(γ−1) + v̄₁²z₁/2 − v̄₁z₂ − w²/(2ρ̃)]
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .errors import ContractError, ProfileBoundError, ResolutionError
from .gas_dynamics import ConservedState, PrimitiveState, conservative_jacobian, prim_to_cons
from .grid import Grid1D, lp_norm, output_times
from .hyperbolic_wave import HyperbolicWaveField, solve_hyperbolic_wave
from .models import GasModel
from .rarefaction_waves import ProfileSample, RiemannData, SmoothFanParams, smooth_rarefaction
from .solver.fluxes import euler_flux

logger = logging.getLogger(__name__)


@dataclass
class ProfileBounds:
    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float
    satisfied: bool


@dataclass
class ResidualFields:
    Q1: NDArray[np.float64]
    Q2: NDArray[np.float64]
    F1: NDArray[np.float64]
    F2: NDArray[np.float64] | None = None


@dataclass
class SystemResidual:
    """L² norms (interior cells) of the mass, momentum and temperature equation residuals, max over times."""

    mass: float
    momentum: float
    temperature: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.mass, self.momentum, self.temperature


@dataclass
class ResidualRefinement:
    """System residual at two resolutions, dx and snapshot spacing halved together."""

    coarse: SystemResidual
    fine: SystemResidual

    @property
    def orders(self) -> tuple[float, float, float]:
        """log₂ of coarse/fine per equation; inf where the fine residual vanishes."""
        return tuple(
            math.log2(c / f) if f > 0.0 else math.inf
            for c, f in zip(self.coarse.as_tuple(), self.fine.as_tuple(), strict=True)
        )

    @property
    def min_order(self) -> float:
        return min(self.orders)


@dataclass
class CompositeProfile:
    """(ρ̃, ṽ₁, θ̃) on the (t, x₁) grid together with the pieces it was assembled from."""

    gas: GasModel
    wave: HyperbolicWaveField
    smooth: list[ProfileSample]
    rho: NDArray[np.float64]
    v1: NDArray[np.float64]
    theta: NDArray[np.float64]
    m1: NDArray[np.float64]
    energy: NDArray[np.float64]
    w: NDArray[np.float64]
    dv: NDArray[np.float64]
    dtheta: NDArray[np.float64]

    @property
    def times(self) -> NDArray[np.float64]:
        return self.wave.times

    @property
    def grid(self) -> Grid1D:
        return self.wave.grid

    @property
    def eps(self) -> float:
        return self.wave.eps

    def primitive(self, index: int) -> PrimitiveState:
        return PrimitiveState(self.rho[index], self.v1[index], self.theta[index])

    def conserved(self, index: int) -> ConservedState:
        return ConservedState(self.rho[index], self.m1[index], self.energy[index])

    def smooth_conserved(self, index: int) -> ConservedState:
        return prim_to_cons(self.gas, self.smooth[index].state)

    def derivatives(self, index: int) -> dict[str, tuple[NDArray[np.float64], NDArray[np.float64]]]:
        """First and second x₁-derivatives of ρ̃, ṽ₁, θ̃: analytic smooth part plus differenced perturbation."""
        dx = self.grid.dx
        sample = self.smooth[index]
        perturbations = (self.wave.z[index, 0], self.dv[index], self.dtheta[index])
        result = {}
        for k, name in enumerate(("rho", "v1", "theta")):
            first = np.gradient(perturbations[k], dx, edge_order=2)
            second = np.gradient(first, dx, edge_order=2)
            result[name] = (sample.d1[k] + first, sample.d2[k] + second)
        return result


# =============================================================================
# ASSEMBLY
# =============================================================================


def assemble_profile(gas: GasModel, smooth: list[ProfileSample], wave: HyperbolicWaveField) -> CompositeProfile:
    """
    Add the hyperbolic wave to the smooth rarefaction.

    Raises:
        ContractError: sample times or grid differ from the wave's
        ProfileBoundError: ρ̃ or θ̃ not positive (ε too large)
    """
    if len(smooth) != wave.times.size:
        raise ContractError(f"{len(smooth)} smooth samples for {wave.times.size} wave snapshots")
    centers = wave.grid.centers
    for sample, t in zip(smooth, wave.times, strict=True):
        if abs(sample.t - t) > 1e-12 or sample.x1.shape != centers.shape or not np.allclose(sample.x1, centers):
            raise ContractError(f"smooth sample at t={sample.t} does not match the wave grid")

    rho_bar = np.array([s.state.rho for s in smooth])
    v_bar = np.array([s.state.v1 for s in smooth])
    theta_bar = np.array([s.state.theta for s in smooth])
    z1, z2, z3 = wave.z[:, 0], wave.z[:, 1], wave.z[:, 2]

    rho = rho_bar + z1
    if np.any(rho <= 0.0):
        raise ProfileBoundError(f"composite density not positive (min {np.min(rho):.3e}); eps too large")
    w = z2 - v_bar * z1
    dv = w / rho
    g1 = gas.gamma - 1.0
    dtheta = g1 / (gas.R * rho) * (
        z3 - gas.R * theta_bar * z1 / g1 + 0.5 * v_bar**2 * z1 - v_bar * z2 - w**2 / (2.0 * rho)
    )
    theta = theta_bar + dtheta
    if np.any(theta <= 0.0):
        raise ProfileBoundError(f"composite temperature not positive (min {np.min(theta):.3e}); eps too large")

    energy_bar = rho_bar * (gas.R * theta_bar / g1 + 0.5 * v_bar**2)
    return CompositeProfile(
        gas=gas,
        wave=wave,
        smooth=smooth,
        rho=rho,
        v1=v_bar + dv,
        theta=theta,
        m1=rho_bar * v_bar + z2,
        energy=energy_bar + z3,
        w=w,
        dv=dv,
        dtheta=dtheta,
    )


def build_profile(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    eps: float,
    T: float,
    grid: Grid1D,
    times: NDArray[np.float64],
    cfl: float = 0.45,
) -> CompositeProfile:
    """Solve the hyperbolic wave at ``times`` and assemble the composite profile."""
    wave = solve_hyperbolic_wave(gas, data, params, eps, T, grid, times=times, cfl=cfl)
    smooth = [smooth_rarefaction(gas, data, params, float(t), grid.centers) for t in wave.times]
    return assemble_profile(gas, smooth, wave)


def check_profile_bounds(profile: CompositeProfile, data: RiemannData, strict: bool = False) -> ProfileBounds:
    """
    3ρ₋/4 ≤ ρ̃ ≤ ρ₊ + ρ₋/4 and 3θ₋/4 ≤ θ̃ ≤ θ₊ + θ₋/4 over every snapshot.

    Raises:
        ProfileBoundError: bounds violated and ``strict`` is set
    """
    rho_m, rho_p = float(data.left.rho), float(data.right.rho)
    theta_m, theta_p = float(data.left.theta), float(data.right.theta)
    bounds = ProfileBounds(
        rho_min=float(np.min(profile.rho)),
        rho_max=float(np.max(profile.rho)),
        theta_min=float(np.min(profile.theta)),
        theta_max=float(np.max(profile.theta)),
        satisfied=False,
    )
    bounds.satisfied = (
        0.75 * rho_m <= bounds.rho_min
        and bounds.rho_max <= rho_p + 0.25 * rho_m
        and 0.75 * theta_m <= bounds.theta_min
        and bounds.theta_max <= theta_p + 0.25 * theta_m
    )
    if strict and not bounds.satisfied:
        raise ProfileBoundError(f"profile bounds violated: {bounds}")
    return bounds


# =============================================================================
# RESIDUALS
# =============================================================================


def flux_remainders(profile: CompositeProfile, index: int) -> NDArray[np.float64]:
    """Defining form: f(Ũ) − f(Ū) − A(Ū)z, stacked (3, n)."""
    z = profile.wave.z[index]
    smooth = profile.smooth_conserved(index)
    jacobian = conservative_jacobian(profile.gas, smooth)
    linear = np.einsum("nij,jn->in", jacobian, z)
    return euler_flux(profile.gas, profile.conserved(index)) - euler_flux(profile.gas, smooth) - linear


def compact_remainders(profile: CompositeProfile, index: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Closed forms of the momentum and energy flux remainders.

    G = (3−γ)/(2ρ̃) w²
    H = (w/ρ̃)[γz₃ − (γ−1)v̄₁z₂ − Rγθ̄z₁/(γ−1) + (γ−2)v̄₁²z₁/2] − (γ−1)ṽ₁w²/(2ρ̃)
    """
    g = profile.gas.gamma
    z1, z2, z3 = profile.wave.z[index]
    state = profile.smooth[index].state
    v_bar, theta_bar = state.v1, state.theta
    rho, w, v = profile.rho[index], profile.w[index], profile.v1[index]
    big_g = (3.0 - g) / (2.0 * rho) * w**2
    big_h = (w / rho) * (
        g * z3
        - (g - 1.0) * v_bar * z2
        - profile.gas.R * g * theta_bar * z1 / (g - 1.0)
        + 0.5 * (g - 2.0) * v_bar**2 * z1
    ) - (g - 1.0) * v * w**2 / (2.0 * rho)
    return big_g, big_h


def residual_q1(profile: CompositeProfile, index: int, form: str = "compact") -> NDArray[np.float64]:
    """Q₁ = [(3−γ)/(2ρ̃)(v̄₁z₁ − z₂)²]ₓ, from the compact form or the flux-difference definition."""
    if form == "compact":
        remainder = compact_remainders(profile, index)[0]
    elif form == "defining":
        remainder = flux_remainders(profile, index)[1]
    else:
        raise ContractError(f"unknown residual form '{form}'")
    return np.gradient(remainder, profile.grid.dx, edge_order=2)


def residual_q2(profile: CompositeProfile, index: int, form: str = "compact") -> NDArray[np.float64]:
    """Q₂ = Hₓ − (2μ+λ)εv̄₁ₓₓ w/ρ̃ − ṽ₁Q₁ (temperature-equation remainder)."""
    dx = profile.grid.dx
    if form == "compact":
        momentum, energy = compact_remainders(profile, index)
    elif form == "defining":
        remainders = flux_remainders(profile, index)
        momentum, energy = remainders[1], remainders[2]
    else:
        raise ContractError(f"unknown residual form '{form}'")
    v_xx = profile.smooth[index].d2[1]
    viscous = profile.gas.viscosity * profile.eps * v_xx * profile.w[index] / profile.rho[index]
    q1 = np.gradient(momentum, dx, edge_order=2)
    return np.gradient(energy, dx, edge_order=2) - viscous - profile.v1[index] * q1


def residual_f1(profile: CompositeProfile, index: int) -> NDArray[np.float64]:
    """F₁ = −κε(θ̃ₓₓ − θ̄ₓₓ) − (2μ+λ)ε(ṽ₁ₓ² − v̄₁ₓ²)."""
    dx = profile.grid.dx
    gas, eps = profile.gas, profile.eps
    dtheta_xx = np.gradient(np.gradient(profile.dtheta[index], dx, edge_order=2), dx, edge_order=2)
    dv_x = np.gradient(profile.dv[index], dx, edge_order=2)
    v_bar_x = profile.smooth[index].d1[1]
    return -gas.kappa * eps * dtheta_xx - gas.viscosity * eps * dv_x * (2.0 * v_bar_x + dv_x)


def residual_f2(profile: CompositeProfile, index: int, phi: NDArray[np.float64]) -> NDArray[np.float64]:
    """F₂ = −κεθ̄ₓₓφ/ρ̃ − (2μ+λ)εv̄₁ₓ²φ/ρ̃."""
    gas, eps = profile.gas, profile.eps
    sample = profile.smooth[index]
    rho = profile.rho[index]
    return -gas.kappa * eps * sample.d2[2] * phi / rho - gas.viscosity * eps * sample.d1[1] ** 2 * phi / rho


def residual_fields(profile: CompositeProfile, index: int, phi: NDArray[np.float64] | None = None) -> ResidualFields:
    return ResidualFields(
        Q1=residual_q1(profile, index),
        Q2=residual_q2(profile, index),
        F1=residual_f1(profile, index),
        F2=residual_f2(profile, index, phi) if phi is not None else None,
    )


def residual_norm(values: NDArray[np.float64], grid: Grid1D, p: float = 2.0, trim: int = 2) -> float:
    """L^p norm over interior cells; one-sided boundary stencils are excluded."""
    return lp_norm(values[trim:-trim] if trim else values, grid.dx, p)


def profile_system_residual(profile: CompositeProfile) -> SystemResidual:
    """
    Residual of the primitive-form system the composite profile satisfies on interior snapshots:

        ρ̃_t + (ρ̃ṽ₁)ₓ = 0
        (ρ̃ṽ₁)_t + (ρ̃ṽ₁² + Rρ̃θ̃)ₓ = (2μ+λ)εv̄₁ₓₓ + Q₁
        R/(γ−1)[(ρ̃θ̃)_t + (ρ̃ṽ₁θ̃)ₓ] + Rρ̃θ̃ṽ₁ₓ = κεθ̄ₓₓ + (2μ+λ)εv̄₁ₓ² + Q₂

    Q₁ and Q₂ enter in their compact forms. Time derivatives are central
    differences over neighbouring snapshots, space derivatives central
    differences on the grid.

    Raises:
        ResolutionError: fewer than three snapshots
    """
    times = profile.times
    if times.size < 3:
        raise ResolutionError(f"time derivatives need at least 3 snapshots, got {times.size}")
    gas, eps, dx = profile.gas, profile.eps, profile.grid.dx
    rho, v, theta = profile.rho, profile.v1, profile.theta
    m = rho * v
    rho_t = np.gradient(rho, times, axis=0)
    m_t = np.gradient(m, times, axis=0)
    heat_t = np.gradient(rho * theta, times, axis=0)
    cv = gas.R / (gas.gamma - 1.0)

    def d_x(values: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.gradient(values, dx, edge_order=2)

    worst = np.zeros(3)
    for i in range(1, times.size - 1):
        sample = profile.smooth[i]
        mass = rho_t[i] + d_x(m[i])
        momentum = (
            m_t[i]
            + d_x(m[i] * v[i] + gas.R * rho[i] * theta[i])
            - gas.viscosity * eps * sample.d2[1]
            - residual_q1(profile, i)
        )
        temperature = (
            cv * (heat_t[i] + d_x(m[i] * theta[i]))
            + gas.R * rho[i] * theta[i] * d_x(v[i])
            - gas.kappa * eps * sample.d2[2]
            - gas.viscosity * eps * sample.d1[1] ** 2
            - residual_q2(profile, i)
        )
        for k, residual in enumerate((mass, momentum, temperature)):
            worst[k] = max(worst[k], residual_norm(residual, profile.grid))
    return SystemResidual(float(worst[0]), float(worst[1]), float(worst[2]))


def system_residual_refinement(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    eps: float,
    T: float,
    grid: Grid1D,
    snapshots_per_unit: int = 10,
    cfl: float = 0.45,
) -> ResidualRefinement:
    """
    System residual on ``grid`` and on the twice refined grid with twice as many snapshots.

    Raises:
        ResolutionError: fewer than three snapshots on the coarse level
    """
    levels = []
    for level_grid, per_unit in ((grid, snapshots_per_unit), (grid.refined(), 2 * snapshots_per_unit)):
        profile = build_profile(gas, data, params, eps, T, level_grid, output_times(T, per_unit), cfl=cfl)
        levels.append(profile_system_residual(profile))
    refinement = ResidualRefinement(coarse=levels[0], fine=levels[1])
    logger.debug(f"System residual orders (mass, momentum, temperature): {refinement.orders}")
    return refinement


def residual_frame(profile: CompositeProfile, indices: list[int] | None = None) -> pd.DataFrame:
    """Long table (t, x₁, Q1, Q2, F1) for plotting."""
    indices = list(range(profile.times.size)) if indices is None else indices
    frames = []
    for index in indices:
        fields = residual_fields(profile, index)
        frames.append(
            pd.DataFrame(
                {
                    "t": np.full(profile.grid.n_cells, profile.times[index]),
                    "x1": profile.grid.centers,
                    "Q1": fields.Q1,
                    "Q2": fields.Q2,
                    "F1": fields.F1,
                }
            )
        )
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["t", "x1", "Q1", "Q2", "F1"])
