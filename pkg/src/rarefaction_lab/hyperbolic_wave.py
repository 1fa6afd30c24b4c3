"""
Hyperbolic correction wave around the smooth rarefaction.

z = (z₁, z₂, z₃) solves the linearized Euler system with the dissipation of
the smooth wave as source and zero initial data. It is integrated in the
diagonal coordinates Z = L̄z, where the (Z₁, Z₂) subsystem does not see Z₃:

    Z_t + (Λ̄Z)ₓ = (L̄ₓR̄)(Λ̄ − λ̄₃I) Z + L̄ (0, s₂, s₃)ᵀ

Every transport equation is upwinded with face speeds split by sign and
coefficients are re-evaluated from the closed-form profile every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .errors import ConfigurationError, ContractError, DivergenceError, DomainError, FitError
from .fitting import fit_power_law
from .gas_dynamics import (
    eigenvalues,
    left_eigenvector_derivatives,
    left_eigenvectors,
    right_eigenvector_derivatives,
    right_eigenvectors,
)
from .grid import Grid1D, lp_norm, output_times
from .models import GasModel
from .rarefaction_waves import ProfileSample, RiemannData, SmoothFanParams, delta_rule, smooth_rarefaction

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.45


@dataclass
class HwSource:
    """Momentum and energy sources carried by the dissipation of the smooth wave."""

    s2: NDArray[np.float64]
    s3: NDArray[np.float64]


@dataclass
class WaveCoefficients:
    """Eigen-structure of the smooth wave on the grid at one time (cell axis first)."""

    sample: ProfileSample
    lam: NDArray[np.float64]
    right: NDArray[np.float64]
    left: NDArray[np.float64]
    d_left: NDArray[np.float64]
    coupling: NDArray[np.float64]
    source: NDArray[np.float64]


@dataclass
class HyperbolicWaveField:
    """Snapshots of z and Z = L̄z on a uniform grid; arrays are (time, component, cell)."""

    grid: Grid1D
    times: NDArray[np.float64]
    Z: NDArray[np.float64]
    z: NDArray[np.float64]
    eps: float
    delta: float
    energy: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    dissipation: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def index_of(self, t: float) -> int:
        index = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[index] - t) > 1e-9 * max(1.0, abs(t)):
            raise ContractError(f"no snapshot at t={t}; stored times span [{self.times[0]}, {self.times[-1]}]")
        return index

    def scaled(self, factor: float) -> HyperbolicWaveField:
        """Copy with z and Z multiplied pointwise by ``factor``."""
        return replace(
            self,
            Z=self.Z * factor,
            z=self.z * factor,
            energy=self.energy * factor**2,
            dissipation=self.dissipation * factor**2,
        )

    def derivative(self, order: int, index: int = -1, diagonal: bool = False) -> NDArray[np.float64]:
        """
        Central-difference x₁-derivative of order ``order`` of z (or Z).

        The ``order`` cells next to each boundary, where the stencil turns
        one-sided, are dropped.
        """
        values = (self.Z if diagonal else self.z)[index]
        for _ in range(order):
            values = np.gradient(values, self.grid.dx, axis=-1)
        if order:
            values = values[:, order:-order]
        return values

    def derivative_norm(self, order: int, p: float = 2.0, index: int = -1, diagonal: bool = False) -> float:
        return lp_norm(self.derivative(order, index, diagonal), self.grid.dx, p)

    def weighted_energy_constant(self) -> float:
        """max_t (∫|Z|² + ∫₀ᵗ∫v̄₁ₓ|Z|²) / (ε/δ)²; zero when ε = 0."""
        if self.eps == 0.0:
            return 0.0
        return float(np.max(self.energy + self.dissipation) / (self.eps / self.delta) ** 2)

    def to_frame(self) -> pd.DataFrame:
        nt, n = self.times.size, self.grid.n_cells
        columns = {
            "t": np.repeat(self.times, n),
            "x1": np.tile(self.grid.centers, nt),
        }
        for k in range(3):
            columns[f"z{k + 1}"] = self.z[:, k, :].ravel()
        for k in range(3):
            columns[f"Z{k + 1}"] = self.Z[:, k, :].ravel()
        return pd.DataFrame(columns)


@dataclass
class ScalingRow:
    eps: float
    delta: float
    k: int
    l2_norm: float
    l2_scale: float
    sup_norm: float | None
    sup_scale: float | None


@dataclass
class ScalingEntry:
    kind: str
    k: int
    slope: float
    intercept: float
    residual: float


@dataclass
class ScalingFit:
    """Measured ∂ᵏz norms across an ε-sweep and their log-log fits against ε/δ^{k+1} and ε/δ^{3/2+k}."""

    rows: list[ScalingRow] = field(default_factory=list)
    fits: list[ScalingEntry] = field(default_factory=list)

    def slope(self, kind: str, k: int) -> float:
        for entry in self.fits:
            if entry.kind == kind and entry.k == k:
                return entry.slope
        raise KeyError((kind, k))

    def to_json(self) -> list[dict]:
        return [vars(entry) for entry in self.fits]


# =============================================================================
# SOURCES AND COEFFICIENTS
# =============================================================================


def hw_source(gas: GasModel, sample: ProfileSample, eps: float) -> HwSource:
    """
    s₂ = (2μ+λ)ε v̄₁ₓₓ, s₃ = κε θ̄ₓₓ + (2μ+λ)ε (v̄₁v̄₁ₓ)ₓ.

    Raises:
        ContractError: sample lacks first or second derivatives
    """
    d1, d2 = sample.derivative(1), sample.derivative(2)
    v, v_x, v_xx, theta_xx = sample.state.v1, d1[1], d2[1], d2[2]
    s2 = gas.viscosity * eps * v_xx
    s3 = gas.kappa * eps * theta_xx + gas.viscosity * eps * (v_x**2 + v * v_xx)
    return HwSource(s2=s2, s3=s3)


def wave_coefficients(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    eps: float,
    t: float,
    x1: NDArray[np.float64],
) -> WaveCoefficients:
    sample = smooth_rarefaction(gas, data, params, t, x1)
    right = right_eigenvectors(gas, sample.state)
    left = left_eigenvectors(right)
    d_left = left_eigenvector_derivatives(left, right_eigenvector_derivatives(gas, sample.state, sample.d1))
    lam = np.stack(eigenvalues(gas, sample.state), axis=-1)
    coupling = (d_left @ right) * (lam - lam[:, 2:3])[:, None, :]

    src = hw_source(gas, sample, eps)
    rhs = np.stack([np.zeros_like(src.s2), src.s2, src.s3], axis=-1)
    source = np.einsum("nij,nj->ni", left, rhs)
    return WaveCoefficients(sample, lam, right, left, d_left, coupling, source)


def verify_structure_relation(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    t: float,
    grid: Grid1D,
) -> float:
    """
    max |L̄_t + λ̄₃L̄ₓ| over interior cells and matrix entries, by central differences with step dx.

    Raises:
        ResolutionError: grid coarser than δ/16
    """
    grid.require_resolution(params.delta)
    h = grid.dx
    if t < h:
        raise DomainError(f"central time difference needs t >= dx, got t={t}")
    x = grid.centers

    def left_at(time: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        sample = smooth_rarefaction(gas, data, params, time, x)
        return left_eigenvectors(right_eigenvectors(gas, sample.state)), eigenvalues(gas, sample.state)[2]

    left_now, lam3 = left_at(t)
    left_t = (left_at(t + h)[0] - left_at(t - h)[0]) / (2.0 * h)
    left_x = (left_now[2:] - left_now[:-2]) / (2.0 * h)
    residual = left_t[1:-1] + lam3[1:-1, None, None] * left_x
    return float(np.max(np.abs(residual)))


# =============================================================================
# SOLVER
# =============================================================================


def _upwind_divergence(lam: NDArray[np.float64], values: NDArray[np.float64], dx: float) -> NDArray[np.float64]:
    """−(λZ)ₓ with face speeds averaged and split by sign; outflow ghosts on both ends."""
    lam_pad = np.concatenate([lam[..., :1], lam, lam[..., -1:]], axis=-1)
    val_pad = np.concatenate([values[..., :1], values, values[..., -1:]], axis=-1)
    speed = 0.5 * (lam_pad[..., :-1] + lam_pad[..., 1:])
    flux = np.maximum(speed, 0.0) * val_pad[..., :-1] + np.minimum(speed, 0.0) * val_pad[..., 1:]
    return -(flux[..., 1:] - flux[..., :-1]) / dx


def _advance(Z: NDArray[np.float64], coeffs: WaveCoefficients, dt: float, dx: float) -> NDArray[np.float64]:
    """Explicit Euler step: (Z₁, Z₂) first, then Z₃ fed by Z₁, Z₂ at the old level."""
    lam = coeffs.lam.T
    new = np.empty_like(Z)
    k12 = coeffs.coupling[:, :2, :2]
    new[:2] = Z[:2] + dt * (
        _upwind_divergence(lam[:2], Z[:2], dx) + np.einsum("nij,jn->in", k12, Z[:2]) + coeffs.source[:, :2].T
    )
    k3 = coeffs.coupling[:, 2, :2]
    new[2] = Z[2] + dt * (
        _upwind_divergence(lam[2], Z[2], dx) + np.einsum("nj,jn->n", k3, Z[:2]) + coeffs.source[:, 2]
    )
    return new


def solve_hyperbolic_wave(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    eps: float,
    T: float,
    grid: Grid1D,
    times: NDArray[np.float64] | None = None,
    cfl: float = DEFAULT_CFL,
    initial_z3: NDArray[np.float64] | None = None,
) -> HyperbolicWaveField:
    """
    Integrate the hyperbolic wave from zero data up to T and store it at ``times``.

    Args:
        times: Output stamps in [0, T]; 20 per unit time when omitted
        cfl: Courant number against the largest end-state characteristic speed
        initial_z3: Optional Z₃ initial data (used to check the decoupling)

    Raises:
        ResolutionError: grid coarser than δ/16
        ConfigurationError: CFL number outside (0, 1]
        DivergenceError: non-finite values, with the failing time
    """
    grid.require_resolution(params.delta)
    if not 0.0 < cfl <= 1.0:
        raise ConfigurationError(f"CFL number {cfl} violates the upwind stability bound", field="cfl")
    times = output_times(T, 20) if times is None else np.asarray(times, dtype=np.float64)
    if times.size == 0 or times[0] < 0.0 or times[-1] > T + 1e-12 or np.any(np.diff(times) <= 0.0):
        raise ContractError("output times must be increasing and lie in [0, T]")

    x = grid.centers
    dx = grid.dx
    end_speeds = [np.abs(np.stack(eigenvalues(gas, state))) for state in (data.left, data.right)]
    max_speed = float(max(np.max(s) for s in end_speeds))
    dt_max = cfl * dx / max(max_speed, 1e-12)

    Z = np.zeros((3, grid.n_cells))
    if initial_z3 is not None:
        Z[2] = initial_z3

    snapshots_Z, snapshots_z, energy, dissipation = [], [], [], []
    t = 0.0
    dissipated = 0.0
    coeffs = wave_coefficients(gas, data, params, eps, t, x)
    steps = 0
    logger.debug(f"Hyperbolic wave: eps={eps:.3e}, delta={params.delta:.4f}, n={grid.n_cells}, dt_max={dt_max:.3e}")

    for t_out in times:
        while t_out - t > 1e-13 * max(1.0, T):
            step = min(dt_max, t_out - t)
            v_x = coeffs.sample.d1[1]
            dissipated += step * float(np.sum(v_x * np.sum(Z**2, axis=0)) * dx)
            Z = _advance(Z, coeffs, step, dx)
            t = t_out if step == t_out - t else t + step
            steps += 1
            if not np.all(np.isfinite(Z)):
                raise DivergenceError("hyperbolic wave produced non-finite values", t)
            coeffs = wave_coefficients(gas, data, params, eps, t, x)
        snapshots_Z.append(Z.copy())
        snapshots_z.append(np.einsum("nij,jn->in", coeffs.right, Z))
        energy.append(float(np.sum(Z**2) * dx))
        dissipation.append(dissipated)

    logger.debug(f"Hyperbolic wave done after {steps} steps, sup|z(T)|={np.max(np.abs(snapshots_z[-1])):.3e}")
    return HyperbolicWaveField(
        grid=grid,
        times=times,
        Z=np.array(snapshots_Z),
        z=np.array(snapshots_z),
        eps=eps,
        delta=params.delta,
        energy=np.array(energy),
        dissipation=np.array(dissipation),
    )


def diagonal_consistency(
    gas: GasModel,
    data: RiemannData,
    params: SmoothFanParams,
    wave: HyperbolicWaveField,
) -> float:
    """max over snapshots of ‖L̄z − Z‖_∞."""
    worst = 0.0
    for index, t in enumerate(wave.times):
        sample = smooth_rarefaction(gas, data, params, float(t), wave.grid.centers)
        left = left_eigenvectors(right_eigenvectors(gas, sample.state))
        recovered = np.einsum("nij,jn->in", left, wave.z[index])
        worst = max(worst, float(np.max(np.abs(recovered - wave.Z[index]))))
    return worst


def hyperbolic_wave_scaling(
    gas: GasModel,
    data: RiemannData,
    eps_list: list[float],
    b_exponent: float,
    T: float,
    k_max: int = 2,
    deltas: list[float] | None = None,
    cells_per_delta: int = 24,
) -> ScalingFit:
    """
    Measure ‖∂ᵏz(T)‖ along an ε-sweep and fit log-norm against log(ε/δ^{k+1}) (L²)
    and log(ε/δ^{3/2+k}) (sup, k ≤ 2).

    Args:
        deltas: Explicit smoothing widths; δ = ε^b|ln ε| when omitted

    Raises:
        FitError: fewer than three ε values, or vanishing norms
    """
    if len(eps_list) < 3:
        raise FitError(f"scaling fit needs at least 3 eps values, got {len(eps_list)}")
    if not 0 <= k_max <= 3:
        raise ContractError(f"k_max must lie in 0..3, got {k_max}")

    result = ScalingFit()
    for index, eps in enumerate(eps_list):
        delta = deltas[index] if deltas is not None else delta_rule(eps, b_exponent)
        params = SmoothFanParams.for_data(gas, data, delta)
        grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, T, cells_per_delta)
        wave = solve_hyperbolic_wave(gas, data, params, eps, T, grid, times=np.array([0.0, T]))
        for k in range(k_max + 1):
            has_sup = k <= 2
            result.rows.append(
                ScalingRow(
                    eps=eps,
                    delta=delta,
                    k=k,
                    l2_norm=wave.derivative_norm(k, 2.0),
                    l2_scale=eps / delta ** (k + 1),
                    sup_norm=wave.derivative_norm(k, math.inf) if has_sup else None,
                    sup_scale=eps / delta ** (1.5 + k) if has_sup else None,
                )
            )
        l2_norm = result.rows[-k_max - 1].l2_norm
        logger.info(f"✅ Hyperbolic wave eps={eps:.1e} delta={delta:.4f}: |z(T)|_L2={l2_norm:.3e}")

    for k in range(k_max + 1):
        rows = [row for row in result.rows if row.k == k]
        l2 = fit_power_law([r.l2_scale for r in rows], [r.l2_norm for r in rows])
        result.fits.append(ScalingEntry("l2", k, l2.slope, l2.intercept, l2.residual))
        if k <= 2:
            sup = fit_power_law([r.sup_scale for r in rows], [r.sup_norm for r in rows])
            result.fits.append(ScalingEntry("sup", k, sup.slope, sup.intercept, sup.residual))
    return result
