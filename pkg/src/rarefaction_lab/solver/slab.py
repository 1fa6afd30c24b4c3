"""
2D slab mode: the planar problem on ℝ × (periodic x₂).

The conserved field has shape (4, n1, n2) ordered (ρ, m₁, m₂, 𝓔). x₁ faces use
the pinned far-field ghosts of the planar run, x₂ is wrapped periodically.
With x₂-independent data every column evolves exactly like the 1D solver.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from numpy.typing import NDArray

from ..errors import ConfigurationError
from ..gas_dynamics import PrimitiveState, prim_to_cons
from .core import SolverConfig, Trajectory, _bump, check_admissible, check_domain
from .fluxes import FLUXES

logger = logging.getLogger(__name__)


def slab_spacing(config: SolverConfig) -> float:
    return config.period2 / config.n2


def slab_centers(config: SolverConfig) -> NDArray[np.float64]:
    return (np.arange(config.n2) + 0.5) * slab_spacing(config)


def extrude(planar: NDArray[np.float64], n2: int) -> NDArray[np.float64]:
    """(3, n) planar conserved field → (4, n, n2) slab field with m₂ = 0."""
    rho, m1, energy = planar
    zeros = np.zeros_like(rho)
    return np.repeat(np.stack([rho, m1, zeros, energy])[:, :, None], n2, axis=2)


def transverse_perturbation(
    config: SolverConfig,
    planar: PrimitiveState,
    amplitude: float,
    mode: int = 1,
    width: float = 1.0,
    seed: int = 0,
) -> NDArray[np.float64]:
    """
    Slab initial data: the planar state plus v₂ = a·bump(x₁/width)·sin(2πk x₂/period + phase).

    The phase is drawn from ``seed``; ρ and θ are left untouched.
    """
    phase = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi)
    x1 = config.grid.centers
    x2 = slab_centers(config)
    profile = _bump(x1 / width)[:, None] * np.sin(2.0 * math.pi * mode * x2 / config.period2 + phase)[None, :]
    rho = np.repeat(np.asarray(planar.rho)[:, None], config.n2, axis=1)
    v1 = np.repeat(np.asarray(planar.v1)[:, None], config.n2, axis=1)
    theta = np.repeat(np.asarray(planar.theta)[:, None], config.n2, axis=1)
    state = prim_to_cons(config.gas, PrimitiveState(rho, v1, theta, amplitude * profile))
    return np.stack([state.rho, state.m1, np.broadcast_to(state.m2, rho.shape), state.energy])


def _primitives(gas, U):
    rho, m1, m2, energy = U
    u = m1 / rho
    w = m2 / rho
    theta = (gas.gamma - 1.0) * (energy - 0.5 * rho * (u * u + w * w)) / (gas.R * rho)
    return u, w, theta


def stable_dt_slab(config: SolverConfig, U: NDArray[np.float64]) -> float:
    """cfl · min(1/((|u|+c)/dx + (|w|+c)/dy), min(dx,dy)²ρ/(4ε·max(2μ+λ, κ(γ−1)/R)))."""
    gas = config.gas
    u, w, theta = _primitives(gas, U)
    c = np.sqrt(gas.gamma * gas.R * theta)
    dx, dy = config.grid.dx, slab_spacing(config)
    dt = float(np.min(1.0 / ((np.abs(u) + c) / dx + (np.abs(w) + c) / dy)))
    if config.eps > 0.0 and config.viscous:
        dt = min(dt, float(np.min(min(dx, dy) ** 2 * U[0] / (4.0 * config.eps * config.dissipation_number))))
    return config.cfl * dt


def _x1_fluxes(config: SolverConfig, U: NDArray[np.float64]) -> NDArray[np.float64]:
    gas, eps = config.gas, config.eps
    left, right = config.far_field
    n2 = U.shape[2]

    def ghost(state):
        rho, m1, energy = state
        return np.repeat(np.array([rho, m1, 0.0, energy])[:, None, None], n2, axis=2)

    padded = np.concatenate([ghost(left), U, ghost(right)], axis=1)
    flux = FLUXES[config.flux](gas, padded[:, :-1], padded[:, 1:])

    if config.viscous:
        dx, dy = config.grid.dx, slab_spacing(config)
        u, w, theta = _primitives(gas, padded)
        u_x = (u[1:] - u[:-1]) / dx
        w_x = (w[1:] - w[:-1]) / dx
        theta_x = (theta[1:] - theta[:-1]) / dx
        u_y = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2.0 * dy)
        w_y = (np.roll(w, -1, axis=1) - np.roll(w, 1, axis=1)) / (2.0 * dy)
        u_y_face = 0.5 * (u_y[1:] + u_y[:-1])
        w_y_face = 0.5 * (w_y[1:] + w_y[:-1])
        u_face = 0.5 * (u[1:] + u[:-1])
        w_face = 0.5 * (w[1:] + w[:-1])
        tau11 = gas.viscosity * eps * u_x + gas.lam * eps * w_y_face
        tau12 = gas.mu * eps * (u_y_face + w_x)
        heat = gas.kappa * eps * theta_x
        flux[1] -= tau11
        flux[2] -= tau12
        flux[3] -= u_face * tau11 + w_face * tau12 + heat
    return flux


def _x2_fluxes(config: SolverConfig, U: NDArray[np.float64]) -> NDArray[np.float64]:
    """Fluxes through the faces j+1/2, j = 0..n2−1 (the last one wraps)."""
    gas, eps = config.gas, config.eps
    upper = np.roll(U, -1, axis=2)
    swap = [0, 2, 1, 3]
    flux = FLUXES[config.flux](gas, U[swap], upper[swap])[swap]

    if config.viscous:
        dx, dy = config.grid.dx, slab_spacing(config)
        left, right = config.far_field
        u, w, theta = _primitives(gas, U)
        u_up, w_up, theta_up = _primitives(gas, upper)
        u_y = (u_up - u) / dy
        w_y = (w_up - w) / dy
        theta_y = (theta_up - theta) / dy

        def x_derivative(values, ghost_left, ghost_right):
            edge = (1, values.shape[1])
            padded = np.concatenate([np.full(edge, ghost_left), values, np.full(edge, ghost_right)])
            return (padded[2:] - padded[:-2]) / (2.0 * dx)

        u_left, u_right = left[1] / left[0], right[1] / right[0]
        u_x = x_derivative(u, u_left, u_right)
        w_x = x_derivative(w, 0.0, 0.0)
        u_x_face = 0.5 * (u_x + np.roll(u_x, -1, axis=1))
        w_x_face = 0.5 * (w_x + np.roll(w_x, -1, axis=1))
        u_face = 0.5 * (u + u_up)
        w_face = 0.5 * (w + w_up)
        tau21 = gas.mu * eps * (u_y + w_x_face)
        tau22 = gas.viscosity * eps * w_y + gas.lam * eps * u_x_face
        heat = gas.kappa * eps * theta_y
        flux[1] -= tau21
        flux[2] -= tau22
        flux[3] -= u_face * tau21 + w_face * tau22 + heat
    return flux


def _rhs_slab(config: SolverConfig, U: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    dx, dy = config.grid.dx, slab_spacing(config)
    f1 = _x1_fluxes(config, U)
    f2 = _x2_fluxes(config, U)
    dUdt = -(f1[:, 1:] - f1[:, :-1]) / dx - (f2 - np.roll(f2, 1, axis=2)) / dy
    inflow = (f1[:, 0] - f1[:, -1]).sum(axis=-1) * dy
    return dUdt, inflow


def step_slab(
    config: SolverConfig,
    U: NDArray[np.float64],
    dt: float,
    t: float = 0.0,
    ledger: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """One SSP-RK2 step of the slab system; ``ledger`` accumulates the x₁ boundary inflow."""
    k1, inflow1 = _rhs_slab(config, U)
    stage = U + dt * k1
    k2, inflow2 = _rhs_slab(config, stage)
    new = 0.5 * U + 0.5 * (stage + dt * k2)
    if ledger is not None:
        ledger += 0.5 * dt * (inflow1 + inflow2)
    check_admissible(config.gas, new, t + dt)
    return new


def run_2d_slab(config: SolverConfig) -> Trajectory:
    """
    Integrate the slab system to T with snapshots at ``config.times``.

    The trajectory diagnostics carry ‖v₂(t)‖_{L²} per snapshot under ``v2_l2``.

    Raises:
        ConfigurationError: bad initial shape or too narrow domain
        DivergenceError: propagated with the failing time
    """
    if config.source is not None:
        raise ConfigurationError("source terms are only supported in the planar mode", field="solver.mode")
    if config.boundary != "dirichlet":
        raise ConfigurationError("the slab mode uses far-field boundaries in x1", field="solver.mode")
    if config.check_domain:
        check_domain(config)
    U = np.array(config.initial, dtype=np.float64, copy=True)
    expected = (4, config.grid.n_cells, config.n2)
    if U.shape != expected:
        raise ConfigurationError(f"slab initial data must have shape {expected}, got {U.shape}")
    check_admissible(config.gas, U, 0.0)

    cell_area = config.grid.dx * slab_spacing(config)
    inflow = np.zeros(4)
    snapshots, totals, inflows, v2_norms = [], [], [], []
    t = 0.0
    for t_out in config.times:
        while t_out - t > 1e-13 * max(1.0, config.T):
            dt = config.fixed_dt if config.fixed_dt is not None else stable_dt_slab(config, U)
            step = min(dt, t_out - t)
            U = step_slab(config, U, step, t, ledger=inflow)
            t = t_out if step == t_out - t else t + step
        snapshots.append(U.copy())
        totals.append(U.sum(axis=(1, 2)) * cell_area)
        inflows.append(inflow.copy())
        v2_norms.append(math.sqrt(float(np.sum((U[2] / U[0]) ** 2)) * cell_area))

    logger.debug(f"Slab run finished: eps={config.eps:.3e}, n1={config.grid.n_cells}, n2={config.n2}")
    return Trajectory(
        gas=config.gas,
        grid=config.grid,
        times=np.asarray(config.times, dtype=np.float64),
        snapshots=snapshots,
        totals=np.array(totals),
        inflow=np.array(inflows),
        diagnostics={"v2_l2": np.array(v2_norms)},
        cell_volume=cell_area,
    )
