"""
Ideal polytropic gas thermodynamics and the Euler eigensystem.

All functions accept scalars or numpy arrays and broadcast. Matrices are
returned with the 3×3 block in the trailing two axes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConditioningError, DomainError
from .models import GasModel

logger = logging.getLogger(__name__)

# States with c² below this are treated as vacuum
VACUUM_SOUND_SPEED_SQ = 1e-12


def _as_array(value: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(value, dtype=np.float64)


def _require_positive(name: str, value: NDArray[np.float64]) -> None:
    if not np.all(np.isfinite(value)) or np.any(value <= 0.0):
        bad = value[~(np.isfinite(value) & (value > 0.0))] if value.ndim else value
        raise DomainError(f"{name} must be positive and finite, got {np.ravel(bad)[:3]}")


@dataclass(frozen=True)
class PrimitiveState:
    """Density, velocity and temperature; fields may be scalars or arrays of equal shape."""

    rho: NDArray[np.float64]
    v1: NDArray[np.float64]
    theta: NDArray[np.float64]
    v2: NDArray[np.float64] = field(default_factory=lambda: np.float64(0.0))

    def __post_init__(self):
        for name in ("rho", "v1", "theta", "v2"):
            object.__setattr__(self, name, _as_array(getattr(self, name)))

    def validate(self) -> PrimitiveState:
        _require_positive("rho", self.rho)
        _require_positive("theta", self.theta)
        return self

    def take(self, index) -> PrimitiveState:
        """Sub-sample every field (fields that are scalars are kept as they are)."""
        return PrimitiveState(*(f[index] if np.ndim(f) else f for f in (self.rho, self.v1, self.theta, self.v2)))

    def stack(self) -> NDArray[np.float64]:
        """(ρ, v₁, θ) stacked along a new leading axis."""
        return np.stack(np.broadcast_arrays(self.rho, self.v1, self.theta))


@dataclass(frozen=True)
class ConservedState:
    """Density, momentum and total energy density 𝓔 = ρ(Rθ/(γ−1) + |v|²/2)."""

    rho: NDArray[np.float64]
    m1: NDArray[np.float64]
    energy: NDArray[np.float64]
    m2: NDArray[np.float64] = field(default_factory=lambda: np.float64(0.0))

    def __post_init__(self):
        for name in ("rho", "m1", "energy", "m2"):
            object.__setattr__(self, name, _as_array(getattr(self, name)))

    def internal_energy(self) -> NDArray[np.float64]:
        """𝓔 − |m|²/(2ρ)."""
        return self.energy - (self.m1**2 + self.m2**2) / (2.0 * self.rho)

    def validate(self) -> ConservedState:
        _require_positive("rho", self.rho)
        _require_positive("internal energy", self.internal_energy())
        return self

    def stack(self) -> NDArray[np.float64]:
        """(ρ, m₁, 𝓔) stacked along a new leading axis."""
        return np.stack(np.broadcast_arrays(self.rho, self.m1, self.energy))

    @classmethod
    def from_array(cls, array: NDArray[np.float64]) -> ConservedState:
        """Build from a stacked (3, ...) array ordered (ρ, m₁, 𝓔) or (4, ...) ordered (ρ, m₁, m₂, 𝓔)."""
        if array.shape[0] == 4:
            return cls(array[0], array[1], array[3], array[2])
        return cls(array[0], array[1], array[2])


# =============================================================================
# THERMODYNAMICS
# =============================================================================


def pressure(gas: GasModel, rho: ArrayLike, theta: ArrayLike) -> NDArray[np.float64]:
    """p = Rρθ."""
    rho, theta = _as_array(rho), _as_array(theta)
    _require_positive("rho", rho)
    _require_positive("theta", theta)
    return gas.R * rho * theta


def entropy(gas: GasModel, rho: ArrayLike, theta: ArrayLike) -> NDArray[np.float64]:
    """S = −R ln ρ + R/(γ−1) ln θ + R/(γ−1) ln(R/A)."""
    rho, theta = _as_array(rho), _as_array(theta)
    _require_positive("rho", rho)
    _require_positive("theta", theta)
    cv = gas.R / (gas.gamma - 1.0)
    return -gas.R * np.log(rho) + cv * np.log(theta) + cv * np.log(gas.R / gas.A)


def pressure_from_entropy(gas: GasModel, rho: ArrayLike, s: ArrayLike) -> NDArray[np.float64]:
    """p = Aρ^γ exp((γ−1)S/R)."""
    rho = _as_array(rho)
    _require_positive("rho", rho)
    return gas.A * rho**gas.gamma * np.exp((gas.gamma - 1.0) * _as_array(s) / gas.R)


def sound_speed(gas: GasModel, rho: ArrayLike, theta: ArrayLike) -> NDArray[np.float64]:
    """c = √(γRθ), the square root of ∂p/∂ρ at constant entropy."""
    rho, theta = _as_array(rho), _as_array(theta)
    _require_positive("rho", rho)
    _require_positive("theta", theta)
    return np.sqrt(gas.gamma * gas.R * theta)


def eigenvalues(
    gas: GasModel, state: PrimitiveState
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """(v₁ − c, v₁, v₁ + c)."""
    c = sound_speed(gas, state.rho, state.theta)
    return state.v1 - c, state.v1 + 0.0, state.v1 + c


def riemann_invariants_3(gas: GasModel, state: PrimitiveState) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """The two 3-Riemann invariants: v₁ − 2c/(γ−1) and the entropy S."""
    c = sound_speed(gas, state.rho, state.theta)
    return state.v1 - 2.0 * c / (gas.gamma - 1.0), entropy(gas, state.rho, state.theta)


# =============================================================================
# VARIABLE CONVERSION
# =============================================================================


def prim_to_cons(gas: GasModel, state: PrimitiveState) -> ConservedState:
    state.validate()
    rho = state.rho
    kinetic = 0.5 * (state.v1**2 + state.v2**2)
    energy = rho * (gas.R * state.theta / (gas.gamma - 1.0) + kinetic)
    return ConservedState(rho, rho * state.v1, energy, rho * state.v2)


def cons_to_prim(gas: GasModel, cstate: ConservedState) -> PrimitiveState:
    cstate.validate()
    rho = cstate.rho
    theta = (gas.gamma - 1.0) * cstate.internal_energy() / (gas.R * rho)
    return PrimitiveState(rho, cstate.m1 / rho, theta, cstate.m2 / rho)


def conservative_pressure(gas: GasModel, cstate: ConservedState) -> NDArray[np.float64]:
    """p = (γ−1)(𝓔 − |m|²/(2ρ))."""
    return (gas.gamma - 1.0) * cstate.internal_energy()


# =============================================================================
# EIGENSYSTEM
# =============================================================================


def conservative_jacobian(gas: GasModel, cstate: ConservedState) -> NDArray[np.float64]:
    """
    Jacobian of the 1D Euler flux with respect to (ρ, m₁, 𝓔).

    Built from the closed-form partials of p(ρ, m₁, 𝓔) = (γ−1)(𝓔 − m₁²/(2ρ)).
    """
    cstate.validate()
    g1 = gas.gamma - 1.0
    rho, m, energy = np.broadcast_arrays(cstate.rho, cstate.m1, cstate.energy)
    p = g1 * (energy - m**2 / (2.0 * rho))
    p_rho = g1 * m**2 / (2.0 * rho**2)
    p_m = -g1 * m / rho
    p_e = np.full_like(rho, g1)
    u = m / rho

    jac = np.zeros(rho.shape + (3, 3))
    jac[..., 0, 1] = 1.0
    jac[..., 1, 0] = -(m**2) / rho**2 + p_rho
    jac[..., 1, 1] = 2.0 * u + p_m
    jac[..., 1, 2] = p_e
    jac[..., 2, 0] = -m * energy / rho**2 + u * p_rho - p * m / rho**2
    jac[..., 2, 1] = energy / rho + u * p_m + p / rho
    jac[..., 2, 2] = u + u * p_e
    return jac


def right_eigenvectors(gas: GasModel, state: PrimitiveState) -> NDArray[np.float64]:
    """
    Columns r₁, r₂, r₃ of the conservative Jacobian.

    Acoustic columns are scaled to a unit first component; r₂ is the
    (p_S, 0, −p_ρ) direction in (ρ, v₁, S) mapped to conservative variables,
    which gives (γ−1)ρθ·(1, v₁, v₁²/2).
    """
    state.validate()
    c = sound_speed(gas, state.rho, state.theta)
    rho, v, theta, c = np.broadcast_arrays(state.rho, state.v1, state.theta, c)
    enthalpy = c**2 / (gas.gamma - 1.0) + 0.5 * v**2
    scale = (gas.gamma - 1.0) * rho * theta

    right = np.empty(rho.shape + (3, 3))
    right[..., :, 0] = np.stack([np.ones_like(v), v - c, enthalpy - v * c], axis=-1)
    right[..., :, 1] = np.stack([scale, scale * v, 0.5 * scale * v**2], axis=-1)
    right[..., :, 2] = np.stack([np.ones_like(v), v + c, enthalpy + v * c], axis=-1)
    return right


def right_eigenvector_derivatives(
    gas: GasModel,
    state: PrimitiveState,
    d_state: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    x₁-derivative of ``right_eigenvectors`` along a profile.

    Args:
        state: Profile values
        d_state: Stacked (ρ_x, v₁_x, θ_x)
    """
    c = sound_speed(gas, state.rho, state.theta)
    rho, v, theta, c = np.broadcast_arrays(state.rho, state.v1, state.theta, c)
    rho_x, v_x, theta_x = (np.broadcast_to(d, rho.shape) for d in d_state)
    g1 = gas.gamma - 1.0

    c_x = gas.gamma * gas.R * theta_x / (2.0 * c)
    enthalpy_x = 2.0 * c * c_x / g1 + v * v_x
    scale = g1 * rho * theta
    scale_x = g1 * (rho_x * theta + rho * theta_x)
    zeros = np.zeros_like(v)

    d_right = np.empty(rho.shape + (3, 3))
    d_right[..., :, 0] = np.stack([zeros, v_x - c_x, enthalpy_x - v_x * c - v * c_x], axis=-1)
    d_right[..., :, 1] = np.stack(
        [scale_x, scale_x * v + scale * v_x, 0.5 * scale_x * v**2 + scale * v * v_x],
        axis=-1,
    )
    d_right[..., :, 2] = np.stack([zeros, v_x + c_x, enthalpy_x + v_x * c + v * c_x], axis=-1)
    return d_right


def left_eigenvectors(right: NDArray[np.float64]) -> NDArray[np.float64]:
    """L as the exact matrix inverse of R."""
    return np.linalg.inv(right)


def left_eigenvector_derivatives(left: NDArray[np.float64], d_right: NDArray[np.float64]) -> NDArray[np.float64]:
    """L_x = −L R_x L."""
    return -left @ d_right @ left


def eigendecompose_jacobian(
    gas: GasModel, cstate: ConservedState
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Diagonalize the conservative Jacobian: L·A·R = Λ, L·R = I.

    Raises:
        ConditioningError: near-vacuum state (c² below 1e−12)
    """
    prim = cons_to_prim(gas, cstate)
    c_sq = gas.gamma * gas.R * prim.theta
    if np.any(c_sq < VACUUM_SOUND_SPEED_SQ):
        raise ConditioningError(f"state too close to vacuum: min c^2 = {np.min(c_sq):.3e}")
    right = right_eigenvectors(gas, prim)
    left = left_eigenvectors(right)
    lam = np.stack(np.broadcast_arrays(*eigenvalues(gas, prim)), axis=-1)
    diag = np.zeros(lam.shape[:-1] + (3, 3))
    idx = np.arange(3)
    diag[..., idx, idx] = lam
    return left, diag, right
