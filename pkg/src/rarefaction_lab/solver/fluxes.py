"""
Numerical fluxes for the Euler part of the Navier-Stokes-Fourier system.

HLLC (Harten-Lax-van Leer-Contact) restores the contact wave missing in HLL
and upwinds star states across the three waves S_L, S_*, S_R. The
tangential momentum of the slab mode is carried passively through the
star states. Rusanov is kept as a diffusive fallback.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from ..gas_dynamics import ConservedState, conservative_pressure
from ..models import GasModel


def euler_flux(gas: GasModel, cstate: ConservedState) -> NDArray[np.float64]:
    """(ρv₁, ρv₁² + p, (𝓔 + p)v₁) stacked along the leading axis."""
    cstate.validate()
    p = conservative_pressure(gas, cstate)
    u = cstate.m1 / cstate.rho
    return np.stack(np.broadcast_arrays(cstate.m1, cstate.m1 * u + p, (cstate.energy + p) * u))


def _safe_denom(x: NDArray[np.float64], eps: float = 1e-30) -> NDArray[np.float64]:
    """Avoid division by zero while preserving sign."""
    return np.where(np.abs(x) < eps, np.where(x >= 0.0, eps, -eps), x)


def _face_states(gas: GasModel, rho, m1, m2, energy):
    u = m1 / rho
    w = m2 / rho
    p = (gas.gamma - 1.0) * (energy - 0.5 * rho * (u * u + w * w))
    c = np.sqrt(gas.gamma * np.maximum(p, 0.0) / rho)
    return u, w, p, c


def hllc_flux(
    gas: GasModel,
    left: NDArray[np.float64],
    right: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    HLLC interface fluxes.

    Args:
        left, right: Face-adjacent conserved states, shape (4, ...) ordered (ρ, m₁, m₂, 𝓔)
            with m₁ normal to the face

    Returns:
        Fluxes of (ρ, m₁, m₂, 𝓔), same shape as the inputs
    """
    rho_L, m1_L, m2_L, E_L = left
    rho_R, m1_R, m2_R, E_R = right
    u_L, w_L, p_L, c_L = _face_states(gas, rho_L, m1_L, m2_L, E_L)
    u_R, w_R, p_R, c_R = _face_states(gas, rho_R, m1_R, m2_R, E_R)

    # Physical fluxes from left/right states
    F_L = np.stack([m1_L, m1_L * u_L + p_L, m2_L * u_L, (E_L + p_L) * u_L])
    F_R = np.stack([m1_R, m1_R * u_R + p_R, m2_R * u_R, (E_R + p_R) * u_R])

    # Wave-speed estimates (Davis bounds)
    S_L = np.minimum(u_L - c_L, u_R - c_R)
    S_R = np.maximum(u_L + c_L, u_R + c_R)

    # Contact wave speed
    sm_num = p_R - p_L + rho_L * u_L * (S_L - u_L) - rho_R * u_R * (S_R - u_R)
    sm_den = _safe_denom(rho_L * (S_L - u_L) - rho_R * (S_R - u_R))
    S_M = sm_num / sm_den

    p_star = p_L + rho_L * (S_L - u_L) * (S_M - u_L)

    den_L = _safe_denom(S_L - S_M)
    den_R = _safe_denom(S_R - S_M)
    rho_star_L = rho_L * (S_L - u_L) / den_L
    rho_star_R = rho_R * (S_R - u_R) / den_R
    U_star_L = np.stack(
        [
            rho_star_L,
            rho_star_L * S_M,
            rho_star_L * w_L,
            ((S_L - u_L) * E_L - p_L * u_L + p_star * S_M) / den_L,
        ]
    )
    U_star_R = np.stack(
        [
            rho_star_R,
            rho_star_R * S_M,
            rho_star_R * w_R,
            ((S_R - u_R) * E_R - p_R * u_R + p_star * S_M) / den_R,
        ]
    )

    return np.where(
        0.0 <= S_L,
        F_L,
        np.where(
            0.0 <= S_M,
            F_L + S_L * (U_star_L - left),
            np.where(0.0 <= S_R, F_R + S_R * (U_star_R - right), F_R),
        ),
    )


def rusanov_flux(
    gas: GasModel,
    left: NDArray[np.float64],
    right: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Local Lax-Friedrichs flux with the largest adjacent |u| + c."""
    rho_L, m1_L, m2_L, E_L = left
    rho_R, m1_R, m2_R, E_R = right
    u_L, _, p_L, c_L = _face_states(gas, rho_L, m1_L, m2_L, E_L)
    u_R, _, p_R, c_R = _face_states(gas, rho_R, m1_R, m2_R, E_R)
    F_L = np.stack([m1_L, m1_L * u_L + p_L, m2_L * u_L, (E_L + p_L) * u_L])
    F_R = np.stack([m1_R, m1_R * u_R + p_R, m2_R * u_R, (E_R + p_R) * u_R])
    speed = np.maximum(np.abs(u_L) + c_L, np.abs(u_R) + c_R)
    return 0.5 * (F_L + F_R) - 0.5 * speed * (right - left)


FLUXES = {
    "hllc": hllc_flux,
    "rusanov": rusanov_flux,
}
