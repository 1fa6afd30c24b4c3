"""Finite-volume Navier-Stokes-Fourier solver: planar and slab modes."""

from .core import (
    ManufacturedSolution,
    SolverConfig,
    Trajectory,
    conserved_field,
    inject_perturbation,
    riemann_initial,
    run_1d,
    stable_dt,
    step_1d,
)
from .fluxes import FLUXES, euler_flux, hllc_flux, rusanov_flux
from .slab import extrude, run_2d_slab, transverse_perturbation

__all__ = [
    "FLUXES",
    "ManufacturedSolution",
    "SolverConfig",
    "Trajectory",
    "conserved_field",
    "euler_flux",
    "extrude",
    "hllc_flux",
    "inject_perturbation",
    "riemann_initial",
    "run_1d",
    "run_2d_slab",
    "rusanov_flux",
    "stable_dt",
    "step_1d",
    "transverse_perturbation",
]
