"""
Property suites behind the verify command.

Each suite returns PropertyResult records with the measured value next to
its threshold, so a failing property shows by how much it failed.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import equivalence_band, phi_function, relative_entropy
from .errors import ConfigurationError
from .fitting import fit_power_law
from .gas_dynamics import (
    ConservedState,
    PrimitiveState,
    conservative_jacobian,
    entropy,
    left_eigenvectors,
    pressure,
    pressure_from_entropy,
    prim_to_cons,
    right_eigenvectors,
)
from .grid import Grid1D, output_times
from .hyperbolic_wave import diagonal_consistency, hyperbolic_wave_scaling, solve_hyperbolic_wave
from .models import GasModel, VerifySection
from .rarefaction_waves import (
    RiemannData,
    SmoothFanParams,
    density_slope_constant,
    fan_distance_ratios,
    fit_decay_laws,
    smooth_rarefaction,
)
from .solver.core import ManufacturedSolution, SolverConfig, conserved_field, riemann_initial, run_1d, stable_dt
from .solver.fluxes import euler_flux
from .solver.slab import extrude, run_2d_slab
from .wave_profile import (
    build_profile,
    check_profile_bounds,
    residual_norm,
    residual_q1,
    residual_q2,
    system_residual_refinement,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    measured: float
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def _below(name: str, measured: float, threshold: float) -> PropertyResult:
    return PropertyResult(name, bool(measured <= threshold), float(measured), float(threshold))


def _above(name: str, measured: float, threshold: float) -> PropertyResult:
    return PropertyResult(name, bool(measured >= threshold), float(measured), float(threshold))


def default_data(gas: GasModel) -> RiemannData:
    return RiemannData.from_left(gas, PrimitiveState(1.0, 0.0, 1.0), 0.5)


def random_states(n: int, seed: int) -> PrimitiveState:
    rng = np.random.default_rng(seed)
    return PrimitiveState(rng.uniform(0.5, 3.0, n), rng.uniform(-3.0, 3.0, n), rng.uniform(0.5, 3.0, n))


# =============================================================================
# SUITES
# =============================================================================


def gas_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    states = random_states(section.n_random, section.seed)
    cstate = prim_to_cons(gas, states)
    right = right_eigenvectors(gas, states)
    left = left_eigenvectors(right)
    jac = conservative_jacobian(gas, cstate)

    identity_error = float(np.max(np.abs(left @ right - np.eye(3))))
    diag = left @ jac @ right
    off_diagonal = diag - np.einsum("nii->ni", diag)[..., None] * np.eye(3)
    diagonal_error = float(np.max(np.abs(off_diagonal)))

    def fd_error(step: float) -> float:
        base = cstate.stack()
        fd = np.empty_like(jac)
        for j in range(3):
            shift = np.zeros((3, 1))
            shift[j] = step
            plus = euler_flux(gas, ConservedState.from_array(base + shift))
            minus = euler_flux(gas, ConservedState.from_array(base - shift))
            fd[..., :, j] = ((plus - minus) / (2.0 * step)).T
        return float(np.max(np.abs(fd - jac)))

    order = math.log2(fd_error(1e-2) / fd_error(5e-3))
    round_trip = pressure_from_entropy(gas, states.rho, entropy(gas, states.rho, states.theta))
    entropy_error = float(np.max(np.abs(round_trip / pressure(gas, states.rho, states.theta) - 1.0)))
    return [
        _below("gas.left_right_identity", identity_error, 1e-10),
        _below("gas.diagonalization", diagonal_error, 1e-10),
        _above("gas.jacobian_fd_order", order, 1.9),
        _below("gas.entropy_round_trip", entropy_error, 1e-12),
    ]


def rarefaction_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    data = default_data(gas)
    deltas = [0.4, 0.2, 0.1, 0.05]
    results = []
    for t in (0.0, 1.0):
        fits = fit_decay_laws(gas, data, deltas, t, [1.0, 2.0, math.inf])
        failing = sum(not fit.passed for fit in fits)
        results.append(_below(f"rarefaction.decay_laws_t{t:g}", failing, 0))

    params = SmoothFanParams.for_data(gas, data, 0.1)
    sample = smooth_rarefaction(gas, data, params, 1.0, np.linspace(-1.0, 3.0, 401))
    ratio, closed = density_slope_constant(gas, data, sample)
    results.append(_below("rarefaction.density_slope_constant", float(np.nanmax(np.abs(ratio / closed - 1.0))), 1e-8))
    ratios = fan_distance_ratios(gas, data, [0.1, 0.05, 0.025], t=1.0)
    results.append(_below("rarefaction.fan_distance_band", float(np.max(ratios) / np.min(ratios)), 2.0))
    return results


def hyperbolic_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    data = default_data(gas)
    params = SmoothFanParams.for_data(gas, data, 0.5)
    grid = Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, 1.0)
    zero = solve_hyperbolic_wave(gas, data, params, 0.0, 1.0, grid, times=np.array([0.0, 1.0]))
    wave = solve_hyperbolic_wave(gas, data, params, 0.05, 1.0, grid, times=np.array([0.0, 0.5, 1.0]))
    scaling = hyperbolic_wave_scaling(gas, data, [1e-2, 3e-3, 1e-3, 3e-4], 1.0 / 6.0, 1.0)
    results = [
        _below("hyperbolic.zero_eps", float(np.max(np.abs(zero.z))), 0.0),
        _below("hyperbolic.diagonal_consistency", diagonal_consistency(gas, data, params, wave), 1e-10),
    ]
    for k in range(3):
        results.append(_below(f"hyperbolic.l2_slope_k{k}", abs(scaling.slope("l2", k) - 1.0), 0.15))
    return results


def profile_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    data = default_data(gas)
    eps = 1e-2
    params = SmoothFanParams.from_rule(gas, data, eps, 1.0 / 6.0)
    grid = Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, 1.0)
    profile = build_profile(gas, data, params, eps, 1.0, grid, output_times(1.0, 20))
    q1_gap = max(
        float(np.max(np.abs(residual_q1(profile, i) - residual_q1(profile, i, form="defining"))))
        for i in range(profile.times.size)
    )
    q2_gap = max(
        float(np.max(np.abs(residual_q2(profile, i) - residual_q2(profile, i, form="defining"))))
        for i in range(profile.times.size)
    )
    bounds = check_profile_bounds(profile, data)

    scales, norms = [], []
    for sweep_eps in (1e-2, 3e-3, 1e-3, 3e-4):
        sweep_params = SmoothFanParams.from_rule(gas, data, sweep_eps, 1.0 / 6.0)
        sweep_grid = Grid1D.for_fan(sweep_params.b_minus, sweep_params.b_plus, sweep_params.delta, 1.0)
        final = build_profile(gas, data, sweep_params, sweep_eps, 1.0, sweep_grid, np.array([0.0, 1.0]))
        scales.append(sweep_eps**2 / sweep_params.delta**3.5)
        norms.append(residual_norm(residual_q1(final, -1), sweep_grid))
    q1_slope = fit_power_law(scales, norms).slope

    narrow = SmoothFanParams.for_data(gas, data, 0.5)
    coarse = Grid1D.for_fan(narrow.b_minus, narrow.b_plus, narrow.delta, 0.5)
    refinement = system_residual_refinement(gas, data, narrow, 0.05, 0.5, coarse, snapshots_per_unit=20)
    return [
        _below("profile.q1_representations", q1_gap, 1e-9),
        _below("profile.q2_representations", q2_gap, 1e-9),
        _above("profile.bounds", float(bounds.satisfied), 1.0),
        _below("profile.q1_slope", abs(q1_slope - 1.0), 0.2),
        _above("profile.system_residual_order", refinement.min_order, 0.9),
    ]


def solver_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    data = default_data(gas)
    grid = Grid1D(-4.0, 4.0, 128)
    x = grid.centers

    ones = np.ones(grid.n_cells)
    constant = conserved_field(gas, PrimitiveState(ones, 0.0 * ones, ones))
    still = run_1d(SolverConfig(gas, 0.05, grid, 0.2, data.left, data.left, constant, times=np.array([0.0, 0.2])))
    fixed_point = float(np.max(np.abs(still.snapshots[-1] - constant)))

    riemann = riemann_initial(gas, data.left, data.right, x)
    run = run_1d(SolverConfig(gas, 0.01, grid, 1.0, data.left, data.right, riemann, times=output_times(1.0, 10)))
    mass_defect = float(np.max(run.conservation_defect()[:, 0]))

    manufactured = ManufacturedSolution(gas, 0.1)
    errors = []
    for n in (128, 256):
        config = manufactured.config(n, 0.5)
        final = run_1d(config).snapshots[-1]
        exact = manufactured.cell_average(0.5, config.grid)
        errors.append(math.sqrt(float(np.sum((final - exact) ** 2)) * config.grid.dx))
    mms_order = math.log2(errors[0] / errors[1])

    planar = SolverConfig(gas, 0.02, grid, 0.2, data.left, data.right, riemann, times=np.array([0.0, 0.2]))
    planar.fixed_dt = 0.5 * stable_dt(planar, riemann)
    column = run_1d(planar).snapshots[-1]
    slab = SolverConfig(
        gas,
        0.02,
        grid,
        0.2,
        data.left,
        data.right,
        extrude(riemann, 4),
        times=planar.times,
        fixed_dt=planar.fixed_dt,
        n2=4,
    )
    slab_final = run_2d_slab(slab).snapshots[-1]
    symmetry = float(np.max(np.abs(slab_final[[0, 1, 3]] - column[:, :, None])))
    return [
        _below("solver.constant_state", fixed_point, 1e-13),
        _below("solver.mass_conservation", mass_defect, 1e-12),
        _above("solver.manufactured_order", mms_order, 0.9),
        _below("solver.slab_planar_symmetry", symmetry, 1e-11),
    ]


def entropy_suite(gas: GasModel, section: VerifySection) -> list[PropertyResult]:
    center = PrimitiveState(1.0, 0.0, 1.0)
    wide = equivalence_band(gas, center, 0.1, section.n_random, section.seed)
    narrow = equivalence_band(gas, center, 0.05, section.n_random, section.seed)
    state = random_states(64, section.seed)
    constants = (wide.constant, narrow.constant)
    coincidence = float(np.max(np.abs(relative_entropy(gas, state, state).eta_star)))
    return [
        _below("entropy.phi_at_two", abs(float(phi_function(2.0)) - (1.0 - math.log(2.0))), 1e-15),
        _below("entropy.zero_on_coincidence", coincidence, 0.0),
        _above("entropy.band_lower", wide.lower, 1e-3),
        _below("entropy.band_stability", max(constants) / min(constants), 2.0),
    ]


SUITES: dict[str, Callable[[GasModel, VerifySection], list[PropertyResult]]] = {
    "gas": gas_suite,
    "rarefaction": rarefaction_suite,
    "hyperbolic": hyperbolic_suite,
    "profile": profile_suite,
    "solver": solver_suite,
    "entropy": entropy_suite,
}


def run_suite(name: str, gas: GasModel, section: VerifySection | None = None) -> list[PropertyResult]:
    """
    Run one suite, or every suite for "all".

    Raises:
        ConfigurationError: unknown suite name
    """
    section = section or VerifySection()
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ConfigurationError(f"unknown suite '{name}'; choose from all, {', '.join(SUITES)}", field="verify.suite")
    results = []
    for suite in names:
        logger.info(f"Running {suite} suite")
        results.extend(SUITES[suite](gas, section))
    return results
