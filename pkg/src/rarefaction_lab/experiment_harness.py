"""
ε-sweeps: one full pipeline per ε (smooth fan with δ = ε^b|ln ε|, hyperbolic
wave, composite profile, solver run, diagnostics), then rate fits with the
log-power held fixed per quantity.

Rows are independent and may run in a process pool; a failing row is kept
in the report with a failure tag and excluded from the fits.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import pandas as pd

from . import __version__
from .config import config_hash
from .diagnostics import a_priori_check, fan_error_series, perturbation_norms
from .errors import FitError, LabError
from .fitting import fit_power_law, fit_rate
from .gas_dynamics import PrimitiveState, prim_to_cons
from .grid import Grid1D, output_times
from .models import SweepSpec
from .rarefaction_waves import DeltaRule, RiemannData, SmoothFanParams, delta_rule
from .solver.core import SolverConfig, inject_perturbation, run_1d
from .wave_profile import build_profile, residual_f1, residual_norm, residual_q1, residual_q2

logger = logging.getLogger(__name__)

# Fixed log-powers β and hypothesised exponents α per fitted quantity
RATE_MODELS = {
    "sup_error": {"beta": 2.0, "alpha": 1.0 / 6.0},
    "perturbation_l2": {"beta": -7.0, "alpha": 17.0 / 6.0},
    "perturbation_sup": {"beta": -17.0 / 4.0, "alpha": 13.0 / 24.0},
}

# Residual norms against their predicted scales, with the slope tolerance of each check
RESIDUAL_SCALES = {
    "q1_l2": (lambda eps, delta: eps**2 / delta**3.5, 0.2),
    "f1_l2": (lambda eps, delta: eps**2 / delta**3, 0.25),
}


@dataclass
class SweepRow:
    """Measurements of one ε; NaN everywhere when the row failed."""

    eps: float
    delta: float
    n_cells: int
    status: str = "ok"
    sup_error: float = math.nan
    perturbation_l2: float = math.nan
    perturbation_h1: float = math.nan
    perturbation_h2: float = math.nan
    perturbation_sup: float = math.nan
    pa_first: float = math.nan
    pa_second: float = math.nan
    pa_passed: bool = False
    q1_l2: float = math.nan
    q2_l2: float = math.nan
    f1_l2: float = math.nan
    z_l2_0: float = math.nan
    z_l2_1: float = math.nan
    z_l2_2: float = math.nan
    entropy_h: float = math.nan
    entropy_T: float = math.nan
    entropy_min: float = math.nan
    mass_defect: float = math.nan
    far_field_deviation: float = math.nan
    scheme_error: float = math.nan
    scheme_error_ratio: float = math.nan
    scheme_flag: bool = False

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ConvergenceReport:
    rows: list[SweepRow] = field(default_factory=list)
    fits: dict[str, dict] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    checks: dict[str, dict] = field(default_factory=dict)

    def ok_rows(self) -> list[SweepRow]:
        return [row for row in self.rows if row.ok]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows], columns=SweepRow.columns())


# =============================================================================
# ONE ROW
# =============================================================================


def riemann_data(spec: SweepSpec) -> RiemannData:
    wave = spec.wave
    left = PrimitiveState(wave.rho_minus, wave.v_minus, wave.theta_minus)
    return RiemannData.from_left(spec.gas, left, wave.v_plus)


def _restrict(values: np.ndarray) -> np.ndarray:
    """Average pairs of cells; a trailing odd cell is dropped."""
    n_even = values.shape[1] - values.shape[1] % 2
    return values[:, :n_even].reshape(values.shape[0], n_even // 2, 2).mean(axis=2)


def _coarse_sup_error(spec: SweepSpec, config: SolverConfig, data: RiemannData) -> float:
    """Sup error of the same run on a grid with twice the spacing."""
    grid = config.grid
    n_even = grid.n_cells - grid.n_cells % 2
    coarse = Grid1D(grid.x_left, grid.x_left + n_even * grid.dx, n_even // 2)
    coarse_config = SolverConfig(
        gas=config.gas,
        eps=config.eps,
        grid=coarse,
        T=config.T,
        left_state=config.left_state,
        right_state=config.right_state,
        initial=_restrict(np.asarray(config.initial)),
        cfl=config.cfl,
        flux=config.flux,
        times=config.times,
    )
    trajectory = run_1d(coarse_config)
    errors = fan_error_series(spec.gas, trajectory, data)
    window = (trajectory.times >= spec.h - 1e-12) & (trajectory.times <= spec.T + 1e-12)
    return float(np.max(errors[window]))


def run_row(spec: SweepSpec, eps: float) -> SweepRow:
    """
    Full pipeline for one ε. Laboratory errors are caught and recorded as a failure tag.

    Top-level so that it pickles into worker processes.
    """
    gas = spec.gas
    delta = delta_rule(eps, spec.b_exponent)
    row = SweepRow(eps=eps, delta=delta, n_cells=0)
    try:
        data = riemann_data(spec)
        params = SmoothFanParams.from_rule(gas, data, eps, spec.b_exponent)
        grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, spec.T, spec.cells_per_delta)
        row.n_cells = grid.n_cells
        times = output_times(spec.T, spec.snapshots_per_unit)
        profile = build_profile(gas, data, params, eps, spec.T, grid, times, cfl=spec.solver.cfl)

        start = profile.primitive(0)
        if spec.initial.perturbation:
            bump = inject_perturbation(grid.centers, eps, delta, spec.initial.seed, spec.initial.perturbation_scale)
            start = PrimitiveState(start.rho + bump[0], start.v1 + bump[1], start.theta + bump[2])
        config = SolverConfig(
            gas=gas,
            eps=eps,
            grid=grid,
            T=spec.T,
            left_state=data.left,
            right_state=data.right,
            initial=prim_to_cons(gas, start).stack(),
            cfl=spec.solver.cfl,
            flux=spec.solver.flux,
            times=times,
        )
        trajectory = run_1d(config)

        errors = fan_error_series(gas, trajectory, data)
        window = (times >= spec.h - 1e-12) & (times <= spec.T + 1e-12)
        row.sup_error = float(np.max(errors[window]))

        series = perturbation_norms(gas, trajectory, profile, (0, 1, 2), eps)
        row.perturbation_l2 = float(np.max(series.norms[0]))
        row.perturbation_h1 = float(np.max(series.norms[1]))
        row.perturbation_h2 = float(np.max(series.norms[2]))
        row.perturbation_sup = float(np.max(series.sup[window]))
        check = a_priori_check(series, eps, spec.a1, spec.a2)
        row.pa_first, row.pa_second, row.pa_passed = check.first, check.second, check.passed

        row.q1_l2 = residual_norm(residual_q1(profile, -1), grid)
        row.q2_l2 = residual_norm(residual_q2(profile, -1), grid)
        row.f1_l2 = residual_norm(residual_f1(profile, -1), grid)
        row.z_l2_0, row.z_l2_1, row.z_l2_2 = (profile.wave.derivative_norm(k, 2.0) for k in range(3))

        first = int(np.flatnonzero(window)[0])
        row.entropy_h = float(series.entropy[first])
        row.entropy_T = float(series.entropy[-1])
        row.entropy_min = series.entropy_min
        row.mass_defect = float(np.max(trajectory.conservation_defect()[:, 0]))
        row.far_field_deviation = float(np.max(trajectory.diagnostics["far_field_deviation"]))

        if spec.scheme_error_check:
            coarse = _coarse_sup_error(spec, config, data)
            row.scheme_error = abs(coarse - row.sup_error)
            row.scheme_error_ratio = row.scheme_error / row.sup_error if row.sup_error > 0.0 else math.inf
            row.scheme_flag = row.scheme_error_ratio > spec.scheme_error_threshold
        logger.info(f"✅ eps={eps:.1e} delta={delta:.4f} n={grid.n_cells}: sup error {row.sup_error:.4e}")
    except LabError as e:
        logger.error(f"❌ eps={eps:.1e} failed: {e}", exc_info=True)
        failed = SweepRow(eps=eps, delta=delta, n_cells=row.n_cells, status=f"failed:{type(e).__name__}")
        return failed
    return row


# =============================================================================
# FITS AND CHECKS
# =============================================================================


def _rate_fits(rows: list[SweepRow]) -> dict[str, dict]:
    fits: dict[str, dict] = {}
    eps = [row.eps for row in rows]
    for name, model in RATE_MODELS.items():
        try:
            fit = fit_rate(eps, [getattr(row, name) for row in rows], beta=model["beta"])
            fits[name] = {**fit.to_dict(), "hypothesis_alpha": model["alpha"]}
        except FitError as e:
            fits[name] = {"error": str(e), "beta": model["beta"], "hypothesis_alpha": model["alpha"]}

    scales = {
        **{name: [scale(row.eps, row.delta) for row in rows] for name, (scale, _) in RESIDUAL_SCALES.items()},
        **{f"z_l2_{k}": [row.eps / row.delta ** (k + 1) for row in rows] for k in range(3)},
    }
    for name, xs in scales.items():
        try:
            power = fit_power_law(xs, [getattr(row, name) for row in rows])
            fits[name] = {"slope": power.slope, "intercept": power.intercept, "residual": power.residual, "n": power.n}
        except FitError as e:
            fits[name] = {"error": str(e)}
    return fits


def envelope_constant(row: SweepRow) -> float:
    """C with sup_error = C ε^{1/6}|ln ε|² at this row."""
    return row.sup_error / (row.eps ** (1.0 / 6.0) * math.log(row.eps) ** 2)


def _scaling_check(
    rows: list[SweepRow], name: str, scale: Callable[[float, float], float], tolerance: float
) -> dict:
    """Slope of the residual norm against its predicted scale must be 1 within ``tolerance``."""
    try:
        power = fit_power_law([scale(row.eps, row.delta) for row in rows], [getattr(row, name) for row in rows])
    except FitError as e:
        return {"passed": False, "error": str(e)}
    return {"passed": abs(power.slope - 1.0) <= tolerance, "slope": power.slope, "tolerance": tolerance}


def _checks(rows: list[SweepRow], spec: SweepSpec) -> dict[str, dict]:
    checks: dict[str, dict] = {}
    errors = [row.sup_error for row in rows]
    checks["sup_error_decreasing"] = {
        "passed": all(later < earlier for earlier, later in zip(errors, errors[1:], strict=False)),
        "values": errors,
    }
    if rows:
        constant = envelope_constant(rows[0])
        ratios = [row.sup_error / (constant * row.eps ** (1.0 / 6.0) * math.log(row.eps) ** 2) for row in rows]
        checks["sup_error_envelope"] = {
            "passed": all(r <= 1.0 + 1e-12 for r in ratios),
            "constant": constant,
            "ratios": ratios,
        }
    checks["a_priori"] = {"passed": all(row.pa_passed for row in rows)}
    checks["entropy_nonnegative"] = {"passed": all(row.entropy_min >= 0.0 for row in rows)}
    checks["entropy_decay"] = {"passed": all(row.entropy_T < row.entropy_h for row in rows)}
    checks["delta_rule"] = {
        "passed": all(abs(row.delta - DeltaRule(row.eps, spec.b_exponent).delta) <= 1e-12 for row in rows)
    }
    checks["scheme_error"] = {"flagged": [row.eps for row in rows if row.scheme_flag]}
    for name, (scale, tolerance) in RESIDUAL_SCALES.items():
        checks[f"{name}_scaling"] = _scaling_check(rows, name, scale, tolerance)
    return checks


def _manifest(spec: SweepSpec, rows: list[SweepRow]) -> dict:
    return {
        "config_hash": config_hash(spec),
        "version": __version__,
        "b_exponent": spec.b_exponent,
        "ledger": {"a1": spec.a1, "a2": spec.a2, "b": spec.b_exponent},
        "window": {"h": spec.h, "T": spec.T},
        "grid": {
            "rule": f"dx <= delta/{spec.cells_per_delta}",
            "n_cells": {f"{row.eps:.17g}": row.n_cells for row in rows},
        },
        "scheme": {"flux": spec.solver.flux, "cfl": spec.solver.cfl, "integrator": "ssp-rk2"},
        "seeds": {"perturbation": spec.initial.seed if spec.initial.perturbation else None},
    }


def assemble_report(spec: SweepSpec, rows: list[SweepRow]) -> ConvergenceReport:
    """Fits need at least three successful rows; failed rows stay in the table only."""
    ok = [row for row in rows if row.ok]
    report = ConvergenceReport(rows=rows, manifest=_manifest(spec, rows))
    if len(ok) >= 3:
        report.fits = _rate_fits(ok)
    report.checks = _checks(ok, spec)
    return report


# =============================================================================
# SWEEPS
# =============================================================================


async def epsilon_sweep_async(spec: SweepSpec, workers: int = 1) -> ConvergenceReport:
    """Run the rows in a process pool without blocking the event loop."""
    workers = max(1, min(workers, len(spec.eps_list)))
    logger.info(f"📁 Sweep over {len(spec.eps_list)} eps values with {workers} worker(s)")
    if workers == 1:
        rows = [await asyncio.to_thread(run_row, spec, eps) for eps in spec.eps_list]
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [loop.run_in_executor(pool, run_row, spec, eps) for eps in spec.eps_list]
            rows = list(await asyncio.gather(*futures))
    return assemble_report(spec, rows)


def epsilon_sweep(spec: SweepSpec, workers: int = 1) -> ConvergenceReport:
    """
    Run every ε in ``spec.eps_list`` and fit the rate laws.

    Identical specs give identical reports regardless of the worker count.
    """
    if workers > 1:
        return asyncio.run(epsilon_sweep_async(spec, workers))
    logger.info(f"📁 Sweep over {len(spec.eps_list)} eps values")
    return assemble_report(spec, [run_row(spec, eps) for eps in spec.eps_list])
