"""
Command-line front end for the rarefaction laboratory.

Subcommands:
- profile: build the composite profile and write profile, wave, residual and norm tables
- simulate: run the viscous solver and write trajectories and error time series
- sweep: run an ε-sweep and write the convergence report
- verify: run property suites and report pass/fail per property

Exit codes: 0 success, 1 property failure, 2 configuration or usage error,
3 runtime divergence.

Usage:
    rarefaction-lab profile --config lab.toml --out runs/profile
    rarefaction-lab simulate --set solver.eps=0.02 --set initial.kind=riemann
    rarefaction-lab sweep --workers 4
    rarefaction-lab verify gas
"""

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Awaitable, Callable
from pathlib import Path

import numpy as np
import pandas as pd

from .config import config_hash, load_config, settings
from .diagnostics import fan_error_series, perturbation_norms, sup_error_vs_fan
from .errors import (
    EXIT_DIVERGENCE,
    EXIT_OK,
    EXIT_PROPERTY_FAILURE,
    EXIT_USAGE,
    ConfigurationError,
    DivergenceError,
    LabError,
    exit_code_for,
)
from .experiment_harness import epsilon_sweep_async
from .gas_dynamics import ConservedState, PrimitiveState, cons_to_prim, prim_to_cons
from .grid import Grid1D, output_times
from .models import LabConfig
from .rarefaction_waves import DeltaRule, RiemannData, SmoothFanParams, delta_rule, derivative_decay_norms
from .reporting import RunManifest, emit_report, profile_frame, write_frame, write_json, write_trajectory
from .solver.core import SolverConfig, inject_perturbation, riemann_initial, run_1d
from .solver.slab import run_2d_slab, transverse_perturbation
from .verification import run_suite
from .wave_profile import build_profile, check_profile_bounds, profile_system_residual, residual_frame

logger = logging.getLogger(__name__)

CommandBody = Callable[[LabConfig, Path, argparse.Namespace], Awaitable[tuple[int, list[Path]]]]


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def setup_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML configuration file")
    common.add_argument("--out", type=Path, default=None, help="Output directory (default: $LAB_OUT_ROOT/<command>)")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a configuration value, e.g. solver.eps=0.02 (repeatable)",
    )
    common.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps")
    common.add_argument("--seed", type=int, default=None, help="Seed of the perturbation injector")

    parser = argparse.ArgumentParser(
        prog="rarefaction-lab",
        description="Vanishing-dissipation experiments around planar rarefaction waves",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    subparsers.add_parser("profile", parents=[common], help="Build the composite profile and its residuals")
    subparsers.add_parser("simulate", parents=[common], help="Run the Navier-Stokes-Fourier solver")
    subparsers.add_parser("sweep", parents=[common], help="Run an epsilon sweep and fit rate laws")
    verify_parser = subparsers.add_parser("verify", parents=[common], help="Run property suites")
    verify_parser.add_argument(
        "suite", nargs="?", default=None, help="gas, rarefaction, hyperbolic, profile, solver, entropy or all"
    )

    return parser


# =============================================================================
# SHARED HELPERS
# =============================================================================


def riemann_data(config: LabConfig) -> RiemannData:
    wave = config.wave
    left = PrimitiveState(wave.rho_minus, wave.v_minus, wave.theta_minus)
    return RiemannData.from_left(config.gas, left, wave.v_plus)


def resolve_delta(config: LabConfig, eps: float) -> float:
    """Explicit profile.delta, else δ = ε^b|ln ε|; ε = 0 requires the explicit value."""
    if config.profile.delta is not None:
        return config.profile.delta
    if eps == 0.0:
        raise ConfigurationError("an explicit smoothing width is required when eps = 0", field="profile.delta")
    return delta_rule(eps, config.profile.b)


def solver_grid(config: LabConfig, data: RiemannData, delta: float) -> Grid1D:
    solver = config.solver
    b_minus, b_plus = data.wave_speeds(config.gas)
    grid = Grid1D.for_fan(b_minus, b_plus, delta, solver.T, solver.cells_per_delta)
    x_left = solver.x_left if solver.x_left is not None else grid.x_left
    x_right = solver.x_right if solver.x_right is not None else grid.x_right
    n_cells = solver.n_cells if solver.n_cells is not None else grid.n_cells
    return Grid1D(x_left, x_right, n_cells)


# =============================================================================
# COMMANDS
# =============================================================================


async def cmd_profile(config: LabConfig, out_dir: Path, args: argparse.Namespace) -> tuple[int, list[Path]]:
    """
    Build the composite profile for config.profile.eps.

    Returns:
        Exit code and the files written
    """
    gas, section = config.gas, config.profile
    data = riemann_data(config)
    delta = resolve_delta(config, section.eps)
    rule = DeltaRule(section.eps, section.b) if section.delta is None else None
    params = SmoothFanParams.for_data(gas, data, delta, rule)
    grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, section.T, section.cells_per_delta)
    times = output_times(section.T, section.snapshots_per_unit)
    logger.info(f"Profile: eps={section.eps:g}, delta={delta:.4f}, n={grid.n_cells}, snapshots={times.size}")

    profile = await asyncio.to_thread(build_profile, gas, data, params, section.eps, section.T, grid, times)
    bounds = check_profile_bounds(profile, data)
    if not bounds.satisfied:
        logger.warning(f"⚠️ Profile bounds violated: {bounds}")

    written = [
        write_frame(out_dir / "profile.csv", profile_frame(profile)),
        write_frame(out_dir / "wave.csv", profile.wave.to_frame()),
        write_frame(out_dir / "residuals.csv", residual_frame(profile)),
    ]
    tables = []
    for t in (0.0, section.T):
        table = derivative_decay_norms(gas, data, params, t, list(section.norm_p), grid).to_frame()
        table.insert(0, "t", t)
        tables.append(table)
    written.append(write_frame(out_dir / "derivative_norms.csv", pd.concat(tables, ignore_index=True)))

    summary = {
        "eps": section.eps,
        "delta": delta,
        "n_cells": grid.n_cells,
        "bounds": vars(bounds),
        "weighted_energy_constant": profile.wave.weighted_energy_constant(),
    }
    if times.size >= 3:
        summary["system_residual"] = vars(profile_system_residual(profile))
    written.append(write_json(out_dir / "profile.json", summary))
    logger.info(f"✅ Profile written to {out_dir}")
    return EXIT_OK, written


async def cmd_simulate(config: LabConfig, out_dir: Path, args: argparse.Namespace) -> tuple[int, list[Path]]:
    """
    Run the solver from profile, Riemann or constant initial data.

    Returns:
        Exit code and the files written
    """
    gas, solver, initial = config.gas, config.solver, config.initial
    if solver.h >= solver.T:
        raise ConfigurationError(f"diagnostic window [h, T] = [{solver.h}, {solver.T}] is empty", field="solver.h")
    data = riemann_data(config)
    delta = resolve_delta(config, solver.eps)
    grid = solver_grid(config, data, delta)
    times = output_times(solver.T, solver.snapshots_per_unit)
    x = grid.centers

    profile = None
    left, right = data.left, data.right
    if initial.kind == "profile":
        params = SmoothFanParams.for_data(gas, data, delta)
        profile = await asyncio.to_thread(build_profile, gas, data, params, solver.eps, solver.T, grid, times)
        start = profile.primitive(0)
    elif initial.kind == "riemann":
        start = cons_to_prim(gas, ConservedState.from_array(riemann_initial(gas, data.left, data.right, x)))
    else:
        right = left
        ones = np.ones(grid.n_cells)
        start = PrimitiveState(float(left.rho) * ones, float(left.v1) * ones, float(left.theta) * ones)
    if initial.perturbation:
        bump = inject_perturbation(x, solver.eps, delta, initial.seed, initial.perturbation_scale)
        start = PrimitiveState(start.rho + bump[0], start.v1 + bump[1], start.theta + bump[2])

    run_config = SolverConfig(
        gas=gas,
        eps=solver.eps,
        grid=grid,
        T=solver.T,
        left_state=left,
        right_state=right,
        initial=prim_to_cons(gas, start).stack(),
        cfl=solver.cfl,
        flux=solver.flux,
        times=times,
        n2=solver.n2,
        period2=solver.period2,
    )
    logger.info(f"Simulate: mode={solver.mode}, eps={solver.eps:g}, n={grid.n_cells}, T={solver.T}")
    if solver.mode == "slab":
        run_config.initial = transverse_perturbation(
            run_config, start, initial.transverse_amplitude, initial.transverse_mode, delta, initial.seed
        )
        trajectory = await asyncio.to_thread(run_2d_slab, run_config)
    else:
        trajectory = await asyncio.to_thread(run_1d, run_config)

    written = write_trajectory(trajectory, out_dir, config_hash(config))
    series = []
    summary: dict = {"eps": solver.eps, "delta": delta, "n_cells": grid.n_cells, "mode": solver.mode}
    if initial.kind != "constant":
        errors = fan_error_series(gas, trajectory, data)
        series.append(pd.DataFrame({"t": trajectory.times, "quantity": "fan_error", "value": errors}))
        summary["sup_error"] = sup_error_vs_fan(gas, trajectory, data, solver.h, solver.T)
    if profile is not None:
        perturbations = perturbation_norms(gas, trajectory, profile, (0, 1, 2), solver.eps)
        series.append(perturbations.to_frame())
        summary["entropy_min"] = perturbations.entropy_min
    if "v2_l2" in trajectory.diagnostics:
        v2_norms = trajectory.diagnostics["v2_l2"]
        series.append(pd.DataFrame({"t": trajectory.times, "quantity": "v2_l2", "value": v2_norms}))
    if series:
        written.append(write_frame(out_dir / "timeseries.csv", pd.concat(series, ignore_index=True)))
    written.append(write_json(out_dir / "summary.json", summary))
    logger.info(f"✅ Trajectory written to {out_dir}")
    return EXIT_OK, written


async def cmd_sweep(config: LabConfig, out_dir: Path, args: argparse.Namespace) -> tuple[int, list[Path]]:
    """
    Run the ε-sweep; partial failures still exit 0, a sweep where every row failed exits 3.

    Returns:
        Exit code and the files written
    """
    spec = config.sweep_spec()
    workers = args.workers or spec.workers or settings.WORKERS
    report = await epsilon_sweep_async(spec, workers)
    written = emit_report(report, out_dir)
    failed = [row for row in report.rows if not row.ok]
    for row in failed:
        logger.warning(f"⚠️ eps={row.eps:g}: {row.status}")
    if report.rows and len(failed) == len(report.rows):
        logger.error("❌ Every sweep row failed")
        return EXIT_DIVERGENCE, written
    logger.info(f"✅ Sweep finished: {len(report.rows) - len(failed)}/{len(report.rows)} rows ok")
    return EXIT_OK, written


async def cmd_verify(config: LabConfig, out_dir: Path, args: argparse.Namespace) -> tuple[int, list[Path]]:
    """
    Run a property suite and print one JSON record per property.

    Returns:
        Exit code (0 when every property passes, 1 otherwise) and the files written
    """
    suite = args.suite or config.verify.suite
    results = await asyncio.to_thread(run_suite, suite, config.gas, config.verify)
    for result in results:
        print(json.dumps(result.to_dict(), sort_keys=True))
        status = "✅" if result.passed else "❌"
        logger.info(f"{status} {result.name}: measured {result.measured:.3e} (threshold {result.threshold:.3e})")
    written = [write_json(out_dir / "verify.json", [result.to_dict() for result in results])]
    passed = all(result.passed for result in results)
    return (EXIT_OK if passed else EXIT_PROPERTY_FAILURE), written


COMMANDS: dict[str, CommandBody] = {
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


# =============================================================================
# ENTRY POINTS
# =============================================================================


async def run_command(args: argparse.Namespace) -> int:
    """Load the configuration, write the manifest first, run the command and complete the manifest last."""
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"initial.seed={args.seed}")
    try:
        config = load_config(args.config, overrides)
    except ConfigurationError as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return EXIT_USAGE

    out_dir = args.out or settings.OUT_ROOT / args.command
    try:
        manifest = RunManifest.start(out_dir, args.command, args.config, config_hash(config))
    except LabError as e:
        logger.error(f"❌ {e}")
        return exit_code_for(e)
    logger.info(f"📁 Output directory: {out_dir}")

    written: list[Path] = []
    try:
        code, written = await COMMANDS[args.command](config, out_dir, args)
    except DivergenceError as e:
        logger.error(f"❌ Divergence at t={e.t:.6g}: {e} {e.diagnostics}")
        code = EXIT_DIVERGENCE
    except LabError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        code = exit_code_for(e)
    except Exception as e:
        logger.error(f"❌ Unexpected error: {e}", exc_info=True)
        code = EXIT_DIVERGENCE
    manifest.complete(code, written)
    return code


async def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = setup_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    return await run_command(args)


def cli_main():
    """Synchronous wrapper for CLI entry point."""
    configure_logging()
    try:
        exit_code = asyncio.run(main())
        sys.exit(exit_code)
    except KeyboardInterrupt:
        logger.info("\nInterrupted by user")
        sys.exit(EXIT_DIVERGENCE)


if __name__ == "__main__":
    cli_main()
