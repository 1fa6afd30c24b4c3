"""
Result files: sweep reports, trajectories, wave fields and run manifests.

Floating-point values are written with 17 significant digits so that
re-reading a CSV reproduces every value exactly.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import markdown
import numpy as np
import pandas as pd

from . import __version__
from .errors import OutputError
from .experiment_harness import RATE_MODELS, ConvergenceReport, SweepRow
from .fitting import RateFit
from .solver.core import Trajectory
from .wave_profile import CompositeProfile

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
REPORT_FORMATS = ("csv", "json", "plots", "html")

SUMMARY_COLUMNS = ["eps", "delta", "n_cells", "status", "sup_error", "perturbation_l2", "pa_passed", "scheme_flag"]


def _json_safe(value: Any) -> Any:
    """NaN/inf become null; numpy scalars and arrays become plain Python values."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path, payload: Any) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def write_frame(path: Path, frame: pd.DataFrame) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def read_report_csv(path: Path) -> pd.DataFrame:
    """Re-read a report table with round-trip float parsing."""
    return pd.read_csv(path, float_precision="round_trip")


# =============================================================================
# SWEEP REPORT
# =============================================================================


def _plot_lines(rows: list[SweepRow], name: str, fit: dict) -> list[str]:
    rate = RateFit(fit["alpha"], fit["beta"], fit["constant"], fit["residual"], fit["n"])
    lines = ["# log_eps log_value log_envelope"]
    for row in rows:
        value = getattr(row, name)
        envelope = float(rate.envelope(row.eps))
        lines.append(" ".join(FLOAT_FORMAT % v for v in (math.log(row.eps), math.log(value), math.log(envelope))))
    return lines


def _summary_markdown(report: ConvergenceReport) -> str:
    lines = ["# ε-sweep summary", "", "| " + " | ".join(SUMMARY_COLUMNS) + " |", "|" + "---|" * len(SUMMARY_COLUMNS)]
    for row in report.rows:
        cells = []
        for column in SUMMARY_COLUMNS:
            value = getattr(row, column)
            cells.append(f"{value:.4g}" if isinstance(value, float) else str(value))
        lines.append("| " + " | ".join(cells) + " |")
    lines += ["", "## Rate fits", "", "| quantity | alpha | beta | constant | residual |", "|---|---|---|---|---|"]
    for name in RATE_MODELS:
        fit = report.fits.get(name)
        if fit is None or "error" in fit:
            lines.append(f"| {name} | n/a | | | |")
            continue
        cells = [name, f"{fit['alpha']:.4f}", f"{fit['beta']:g}", f"{fit['constant']:.4g}", f"{fit['residual']:.2e}"]
        lines.append("| " + " | ".join(cells) + " |")
    lines += ["", "## Checks", ""]
    for name, check in report.checks.items():
        if "passed" in check:
            lines.append(f"- {name}: {'passed' if check['passed'] else 'FAILED'}")
    return "\n".join(lines) + "\n"


def emit_report(report: ConvergenceReport, out_dir: Path, formats: tuple[str, ...] = REPORT_FORMATS) -> list[Path]:
    """
    Write report.csv, fits.json, manifest.json, plots/*.dat and summary.html.

    Returns:
        Paths written, in a fixed order

    Raises:
        OutputError: a file could not be written (message names the path)
    """
    out_dir = Path(out_dir)
    written: list[Path] = []
    if "csv" in formats:
        written.append(write_frame(out_dir / "report.csv", report.to_frame()))
    if "json" in formats:
        written.append(write_json(out_dir / "fits.json", report.fits))
        written.append(write_json(out_dir / "manifest.json", {**report.manifest, "checks": report.checks}))
    if "plots" in formats:
        ok = report.ok_rows()
        for name in RATE_MODELS:
            fit = report.fits.get(name)
            if fit is None or "error" in fit:
                continue
            path = out_dir / "plots" / f"{name}.dat"
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text("\n".join(_plot_lines(ok, name, fit)) + "\n", encoding="utf-8")
            except OSError as e:
                raise OutputError(f"cannot write {path}: {e}") from e
            written.append(path)
    if "html" in formats:
        path = out_dir / "summary.html"
        html = markdown.markdown(_summary_markdown(report), extensions=["tables"])
        try:
            path.write_text(html, encoding="utf-8")
        except OSError as e:
            raise OutputError(f"cannot write {path}: {e}") from e
        written.append(path)
    logger.info(f"📁 Report written to {out_dir} ({len(written)} files)")
    return written


# =============================================================================
# TRAJECTORIES AND FIELDS
# =============================================================================


def profile_frame(profile: CompositeProfile) -> pd.DataFrame:
    """Long table (t, x1, rho, v1, theta) of the composite profile."""
    nt, n = profile.times.size, profile.grid.n_cells
    return pd.DataFrame(
        {
            "t": np.repeat(profile.times, n),
            "x1": np.tile(profile.grid.centers, nt),
            "rho": profile.rho.ravel(),
            "v1": profile.v1.ravel(),
            "theta": profile.theta.ravel(),
        }
    )


def trajectory_frame(trajectory: Trajectory, index: int) -> pd.DataFrame:
    """Columns x1[, x2], rho, v1[, v2], theta of one snapshot."""
    state = trajectory.primitive(index)
    x1 = trajectory.grid.centers
    if np.ndim(state.rho) == 2:
        n2 = state.rho.shape[1]
        dy = trajectory.cell_volume / trajectory.grid.dx
        x2 = (np.arange(n2) + 0.5) * dy
        grid_x1, grid_x2 = np.meshgrid(x1, x2, indexing="ij")
        return pd.DataFrame(
            {
                "x1": grid_x1.ravel(),
                "x2": grid_x2.ravel(),
                "rho": state.rho.ravel(),
                "v1": state.v1.ravel(),
                "v2": np.broadcast_to(state.v2, state.rho.shape).ravel(),
                "theta": state.theta.ravel(),
            }
        )
    return pd.DataFrame({"x1": x1, "rho": state.rho, "v1": state.v1, "theta": state.theta})


def write_trajectory(trajectory: Trajectory, out_dir: Path, config_digest: str) -> list[Path]:
    """One CSV per snapshot plus trajectory.json with the conservation ledger."""
    out_dir = Path(out_dir)
    written = []
    for index in range(trajectory.times.size):
        path = out_dir / "snapshots" / f"snapshot_{index:04d}.csv"
        written.append(write_frame(path, trajectory_frame(trajectory, index)))
    payload = {
        "config_hash": config_digest,
        "times": trajectory.times,
        "ledger": trajectory.ledger(),
        "conservation_defect": trajectory.conservation_defect(),
        "diagnostics": trajectory.diagnostics,
    }
    written.append(write_json(out_dir / "trajectory.json", payload))
    return written


# =============================================================================
# RUN MANIFEST
# =============================================================================


def _now() -> str:
    return datetime.now(UTC).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Written first with status "running" and rewritten last; a stale "running" marks a crashed command."""

    path: Path
    command: str
    config_path: str | None
    config_hash: str
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    exit_code: int | None = None
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("path")
        return data

    def write(self) -> Path:
        return write_json(self.path, self.to_dict())

    @classmethod
    def start(cls, out_dir: Path, command: str, config_path: Path | None, config_digest: str) -> RunManifest:
        manifest = cls(
            path=Path(out_dir) / "run.json",
            command=command,
            config_path=str(config_path) if config_path is not None else None,
            config_hash=config_digest,
        )
        manifest.write()
        return manifest

    def complete(self, exit_code: int, outputs: list[Path] | None = None) -> Path:
        self.finished = _now()
        self.exit_code = exit_code
        self.status = "complete" if exit_code == 0 else "failed"
        self.outputs = sorted(str(p) for p in outputs or [])
        return self.write()
