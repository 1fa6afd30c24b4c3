"""
Unit tests for experiment_harness module.
Tests single sweep rows, rate fits on synthetic rows and the sweep drivers.
"""

import math

import pandas as pd
import pytest

from rarefaction_lab.experiment_harness import (
    RATE_MODELS,
    SweepRow,
    assemble_report,
    envelope_constant,
    epsilon_sweep,
    epsilon_sweep_async,
    run_row,
)
from rarefaction_lab.models import SweepSpec
from rarefaction_lab.rarefaction_waves import DeltaRule

# =============================================================================
# FIXTURES
# =============================================================================

EPS_LIST = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]


@pytest.fixture
def small_spec():
    """Short window, coarse resolution, no scheme-error rerun"""
    return SweepSpec(
        eps_list=[0.1],
        T=0.5,
        h=0.1,
        cells_per_delta=16,
        snapshots_per_unit=10,
        scheme_error_check=False,
    )


def synthetic_row(eps: float, b: float = 1.0 / 6.0, constant: float = 0.3) -> SweepRow:
    """A row whose measurements follow the hypothesised rate laws exactly."""
    log_eps = abs(math.log(eps))
    delta = DeltaRule(eps, b).delta
    return SweepRow(
        eps=eps,
        delta=delta,
        n_cells=100,
        sup_error=constant * eps ** (1.0 / 6.0) * log_eps**2,
        perturbation_l2=2.0 * eps ** (17.0 / 6.0) * log_eps**-7,
        perturbation_sup=0.5 * eps ** (13.0 / 24.0) * log_eps ** (-17.0 / 4.0),
        q1_l2=3.0 * eps**2 / delta**3.5,
        f1_l2=1.5 * eps**2 / delta**3,
        z_l2_0=eps / delta,
        z_l2_1=eps / delta**2,
        z_l2_2=eps / delta**3,
        pa_passed=True,
        entropy_h=1e-6,
        entropy_T=5e-7,
        entropy_min=0.0,
    )


@pytest.fixture
def synthetic_rows():
    return [synthetic_row(eps) for eps in EPS_LIST]


# =============================================================================
# ONE ROW
# =============================================================================


class TestRunRow:
    def test_successful_row(self, small_spec):
        """A resolved run fills every measurement"""
        row = run_row(small_spec, 0.1)

        assert row.status == "ok"
        assert row.delta == pytest.approx(DeltaRule(0.1, small_spec.b_exponent).delta)
        assert row.n_cells >= 64
        assert math.isfinite(row.sup_error) and row.sup_error > 0.0
        assert math.isfinite(row.perturbation_l2)
        assert math.isfinite(row.q1_l2)
        assert row.mass_defect < 1e-8
        assert math.isnan(row.scheme_error)
        assert row.scheme_flag is False

    def test_failed_row_is_tagged(self, small_spec):
        """An under-resolved grid fails the row instead of the sweep"""
        spec = small_spec.model_copy(update={"cells_per_delta": 8})
        row = run_row(spec, 0.1)

        assert row.status == "failed:ResolutionError"
        assert not row.ok
        assert math.isnan(row.sup_error)
        assert row.n_cells > 0

    @pytest.mark.slow
    def test_scheme_error_rerun(self, small_spec):
        spec = small_spec.model_copy(update={"scheme_error_check": True})
        row = run_row(spec, 0.1)

        assert row.ok
        assert math.isfinite(row.scheme_error)
        assert row.scheme_flag == (row.scheme_error_ratio > spec.scheme_error_threshold)


# =============================================================================
# FITS AND CHECKS
# =============================================================================


class TestAssembleReport:
    def test_recovers_hypothesised_exponents(self, synthetic_rows):
        """Exact rate-law data reproduce α for every fitted quantity"""
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)

        assert report.fits["sup_error"]["alpha"] == pytest.approx(1.0 / 6.0, abs=1e-9)
        assert report.fits["sup_error"]["constant"] == pytest.approx(0.3, rel=1e-9)
        assert report.fits["perturbation_l2"]["alpha"] == pytest.approx(17.0 / 6.0, abs=1e-9)
        assert report.fits["perturbation_sup"]["alpha"] == pytest.approx(13.0 / 24.0, abs=1e-9)
        for name, model in RATE_MODELS.items():
            assert report.fits[name]["beta"] == model["beta"]

    def test_scaling_slopes(self, synthetic_rows):
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)

        assert report.fits["q1_l2"]["slope"] == pytest.approx(1.0, abs=1e-9)
        for k in range(3):
            assert report.fits[f"z_l2_{k}"]["slope"] == pytest.approx(1.0, abs=1e-9)
        assert report.fits["f1_l2"]["slope"] == pytest.approx(1.0, abs=1e-9)
        assert report.checks["q1_l2_scaling"]["passed"] is True
        assert report.checks["f1_l2_scaling"]["passed"] is True

    def test_f1_scaling_check_flags_wrong_rate(self, synthetic_rows):
        """An F₁ norm that only falls like ε instead of ε²/δ³ fails the scaling check"""
        for row in synthetic_rows:
            row.f1_l2 = row.eps
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)

        assert report.fits["f1_l2"]["slope"] < 0.75
        assert report.checks["f1_l2_scaling"]["passed"] is False
        assert report.checks["f1_l2_scaling"]["tolerance"] == 0.25

    def test_envelope_check(self, synthetic_rows):
        """Rows on the envelope give unit ratios"""
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)
        envelope = report.checks["sup_error_envelope"]

        assert envelope["passed"] is True
        assert envelope["constant"] == pytest.approx(0.3)
        assert envelope["ratios"] == pytest.approx([1.0] * len(EPS_LIST))

    def test_envelope_grows_over_practical_eps(self, synthetic_rows):
        """ε^{1/6}|ln ε|² increases as ε decreases from 0.1, so the monotone check reports a failure"""
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)
        assert report.checks["sup_error_decreasing"]["passed"] is False

    def test_decreasing_errors_pass(self, synthetic_rows):
        for row, value in zip(synthetic_rows, [0.5, 0.4, 0.3, 0.2, 0.1], strict=True):
            row.sup_error = value
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)
        assert report.checks["sup_error_decreasing"]["passed"] is True

    def test_other_checks(self, synthetic_rows):
        report = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows)

        assert report.checks["a_priori"]["passed"] is True
        assert report.checks["entropy_nonnegative"]["passed"] is True
        assert report.checks["entropy_decay"]["passed"] is True
        assert report.checks["delta_rule"]["passed"] is True
        assert report.checks["scheme_error"]["flagged"] == []

    def test_failed_rows_excluded_from_fits(self, synthetic_rows):
        """Fewer than three successful rows leave the fits empty"""
        rows = synthetic_rows[:2] + [SweepRow(eps=1e-2, delta=0.1, n_cells=0, status="failed:DivergenceError")]
        report = assemble_report(SweepSpec(eps_list=[1e-1, 3e-2, 1e-2]), rows)

        assert report.fits == {}
        assert len(report.rows) == 3
        assert len(report.ok_rows()) == 2

    def test_frame_columns(self, synthetic_rows):
        frame = assemble_report(SweepSpec(eps_list=EPS_LIST), synthetic_rows).to_frame()
        assert list(frame.columns) == SweepRow.columns()
        assert len(frame) == len(EPS_LIST)

    def test_manifest(self, synthetic_rows):
        spec = SweepSpec(eps_list=EPS_LIST)
        manifest = assemble_report(spec, synthetic_rows).manifest

        assert manifest["ledger"] == {"a1": 0.75, "a2": 0.25, "b": spec.b_exponent}
        assert manifest["scheme"]["integrator"] == "ssp-rk2"
        assert manifest["seeds"]["perturbation"] is None
        assert len(manifest["config_hash"]) == 64


def test_envelope_constant():
    row = synthetic_row(0.01, constant=0.7)
    assert envelope_constant(row) == pytest.approx(0.7)


# =============================================================================
# SWEEPS
# =============================================================================


async def test_async_sweep_single_row(small_spec):
    """A single ε yields one row and no fits"""
    report = await epsilon_sweep_async(small_spec, workers=4)

    assert [row.eps for row in report.rows] == [0.1]
    assert report.fits == {}


@pytest.mark.slow
def test_sweep_independent_of_workers(small_spec):
    """Identical specs give identical tables for any worker count"""
    spec = small_spec.model_copy(update={"eps_list": [0.1, 0.05, 0.03]})

    serial = epsilon_sweep(spec, workers=1)
    parallel = epsilon_sweep(spec, workers=2)

    pd.testing.assert_frame_equal(serial.to_frame(), parallel.to_frame())
    assert serial.fits == parallel.fits
