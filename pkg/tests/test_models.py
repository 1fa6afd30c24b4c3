"""
Unit tests for models module.
Tests validation of the configuration tree and the exponent ledger.
"""

import pytest
from pydantic import ValidationError

from rarefaction_lab.models import GasModel, LabConfig, SweepSection, WaveSection, check_exponent_ledger


class TestGasModel:
    def test_defaults(self):
        gas = GasModel()
        assert gas.gamma == 1.4
        assert gas.viscosity == pytest.approx(2.0)

    def test_lambda_alias(self):
        """The bulk viscosity is spelled lambda in configuration files"""
        assert GasModel.model_validate({"lambda": 0.3}).lam == 0.3

    def test_viscosity_constraint(self):
        """2μ + 3λ must be nonnegative"""
        with pytest.raises(ValidationError, match="2\\*mu"):
            GasModel(mu=1.0, lam=-1.0)

    def test_gamma_above_one(self):
        with pytest.raises(ValidationError):
            GasModel(gamma=1.0)


class TestWaveSection:
    def test_compressive_rejected(self):
        with pytest.raises(ValidationError, match="expand"):
            WaveSection(v_minus=0.5, v_plus=0.0)

    def test_zero_strength_allowed(self):
        assert WaveSection(v_minus=0.2, v_plus=0.2).v_plus == 0.2


class TestExponentLedger:
    def test_defaults_satisfy_ledger(self):
        check_exponent_ledger(0.75, 0.25, 1.0 / 6.0)

    @pytest.mark.parametrize(
        "a1,a2,b,message",
        [
            (0.75, 0.2, 0.1, "a2 >= 1/4"),
            (0.75, 0.25, 0.2, "b <="),
            (0.5, 0.25, 0.1, "2\\*a1"),
        ],
    )
    def test_violations(self, a1, a2, b, message):
        with pytest.raises(ValueError, match=message):
            check_exponent_ledger(a1, a2, b)


class TestSweepSection:
    def test_eps_list_decreasing(self):
        with pytest.raises(ValidationError, match="decreasing"):
            SweepSection(eps_list=[0.01, 0.1])

    def test_eps_in_unit_interval(self):
        with pytest.raises(ValidationError):
            SweepSection(eps_list=[1.5])

    def test_empty_window(self):
        with pytest.raises(ValidationError, match="window"):
            SweepSection(h=1.0, T=1.0)


class TestLabConfig:
    def test_sweep_spec_carries_templates(self):
        config = LabConfig.model_validate({"solver": {"flux": "rusanov"}, "sweep": {"eps_list": [0.1, 0.05, 0.01]}})
        spec = config.sweep_spec()
        assert spec.solver.flux == "rusanov"
        assert spec.eps_list == [0.1, 0.05, 0.01]
        assert spec.gas == config.gas
