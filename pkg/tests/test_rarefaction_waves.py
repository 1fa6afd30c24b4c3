"""
Unit tests for rarefaction_waves module.
Tests the wave curve, the exact fan, the Burgers smoothing and derivative decay laws.
"""

import math

import numpy as np
import pytest

from rarefaction_lab.errors import ContractError, DomainError, NotARarefactionError, ResolutionError
from rarefaction_lab.gas_dynamics import eigenvalues, riemann_invariants_3
from rarefaction_lab.grid import Grid1D
from rarefaction_lab.rarefaction_waves import (
    DeltaRule,
    SmoothFanParams,
    burgers_initial,
    burgers_residual,
    burgers_smooth,
    connect_right_state,
    delta_rule,
    density_slope_constant,
    derivative_decay_norms,
    exact_fan,
    fan_distance,
    fan_distance_envelope,
    fan_distance_ratios,
    fit_decay_laws,
    predicted_decay_scale,
    smooth_rarefaction,
)


@pytest.fixture
def params(gas, riemann):
    return SmoothFanParams.for_data(gas, riemann, 0.25)


@pytest.fixture
def grid(params):
    return Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, 1.0, cells_per_delta=24)


# =============================================================================
# WAVE CURVE AND EXACT FAN
# =============================================================================


class TestWaveCurve:
    def test_right_state_is_expanding(self, gas, riemann):
        """λ₃ increases from the left to the right state"""
        b_minus, b_plus = riemann.wave_speeds(gas)
        assert b_plus > b_minus
        assert float(riemann.right.v1) == 0.5

    def test_compressive_data_rejected(self, gas, left_state):
        """v₁⁺ below v₁⁻ would be a shock"""
        with pytest.raises(NotARarefactionError):
            connect_right_state(gas, left_state, -0.1)

    def test_zero_strength_wave(self, gas, left_state):
        """v₁⁺ = v₁⁻ returns the left state itself"""
        right = connect_right_state(gas, left_state, 0.0)
        np.testing.assert_allclose(right.stack(), left_state.stack())

    def test_riemann_invariants_on_curve(self, gas, riemann):
        """Both 3-invariants of the right state equal those of the left state"""
        for left_value, right_value in zip(
            riemann_invariants_3(gas, riemann.left), riemann_invariants_3(gas, riemann.right), strict=True
        ):
            assert float(right_value) == pytest.approx(float(left_value), abs=1e-12)


class TestExactFan:
    def test_constant_outside_fan(self, gas, riemann):
        """Left and right states are reproduced outside [B₋t, B₊t]"""
        b_minus, b_plus = riemann.wave_speeds(gas)
        state = exact_fan(gas, riemann, 1.0, np.array([b_minus - 1.0, b_plus + 1.0]))
        np.testing.assert_allclose(state.take(0).stack(), riemann.left.stack())
        np.testing.assert_allclose(state.take(1).stack(), riemann.right.stack())

    def test_self_similar_inside_fan(self, gas, riemann):
        """λ₃ = x₁/t inside the fan"""
        b_minus, b_plus = riemann.wave_speeds(gas)
        t = 2.0
        x = np.linspace(b_minus * t, b_plus * t, 11)[1:-1]
        lam3 = eigenvalues(gas, exact_fan(gas, riemann, t, x))[2]
        np.testing.assert_allclose(lam3, x / t, rtol=1e-12)

    def test_needs_positive_time(self, gas, riemann):
        """The fan is undefined at t = 0"""
        with pytest.raises(DomainError):
            exact_fan(gas, riemann, 0.0, np.zeros(3))


# =============================================================================
# BURGERS SMOOTHING
# =============================================================================


class TestDeltaRule:
    def test_value(self):
        """δ = ε^b |ln ε|"""
        assert delta_rule(0.01, 1.0 / 6.0) == pytest.approx(0.01 ** (1.0 / 6.0) * math.log(100.0))
        assert DeltaRule(0.01, 1.0 / 6.0).delta == delta_rule(0.01, 1.0 / 6.0)

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.5])
    def test_eps_outside_unit_interval(self, eps):
        """The rule is only defined for 0 < ε < 1"""
        with pytest.raises(DomainError):
            delta_rule(eps, 0.5)

    def test_params_validation(self):
        """Edges must be ordered and δ positive"""
        with pytest.raises(DomainError):
            SmoothFanParams(2.0, 1.0, 0.1)
        with pytest.raises(DomainError):
            SmoothFanParams(1.0, 2.0, 0.0)


class TestBurgers:
    def test_initial_data(self, params):
        """B̄ at t = 0 is the tanh data with limits B₋ and B₊"""
        x = np.array([-50.0, 0.0, 50.0])
        b, *_ = burgers_smooth(params, 0.0, x)
        np.testing.assert_allclose(b, burgers_initial(params, x))
        assert b[0] == pytest.approx(params.b_minus)
        assert b[1] == pytest.approx(0.5 * (params.b_minus + params.b_plus))
        assert b[2] == pytest.approx(params.b_plus)

    def test_characteristics(self, params):
        """Values are transported along straight characteristics x₁ = x₀ + tB̄₀(x₀)"""
        x0 = np.linspace(-1.0, 1.0, 9)
        t = 0.7
        b0 = burgers_initial(params, x0)
        b, *_ = burgers_smooth(params, t, x0 + t * b0)
        np.testing.assert_allclose(b, b0, rtol=1e-11)

    def test_derivatives_match_differences(self, params):
        """Analytic x₁-derivatives agree with central differences"""
        x = np.linspace(-1.0, 3.0, 4001)
        b, b_x, b_xx, b_xxx = burgers_smooth(params, 0.5, x)
        for lower, higher in ((b, b_x), (b_x, b_xx), (b_xx, b_xxx)):
            numeric = np.gradient(lower, x)
            scale = np.max(np.abs(higher))
            assert np.max(np.abs(numeric[1:-1] - higher[1:-1])) <= 1e-3 * scale

    def test_residual_small(self, params, grid):
        """B̄_t + B̄B̄ₓ vanishes up to the differencing error"""
        assert burgers_residual(params, 0.5, grid) < 5e-3

    def test_residual_second_order(self, params, grid):
        """Halving dx (and the time step with it) cuts the central-difference residual fourfold"""
        order = math.log2(burgers_residual(params, 0.5, grid) / burgers_residual(params, 0.5, grid.refined()))
        assert order >= 1.9

    def test_negative_time(self, params):
        with pytest.raises(DomainError):
            burgers_smooth(params, -0.1, np.zeros(2))


# =============================================================================
# SMOOTH RAREFACTION
# =============================================================================


class TestSmoothRarefaction:
    def test_third_eigenvalue_is_burgers(self, gas, riemann, params):
        """λ₃(ρ̄, v̄₁, θ̄) = B̄"""
        x = np.linspace(-2.0, 4.0, 51)
        sample = smooth_rarefaction(gas, riemann, params, 0.8, x)
        np.testing.assert_allclose(eigenvalues(gas, sample.state)[2], sample.b, rtol=1e-12)

    def test_invariants_constant(self, gas, riemann, params):
        """The smooth wave stays on the 3-wave curve"""
        sample = smooth_rarefaction(gas, riemann, params, 0.3, np.linspace(-2.0, 3.0, 41))
        w, s = riemann_invariants_3(gas, sample.state)
        assert np.ptp(w) < 1e-12
        assert np.ptp(s) < 1e-12

    def test_derivatives_match_differences(self, gas, riemann, params):
        """First derivatives of (ρ̄, v̄₁, θ̄) agree with central differences"""
        x = np.linspace(-1.0, 3.0, 4001)
        sample = smooth_rarefaction(gas, riemann, params, 0.5, x)
        numeric = np.gradient(sample.state.stack(), x, axis=-1)
        np.testing.assert_allclose(numeric[:, 1:-1], sample.d1[:, 1:-1], atol=1e-4)

    def test_velocity_increasing(self, gas, riemann, params):
        """v̄₁ₓ > 0 everywhere"""
        sample = smooth_rarefaction(gas, riemann, params, 1.0, np.linspace(-3.0, 5.0, 101))
        assert np.all(sample.d1[1] > 0.0)

    def test_mismatched_edges(self, gas, riemann):
        """Edge speeds that do not belong to the end states are a contract violation"""
        with pytest.raises(ContractError):
            smooth_rarefaction(gas, riemann, SmoothFanParams(0.0, 1.0, 0.2), 0.0, np.zeros(3))

    def test_density_slope_constant(self, gas, riemann, params):
        """ρ̄ₓ/(ρ̄^{(3−γ)/2} v̄₁ₓ) is the same constant at every point"""
        sample = smooth_rarefaction(gas, riemann, params, 0.6, np.linspace(-2.0, 4.0, 61))
        ratio, closed = density_slope_constant(gas, riemann, sample)
        finite = ratio[np.isfinite(ratio)]
        assert finite.size > 0
        np.testing.assert_allclose(finite, closed, rtol=1e-8)

    def test_converges_to_fan(self, gas, riemann):
        """A narrower smoothing width brings the smooth wave closer to the fan"""
        distances = []
        for delta in (0.4, 0.2):
            params = SmoothFanParams.for_data(gas, riemann, delta)
            grid = Grid1D.for_fan(params.b_minus, params.b_plus, delta, 1.0, cells_per_delta=16)
            distances.append(fan_distance(gas, riemann, params, 1.0, grid))
        assert distances[1] < distances[0]

    def test_fan_distance_follows_envelope(self, gas, riemann):
        """Distance to the fan over δ(ln 2 + |ln δ|) stays within a factor-2 band at t = 1"""
        ratios = fan_distance_ratios(gas, riemann, [0.1, 0.05, 0.025], t=1.0)
        assert np.all(ratios > 0.0)
        assert np.max(ratios) / np.min(ratios) <= 2.0

    def test_fan_distance_envelope(self):
        assert fan_distance_envelope(0.1, 1.0) == pytest.approx(0.1 * (math.log(2.0) + math.log(10.0)))
        with pytest.raises(DomainError):
            fan_distance_envelope(0.1, 0.0)


# =============================================================================
# DERIVATIVE DECAY
# =============================================================================


class TestDerivativeDecay:
    def test_predicted_scales(self):
        """Orders 1, 2, 3 scale with (δ+t)^{−1+1/p}, (δ+t)^{−1}δ^{−1+1/p} and (δ+t)^{−1}δ^{−2+1/p}"""
        assert predicted_decay_scale(1, 2.0, 0.1, 0.9) == pytest.approx(1.0)
        assert predicted_decay_scale(2, math.inf, 0.5, 0.5) == pytest.approx(2.0)
        assert predicted_decay_scale(3, 1.0, 0.5, 0.5) == pytest.approx(2.0)
        with pytest.raises(ContractError):
            predicted_decay_scale(4, 2.0, 0.1, 0.0)

    def test_table_layout(self, gas, riemann, params, grid):
        """One row per order, exponent and field"""
        table = derivative_decay_norms(gas, riemann, params, 0.0, [1.0, 2.0, math.inf], grid)
        assert len(table.rows) == 3 * 3 * 3
        frame = table.to_frame()
        assert list(frame.columns) == ["field", "order", "p", "value", "predicted_scale"]
        assert table.lookup("v1", 1, math.inf).value > 0.0

    def test_unresolved_grid(self, gas, riemann, params):
        """A grid with too few cells across δ is refused"""
        coarse = Grid1D(-5.0, 5.0, 64)
        with pytest.raises(ResolutionError):
            derivative_decay_norms(gas, riemann, params, 0.0, 2.0, coarse)

    def test_velocity_decay_laws_at_initial_time(self, gas, riemann):
        """The velocity derivatives follow their predicted δ-scaling at t = 0"""
        fits = fit_decay_laws(gas, riemann, [0.4, 0.2, 0.1, 0.05], 0.0, [1.0, 2.0, math.inf])
        velocity = [fit for fit in fits if fit.field == "v1"]
        assert len(velocity) == 9
        assert all(fit.passed for fit in velocity)

    def test_sup_norm_decays_in_time(self, gas, riemann, params, grid):
        """‖v̄₁ₓ(t)‖_∞ ≤ 1/t"""
        table = derivative_decay_norms(gas, riemann, params, 1.0, math.inf, grid)
        assert table.lookup("v1", 1, math.inf).value <= 1.0 + 1e-12
