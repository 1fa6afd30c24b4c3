"""
Unit tests for gas_dynamics module.
Tests thermodynamic relations, variable conversion and the Euler eigensystem.
"""

import numpy as np
import pytest

from rarefaction_lab.errors import ConditioningError, DomainError
from rarefaction_lab.gas_dynamics import (
    ConservedState,
    PrimitiveState,
    conservative_jacobian,
    cons_to_prim,
    eigendecompose_jacobian,
    eigenvalues,
    entropy,
    pressure,
    pressure_from_entropy,
    prim_to_cons,
    right_eigenvector_derivatives,
    right_eigenvectors,
    riemann_invariants_3,
    sound_speed,
)
from rarefaction_lab.models import GasModel


@pytest.fixture
def states():
    """A handful of admissible states, including a moving one."""
    return PrimitiveState(
        np.array([0.5, 1.0, 2.0, 3.0]),
        np.array([-1.0, 0.0, 0.3, 2.0]),
        np.array([0.8, 1.0, 1.5, 0.2]),
    )


# =============================================================================
# THERMODYNAMICS
# =============================================================================


class TestThermodynamics:
    def test_pressure_is_ideal_gas_law(self, gas):
        """p = Rρθ"""
        assert pressure(gas, 2.0, 3.0) == pytest.approx(6.0)

    def test_entropy_pressure_round_trip(self, gas, states):
        """p(ρ, S(ρ, θ)) reproduces Rρθ"""
        s = entropy(gas, states.rho, states.theta)
        np.testing.assert_allclose(
            pressure_from_entropy(gas, states.rho, s), pressure(gas, states.rho, states.theta), rtol=1e-12
        )

    def test_sound_speed(self, gas):
        """c² = γRθ"""
        assert sound_speed(gas, 1.0, 2.0) ** 2 == pytest.approx(1.4 * 2.0)

    @pytest.mark.parametrize("rho,theta", [(0.0, 1.0), (1.0, -1.0), (np.nan, 1.0)])
    def test_rejects_inadmissible_states(self, gas, rho, theta):
        """Non-positive or non-finite density and temperature raise DomainError"""
        with pytest.raises(DomainError):
            pressure(gas, rho, theta)

    def test_domain_error_is_value_error(self, gas):
        """Callers catching ValueError still see domain violations"""
        with pytest.raises(ValueError):
            sound_speed(gas, -1.0, 1.0)


# =============================================================================
# VARIABLE CONVERSION
# =============================================================================


class TestConversion:
    def test_round_trip(self, gas, states):
        """cons_to_prim inverts prim_to_cons"""
        back = cons_to_prim(gas, prim_to_cons(gas, states))
        np.testing.assert_allclose(back.stack(), states.stack(), rtol=1e-13)

    def test_energy_density(self, gas):
        """𝓔 = ρ(Rθ/(γ−1) + v²/2)"""
        cstate = prim_to_cons(gas, PrimitiveState(2.0, 1.0, 0.4))
        assert float(cstate.energy) == pytest.approx(2.0 * (0.4 / 0.4 + 0.5))

    def test_transverse_velocity_kept(self, gas):
        """v₂ survives the round trip and enters the kinetic energy"""
        state = PrimitiveState(1.0, 0.0, 1.0, 0.5)
        cstate = prim_to_cons(gas, state)
        assert float(cstate.m2) == pytest.approx(0.5)
        assert float(cons_to_prim(gas, cstate).v2) == pytest.approx(0.5)

    def test_from_array_orders(self):
        """(4, ...) arrays are read as (ρ, m₁, m₂, 𝓔)"""
        cstate = ConservedState.from_array(np.array([1.0, 2.0, 3.0, 4.0]))
        assert float(cstate.m2) == 3.0
        assert float(cstate.energy) == 4.0

    def test_negative_internal_energy_rejected(self, gas):
        """A momentum larger than the energy allows is not admissible"""
        with pytest.raises(DomainError):
            cons_to_prim(gas, ConservedState(1.0, 10.0, 1.0))


# =============================================================================
# EIGENSYSTEM
# =============================================================================


class TestEigensystem:
    def test_eigenvalue_order(self, gas, states):
        """λ₁ < λ₂ < λ₃ with λ₂ = v₁"""
        lam1, lam2, lam3 = eigenvalues(gas, states)
        assert np.all(lam1 < lam2)
        assert np.all(lam2 < lam3)
        np.testing.assert_array_equal(lam2, states.v1)

    def test_left_times_right_is_identity(self, gas, states):
        """L·R = I"""
        left, _, right = eigendecompose_jacobian(gas, prim_to_cons(gas, states))
        identity = np.broadcast_to(np.eye(3), left.shape)
        np.testing.assert_allclose(left @ right, identity, atol=1e-10)

    def test_jacobian_diagonalized(self, gas, states):
        """L·A·R = diag(λ₁, λ₂, λ₃)"""
        cstate = prim_to_cons(gas, states)
        left, diag, right = eigendecompose_jacobian(gas, cstate)
        jac = conservative_jacobian(gas, cstate)
        np.testing.assert_allclose(left @ jac @ right, diag, atol=1e-10)

    def test_contact_column(self, gas):
        """r₂ = (γ−1)ρθ(1, v₁, v₁²/2)"""
        right = right_eigenvectors(gas, PrimitiveState(2.0, 1.0, 0.5))
        scale = 0.4 * 2.0 * 0.5
        np.testing.assert_allclose(right[:, 1], [scale, scale, 0.5 * scale])

    def test_jacobian_matches_finite_differences(self, gas):
        """Central differences of the Euler flux converge to the analytic Jacobian"""
        from rarefaction_lab.solver.fluxes import euler_flux

        base = prim_to_cons(gas, PrimitiveState(1.2, 0.3, 0.9)).stack()
        jac = conservative_jacobian(gas, ConservedState.from_array(base))
        step = 1e-6
        for k in range(3):
            shift = np.zeros(3)
            shift[k] = step
            plus = euler_flux(gas, ConservedState.from_array(base + shift))
            minus = euler_flux(gas, ConservedState.from_array(base - shift))
            np.testing.assert_allclose((plus - minus) / (2.0 * step), jac[:, k], atol=1e-7)

    def test_eigenvector_derivatives(self, gas):
        """The analytic x₁-derivative of R matches a difference quotient along a smooth profile"""
        x = np.linspace(0.0, 1.0, 201)
        rho, v, theta = 1.0 + 0.3 * np.sin(x), 0.2 * x, 1.0 + 0.1 * x**2
        state = PrimitiveState(rho, v, theta)
        d_state = np.stack([0.3 * np.cos(x), 0.2 * np.ones_like(x), 0.2 * x])
        analytic = right_eigenvector_derivatives(gas, state, d_state)
        numeric = np.gradient(right_eigenvectors(gas, state), x, axis=0)
        np.testing.assert_allclose(analytic[1:-1], numeric[1:-1], atol=1e-4)

    def test_riemann_invariants_constant_on_curve(self, gas, riemann):
        """Both 3-invariants agree on the two end states of a 3-rarefaction"""
        left = riemann_invariants_3(gas, riemann.left)
        right = riemann_invariants_3(gas, riemann.right)
        assert float(left[0]) == pytest.approx(float(right[0]), abs=1e-12)
        assert float(left[1]) == pytest.approx(float(right[1]), abs=1e-12)

    def test_vacuum_is_ill_conditioned(self):
        """Near-vacuum states are refused by the eigendecomposition"""
        gas = GasModel()
        cstate = prim_to_cons(gas, PrimitiveState(1.0, 0.0, 1e-14))
        with pytest.raises(ConditioningError):
            eigendecompose_jacobian(gas, cstate)
