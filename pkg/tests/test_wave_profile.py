"""
Unit tests for wave_profile module.
Tests assembly of the composite profile, its bounds and the residual representations.
"""

import numpy as np
import pytest

from rarefaction_lab.errors import ContractError, ProfileBoundError, ResolutionError
from rarefaction_lab.fitting import fit_power_law
from rarefaction_lab.gas_dynamics import prim_to_cons
from rarefaction_lab.grid import Grid1D, output_times
from rarefaction_lab.rarefaction_waves import RiemannData, SmoothFanParams, smooth_rarefaction
from rarefaction_lab.wave_profile import (
    assemble_profile,
    build_profile,
    check_profile_bounds,
    profile_system_residual,
    residual_f1,
    residual_f2,
    residual_fields,
    residual_frame,
    residual_norm,
    residual_q1,
    residual_q2,
    system_residual_refinement,
)

T_FINAL = 0.5


@pytest.fixture
def params(gas, riemann):
    return SmoothFanParams.for_data(gas, riemann, 0.5)


@pytest.fixture
def grid(params):
    return Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, T_FINAL)


@pytest.fixture
def profile(gas, riemann, params, grid):
    return build_profile(gas, riemann, params, 0.01, T_FINAL, grid, output_times(T_FINAL, 10))


class TestAssembly:
    def test_zero_eps_reproduces_smooth_wave(self, gas, riemann, params, grid):
        """Without dissipation the composite profile is the smooth rarefaction bit for bit"""
        profile = build_profile(gas, riemann, params, 0.0, T_FINAL, grid, np.array([0.0, T_FINAL]))
        smooth = profile.smooth[-1].state
        np.testing.assert_array_equal(profile.rho[-1], smooth.rho)
        np.testing.assert_array_equal(profile.v1[-1], smooth.v1)
        np.testing.assert_array_equal(profile.theta[-1], smooth.theta)

    def test_conserved_variables_add(self, profile):
        """Ũ = Ū + z in conserved variables"""
        index = -1
        smooth = profile.smooth_conserved(index).stack()
        np.testing.assert_allclose(profile.conserved(index).stack(), smooth + profile.wave.z[index], atol=1e-14)

    def test_primitive_closed_forms(self, gas, profile):
        """The closed-form primitive perturbations are consistent with the conserved sum"""
        index = -1
        recomputed = prim_to_cons(gas, profile.primitive(index)).stack()
        np.testing.assert_allclose(recomputed, profile.conserved(index).stack(), rtol=1e-12, atol=1e-14)

    def test_mismatched_samples(self, gas, riemann, params, grid, profile):
        """Smooth samples at other times are a contract violation"""
        shifted = [smooth_rarefaction(gas, riemann, params, float(t) + 0.01, grid.centers) for t in profile.times]
        with pytest.raises(ContractError):
            assemble_profile(gas, shifted, profile.wave)

    def test_large_wave_breaks_positivity(self, gas, profile):
        """A hugely amplified wave drives the density negative"""
        z1 = profile.wave.z[-1, 0]
        factor = -1e6 * np.sign(z1[np.argmax(np.abs(z1))])
        with pytest.raises(ProfileBoundError, match="density"):
            assemble_profile(gas, profile.smooth, profile.wave.scaled(factor))

    def test_derivatives(self, profile):
        """Profile derivatives are available for every primitive field"""
        derivatives = profile.derivatives(-1)
        assert set(derivatives) == {"rho", "v1", "theta"}
        first, second = derivatives["v1"]
        assert first.shape == second.shape == (profile.grid.n_cells,)


class TestBounds:
    def test_small_eps_within_bounds(self, riemann, profile):
        """3ρ₋/4 ≤ ρ̃ ≤ ρ₊ + ρ₋/4 and likewise for θ̃"""
        assert check_profile_bounds(profile, riemann).satisfied

    def test_strict_raises(self, riemann, profile):
        """Strict mode turns a bound violation into an error"""
        collapsed = RiemannData(left=riemann.left, right=riemann.left)
        assert not check_profile_bounds(profile, collapsed).satisfied
        with pytest.raises(ProfileBoundError):
            check_profile_bounds(profile, collapsed, strict=True)


class TestResiduals:
    def test_q1_representations_agree(self, profile):
        """The compact Q₁ equals the derivative of the flux-difference remainder"""
        for index in range(profile.times.size):
            compact = residual_q1(profile, index)
            defining = residual_q1(profile, index, form="defining")
            np.testing.assert_allclose(compact, defining, atol=1e-9)

    def test_q2_representations_agree(self, profile):
        for index in range(profile.times.size):
            np.testing.assert_allclose(
                residual_q2(profile, index), residual_q2(profile, index, form="defining"), atol=1e-9
            )

    def test_unknown_form(self, profile):
        with pytest.raises(ContractError, match="form"):
            residual_q1(profile, 0, form="other")

    def test_zero_at_initial_time(self, profile):
        """z(0) = 0 so every residual vanishes at t = 0"""
        assert np.all(residual_q1(profile, 0) == 0.0)
        assert np.all(residual_f1(profile, 0) == 0.0)

    def test_residuals_shrink_with_eps(self, gas, riemann, params, grid, profile):
        """Q₁ is quadratic in z, hence in ε"""
        halved = build_profile(gas, riemann, params, 0.005, T_FINAL, grid, output_times(T_FINAL, 10))
        ratio = residual_norm(residual_q1(profile, -1), grid) / residual_norm(residual_q1(halved, -1), grid)
        assert ratio == pytest.approx(4.0, rel=0.05)

    def test_q1_scales_like_eps_squared_over_delta(self, gas, riemann):
        """‖Q₁(T)‖_L² follows ε²/δ^{7/2} along the δ = ε^{1/6}|ln ε| rule"""
        scales, norms = [], []
        for eps in (1e-2, 3e-3, 1e-3, 3e-4):
            params = SmoothFanParams.from_rule(gas, riemann, eps, 1.0 / 6.0)
            grid = Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, 1.0)
            profile = build_profile(gas, riemann, params, eps, 1.0, grid, np.array([0.0, 1.0]))
            scales.append(eps**2 / params.delta**3.5)
            norms.append(residual_norm(residual_q1(profile, -1), grid))
        assert fit_power_law(scales, norms).slope == pytest.approx(1.0, abs=0.2)

    def test_f2_linear_in_phi(self, profile):
        phi = np.ones(profile.grid.n_cells)
        np.testing.assert_allclose(residual_f2(profile, 1, 2.0 * phi), 2.0 * residual_f2(profile, 1, phi))

    def test_residual_fields(self, profile):
        fields = residual_fields(profile, 1)
        assert fields.F2 is None
        assert fields.Q1.shape == (profile.grid.n_cells,)

    def test_system_residual_is_small(self, profile):
        """The composite profile satisfies the primitive-form system up to discretization error"""
        residual = profile_system_residual(profile)
        assert all(np.isfinite(residual.as_tuple()))
        assert max(residual.as_tuple()) < 1e-1

    def test_system_residual_needs_three_snapshots(self, gas, riemann, params, grid):
        profile = build_profile(gas, riemann, params, 0.01, T_FINAL, grid, np.array([0.0, T_FINAL]))
        with pytest.raises(ResolutionError):
            profile_system_residual(profile)

    def test_system_residual_converges_under_refinement(self, gas, riemann):
        """Halving dx and the snapshot spacing together shrinks every equation residual at first order"""
        eps = 0.05
        params = SmoothFanParams.for_data(gas, riemann, 0.5)
        grid = Grid1D.for_fan(params.b_minus, params.b_plus, params.delta, T_FINAL)
        refinement = system_residual_refinement(gas, riemann, params, eps, T_FINAL, grid, snapshots_per_unit=20)
        assert refinement.min_order >= 0.9
        assert refinement.fine.temperature < refinement.coarse.temperature

    def test_residual_frame(self, profile):
        frame = residual_frame(profile, [0, 1])
        assert list(frame.columns) == ["t", "x1", "Q1", "Q2", "F1"]
        assert len(frame) == 2 * profile.grid.n_cells
