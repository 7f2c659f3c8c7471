import math

import numpy as np
import pytest

from asymptotics import (
    C_TWO, DiffusionRegime, DiffusionSpec, _separation_holds, aligned_approximant, backward_diffusion_demo,
    chapman_enskog_residual, collision_term, composite_approximant, diffusion_coefficient, heat_solve,
    initial_layer_solve, layer_certificate, layer_derivative_decay, macroscopic_operator, select_c_gamma,
    traveling_wave,
)
from errors import PreconditionError
from model import EquilibriumKind, Grid, KineticState, MacroField


def cosine(grid, mean=2.0, shift=0.0):
    return mean + np.cos(2 * np.pi * (grid.centers + shift))


class TestDiffusion:
    def test_coefficients(self):
        assert diffusion_coefficient(0.5, 0.1, 'ns_hyperbolic') == pytest.approx(0.2)
        assert diffusion_coefficient(0.5, 0.1, 'parabolic_zeroth') == pytest.approx(2.0)
        assert diffusion_coefficient(0.5, 0.1, 'euler_hyperbolic') == 0.0
        assert diffusion_coefficient(2.0, 0.1, DiffusionRegime.PARABOLIC_ZEROTH) < 0.0

    def test_backward_needs_demo_flag(self):
        with pytest.raises(PreconditionError, match='unstable demo'):
            DiffusionSpec.build(2.0, 0.1, 'parabolic_zeroth')
        spec = DiffusionSpec.build(2.0, 0.1, 'parabolic_zeroth', unstable_demo=True)
        assert spec.backward and spec.coefficient == pytest.approx(-1.0)

    def test_macroscopic_operator(self):
        aligned = macroscopic_operator(EquilibriumKind.aligned(-1), 'hyperbolic', 2.0, 0.1)
        assert aligned.speed == -1.0 and aligned.diffusion == 0.0
        diffusive = macroscopic_operator(EquilibriumKind.diffusive(), 'parabolic', 0.5, 0.1)
        assert diffusive.diffusion == pytest.approx(2.0) and not diffusive.backward
        assert macroscopic_operator(EquilibriumKind.diffusive(), 'hyperbolic', 3.0, 0.1).backward
        with pytest.raises(PreconditionError):
            macroscopic_operator(EquilibriumKind.aligned(1), 'parabolic', 2.0, 0.1)

    def test_heat_constant(self):
        grid = Grid(32)
        out = heat_solve(np.full(32, 3.0), 0.7, 1.0, grid)
        np.testing.assert_allclose(out.rho, 3.0, atol=1e-14)

    def test_heat_single_mode(self):
        grid = Grid(64)
        D, t = 0.3, 0.2
        out = heat_solve(cosine(grid, 1.0), D, t, grid)
        expected = 1.0 + math.exp(-4 * math.pi ** 2 * D * t) * np.cos(2 * np.pi * grid.centers)
        np.testing.assert_allclose(out.rho, expected, atol=1e-12)

    def test_heat_rejects_nonpositive_coefficient(self):
        grid = Grid(8)
        with pytest.raises(PreconditionError):
            heat_solve(np.ones(8), 0.0, 1.0, grid)
        with pytest.raises(PreconditionError):
            heat_solve(np.ones(8), -1.0, 1.0, grid)

    def test_backward_demo(self):
        grid = Grid(32)
        rho0 = cosine(grid)
        with pytest.raises(PreconditionError):
            backward_diffusion_demo(rho0, 2.0, 0.1, 'parabolic_zeroth', 0.01, grid)
        with pytest.raises(PreconditionError):
            backward_diffusion_demo(rho0, 0.5, 0.1, 'parabolic_zeroth', 0.01, grid, unstable_demo=True)
        growth = backward_diffusion_demo(rho0, 2.0, 0.1, 'parabolic_zeroth', 0.01, grid, unstable_demo=True)
        assert growth.coefficient == pytest.approx(-1.0)
        assert growth.wavenumbers[0] == 1
        assert growth.factors[0] == pytest.approx(math.exp(4 * math.pi ** 2 * 0.01))
        assert np.all(np.diff(growth.factors) > 0)


class TestTravelingWave:
    def test_half_period(self):
        grid = Grid(64)
        out = traveling_wave(cosine(grid), 1, 0.5, grid)
        np.testing.assert_allclose(out.rho, 2.0 - np.cos(2 * np.pi * grid.centers), atol=1e-14)

    def test_zero_and_leftward(self):
        grid = Grid(64)
        F = cosine(grid)
        assert traveling_wave(F, 1, 0.0, grid) == MacroField(F)
        out = traveling_wave(F, -1, 0.25, grid)
        np.testing.assert_allclose(out.rho, cosine(grid, shift=0.25), atol=1e-14)

    def test_fractional_shift(self):
        grid = Grid(64)
        out = traveling_wave(cosine(grid), 1, 0.1, grid)
        np.testing.assert_allclose(out.rho, cosine(grid, shift=-0.1), atol=1e-12)
        with pytest.raises(PreconditionError):
            traveling_wave(cosine(grid), 1, 0.1, grid, allow_spectral=False)


class TestSeparationConstant:
    def test_gamma_two_is_exact(self):
        assert select_c_gamma(2.0) == C_TWO
        assert C_TWO == pytest.approx(4.7320508, abs=1e-7)

    @pytest.mark.parametrize('gamma', [1.5, 3.0, 5.0])
    def test_selected_constant_satisfies_bound(self, gamma):
        c = select_c_gamma(gamma)
        assert c >= 2.0
        assert _separation_holds(c, gamma)

    def test_gamma_three_matches_gamma_two_root(self):
        # both reduce to (1 - theta)^2 = 2 theta at the boundary
        assert select_c_gamma(3.0) == pytest.approx(C_TWO, rel=0.011)

    def test_needs_alignment(self):
        with pytest.raises(PreconditionError):
            select_c_gamma(0.5)


class TestLayer:
    def test_certificate_delta(self):
        certificate = layer_certificate(np.full(8, 4.0), np.full(8, 1.0), 2.0)
        assert certificate.theta_max == pytest.approx(1 / 3)
        assert certificate.delta == pytest.approx(0.6)
        assert certificate.satisfiable
        assert certificate.positive_floor
        assert not certificate.pointwise_separation and not certificate.uniform_separation
        assert certificate.c_gamma == C_TWO

    def test_certificate_limits(self):
        assert layer_certificate(np.full(4, 3.0), np.full(4, 1e-12), 2.0).delta == pytest.approx(1.0)
        unsatisfiable = layer_certificate(np.full(4, 1.0), np.full(4, 1.0), 2.0)
        assert not unsatisfiable.satisfiable
        assert unsatisfiable.delta == 0.0 and math.isinf(unsatisfiable.theta_max)

    def test_certificate_all_conditions(self, aligned_state):
        certificate = layer_certificate(aligned_state.f_plus, aligned_state.f_minus, 2.0)
        assert certificate.all_conditions
        assert 0.0 < certificate.delta < 1.0

    def test_symmetric_start_rejected(self):
        rho0 = np.full(8, 3.0)
        with pytest.raises(PreconditionError) as info:
            initial_layer_solve(rho0, rho0 / 2, 2.0)
        assert info.value.cell == 0

    def test_needs_alignment(self):
        with pytest.raises(PreconditionError):
            initial_layer_solve(np.full(4, 3.0), np.full(4, 0.5), 0.5)

    def test_constant_data_gives_x_independent_profile(self):
        profile = initial_layer_solve(np.full(16, 3.0), np.full(16, 0.5), 2.0, tau_end=10.0, n_taus=101)
        assert profile.values.shape == (101, 16)
        assert np.all(profile.values == profile.values[:, :1])

    def test_exponential_envelope(self, aligned_state):
        rho0, h0 = aligned_state.f_plus, aligned_state.f_minus
        certificate = layer_certificate(rho0, h0, 2.0)
        profile = initial_layer_solve(rho0, h0, 2.0, tau_end=20.0, n_taus=201)
        envelope = h0[None, :] * np.exp(-certificate.delta * profile.taus)[:, None]
        assert np.all(profile.values <= envelope + 1e-12)
        assert np.all(profile.values > 0.0)

    def test_profile_at_between_samples(self):
        profile = initial_layer_solve(np.full(4, 3.0), np.full(4, 0.5), 2.0, tau_end=2.0, n_taus=3)
        np.testing.assert_array_equal(profile.at(1.0), profile.values[1])
        fine = initial_layer_solve(np.full(4, 3.0), np.full(4, 0.5), 2.0, tau_end=1.5, n_taus=4)
        np.testing.assert_allclose(profile.at(1.5), fine.values[-1], rtol=1e-8)


class TestApproximant:
    @pytest.mark.parametrize('bulk', ['released', 'total'])
    def test_bulk_reproduces_datum(self, aligned_state, bulk):
        composite = composite_approximant(aligned_state, 1, 2.0, 0.1, bulk=bulk)
        start = composite.evaluate(0.0)
        np.testing.assert_allclose(start.f_plus, aligned_state.f_plus, rtol=1e-14)
        np.testing.assert_array_equal(start.f_minus, aligned_state.f_minus)

    def test_released_bulk_is_default(self, aligned_state):
        composite = composite_approximant(aligned_state, 1, 2.0, 0.1)
        assert composite.bulk_mode == 'released'
        np.testing.assert_array_equal(composite.bulk.rho, aligned_state.f_plus)

    @pytest.mark.parametrize('t', [0.05, 0.3, 1.0])
    def test_released_bulk_conserves_mass(self, aligned_state, grid64, t):
        state = aligned_approximant(aligned_state, 1, 2.0, 0.1, t)
        assert np.sum(state.total()) == pytest.approx(np.sum(aligned_state.total()), rel=1e-12)

    def test_released_mass_switches_where_it_travelled(self, aligned_state, grid64):
        # eps and t are binary fractions, so tau = 10 is a stored sample and every shift is whole cells
        eps, t = 0.0625, 0.625
        composite = composite_approximant(aligned_state, 1, 2.0, eps, n_taus=121)
        layer = composite.layer
        expected = traveling_wave(aligned_state.f_plus, 1, t, grid64).rho.copy()
        for i in np.flatnonzero(layer.taus[1:] <= t / eps):
            released = layer.values[i] - layer.values[i + 1]
            s = 0.5 * (layer.taus[i] + layer.taus[i + 1])
            expected += np.roll(released, grid64.shift_cells(t - 2.0 * eps * s))
        state = composite.evaluate(t)
        np.testing.assert_allclose(state.f_plus, expected, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(state.f_minus, layer.values[40])

    def test_released_bulk_of_constant_data_settles_on_total(self, grid64):
        F = KineticState.constant(5.0, 0.5, 64)
        late = aligned_approximant(F, -1, 2.0, 0.01, 0.5)
        np.testing.assert_allclose(late.f_minus, 5.5, rtol=1e-12)
        assert np.all(late.f_plus < 1e-15)

    def test_stated_bulk_at_zero(self, aligned_state):
        start = aligned_approximant(aligned_state, 1, 2.0, 0.1, 0.0, bulk='stated')
        np.testing.assert_allclose(start.f_plus, aligned_state.f_plus - aligned_state.f_minus, rtol=1e-14)
        np.testing.assert_array_equal(start.f_minus, aligned_state.f_minus)

    def test_late_times(self, aligned_state, grid64):
        composite = composite_approximant(aligned_state, 1, 2.0, 0.01, bulk='stated')
        delta = layer_certificate(aligned_state.f_plus, aligned_state.f_minus, 2.0).delta
        late = composite.evaluate(0.5)
        assert np.max(late.f_minus) <= np.max(aligned_state.f_minus) * math.exp(-delta * 50.0)
        np.testing.assert_allclose(late.f_plus, np.roll(aligned_state.f_plus, 32), atol=1e-12)

    def test_pure_wave_without_minority(self, grid64):
        F_k = cosine(grid64)
        F = KineticState(np.zeros(64), F_k)
        state = aligned_approximant(F, -1, 2.0, 0.1, 0.25)
        assert np.all(state.f_plus == 0.0)
        np.testing.assert_array_equal(state.f_minus, np.roll(F_k, -16))

    def test_unsatisfiable_certificate(self):
        F = KineticState.constant(1.0, 1.0, 8)
        with pytest.raises(PreconditionError, match='unsatisfiable'):
            composite_approximant(F, 1, 2.0, 0.1, bulk='stated')

    def test_unknown_bulk(self, aligned_state):
        with pytest.raises(PreconditionError):
            composite_approximant(aligned_state, 1, 2.0, 0.1, bulk='mean')


class TestResiduals:
    def test_zero_minority(self):
        grid = Grid(64)
        rho = cosine(grid)
        assert chapman_enskog_residual(rho, np.zeros(64), 2.0, 0.1, grid) == (0.0, 0.0)

    def test_full_minority_has_no_collision_residual(self):
        grid = Grid(64)
        rho = cosine(grid)
        hydro, collision = chapman_enskog_residual(rho, rho, 2.0, 0.1, grid)
        assert collision == 0.0
        assert hydro > 0.0

    def test_rejects_minority_above_density(self):
        grid = Grid(4)
        with pytest.raises(PreconditionError) as info:
            chapman_enskog_residual(np.ones(4), [0.5, 2.0, 0.5, 0.5], 2.0, 0.1, grid)
        assert info.value.cell == 1

    def test_small_minority_relaxes_at_unit_rate(self):
        w = np.full(3, 1e-6)
        np.testing.assert_allclose(collision_term(np.full(3, 2.0), w, 2.0), -w, rtol=1e-5)


class TestDerivativeDecay:
    def test_constant_data(self):
        profile = initial_layer_solve(np.full(16, 3.0), np.full(16, 0.5), 2.0, tau_end=10.0, n_taus=51)
        decay = layer_derivative_decay(profile, 0.0)
        assert math.isinf(decay.rate) and decay.bounded

    def test_smooth_data_decays(self, aligned_state):
        profile = initial_layer_solve(aligned_state.f_plus, aligned_state.f_minus, 2.0)
        decay = layer_derivative_decay(profile, 2 * np.pi * 1.2)
        assert decay.rate > 0.0
        assert decay.bounded
        assert decay.n_points >= 3

    def test_refuses_without_separation(self):
        grid = Grid(32)
        profile = initial_layer_solve(3.0 + 0.1 * np.cos(2 * np.pi * grid.centers), np.full(32, 1.0), 2.0)
        with pytest.raises(PreconditionError, match='not certified'):
            layer_derivative_decay(profile, 1.0)
