import numpy as np
import pytest

from errors import PreconditionError
from model import (
    EquilibriumKind, Grid, KineticState, MacroField, ModelParams, Orientation, Scaling,
    collision_gain, collision_loss, collision_q, collision_r, linearize_apply, mass, maxwellian,
    project, resample,
)


def single(plus, minus):
    return KineticState([plus], [minus])


class TestGrid:
    def test_centers_are_cell_midpoints(self):
        grid = Grid(4)
        assert grid.dx == 0.25
        np.testing.assert_allclose(grid.centers, [0.125, 0.375, 0.625, 0.875])

    @pytest.mark.parametrize('n', [0, -3, 2.5, True])
    def test_rejects_bad_cell_counts(self, n):
        with pytest.raises(PreconditionError):
            Grid(n)

    def test_shift_cells(self):
        grid = Grid(8)
        assert grid.shift_cells(0.25) == 2
        assert grid.shift_cells(-0.125) == -1
        with pytest.raises(PreconditionError, match='not a multiple'):
            grid.shift_cells(0.1)

    def test_refined(self):
        assert Grid(8).refined().n_cells == 16


class TestKineticState:
    def test_components_are_read_only_copies(self):
        values = np.array([1.0, 2.0])
        state = KineticState(values, values)
        values[0] = 9.0
        assert state.f_plus[0] == 1.0
        with pytest.raises(ValueError):
            state.f_plus[0] = 3.0

    def test_shape_mismatch(self):
        with pytest.raises(PreconditionError):
            KineticState([1.0, 2.0], [1.0])

    def test_validate_names_first_bad_cell(self):
        state = KineticState([1.0, 1.0, -0.5], [1.0, np.nan, 1.0])
        with pytest.raises(PreconditionError) as info:
            state.validate()
        # f_plus is checked first
        assert info.value.cell == 2
        assert 'cell 2' in str(info.value)

    def test_validate_strict(self):
        state = KineticState([1.0, 0.0], [1.0, 1.0])
        state.validate()
        with pytest.raises(PreconditionError, match='nonpositive'):
            state.validate(strictly_positive=True)

    def test_swap_and_reflect(self):
        state = KineticState([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        assert state.swap() == KineticState([4.0, 5.0, 6.0], [1.0, 2.0, 3.0])
        assert state.reflect() == KineticState([3.0, 2.0, 1.0], [6.0, 5.0, 4.0])

    def test_norms(self):
        state = KineticState([1.0, 3.0], [2.0, 0.5])
        assert state.sup_norm() == 5.0
        assert state.l1_norm(Grid(2)) == pytest.approx(3.25)
        assert state.minimum() == 0.5


class TestModelParams:
    def test_gamma_one_rejected(self):
        with pytest.raises(PreconditionError, match='differ from 1'):
            ModelParams(1.0)

    @pytest.mark.parametrize('kwargs', [
        {'gamma': 0.0}, {'gamma': -2.0}, {'gamma': 2.0, 'epsilon': 0.0}, {'gamma': 2.0, 'chi_floor': 1e-2},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(PreconditionError):
            ModelParams(**kwargs)

    def test_stiffness_and_step(self):
        grid = Grid(10)
        hyperbolic = ModelParams(2.0, 0.1)
        parabolic = ModelParams(2.0, 0.1, 'parabolic')
        assert parabolic.scaling is Scaling.PARABOLIC
        assert hyperbolic.stiffness == pytest.approx(10.0)
        assert parabolic.stiffness == pytest.approx(100.0)
        assert hyperbolic.time_step(grid) == pytest.approx(0.1)
        assert parabolic.time_step(grid) == pytest.approx(0.01)


class TestCollision:
    @pytest.mark.parametrize('plus, minus, expected', [
        (0.5, 0.5, 0.0),
        (2.0, 1.0, 0.4),
        (1.0, 0.0, 0.0),
    ])
    def test_q_values(self, plus, minus, expected):
        q = collision_q(single(plus, minus), ModelParams(2.0))
        assert q.plus[0] == pytest.approx(expected)
        assert q.minus[0] == -q.plus[0]

    def test_q_zero_below_floor(self):
        q = collision_q(single(0.0, 0.0), ModelParams(0.5))
        assert q.plus[0] == 0.0 and q.minus[0] == 0.0

    def test_q_rejects_nonfinite(self):
        with pytest.raises(PreconditionError) as info:
            collision_q(KineticState([1.0, np.inf], [1.0, 1.0]), ModelParams(2.0))
        assert info.value.cell == 1

    @pytest.mark.parametrize('gamma', [0.5, 2.0, 3.5])
    def test_q_swaps_sign_with_orientations(self, gamma):
        rng = np.random.default_rng(11)
        state = KineticState(rng.uniform(0.01, 10.0, 100), rng.uniform(0.01, 10.0, 100))
        params = ModelParams(gamma)
        q = collision_q(state, params)
        swapped = collision_q(state.swap(), params)
        np.testing.assert_allclose(swapped.plus, q.minus, rtol=1e-15, atol=1e-15)
        np.testing.assert_allclose(swapped.minus, q.plus, rtol=1e-15, atol=1e-15)

    @pytest.mark.parametrize('gamma', [0.5, 2.0, 3.5])
    @pytest.mark.parametrize('scale', [0.25, 3.0, 1e3])
    def test_q_homogeneous_of_degree_one(self, gamma, scale):
        rng = np.random.default_rng(13)
        state = KineticState(rng.uniform(0.01, 10.0, 100), rng.uniform(0.01, 10.0, 100))
        params = ModelParams(gamma)
        q = collision_q(state, params)
        scaled = collision_q(KineticState(scale * state.f_plus, scale * state.f_minus), params)
        np.testing.assert_allclose(scaled.plus, scale * q.plus, rtol=1e-12, atol=1e-12 * scale)

    def test_gain_minus_loss(self):
        rng = np.random.default_rng(3)
        state = KineticState(rng.uniform(0.1, 4.0, 50), rng.uniform(0.1, 4.0, 50))
        params = ModelParams(3.0)
        q = collision_q(state, params)
        gain = collision_gain(state, params)
        loss = collision_loss(state, params)
        np.testing.assert_allclose(gain.plus - loss.plus, q.plus, atol=1e-13)
        np.testing.assert_allclose(gain.minus - loss.minus, q.minus, atol=1e-13)

    def test_r_values(self):
        r = collision_r(single(2.0, 1.0), ModelParams(2.0))
        assert r.f_plus[0] == pytest.approx(2.4)
        assert r.f_minus[0] == pytest.approx(0.6)
        assert collision_r(single(1.0, 1.0), ModelParams(0.5)) == single(1.0, 1.0)

    def test_r_homogeneous_of_degree_one(self):
        r = collision_r(single(6.0, 3.0), ModelParams(2.0))
        assert r.f_plus[0] == pytest.approx(7.2)
        assert r.f_minus[0] == pytest.approx(1.8)

    def test_r_minus_f_is_q(self):
        rng = np.random.default_rng(7)
        state = KineticState(rng.uniform(0.01, 10.0, 200), rng.uniform(0.01, 10.0, 200))
        params = ModelParams(0.5)
        r = collision_r(state, params)
        q = collision_q(state, params)
        np.testing.assert_allclose(r.f_plus - state.f_plus, q.plus, rtol=1e-12, atol=1e-12)

    def test_r_needs_positive_state(self):
        with pytest.raises(PreconditionError):
            collision_r(single(1.0, 0.0), ModelParams(2.0))


class TestEquilibria:
    def test_maxwellians(self):
        rho = MacroField([4.0])
        assert maxwellian(EquilibriumKind.diffusive(), rho) == single(2.0, 2.0)
        assert maxwellian(EquilibriumKind.aligned(1), rho) == single(4.0, 0.0)
        assert maxwellian(EquilibriumKind.aligned(-1), rho) == single(0.0, 4.0)
        assert maxwellian(EquilibriumKind.aligned(1), [0.0]) == single(0.0, 0.0)

    def test_maxwellian_rejects_negative_density(self):
        with pytest.raises(PreconditionError):
            maxwellian(EquilibriumKind.diffusive(), [1.0, -1.0])

    @pytest.mark.parametrize('kind', [
        EquilibriumKind.diffusive(), EquilibriumKind.aligned(1), EquilibriumKind.aligned(-1),
    ])
    def test_maxwellian_is_annihilated(self, kind):
        rho = 1.0 + 0.5 * np.cos(np.linspace(0, 6, 40))
        q = collision_q(maxwellian(kind, rho), ModelParams(2.0))
        assert np.all(q.plus == 0.0)

    def test_kind_validation(self):
        with pytest.raises(PreconditionError):
            EquilibriumKind.aligned(0)
        with pytest.raises(PreconditionError):
            EquilibriumKind('swirl')
        assert str(EquilibriumKind.aligned(-1)) == 'aligned(-1)'

    def test_linearization(self):
        assert linearize_apply(EquilibriumKind.diffusive(), 0.5, (1.0, -1.0)) == (-0.5, 0.5)
        assert linearize_apply(EquilibriumKind.aligned(1), 3.0, (3.0, 2.0)) == (2.0, -2.0)
        assert linearize_apply(EquilibriumKind.diffusive(), 2.0, (1.5, 1.5)) == (0.0, 0.0)

    def test_projections(self):
        assert project(EquilibriumKind.diffusive(), (3.0, 1.0), 'hydro') == (2.0, 2.0)
        assert project(EquilibriumKind.aligned(1), (3.0, 1.0), 'kinetic') == (-1.0, 1.0)
        assert project(EquilibriumKind.aligned(-1), (3.0, 1.0), 'hydro') == (0.0, 4.0)

    @pytest.mark.parametrize('kind', [
        EquilibriumKind.diffusive(), EquilibriumKind.aligned(1), EquilibriumKind.aligned(-1),
    ])
    def test_projections_are_complementary(self, kind):
        pair = (np.array([3.0, 0.5]), np.array([1.0, 2.0]))
        hydro = project(kind, pair, 'hydro')
        kinetic = project(kind, pair, 'kinetic')
        np.testing.assert_allclose(hydro[0] + kinetic[0], pair[0])
        np.testing.assert_allclose(hydro[1] + kinetic[1], pair[1])
        again = project(kind, hydro, 'hydro')
        np.testing.assert_allclose(again[0], hydro[0])


class TestMass:
    def test_constant_state(self):
        grid = Grid(16)
        assert mass(KineticState.constant(2.0, 1.0, 16), grid) == pytest.approx(3.0)
        assert mass(KineticState.constant(0.0, 0.0, 16), grid) == 0.0
        diffusive = maxwellian(EquilibriumKind.diffusive(), np.full(16, 4.0))
        assert mass(diffusive, grid) == pytest.approx(4.0)


def test_resample_is_exact_for_low_modes():
    coarse, fine = Grid(16), Grid(64)
    trig = lambda x: 1.0 + 0.3 * np.cos(2 * np.pi * x) + 0.1 * np.sin(4 * np.pi * x)
    state = KineticState(trig(coarse.centers), 2.0 * trig(coarse.centers))
    up = resample(state, 64)
    np.testing.assert_allclose(up.f_plus, trig(fine.centers), atol=1e-12)
    down = resample(up, 16)
    np.testing.assert_allclose(down.f_minus, state.f_minus, atol=1e-12)


def test_orientation_opposite():
    assert Orientation.PLUS.opposite() is Orientation.MINUS
    assert Orientation(-1).opposite() is Orientation.PLUS
