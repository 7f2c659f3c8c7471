"""
Numerical experiments for the asymptotic limits of the alignment model.

Each check compares a kinetic run with the matching limit object and reports
rather than raises: ConditionReport, ErrorSeries and SandwichResult carry flags,
and run_selftest collects one CheckResult per acceptance experiment.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
import logging
import math
import time
from typing import NamedTuple, Optional

import numpy as np

from asymptotics import (
    chapman_enskog_residual, collision_term, composite_approximant, diffusion_coefficient,
    heat_solve, initial_layer_solve, layer_certificate, layer_derivative_decay, select_c_gamma,
)
from errors import AlignmentError, PreconditionError
from kinetic_solver import (
    HomogeneousState, Trajectory, micro_solve, monotone_solve, solve_homogeneous, solve_kinetic,
)
from model import (
    EquilibriumKind, Grid, KineticState, MacroField, ModelParams, Orientation, Scaling,
    collision_q, collision_r, linearize_apply, maxwellian, project, resample,
)

logger = logging.getLogger(__name__)

EXPERIMENTS = ('aligned_hyperbolic', 'diffusive_parabolic', 'diffusive_hyperbolic')

DEFAULT_EPSILONS = (0.1, 0.05, 0.025, 0.0125)
SAMPLES_PER_RUN = 50
DENSE_LAYER_WIDTH = 10.0
MIN_ALIGNED_ORDER = 0.9
MAX_FIT_RESIDUAL = 0.1


@dataclass(frozen=True)
class ConditionReport:
    mu: float
    positive_floor: bool
    pointwise_separation: bool
    uniform_separation: bool
    c_gamma_used: float


@dataclass(frozen=True)
class ErrorSeries:
    experiment: str
    gamma: float
    epsilons: tuple
    errors: tuple
    fitted_order: Optional[float] = None
    fit_residual: Optional[float] = None
    fit_constant: Optional[float] = None
    c_t: Optional[float] = None
    n_cells: tuple = ()
    monotone: bool = True
    passed: bool = False
    conditions: Optional[ConditionReport] = None

    def to_dict(self):
        data = asdict(self)
        data['epsilons'] = list(self.epsilons)
        data['errors'] = list(self.errors)
        data['n_cells'] = list(self.n_cells)
        return data


class SandwichResult(NamedTuple):
    passed: bool
    max_violation: float
    tolerance: float


class BoundResult(NamedTuple):
    passed: bool
    lower: float
    upper: float
    observed_min: float
    observed_max: float


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''
    seconds: float = 0.0


def check_conditions(F, k, gamma, c_gamma=None):
    """
    Evaluate the aligned-limit conditions on the datum F.

    Never raises for violated conditions; gamma <= 1 reports every
    separation flag as false.
    """
    k = Orientation(k)
    majority = np.asarray(F.component(k))
    minority = np.asarray(F.component(k.opposite()))
    mu = float(min(majority.min(), minority.min()))
    if c_gamma is None:
        try:
            c_gamma = select_c_gamma(gamma)
        except PreconditionError:
            return ConditionReport(mu, bool(minority.min() > 0), False, False, math.nan)
    return ConditionReport(
        mu=mu,
        positive_floor=bool(minority.min() > 0),
        pointwise_separation=bool(np.all(majority > c_gamma * minority)),
        uniform_separation=bool(majority.min() >= c_gamma * minority.max()),
        c_gamma_used=float(c_gamma),
    )


def _states_of(reference):
    if isinstance(reference, Trajectory):
        return reference.states
    return tuple(reference)


def sup_error(traj, reference):
    """
    Largest sampled X_inf distance, sum_j sup_x |f(j) - ref(j)|.

    Args:
        traj: Trajectory.
        reference: Trajectory or sequence of KineticState, one per sample of traj.
    """
    states = _states_of(reference)
    if len(states) != len(traj.states):
        raise PreconditionError(f"{len(traj.states)} samples against {len(states)} reference states")
    if isinstance(reference, Trajectory) and not np.allclose(reference.times, traj.times, rtol=0, atol=1e-12):
        raise PreconditionError("trajectory and reference are sampled at different times")
    worst = 0.0
    for state, other in zip(traj.states, states):
        if state.n_cells != other.n_cells:
            raise PreconditionError(f"grid mismatch: {state.n_cells} vs {other.n_cells} cells")
        distance = float(np.max(np.abs(state.f_plus - other.f_plus)) + np.max(np.abs(state.f_minus - other.f_minus)))
        worst = max(worst, distance)
    return worst


def estimate_order(abscissae, errors):
    """
    Least-squares fit of errors = constant * abscissae^order on log scales.

    Returns:
        tuple: (constant, order, rms residual of the log fit).
    """
    abscissae = np.asarray(abscissae, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if abscissae.shape != errors.shape:
        raise PreconditionError("abscissae and errors differ in length")
    if abscissae.shape[0] <= 1:
        raise PreconditionError("need more than one point to fit an order")
    # exact zeros would give -inf logs
    floor = (errors.max() if errors.max() > 0 else 1.0) * np.finfo(float).eps
    log_x = np.log(abscissae)
    log_e = np.log(errors + floor)
    order, intercept = np.polyfit(log_x, log_e, 1)
    residual = float(np.sqrt(np.mean((log_e - (intercept + order * log_x)) ** 2)))
    return float(np.exp(intercept)), float(order), residual


def _next_power_of_two(value):
    return 1 << max(0, math.ceil(math.log2(max(value, 1.0))))


def _experiment_setup(experiment, gamma, epsilon):
    if experiment == 'aligned_hyperbolic':
        return ModelParams(gamma, epsilon, Scaling.HYPERBOLIC), None
    if experiment == 'diffusive_parabolic':
        return ModelParams(gamma, epsilon, Scaling.PARABOLIC), diffusion_coefficient(gamma, epsilon, 'parabolic_zeroth')
    return ModelParams(gamma, epsilon, Scaling.HYPERBOLIC), diffusion_coefficient(gamma, epsilon, 'ns_hyperbolic')


def _point_error(experiment, F, k, gamma, epsilon, T, n_cells):
    """Sup-in-time error of one kinetic run against its limit object."""
    grid = Grid(n_cells)
    f0 = resample(F, n_cells)
    params, coefficient = _experiment_setup(experiment, gamma, epsilon)
    n_steps = round(T / params.time_step(grid))
    traj = solve_kinetic(
        f0, params, grid, T,
        sample_every=max(1, n_steps // SAMPLES_PER_RUN),
        dense_until=DENSE_LAYER_WIDTH * epsilon,
    )
    if experiment == 'aligned_hyperbolic':
        composite = composite_approximant(f0, k, gamma, epsilon)
        return sup_error(traj, [composite.evaluate(t) for t in traj.times])

    # diffusive comparisons are made at the density level
    rho0 = MacroField(f0.total())
    worst = 0.0
    for t, state in zip(traj.times, traj.states):
        rho_heat = heat_solve(rho0, coefficient, t, grid).rho
        worst = max(worst, float(np.max(np.abs(state.total() - rho_heat))))
    return worst


def _certified_point(experiment, F, k, gamma, epsilon, T, n_cells, cells_per_epsilon, max_cells, rel_change):
    """Refine the grid until doubling changes the error by less than rel_change."""
    n = min(max(n_cells, _next_power_of_two(cells_per_epsilon / epsilon)), max_cells)
    error = _point_error(experiment, F, k, gamma, epsilon, T, n)
    while 2 * n <= max_cells:
        finer = _point_error(experiment, F, k, gamma, epsilon, T, 2 * n)
        change = abs(finer - error) / max(finer, np.finfo(float).tiny)
        logger.debug(f"{experiment} eps={epsilon:g}: n={2 * n} error={finer:.4e} change={change:.2%}")
        n, error = 2 * n, finer
        if change < rel_change:
            break
    else:
        logger.warning(f"{experiment} eps={epsilon:g}: grid not certified below {max_cells} cells")
    logger.info(f"{experiment} eps={epsilon:g}: error {error:.4e} on {n} cells")
    return error, n


def limit_check(experiment, F, gamma, epsilon, T, k=1, n_cells=64, cells_per_epsilon=4,
                max_cells=4096, rel_change=0.1):
    """
    Single-eps comparison of a kinetic run with its limit object.

    Returns:
        tuple: (certified sup-in-time error, cells used).
    """
    if experiment not in EXPERIMENTS:
        raise PreconditionError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")
    F.validate()
    return _certified_point(experiment, F, k, gamma, epsilon, T, n_cells, cells_per_epsilon, max_cells, rel_change)


def _run_ladder(experiment, F, k, gamma, epsilons, T, n_cells, cells_per_epsilon, max_cells, rel_change, jobs):
    def _job(epsilon):
        return _certified_point(experiment, F, k, gamma, epsilon, T, n_cells, cells_per_epsilon, max_cells, rel_change)

    if jobs > 1 and len(epsilons) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job, epsilons))
    else:
        results = [_job(epsilon) for epsilon in epsilons]
    return [r[0] for r in results], [r[1] for r in results]


def _strictly_decreasing(errors):
    return all(b < a for a, b in zip(errors, errors[1:]))


def epsilon_sweep(experiment, F, gamma, epsilons, T, k=1, n_cells=64, cells_per_epsilon=4,
                  max_cells=4096, rel_change=0.1, jobs=1):
    """
    Measure the kinetic-to-limit error along a decreasing eps ladder.

    Args:
        experiment: 'aligned_hyperbolic', 'diffusive_parabolic' or 'diffusive_hyperbolic'.
        F: KineticState initial datum (resampled to every grid used).
        gamma: Sensitivity.
        epsilons: Strictly decreasing Knudsen numbers.
        T: Final time, a whole number of steps on every grid used.
        k: Aligned orientation (aligned experiment only).
        n_cells: Smallest grid considered.
        cells_per_epsilon: Initial resolution is at least this many cells per eps.
        max_cells: Refinement cap.
        rel_change: Grid is certified once doubling changes the error by less than this.
        jobs: Concurrent sweep points.

    Returns:
        ErrorSeries
    """
    if experiment not in EXPERIMENTS:
        raise PreconditionError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    epsilons = tuple(float(e) for e in epsilons)
    if not epsilons or any(e <= 0 for e in epsilons) or not _strictly_decreasing(epsilons):
        raise PreconditionError(f"epsilons must be positive and strictly decreasing, got {epsilons}")
    F.validate()

    conditions = None
    if experiment == 'aligned_hyperbolic':
        conditions = check_conditions(F, k, gamma)
        if not (conditions.positive_floor and conditions.uniform_separation):
            raise PreconditionError(
                f"aligned conditions fail: mu = {conditions.mu:.4g}, min F(k) < {conditions.c_gamma_used:.4g} max F(-k)"
            )
    elif not 0 < gamma < 1:
        raise PreconditionError(f"diffusive experiments need 0 < gamma < 1, got {gamma!r}")

    start = time.perf_counter()
    errors, cells = _run_ladder(
        experiment, F, k, gamma, epsilons, T, n_cells, cells_per_epsilon, max_cells, rel_change, jobs
    )
    monotone = _strictly_decreasing(errors)
    if not monotone and len(epsilons) > 1:
        logger.warning(f"{experiment}: errors not monotone {errors}; re-running once on doubled grids")
        errors, cells = _run_ladder(
            experiment, F, k, gamma, epsilons, T, 2 * n_cells, 2 * cells_per_epsilon,
            max(max_cells, 2 * max(cells)), rel_change, jobs,
        )
        monotone = _strictly_decreasing(errors)

    fitted_order = fit_residual = fit_constant = None
    if len(epsilons) > 1:
        fit_constant, fitted_order, fit_residual = estimate_order(epsilons, errors)
    c_t = max(e / eps for e, eps in zip(errors, epsilons))

    if experiment == 'aligned_hyperbolic':
        passed = (
            monotone and fitted_order is not None
            and fitted_order >= MIN_ALIGNED_ORDER and fit_residual <= MAX_FIT_RESIDUAL
        )
    else:
        passed = monotone and len(epsilons) > 1
    logger.info(
        f"{experiment} sweep finished in {time.perf_counter() - start:.1f}s: "
        f"order={fitted_order}, c_T={c_t:.4g}, passed={passed}"
    )
    return ErrorSeries(
        experiment=experiment,
        gamma=float(gamma),
        epsilons=epsilons,
        errors=tuple(float(e) for e in errors),
        fitted_order=fitted_order,
        fit_residual=fit_residual,
        fit_constant=fit_constant,
        c_t=float(c_t),
        n_cells=tuple(int(n) for n in cells),
        monotone=monotone,
        passed=bool(passed),
        conditions=conditions,
    )


def sandwich_check(bracket, traj):
    """
    Check g_n <= f <= h_n sample by sample within 5 (gap + dx).

    Returns:
        SandwichResult: passed flag, worst violation and the tolerance used.
    """
    lower, upper = bracket.lower, bracket.upper
    if len(lower) != len(traj) or not np.allclose(lower.times, traj.times, rtol=0, atol=1e-12):
        raise PreconditionError("bracket and trajectory are sampled at different times")
    if lower.grid.n_cells != traj.grid.n_cells:
        raise PreconditionError(f"grid mismatch: {lower.grid.n_cells} vs {traj.grid.n_cells} cells")
    tolerance = 5.0 * (bracket.gap + traj.grid.dx)
    worst = 0.0
    for g, f, h in zip(lower.states, traj.states, upper.states):
        for below, value, above in ((g.f_plus, f.f_plus, h.f_plus), (g.f_minus, f.f_minus, h.f_minus)):
            worst = max(worst, float(np.max(below - value)), float(np.max(value - above)))
    return SandwichResult(worst <= tolerance, worst, tolerance)


def lower_bound_check(traj, T=None, slack=0.01):
    """
    Check mu exp(-s T) (1 - slack) <= f <= ||f0|| exp(s T) (1 + slack) at every sample,
    s being the stiffness of the run.
    """
    T = traj.times[-1] if T is None else T
    rate = traj.params.stiffness
    f0 = traj.states[0]
    lower = f0.minimum() * math.exp(-rate * T) * (1.0 - slack)
    upper = f0.sup_norm() * math.exp(rate * T) * (1.0 + slack)
    observed_min = min(s.minimum() for s in traj.states)
    observed_max = max(float(max(s.f_plus.max(), s.f_minus.max())) for s in traj.states)
    return BoundResult(observed_min >= lower and observed_max <= upper, lower, upper, observed_min, observed_max)


def mass_drift(traj):
    """Largest relative change of the discrete mass against the first sample."""
    masses = traj.masses()
    reference = masses[0] if masses[0] != 0 else 1.0
    return float(np.max(np.abs(masses - masses[0])) / abs(reference))


def characteristic_monotonicity(traj, k, rtol=1e-12):
    """
    Along characteristics the k component must not decrease and the -k
    component must not increase between consecutive samples.

    Returns:
        tuple: (holds, worst violation).
    """
    k = Orientation(k)
    dt = traj.params.time_step(traj.grid)
    worst = 0.0
    for (t0, a), (t1, b) in zip(zip(traj.times, traj.states), zip(traj.times[1:], traj.states[1:])):
        cells = round((t1 - t0) / dt)
        majority_before = np.roll(np.asarray(a.component(k)), int(k) * cells)
        minority_before = np.roll(np.asarray(a.component(k.opposite())), -int(k) * cells)
        drop = majority_before - np.asarray(b.component(k)) - rtol * np.abs(majority_before)
        rise = np.asarray(b.component(k.opposite())) - minority_before - rtol * np.abs(minority_before)
        worst = max(worst, float(np.max(drop)), float(np.max(rise)))
    return worst <= 0.0, max(worst, 0.0)


def _block_average(values, factor):
    return values.reshape(-1, factor).mean(axis=1)


def micro_refinement(f0, gamma, cells=(64, 128, 256), T=0.5, reference_cells=2048, sample_time=0.125):
    """
    Compare the discrete jump scheme with a fine eps = 1 kinetic reference.

    Errors are taken at multiples of sample_time; the reference is block
    averaged onto each coarse grid.

    Returns:
        ErrorSeries: epsilons hold the cell widths dx.
    """
    cells = tuple(sorted(int(n) for n in cells))
    if any(reference_cells % n for n in cells):
        raise PreconditionError(f"reference grid {reference_cells} is not a multiple of {cells}")
    fine_grid = Grid(reference_cells)
    stride = round(sample_time * reference_cells)
    reference = solve_kinetic(
        resample(f0, reference_cells), ModelParams(gamma), fine_grid, T, sample_every=stride
    )
    ref_by_time = {round(t / sample_time): s for t, s in zip(reference.times, reference.states)}

    errors = []
    for n in cells:
        grid = Grid(n)
        traj = micro_solve(resample(f0, n), gamma, grid, T, sample_every=round(sample_time * n))
        factor = reference_cells // n
        worst = 0.0
        for t, state in zip(traj.times, traj.states):
            ref = ref_by_time[round(t / sample_time)]
            distance = (
                np.max(np.abs(state.f_plus - _block_average(ref.f_plus, factor)))
                + np.max(np.abs(state.f_minus - _block_average(ref.f_minus, factor)))
            )
            worst = max(worst, float(distance))
        logger.info(f"micro scheme on {n} cells: error {worst:.4e}")
        errors.append(worst)

    widths = tuple(1.0 / n for n in cells)
    constant, order, residual = estimate_order(widths, errors)
    return ErrorSeries(
        experiment='micro',
        gamma=float(gamma),
        epsilons=widths,
        errors=tuple(errors),
        fitted_order=order,
        fit_residual=residual,
        fit_constant=constant,
        c_t=max(e / w for e, w in zip(errors, widths)),
        n_cells=cells,
        monotone=_strictly_decreasing(errors),
        passed=_strictly_decreasing(errors) and order >= 0.8,
    )


def oracle_datum(n_cells):
    """Smooth datum bounded below by 0.5, used by the monotone and micro checks."""
    x = Grid(n_cells).centers
    return KineticState(1.0 + 0.5 * np.cos(2 * np.pi * x), 0.8 + 0.3 * np.sin(2 * np.pi * x))


def aligned_datum(n_cells):
    x = Grid(n_cells).centers
    return KineticState(5.0 + np.cos(2 * np.pi * x), 0.5 + 0.2 * np.cos(2 * np.pi * x))


def diffusive_datum(n_cells):
    x = Grid(n_cells).centers
    return maxwellian(EquilibriumKind.diffusive(), 1.0 + 0.5 * np.cos(2 * np.pi * x))


def _check_algebra():
    rng = np.random.default_rng(0)
    worst = 0.0
    for gamma in (0.5, 2.0, 3.5):
        params = ModelParams(gamma)
        state = KineticState(rng.uniform(0.01, 10.0, 1000), rng.uniform(0.01, 10.0, 1000))
        q = collision_q(state, params)
        worst = max(worst, float(np.max(np.abs(q.plus + q.minus))))
        r = collision_r(state, params)
        scale = np.abs(state.f_plus) + np.abs(r.f_plus)
        worst = max(worst, float(np.max(np.abs(r.f_plus - state.f_plus - q.plus) / scale)))
        for kind in (EquilibriumKind.diffusive(), EquilibriumKind.aligned(1), EquilibriumKind.aligned(-1)):
            q_m = collision_q(maxwellian(kind, state.f_plus), params)
            worst = max(worst, float(np.max(np.abs(q_m.plus))))
            pair = (state.f_plus, state.f_minus)
            hydro = project(kind, pair, 'hydro')
            kinetic = project(kind, pair, 'kinetic')
            worst = max(worst, float(np.max(np.abs(hydro[0] + kinetic[0] - pair[0]) / scale)))
            again = project(kind, hydro, 'hydro')
            worst = max(worst, float(np.max(np.abs(again[0] - hydro[0]) / scale)))
            null = linearize_apply(kind, gamma, hydro)
            worst = max(worst, float(np.max(np.abs(null[0]) / scale)))
    return worst <= 1e-12, f"worst identity defect {worst:.2e}"


def _check_homogeneous():
    cases = ((2.0, (2.0, 1.0), (3.0, 0.0)), (2.0, (1.0, 2.0), (0.0, 3.0)), (0.5, (2.0, 1.0), (1.5, 1.5)))
    worst = drift = 0.0
    for gamma, start, limit in cases:
        states = solve_homogeneous(HomogeneousState(*start), gamma, 50.0)
        final = states[-1]
        worst = max(worst, abs(final.f1 - limit[0]), abs(final.f_minus1 - limit[1]))
        drift = max(drift, max(abs(s.total - sum(start)) for s in states))
    return worst <= 1e-6 and drift <= 1e-12, f"limit error {worst:.2e}, total drift {drift:.2e}"


def _check_exact_solutions():
    grid = Grid(256)
    x = grid.centers
    params = ModelParams(2.0)
    constant = KineticState.constant(0.7, 0.7, grid.n_cells)
    traj = solve_kinetic(constant, params, grid, 2.0, sample_every=16)
    worst = sup_error(traj, [constant] * len(traj))
    phi = 1.0 + 0.5 * np.sin(2 * np.pi * x)
    wave = KineticState(phi, np.zeros_like(phi))
    traj = solve_kinetic(wave, params, grid, 2.0, sample_every=16)
    exact = [KineticState(np.roll(phi, round(t * grid.n_cells)), np.zeros_like(phi)) for t in traj.times]
    worst = max(worst, sup_error(traj, exact))
    return worst <= 1e-10, f"sup error {worst:.2e}"


def _check_layer():
    grid = Grid(256)
    F = aligned_datum(grid.n_cells)
    rho0, h0 = F.f_plus, F.f_minus
    certificate = layer_certificate(rho0, h0, 2.0)
    profile = initial_layer_solve(rho0, h0, 2.0, tau_end=30.0)
    bound = h0[None, :] * np.exp(-certificate.delta * profile.taus)[:, None]
    excess = float(np.max(profile.values - bound - 1e-12))
    dx_F = 2 * np.pi * 1.2
    decay = layer_derivative_decay(profile, dx_F)
    passed = certificate.all_conditions and excess <= 0 and decay.rate > 0
    return passed, f"delta={certificate.delta:.4f}, bound excess {excess:.2e}, derivative rate {decay.rate:.3f}"


def _check_monotone():
    grid = Grid(64)
    f0 = oracle_datum(grid.n_cells)
    details = []
    passed = True
    for gamma in (2.0, 0.5):
        bracket = monotone_solve(f0, gamma, grid, 1.0, tol=1e-8, max_iter=100)
        traj = solve_kinetic(f0, ModelParams(gamma), grid, 1.0)
        sandwich = sandwich_check(bracket, traj)
        bounds = lower_bound_check(traj)
        passed = passed and bracket.converged and sandwich.passed and bounds.passed
        details.append(f"gamma={gamma:g}: {bracket.iterations} iterates, gap {bracket.gap:.1e}, violation {sandwich.max_violation:.1e}")
    return passed, '; '.join(details)


def _check_micro():
    series = micro_refinement(oracle_datum(256), 2.0)
    return series.passed, f"order {series.fitted_order:.3f}, errors {', '.join(f'{e:.3e}' for e in series.errors)}"


def _check_chapman_enskog():
    grid = Grid(128)
    rho = 2.0 + np.cos(2 * np.pi * grid.centers)
    hydro, collision = chapman_enskog_residual(rho, np.zeros_like(rho), 2.0, 0.01, grid)
    passed = collision == 0.0 and hydro == 0.0
    worst = 0.0
    for epsilon in (1e-2, 1e-3, 1e-4):
        w = epsilon * np.ones_like(rho)
        relative = np.max(np.abs(collision_term(rho, w, 2.0) + w) / w)
        worst = max(worst, float(relative / (10.0 * epsilon)))
    return passed and worst <= 1.0, f"relative defect at most {worst:.3f} of the allowed 10 eps"


def _check_sweep(experiment):
    if experiment == 'aligned_hyperbolic':
        series = epsilon_sweep(experiment, aligned_datum(64), 2.0, DEFAULT_EPSILONS, 1.0, k=1)
    else:
        series = epsilon_sweep(experiment, diffusive_datum(64), 0.5, DEFAULT_EPSILONS, 0.1)
    return series.passed, f"errors {', '.join(f'{e:.3e}' for e in series.errors)}, order {series.fitted_order}"


def run_selftest(quick=False):
    """
    Run the acceptance experiments and return one CheckResult per experiment.

    quick skips the two eps-ladder sweeps.
    """
    checks = [
        ('algebraic identities', _check_algebra),
        ('homogeneous asymptotics', _check_homogeneous),
        ('exact solutions', _check_exact_solutions),
        ('layer certificate', _check_layer),
        ('monotone bracket', _check_monotone),
        ('micro scheme consistency', _check_micro),
        ('chapman-enskog residuals', _check_chapman_enskog),
    ]
    if not quick:
        checks.insert(3, ('aligned limit sweep', lambda: _check_sweep('aligned_hyperbolic')))
        checks.insert(5, ('diffusive limit sweep', lambda: _check_sweep('diffusive_parabolic')))

    results = []
    for name, check in checks:
        start = time.perf_counter()
        try:
            passed, detail = check()
        except AlignmentError as e:
            passed, detail = False, str(e)
        seconds = time.perf_counter() - start
        logger.info(f"selftest {name}: {'pass' if passed else 'FAIL'} ({detail})")
        results.append(CheckResult(name, bool(passed), detail, seconds))
    return results
