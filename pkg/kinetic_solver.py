"""
Time integration of the two-orientation kinetic system on the unit torus.

solve_kinetic advances the scaled system with Lie splitting: an exact
transport shift by one cell followed by per-cell relaxation (relaxation.py).
The time step is chosen so that every characteristic moves exactly one cell,
dt = dx under hyperbolic scaling and dt = eps * dx under parabolic scaling.

Also here: the discrete-time stochastic-jump scheme (micro_step / micro_solve),
the space-homogeneous ODE and the monotone lower/upper iteration that
brackets the solution at eps = 1.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from errors import PreconditionError
from model import DEFAULT_CHI_FLOOR, KineticState, ModelParams, Scaling, mass
from relaxation import DEFAULT_RTOL, check_budget, relax_pair, relax_scalar

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 5_000_000


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution; times[0] == 0 and states[k] is the state at times[k]."""
    times: np.ndarray
    states: tuple
    params: ModelParams
    grid: object
    mu: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.shape[0] != len(self.states):
            raise PreconditionError(
                f"{times.shape[0]} sample times for {len(self.states)} states"
            )
        if times.shape[0] and times[0] != 0.0:
            raise PreconditionError(f"trajectory must start at t = 0, got {times[0]!r}")
        if np.any(np.diff(times) <= 0.0):
            raise PreconditionError("sample times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'states', tuple(self.states))

    def __len__(self):
        return len(self.states)

    @property
    def final(self):
        return self.states[-1]

    def as_array(self):
        """Stack the samples into shape (n_samples, 2, n_cells)."""
        return np.stack([np.stack([s.f_plus, s.f_minus]) for s in self.states])

    def masses(self):
        return np.array([mass(s, self.grid) for s in self.states])


@dataclass(frozen=True, eq=False)
class MonotoneBracket:
    lower: Trajectory
    upper: Trajectory
    iterations: int
    gap: float
    converged: bool
    gap_history: tuple = field(default_factory=tuple)
    mu: float = 0.0


@dataclass(frozen=True)
class HomogeneousState:
    f1: float
    f_minus1: float
    t: float = 0.0

    def __post_init__(self):
        for label, value in (('f1', self.f1), ('f_minus1', self.f_minus1)):
            if not np.isfinite(value) or value < 0:
                raise PreconditionError(f"{label} must be finite and nonnegative, got {value!r}")

    @property
    def total(self):
        return self.f1 + self.f_minus1


def _step_count(t_end, dt, label):
    if not np.isfinite(t_end) or t_end < 0:
        raise PreconditionError(f"t_end must be nonnegative, got {t_end!r}")
    steps = t_end / dt
    whole = round(steps)
    if abs(steps - whole) > 1e-9 * max(1.0, steps):
        raise PreconditionError(
            f"t_end = {t_end!r} is not a whole number of {label} steps (dt = {dt!r})"
        )
    return int(whole)


def sample_steps(n_steps, sample_every=1, dense_steps=0):
    """
    Step indices at which a trajectory is sampled.

    Every sample_every-th step, every step up to dense_steps, and the final
    step are included; step 0 always is.
    """
    if sample_every < 1:
        raise PreconditionError(f"sample_every must be >= 1, got {sample_every!r}")
    steps = set(range(0, n_steps + 1, sample_every))
    steps.update(range(0, min(dense_steps, n_steps) + 1))
    steps.add(n_steps)
    return sorted(steps)


def sharp_transform(state, t, grid, inverse=False):
    """
    Sample component j along its characteristic: f#(j, x) = f(j, x + j t).

    Args:
        state: KineticState on grid.
        t: Shift, an integer multiple of grid.dx.
        grid: Grid the state lives on.
        inverse: Apply f(j, x - j t) instead.

    Returns:
        KineticState: Shifted state.

    Raises:
        PreconditionError: If t is not a multiple of dx.
    """
    cells = grid.shift_cells(t) % grid.n_cells
    if inverse:
        cells = -cells
    return KineticState(np.roll(state.f_plus, -cells), np.roll(state.f_minus, cells))


def _switch_probabilities(state, gamma, dt, chi_floor):
    # neighbourhood sums f(j, x - dx) + f(j, x + dx)
    s_plus = np.roll(state.f_plus, 1) + np.roll(state.f_plus, -1)
    s_minus = np.roll(state.f_minus, 1) + np.roll(state.f_minus, -1)
    plus_g = s_plus ** gamma
    minus_g = s_minus ** gamma
    denominator = plus_g + minus_g
    active = (s_plus + s_minus > chi_floor) & (denominator > 0.0)
    p_plus = np.zeros_like(s_plus)
    p_minus = np.zeros_like(s_minus)
    np.divide(minus_g * dt, denominator, out=p_plus, where=active)
    np.divide(plus_g * dt, denominator, out=p_minus, where=active)
    return p_plus, p_minus


def micro_step(state, dt, gamma, grid, chi_floor=DEFAULT_CHI_FLOOR):
    """
    One step of the discrete-time jump process with a = dt = dx.

    An entity at x with orientation j switches with probability
    P(j) = S(-j)^g / (S(-j)^g + S(j)^g) * dt, where S(j) sums f(j) over the
    two neighbours x - dx and x + dx, and then moves to x + j dx. Since
    P(j) <= dt = dx <= 1, every step is a convex recombination per cell.

    Raises:
        PreconditionError: If dt != dx.
    """
    if abs(dt - grid.dx) > 1e-12 * grid.dx:
        raise PreconditionError(f"micro_step needs dt == dx = {grid.dx!r}, got {dt!r}")
    state.validate()
    p_plus, p_minus = _switch_probabilities(state, gamma, dt, chi_floor)
    f_plus, f_minus = state.f_plus, state.f_minus
    stay_plus = f_minus * p_minus + f_plus * (1.0 - p_plus)
    stay_minus = f_plus * p_plus + f_minus * (1.0 - p_minus)
    return KineticState(np.roll(stay_plus, 1), np.roll(stay_minus, -1))


def micro_solve(f0, gamma, grid, t_end, sample_every=1, chi_floor=DEFAULT_CHI_FLOOR):
    """Repeat micro_step up to t_end (a multiple of dx) and sample the result."""
    f0.validate()
    dt = grid.dx
    n_steps = _step_count(t_end, dt, 'micro')
    wanted = set(sample_steps(n_steps, sample_every))
    times, states = [0.0], [f0]
    state = f0
    for step in range(1, n_steps + 1):
        state = micro_step(state, dt, gamma, grid, chi_floor)
        if step in wanted:
            times.append(step * dt)
            states.append(state)
    return Trajectory(np.array(times), states, ModelParams(gamma), grid, mu=f0.minimum())


def relax_cell(m, w, dt, gamma, stiffness, rtol=DEFAULT_RTOL):
    """
    Relax one cell over dt with the cell mass m frozen.

    Args:
        m: Cell mass f(+1) + f(-1).
        w: Initial value of the tracked component, 0 <= w <= m.
        dt: Physical time step, > 0.
        gamma: Sensitivity exponent.
        stiffness: 1/eps (hyperbolic) or 1/eps^2 (parabolic).

    Returns:
        float: w(dt) in [0, m].
    """
    if not np.isfinite(m) or not np.isfinite(w) or w < 0 or w > m:
        raise PreconditionError(f"relax_cell needs 0 <= w <= m, got w = {w!r}, m = {m!r}")
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt!r}")
    tau = float(stiffness * dt)
    w = float(relax_scalar(float(m), float(w), tau, float(gamma), float(rtol)))
    check_budget(np.array([w]), tau)
    return w


def solve_kinetic(f0, params, grid, t_end, sample_every=1, dense_until=0.0,
                  max_steps=DEFAULT_MAX_STEPS, rtol=DEFAULT_RTOL):
    """
    Integrate the scaled kinetic system from f0 up to t_end.

    Args:
        f0: Initial KineticState on grid, entries >= 0.
        params: ModelParams (gamma, epsilon, scaling, chi_floor).
        grid: Grid; t_end must be a whole number of steps params.time_step(grid).
        t_end: Final time, >= 0.
        sample_every: Sampling cadence in steps.
        dense_until: Every step with t <= dense_until is sampled too.
        max_steps: Step budget; exceeding it is an error.
        rtol: Relative tolerance of the relaxation integrator.

    Returns:
        Trajectory: Samples including t = 0 and t = t_end.

    Raises:
        PreconditionError: On negative t_end, step/grid incompatibility, an
            exceeded step budget or invalid initial data.
    """
    if f0.n_cells != grid.n_cells:
        raise PreconditionError(f"state has {f0.n_cells} cells, grid has {grid.n_cells}")
    f0.validate()
    dt = params.time_step(grid)
    n_steps = _step_count(t_end, dt, params.scaling.value)
    if n_steps > max_steps:
        raise PreconditionError(f"{n_steps} steps exceed the budget of {max_steps}")

    mu = f0.minimum()
    if mu <= 0.0:
        logger.warning(f"Initial data not bounded away from zero (min = {mu:.3g}); lower-bound guarantees do not apply")

    tau = params.stiffness * dt
    dense_steps = int(np.floor(dense_until / dt + 1e-9)) if dense_until > 0 else 0
    wanted = set(sample_steps(n_steps, sample_every, dense_steps))
    logger.debug(
        f"solve_kinetic: {params.scaling.value} eps={params.epsilon:g} gamma={params.gamma:g} "
        f"n_cells={grid.n_cells} steps={n_steps} samples={len(wanted)}"
    )

    f_plus = np.array(f0.f_plus)
    f_minus = np.array(f0.f_minus)
    times, states = [0.0], [f0]
    for step in range(1, n_steps + 1):
        # Transport: every characteristic moves one cell
        f_plus = np.roll(f_plus, 1)
        f_minus = np.roll(f_minus, -1)
        f_plus, f_minus = relax_pair(f_plus, f_minus, tau, params.gamma, params.chi_floor, rtol)
        if step in wanted:
            times.append(step * dt)
            states.append(KineticState(f_plus, f_minus))

    return Trajectory(np.array(times), states, params, grid, mu=mu)


def solve_homogeneous(h0, gamma, t_end, n_samples=101, rtol=DEFAULT_RTOL):
    """
    Integrate the space-free system from h0 and sample it uniformly on [0, t_end].

    Only the smaller component is integrated; the other is the conserved
    total minus it.

    Returns:
        list[HomogeneousState]: n_samples states, the first one at t = 0.
    """
    if not np.isfinite(t_end) or t_end < 0:
        raise PreconditionError(f"t_end must be nonnegative, got {t_end!r}")
    if not gamma > 0:
        raise PreconditionError(f"gamma must be positive, got {gamma!r}")
    n_samples = max(int(n_samples), 2)
    times = np.linspace(0.0, t_end, n_samples)
    total = h0.f1 + h0.f_minus1
    track_f1 = h0.f1 <= h0.f_minus1
    w = h0.f1 if track_f1 else h0.f_minus1

    states = [HomogeneousState(h0.f1, h0.f_minus1, 0.0)]
    for previous, t in zip(times[:-1], times[1:]):
        w = relax_scalar(total, w, t - previous, float(gamma), rtol)
        check_budget(np.array([w]), t - previous)
        other = total - w
        if track_f1:
            states.append(HomogeneousState(w, other, float(t)))
        else:
            states.append(HomogeneousState(other, w, float(t)))
    return states


def _phi(z):
    # (1 - exp(-z)) / z, continuous at z = 0
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z / 2.0, -np.expm1(-safe) / safe)


def _loss_coefficient(h, g, gamma):
    """
    P(h, g)(j) = h(-j)^g / (g(j)^g + h(-j)^g) for both orientations.

    h and g have shape (n_steps + 1, 2, n), orientation on axis 1.
    """
    h_g = h ** gamma
    g_g = g ** gamma
    p_plus = h_g[:, 1] / (g_g[:, 0] + h_g[:, 1])
    p_minus = h_g[:, 0] / (g_g[:, 1] + h_g[:, 0])
    return np.stack([p_plus, p_minus], axis=1)


def _gain_coefficient(h, g, gamma):
    """Q(h, g)(j) = h(j)^g h(-j) / (h(j)^g + g(-j)^g) for both orientations."""
    h_g = h ** gamma
    g_g = g ** gamma
    q_plus = h_g[:, 0] * h[:, 1] / (h_g[:, 0] + g_g[:, 1])
    q_minus = h_g[:, 1] * h[:, 0] / (h_g[:, 1] + g_g[:, 0])
    return np.stack([q_plus, q_minus], axis=1)


def _linear_sweep(start, loss, gain, dt):
    """
    Solve y' = -P y + Q along characteristics for both orientations.

    start has shape (2, n); loss and gain have shape (n_steps + 1, 2, n) and
    are sampled at the physical grid points. Each step averages P and Q over
    the characteristic segment and applies the exact exponential update.
    """
    n_steps = loss.shape[0] - 1
    out = np.empty_like(loss)
    out[0] = start
    shifts = (1, -1)
    for m in range(n_steps):
        for c, shift in enumerate(shifts):
            p_bar = 0.5 * (loss[m, c] + np.roll(loss[m + 1, c], -shift))
            q_bar = 0.5 * (gain[m, c] + np.roll(gain[m + 1, c], -shift))
            z = p_bar * dt
            advanced = out[m, c] * np.exp(-z) + q_bar * dt * _phi(z)
            out[m + 1, c] = np.roll(advanced, shift)
    return out


def _growth_solution(start, n_steps, dt):
    """
    Trapezoidal solution of dh(j)/dt = h(-j) along characteristics, coupling
    both orientations at the same physical point.
    """
    out = np.empty((n_steps + 1, 2, start.shape[1]))
    out[0] = start
    half = dt / 2.0
    denominator = 1.0 - half * half
    for m in range(n_steps):
        plus_from = np.roll(out[m, 0], 1)
        minus_from = np.roll(out[m, 1], 1)
        a0 = plus_from + half * minus_from
        plus_right = np.roll(out[m, 0], -1)
        minus_right = np.roll(out[m, 1], -1)
        b0 = minus_right + half * plus_right
        out[m + 1, 0] = (a0 + half * b0) / denominator
        out[m + 1, 1] = (b0 + half * a0) / denominator
    return out


def _l1_gap(upper, lower, dx):
    return float(np.max(np.sum(np.abs(upper - lower), axis=(1, 2)) * dx))


def monotone_solve(f0, gamma, grid, t_end, tol=1e-8, max_iter=100, sample_every=1):
    """
    Build the monotone lower/upper iteration g_n <= f <= h_n at eps = 1.

    g_0 = 0 and h_0 solves the linear growth system; each further pair solves
    a linear equation along characteristics whose loss and gain coefficients
    are frozen at the previous pair. Iteration stops when the largest sampled
    L1 gap drops to tol or after max_iter pairs.

    Args:
        f0: KineticState with min f0 = mu > 0.
        gamma: Sensitivity exponent, > 0.
        grid: Grid; t_end must be a multiple of dx.
        t_end: Final time.
        tol: Target for max_t ||h_n - g_n||_1.
        max_iter: Maximum number of iterates n.
        sample_every: Sampling cadence in steps, matching solve_kinetic.

    Returns:
        MonotoneBracket: Non-converged runs are flagged, not raised.
    """
    f0.validate()
    mu = f0.minimum()
    if mu <= 0.0:
        raise PreconditionError(f"monotone construction needs min f0 > 0, got {mu!r}")
    if not gamma > 0:
        raise PreconditionError(f"gamma must be positive, got {gamma!r}")
    if max_iter < 1:
        raise PreconditionError(f"max_iter must be >= 1, got {max_iter!r}")

    dt = grid.dx
    n_steps = _step_count(t_end, dt, 'characteristic')
    start = np.stack([f0.f_plus, f0.f_minus])

    lower = np.zeros((n_steps + 1, 2, grid.n_cells))
    upper = _growth_solution(start, n_steps, dt)
    history = []
    gap = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_lower = _linear_sweep(
            start, _loss_coefficient(upper, lower, gamma), _gain_coefficient(lower, upper, gamma), dt
        )
        new_upper = _linear_sweep(
            start, _loss_coefficient(lower, upper, gamma), _gain_coefficient(upper, lower, gamma), dt
        )
        lower, upper = new_lower, new_upper
        gap = _l1_gap(upper, lower, grid.dx)
        history.append(gap)
        logger.debug(f"monotone iterate {iterations}: gap {gap:.3e}")
        if gap <= tol:
            break

    converged = gap <= tol
    if not converged:
        logger.warning(f"Monotone iteration stopped at gap {gap:.3e} after {iterations} iterates")

    steps = sample_steps(n_steps, sample_every)
    times = np.array(steps) * dt
    params = ModelParams(gamma, 1.0, Scaling.HYPERBOLIC)

    def _trajectory(values):
        return Trajectory(times, [KineticState(values[s, 0], values[s, 1]) for s in steps], params, grid, mu=mu)

    return MonotoneBracket(
        lower=_trajectory(lower),
        upper=_trajectory(upper),
        iterations=iterations,
        gap=gap,
        converged=converged,
        gap_history=tuple(history),
        mu=mu,
    )
