"""
Macroscopic limit objects of the alignment model.

Diffusive picture: the density obeys a heat equation (first order in eps under
hyperbolic scaling, zeroth order under parabolic scaling), solved here with an
exact per-mode Fourier update.

Aligned picture: the density is carried as a traveling wave and the minority
orientation decays through an initial layer in the stretched time tau = t/eps.
The composite approximant combines both.
"""
from dataclasses import dataclass
from enum import Enum
import logging
import math
from typing import NamedTuple

import numpy as np

from errors import PreconditionError
from model import EquilibriumKind, Grid, KineticState, MacroField, Orientation, Scaling
from relaxation import DEFAULT_RTOL, layer_profile

logger = logging.getLogger(__name__)

C_GAMMA_MAX = 1e6
C_GAMMA_MIN = 2.0
C_GAMMA_RESOLUTION = 1.01

# Exact separation constant for gamma = 2, 3 + sqrt(3)
C_TWO = 6.0 / (3.0 - math.sqrt(3.0))

DEFAULT_LAYER_SEPARATION = 2.0
DEFAULT_TAU_END = 30.0
DEFAULT_TAU_SAMPLES = 601


class DiffusionRegime(str, Enum):
    EULER_HYPERBOLIC = 'euler_hyperbolic'
    NS_HYPERBOLIC = 'ns_hyperbolic'
    PARABOLIC_ZEROTH = 'parabolic_zeroth'


class MacroscopicLimit(NamedTuple):
    """Limit equation d_t rho + speed d_x rho = diffusion d_xx rho."""
    speed: float
    diffusion: float
    backward: bool


class ModeGrowth(NamedTuple):
    wavenumbers: np.ndarray
    factors: np.ndarray
    coefficient: float
    rho_end: np.ndarray


def _as_field(rho):
    return rho if isinstance(rho, MacroField) else MacroField(rho)


def _field_from_values(values, scale):
    # Spectral round-off can leave values a few ulps below zero
    values = np.array(values, dtype=float)
    values[(values < 0.0) & (values > -1e-12 * max(scale, 1.0))] = 0.0
    return MacroField(values)


def diffusion_coefficient(gamma, epsilon, regime):
    """
    Diffusion coefficient of the diffusive limit.

    Args:
        gamma: Sensitivity, != 1.
        epsilon: Knudsen number (only used by the hyperbolic first-order regime).
        regime: DiffusionRegime or its string value.

    Returns:
        float: 0 (euler_hyperbolic), eps/(1-gamma) (ns_hyperbolic) or
        1/(1-gamma) (parabolic_zeroth). Negative values mean backward diffusion.
    """
    regime = DiffusionRegime(regime)
    if gamma == 1:
        raise PreconditionError("diffusion coefficient is undefined for gamma = 1")
    if regime is DiffusionRegime.EULER_HYPERBOLIC:
        return 0.0
    if regime is DiffusionRegime.NS_HYPERBOLIC:
        coefficient = epsilon / (1.0 - gamma)
    else:
        coefficient = 1.0 / (1.0 - gamma)
    if coefficient < 0:
        logger.warning(f"gamma = {gamma:g} gives backward diffusion (D = {coefficient:.4g})")
    return coefficient


@dataclass(frozen=True)
class DiffusionSpec:
    coefficient: float
    regime: DiffusionRegime
    backward: bool = False

    @classmethod
    def build(cls, gamma, epsilon, regime, unstable_demo=False):
        regime = DiffusionRegime(regime)
        coefficient = diffusion_coefficient(gamma, epsilon, regime)
        backward = coefficient < 0
        if backward and not unstable_demo:
            raise PreconditionError(
                f"backward diffusion (gamma = {gamma:g} > 1) is only available as an unstable demo"
            )
        return cls(coefficient, regime, backward)


def macroscopic_operator(kind, scaling, gamma, epsilon):
    """
    Summarize the limit equation around a Maxwellian of the given kind.

    Diffusive equilibria give a heat equation, aligned ones a transport at
    speed k with no first-order correction.
    """
    scaling = Scaling(scaling)
    if kind.is_aligned:
        if scaling is Scaling.PARABOLIC:
            raise PreconditionError("no parabolic limit is available around an aligned equilibrium")
        return MacroscopicLimit(float(kind.k), 0.0, False)
    if scaling is Scaling.PARABOLIC:
        coefficient = diffusion_coefficient(gamma, epsilon, DiffusionRegime.PARABOLIC_ZEROTH)
    else:
        coefficient = diffusion_coefficient(gamma, epsilon, DiffusionRegime.NS_HYPERBOLIC)
    return MacroscopicLimit(0.0, coefficient, coefficient < 0)


def _wavenumbers(grid):
    return 2.0 * np.pi * np.fft.rfftfreq(grid.n_cells, grid.dx)


def heat_solve(rho0, D, t_end, grid, unstable_demo=False):
    """
    Solve d_t rho = D d_xx rho on the unit torus, exactly per Fourier mode.

    Args:
        rho0: MacroField (or array) sampled at the cell centres of grid.
        D: Diffusion coefficient, > 0.
        t_end: Time at which the solution is returned.
        grid: Grid.
        unstable_demo: Accept D < 0 (backward diffusion).

    Returns:
        MacroField: rho(t_end).
    """
    rho0 = _as_field(rho0)
    if not np.isfinite(D) or (D <= 0 and not (unstable_demo and D < 0)):
        raise PreconditionError(f"heat_solve needs D > 0, got {D!r}")
    if not np.isfinite(t_end) or t_end < 0:
        raise PreconditionError(f"t_end must be nonnegative, got {t_end!r}")
    if rho0.n_cells != grid.n_cells:
        raise PreconditionError(f"field has {rho0.n_cells} cells, grid has {grid.n_cells}")
    if t_end == 0:
        return rho0
    k = _wavenumbers(grid)
    rho_hat = np.fft.rfft(rho0.rho) * np.exp(-D * k * k * t_end)
    values = np.fft.irfft(rho_hat, grid.n_cells)
    return _field_from_values(values, float(np.max(rho0.rho)))


def _whole_cells(cells):
    whole = round(cells)
    if abs(cells - whole) <= 1e-9 * max(1.0, abs(cells)):
        return int(whole)
    return None


def _shifted(values, distance, grid):
    """values(x - distance): an index roll for whole cells, a Fourier phase otherwise."""
    whole = _whole_cells(distance * grid.n_cells)
    if whole is not None:
        return np.roll(values, whole % grid.n_cells)
    phase = np.exp(-2j * np.pi * np.fft.rfftfreq(grid.n_cells, grid.dx) * distance)
    return np.fft.irfft(np.fft.rfft(values) * phase, grid.n_cells)


def traveling_wave(F_k, k, t, grid, allow_spectral=True):
    """
    Evaluate rho(t, x) = F(k, x - k t) on grid.

    Shifts that are whole cells are exact index rolls; other shifts use the
    Fourier shift theorem unless allow_spectral is False.
    """
    F_k = _as_field(F_k)
    k = Orientation(k)
    exact = _whole_cells(int(k) * t * grid.n_cells) is not None
    if not exact and not allow_spectral:
        raise PreconditionError(f"shift {t!r} is not a multiple of dx = 1/{grid.n_cells}")
    values = _shifted(F_k.rho, int(k) * t, grid)
    if exact:
        return MacroField(values)
    return _field_from_values(values, float(np.max(F_k.rho)))


def backward_diffusion_demo(rho0, gamma, epsilon, regime, t_end, grid, unstable_demo=False):
    """
    Document the ill-posedness of the diffusive limit for gamma > 1.

    Returns the amplification exp(4 pi^2 m^2 |D| t_end) of every Fourier mode
    m >= 1 together with the (unphysical) backward solution at t_end.
    """
    if not unstable_demo:
        raise PreconditionError("backward diffusion demo requires the unstable-demo flag")
    if gamma <= 1:
        raise PreconditionError(f"backward diffusion needs gamma > 1, got {gamma!r}")
    rho0 = _as_field(rho0)
    spec = DiffusionSpec.build(gamma, epsilon, regime, unstable_demo=True)
    k = _wavenumbers(grid)
    factors = np.exp(-spec.coefficient * k * k * t_end)
    rho_end = np.fft.irfft(np.fft.rfft(rho0.rho) * factors, grid.n_cells)
    logger.warning(
        f"Backward diffusion demo: highest mode amplified by {factors[-1]:.3e} over t = {t_end:g}"
    )
    wavenumbers = np.arange(factors.shape[0])
    return ModeGrowth(wavenumbers[1:], factors[1:], spec.coefficient, rho_end)


def _separation_bound(theta, gamma):
    """Sufficient-condition polynomial; negative on [0, 1/(c - 1)] certifies c."""
    power = theta ** (gamma - 1.0)
    return -(1.0 - theta) * (1.0 - power) + (gamma - 1.0) * theta + (gamma - 1.0) * power


def _separation_holds(c, gamma, samples=4001):
    thetas = np.linspace(0.0, 1.0 / (c - 1.0), samples)
    return bool(np.all(_separation_bound(thetas, gamma) < 0.0))


def select_c_gamma(gamma):
    """
    Separation constant c such that F(k) > c F(-k) guarantees layer decay.

    Exact for gamma = 2; otherwise the smallest c >= 2 (to a factor of 1.01)
    for which the sufficient condition holds on [0, 1/(c - 1)].
    """
    if not gamma > 1:
        raise PreconditionError(f"separation constant needs gamma > 1, got {gamma!r}")
    if gamma == 2:
        return C_TWO
    if _separation_holds(C_GAMMA_MIN, gamma):
        return C_GAMMA_MIN
    low, high = C_GAMMA_MIN, 2.0 * C_GAMMA_MIN
    while not _separation_holds(high, gamma):
        low, high = high, 2.0 * high
        if high > C_GAMMA_MAX:
            raise PreconditionError(f"no separation constant below {C_GAMMA_MAX:g} for gamma = {gamma:g}")
    while high / low > C_GAMMA_RESOLUTION:
        middle = math.sqrt(low * high)
        if _separation_holds(middle, gamma):
            high = middle
        else:
            low = middle
    return high


@dataclass(frozen=True, eq=False)
class LayerProfile:
    """h(tau, x) sampled at taus; values has shape (len(taus), n_cells)."""
    taus: np.ndarray
    values: np.ndarray
    rho0: MacroField
    f_minus_k0: MacroField
    gamma: float
    rtol: float = DEFAULT_RTOL

    @property
    def n_cells(self):
        return self.rho0.n_cells

    def at(self, tau):
        """h(tau, .); integrates forward from the closest stored sample when tau is not stored."""
        if tau < 0:
            raise PreconditionError(f"tau must be nonnegative, got {tau!r}")
        index = int(np.searchsorted(self.taus, tau, side='right')) - 1
        index = max(index, 0)
        start = self.taus[index]
        if tau - start <= 1e-14 * max(1.0, tau):
            return self.values[index].copy()
        advanced = layer_profile(self.rho0.rho, self.values[index], np.array([tau - start]), self.gamma, self.rtol)
        return advanced[0]


@dataclass(frozen=True)
class LayerCertificate:
    theta_max: float
    delta: float
    c_gamma: float
    mu: float
    positive_floor: bool
    pointwise_separation: bool
    uniform_separation: bool
    satisfiable: bool

    @property
    def all_conditions(self):
        return self.positive_floor and self.pointwise_separation and self.uniform_separation


def initial_layer_solve(rho0, h0, gamma, tau_end=DEFAULT_TAU_END, n_taus=DEFAULT_TAU_SAMPLES,
                        separation=DEFAULT_LAYER_SEPARATION, rtol=DEFAULT_RTOL):
    """
    Integrate the initial-layer ODE dh/dtau = G(rho0, h) cell by cell.

    x enters only as a parameter, so each cell is an independent scalar ODE.

    Args:
        rho0: Frozen bulk density per cell.
        h0: Initial minority density per cell, >= 0.
        gamma: Sensitivity, > 1.
        tau_end: Last stretched time stored.
        n_taus: Number of uniformly spaced stored samples.
        separation: Required rho0 > separation * h0 wherever h0 > 0.

    Returns:
        LayerProfile

    Raises:
        PreconditionError: For gamma <= 1 or a cell violating the separation.
    """
    if not gamma > 1:
        raise PreconditionError(f"initial layer needs gamma > 1, got {gamma!r}")
    rho0 = _as_field(rho0)
    h0 = _as_field(h0)
    if rho0.n_cells != h0.n_cells:
        raise PreconditionError(f"rho0 has {rho0.n_cells} cells, h0 has {h0.n_cells}")
    if not tau_end > 0 or n_taus < 2:
        raise PreconditionError(f"need tau_end > 0 and at least two samples, got {tau_end!r}, {n_taus!r}")
    bad = np.flatnonzero((h0.rho > 0.0) & ~(rho0.rho > separation * h0.rho))
    if bad.size:
        i = int(bad[0])
        raise PreconditionError(
            f"rho0 = {rho0.rho[i]:.6g} does not exceed {separation:g} * h0 = {separation * h0.rho[i]:.6g}",
            cell=i,
        )
    if np.any(h0.rho == 0.0):
        logger.warning("Initial layer datum vanishes in some cells; those cells stay at zero")

    taus = np.linspace(0.0, tau_end, int(n_taus))
    values = layer_profile(rho0.rho, h0.rho, taus, gamma, rtol)
    return LayerProfile(taus, values, rho0, h0, float(gamma), rtol)


def layer_certificate(rho0, h0, gamma, c_gamma=None):
    """
    Worst-case decay certificate for the initial layer.

    theta_max = max h0 / (min rho0 - max h0) and
    delta = (1 - theta_max^(gamma-1)) / (1 + theta_max^gamma), so that
    h(tau, x) <= h0(x) exp(-delta tau). Unsatisfiable (delta = 0) when
    min rho0 <= max h0.
    """
    if not gamma > 1:
        raise PreconditionError(f"layer certificate needs gamma > 1, got {gamma!r}")
    rho0 = _as_field(rho0)
    h0 = _as_field(h0)
    c_gamma = select_c_gamma(gamma) if c_gamma is None else float(c_gamma)

    mu = float(np.min(h0.rho))
    low_rho = float(np.min(rho0.rho))
    high_h = float(np.max(h0.rho))
    gap = low_rho - high_h
    if gap <= 0:
        theta_max, delta = math.inf, 0.0
    else:
        theta_max = high_h / gap
        delta = (1.0 - theta_max ** (gamma - 1.0)) / (1.0 + theta_max ** gamma)

    return LayerCertificate(
        theta_max=theta_max,
        delta=delta,
        c_gamma=c_gamma,
        mu=mu,
        positive_floor=mu > 0,
        pointwise_separation=bool(np.all(rho0.rho > c_gamma * h0.rho)),
        uniform_separation=low_rho >= c_gamma * high_h,
        satisfiable=gap > 0 and delta > 0,
    )


BULK_MODES = ('released', 'total', 'stated')


def _release_phase(s, k, epsilon, grid):
    # mass that switches at stretched time s has moved 2 eps s against k
    frequencies = np.fft.rfftfreq(grid.n_cells, grid.dx)
    return np.exp(4j * np.pi * np.multiply.outer(s, frequencies) * int(k) * epsilon)


def _release_sums(layer, k, epsilon, grid):
    """Running Fourier sums of the mass the layer releases between stored samples."""
    taus = layer.taus
    increments = np.fft.rfft(layer.values[:-1] - layer.values[1:], axis=1)
    phases = _release_phase(0.5 * (taus[:-1] + taus[1:]), k, epsilon, grid)
    sums = np.zeros((taus.shape[0], increments.shape[1]), dtype=complex)
    sums[1:] = np.cumsum(increments * phases, axis=0)
    return sums


@dataclass(frozen=True, eq=False)
class CompositeApproximant:
    """
    Traveling-wave bulk plus initial-layer correction around aligned(k).

    For the 'released' bulk, `bulk` is F(k) alone and `release` holds the
    running sums of the mass handed back by the layer, each increment placed
    where it switched orientation.
    """
    kind: EquilibriumKind
    bulk: MacroField
    layer: LayerProfile
    epsilon: float
    grid: Grid
    bulk_mode: str = 'released'
    release: np.ndarray = None

    def evaluate(self, t):
        k = self.kind.k
        tau = t / self.epsilon
        h = self.layer.at(tau)
        wave = traveling_wave(self.bulk, k, t, self.grid).rho
        if self.release is None:
            majority = wave - h
        else:
            majority = wave + _shifted(self._released(tau, h), k * t, self.grid)
        if k == 1:
            return KineticState(majority, h)
        return KineticState(h, majority)

    def _released(self, tau, h):
        """Mass released up to tau, positioned as if transport along k started at t = 0."""
        taus = self.layer.taus
        last = int(np.searchsorted(taus, tau, side='right')) - 1
        last = min(max(last, 0), taus.shape[0] - 1)
        partial = np.fft.rfft(self.layer.values[last] - h)
        partial *= _release_phase(0.5 * (taus[last] + tau), self.kind.k, self.epsilon, self.grid)
        return np.fft.irfft(self.release[last] + partial, self.grid.n_cells)


def composite_approximant(F, k, gamma, epsilon, bulk='released', tau_end=DEFAULT_TAU_END,
                          n_taus=DEFAULT_TAU_SAMPLES, c_gamma=None):
    """
    Build the composite approximant of the aligned limit from the datum F.

    The minority is h(t/eps, x) in every mode. The majority depends on bulk:

    - 'released': F(k, x - k t) plus the mass the layer has released so far.
      An increment released at stretched time s travelled against k for
      eps s before switching, so it sits at k (t - 2 eps s) from its origin.
    - 'total': F(k) + F(-k) as one traveling wave, minus h.
    - 'stated': F(k) as the traveling wave, minus h; equals F(k) - F(-k)
      at t = 0.

    'released' and 'total' reproduce F at t = 0 and drive the layer with
    F(k) + F(-k); 'stated' drives it with F(k).

    Args:
        F: KineticState initial datum.
        k: Aligned orientation.
        gamma: Sensitivity, > 1.
        epsilon: Knudsen number.
        bulk: 'released', 'total' or 'stated'.
        tau_end, n_taus: Stored layer samples.
        c_gamma: Separation constant for the certificate gate.

    Raises:
        PreconditionError: If the layer certificate is unsatisfiable.
    """
    k = Orientation(k)
    if bulk not in BULK_MODES:
        raise PreconditionError(f"bulk must be one of {', '.join(BULK_MODES)}, got {bulk!r}")
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")
    F.validate()
    majority = F.component(k)
    minority = F.component(k.opposite())
    rho0 = majority if bulk == 'stated' else majority + minority

    certificate = layer_certificate(rho0, minority, gamma, c_gamma)
    if not certificate.satisfiable:
        raise PreconditionError(
            f"layer certificate unsatisfiable: min rho0 = {np.min(rho0):.6g} <= max h0 = {np.max(minority):.6g}"
        )
    layer = initial_layer_solve(rho0, minority, gamma, tau_end, n_taus)
    kind = EquilibriumKind.aligned(int(k))
    grid = Grid(F.n_cells)
    if bulk == 'released':
        release = _release_sums(layer, k, epsilon, grid)
        return CompositeApproximant(kind, MacroField(majority), layer, float(epsilon), grid, bulk, release)
    return CompositeApproximant(kind, MacroField(rho0), layer, float(epsilon), grid, bulk)


def aligned_approximant(F, k, gamma, epsilon, t, bulk='released'):
    """Composite approximant of the aligned limit evaluated at time t."""
    return composite_approximant(F, k, gamma, epsilon, bulk=bulk).evaluate(t)


def collision_term(rho, w, gamma):
    """G(rho, w) = ((rho - w) w^g - w (rho - w)^g) / ((rho - w)^g + w^g)."""
    rho = np.asarray(rho, dtype=float)
    w = np.asarray(w, dtype=float)
    other = rho - w
    w_g = w ** gamma
    other_g = other ** gamma
    denominator = other_g + w_g
    numerator = other * w_g - w * other_g
    result = np.zeros(np.broadcast(rho, w).shape)
    np.divide(numerator, denominator, out=result, where=denominator > 0.0)
    return result


def chapman_enskog_residual(rho, w, gamma, epsilon, grid):
    """
    Residuals of the hydrodynamic/kinetic split for a candidate pair (rho, w).

    The majority density is rho - w and the minority is w. With the bulk
    transported at speed k, the hydrodynamic equation leaves 2 d_x w; the
    kinetic equation in its quasi-static form leaves G(rho, w).

    Returns:
        tuple: (sup |2 d_x w|, sup |G(rho, w)|).
    """
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon!r}")
    rho = _as_field(rho).rho
    w = np.asarray(w.rho if isinstance(w, MacroField) else w, dtype=float)
    bad = np.flatnonzero(~np.isfinite(w) | (w < 0.0) | (w > rho))
    if bad.size:
        raise PreconditionError(f"need 0 <= w <= rho, got w = {w[bad[0]]!r}", cell=int(bad[0]))
    derivative = (np.roll(w, -1) - np.roll(w, 1)) / (2.0 * grid.dx)
    hydrodynamic = float(np.max(np.abs(2.0 * derivative)))
    collision = float(np.max(np.abs(collision_term(rho, w, gamma))))
    logger.debug(f"Chapman-Enskog residuals at eps={epsilon:g}: {hydrodynamic:.3e}, {collision:.3e}")
    return hydrodynamic, collision


@dataclass(frozen=True)
class LayerDecay:
    rate: float
    constant: float
    residual: float
    n_points: int
    bounded: bool


def layer_derivative_decay(profile, F_derivative_sup, floor=1e-9, min_decades=3.0, c_gamma=None):
    """
    Fit the exponential decay of sup_x |d_x h(tau, x)|.

    Args:
        profile: LayerProfile.
        F_derivative_sup: sup of |d_x F| over both components.
        floor: Samples below floor times the largest sup are left out of the fit.
        min_decades: Required decay range among fitted samples.
        c_gamma: Separation constant for the certificate gate.

    Returns:
        LayerDecay: fitted rate, the constant C of
        sup |d_x h| <= C (|F| + |d_x F|) exp(-rate tau), and whether the bound holds.

    Raises:
        PreconditionError: When the pointwise separation fails or the sampled
            decay range is too short to fit.
    """
    certificate = layer_certificate(profile.rho0, profile.f_minus_k0, profile.gamma, c_gamma)
    if not certificate.pointwise_separation:
        raise PreconditionError(
            f"layer data violates rho0 > {certificate.c_gamma:.4g} h0; derivative decay is not certified"
        )
    dx = 1.0 / profile.n_cells
    derivatives = (np.roll(profile.values, -1, axis=1) - np.roll(profile.values, 1, axis=1)) / (2.0 * dx)
    sups = np.max(np.abs(derivatives), axis=1)
    data_norm = float(np.max(profile.rho0.rho) + np.max(profile.f_minus_k0.rho))
    reference = data_norm + float(F_derivative_sup)

    if sups.max() <= 1e-14 * max(data_norm, 1.0):
        return LayerDecay(math.inf, 0.0, 0.0, 0, True)

    used = sups >= floor * sups.max()
    decades = math.log10(sups[used].max() / sups[used].min())
    if used.sum() < 3 or decades < min_decades:
        raise PreconditionError(
            f"derivative decays over {decades:.2f} decades; at least {min_decades:g} needed to fit"
        )
    slope, intercept = np.polyfit(profile.taus[used], np.log(sups[used]), 1)
    fitted = intercept + slope * profile.taus[used]
    residual = float(np.sqrt(np.mean((np.log(sups[used]) - fitted) ** 2)))
    rate = -float(slope)
    if rate <= 0:
        raise PreconditionError(f"fitted derivative decay rate {rate:.4g} is not positive")

    constant = float(np.max(sups[used] * np.exp(rate * profile.taus[used]))) / reference
    envelope = constant * reference * np.exp(-rate * profile.taus[used])
    bounded = bool(np.all(sups[used] <= envelope * (1.0 + 1e-9)))
    logger.info(f"Layer derivative decay rate {rate:.4f} (constant {constant:.3g}, {decades:.1f} decades)")
    return LayerDecay(rate, constant, residual, int(used.sum()), bounded)
