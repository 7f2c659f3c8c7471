"""
Core objects of the two-orientation alignment model.

States live on a cell-centred grid over the unit torus. A state holds one
density vector per orientation j = +1 / -1; the interaction operator Q moves
density between the two orientations inside a cell and never across cells.
"""
from dataclasses import dataclass
from enum import Enum, IntEnum
import logging
from typing import NamedTuple

import numpy as np

from errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_CHI_FLOOR = 1e-14

# Grid.shift_cells accepts t/dx within this relative distance of an integer
SHIFT_TOLERANCE = 1e-9


class Orientation(IntEnum):
    PLUS = 1
    MINUS = -1

    def opposite(self):
        return Orientation(-int(self))


class Scaling(str, Enum):
    HYPERBOLIC = 'hyperbolic'
    PARABOLIC = 'parabolic'


class Projection(str, Enum):
    HYDRO = 'hydro'
    KINETIC = 'kinetic'


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of the unit torus; cell i is centred at (i + 1/2) dx."""
    n_cells: int

    def __post_init__(self):
        if isinstance(self.n_cells, bool) or not isinstance(self.n_cells, (int, np.integer)):
            raise PreconditionError(f"n_cells must be an integer, got {self.n_cells!r}")
        if self.n_cells <= 0:
            raise PreconditionError(f"n_cells must be positive, got {self.n_cells}")
        object.__setattr__(self, 'n_cells', int(self.n_cells))

    @property
    def dx(self):
        return 1.0 / self.n_cells

    @property
    def centers(self):
        return (np.arange(self.n_cells) + 0.5) * self.dx

    def wrap(self, index):
        return index % self.n_cells

    def shift_cells(self, distance):
        """
        Convert a distance on the torus into a whole number of cells.

        Args:
            distance: Signed distance, expected to be an integer multiple of dx.

        Returns:
            int: Number of cells (not reduced modulo n_cells).

        Raises:
            PreconditionError: If distance is not a multiple of dx.
        """
        cells = distance * self.n_cells
        whole = round(cells)
        if abs(cells - whole) > SHIFT_TOLERANCE * max(1.0, abs(cells)):
            raise PreconditionError(
                f"distance {distance!r} is not a multiple of dx = 1/{self.n_cells}"
            )
        return int(whole)

    def refined(self, factor=2):
        return Grid(self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class KineticState:
    """Densities f(+1, .) and f(-1, .) sampled at the cell centres."""
    f_plus: np.ndarray
    f_minus: np.ndarray

    def __post_init__(self):
        f_plus = np.atleast_1d(np.array(self.f_plus, dtype=float))
        f_minus = np.atleast_1d(np.array(self.f_minus, dtype=float))
        if f_plus.ndim != 1 or f_plus.shape != f_minus.shape:
            raise PreconditionError(
                f"components must be vectors of equal length, got {f_plus.shape} and {f_minus.shape}"
            )
        f_plus.setflags(write=False)
        f_minus.setflags(write=False)
        object.__setattr__(self, 'f_plus', f_plus)
        object.__setattr__(self, 'f_minus', f_minus)

    @classmethod
    def constant(cls, value_plus, value_minus, n_cells=1):
        return cls(np.full(n_cells, float(value_plus)), np.full(n_cells, float(value_minus)))

    @property
    def n_cells(self):
        return self.f_plus.shape[0]

    def component(self, j):
        return self.f_plus if int(j) == 1 else self.f_minus

    def total(self):
        return self.f_plus + self.f_minus

    def swap(self):
        return KineticState(self.f_minus, self.f_plus)

    def reflect(self):
        """Mirror x -> -x; on the cell-centred grid cell i maps to n - 1 - i."""
        return KineticState(self.f_plus[::-1], self.f_minus[::-1])

    def sup_norm(self):
        """Sum over orientations of the sup over x."""
        return float(np.max(np.abs(self.f_plus)) + np.max(np.abs(self.f_minus)))

    def l1_norm(self, grid):
        return float((np.sum(np.abs(self.f_plus)) + np.sum(np.abs(self.f_minus))) * grid.dx)

    def minimum(self):
        return float(min(self.f_plus.min(), self.f_minus.min()))

    def validate(self, strictly_positive=False):
        """
        Check the density invariants, naming the first offending cell.

        Raises:
            PreconditionError: On a nonfinite, negative or (when requested)
                nonpositive entry.
        """
        for label, values in (('f_plus', self.f_plus), ('f_minus', self.f_minus)):
            bad = np.flatnonzero(~np.isfinite(values))
            if bad.size:
                raise PreconditionError(f"nonfinite {label} = {values[bad[0]]!r}", cell=int(bad[0]))
            bad = np.flatnonzero(values <= 0.0 if strictly_positive else values < 0.0)
            if bad.size:
                kind = 'nonpositive' if strictly_positive else 'negative'
                raise PreconditionError(f"{kind} {label} = {values[bad[0]]!r}", cell=int(bad[0]))
        return self

    def __eq__(self, other):
        if not isinstance(other, KineticState):
            return NotImplemented
        return np.array_equal(self.f_plus, other.f_plus) and np.array_equal(self.f_minus, other.f_minus)

    __hash__ = None

    def __repr__(self):
        return f"KineticState(n_cells={self.n_cells}, min={self.minimum():.6g}, sup={self.sup_norm():.6g})"


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    epsilon: float = 1.0
    scaling: Scaling = Scaling.HYPERBOLIC
    chi_floor: float = DEFAULT_CHI_FLOOR

    def __post_init__(self):
        object.__setattr__(self, 'scaling', Scaling(self.scaling))
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise PreconditionError(f"gamma must be a positive number, got {self.gamma!r}")
        if self.gamma == 1:
            raise PreconditionError("gamma must differ from 1 (gamma = 1 decouples into free streaming)")
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise PreconditionError(f"epsilon must be positive, got {self.epsilon!r}")
        if not 0 <= self.chi_floor < 1e-3:
            raise PreconditionError(f"chi_floor must lie in [0, 1e-3), got {self.chi_floor!r}")

    @property
    def stiffness(self):
        """Factor multiplying Q in the scaled equation: 1/eps or 1/eps^2."""
        if self.scaling is Scaling.PARABOLIC:
            return 1.0 / self.epsilon ** 2
        return 1.0 / self.epsilon

    def time_step(self, grid):
        """Step that moves every characteristic by exactly one cell."""
        if self.scaling is Scaling.PARABOLIC:
            return self.epsilon * grid.dx
        return grid.dx


@dataclass(frozen=True, eq=False)
class MacroField:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.array(self.rho, dtype=float))
        bad = np.flatnonzero(~np.isfinite(rho))
        if bad.size:
            raise PreconditionError(f"nonfinite density {rho[bad[0]]!r}", cell=int(bad[0]))
        bad = np.flatnonzero(rho < 0.0)
        if bad.size:
            raise PreconditionError(f"negative density {rho[bad[0]]!r}", cell=int(bad[0]))
        rho.setflags(write=False)
        object.__setattr__(self, 'rho', rho)

    @property
    def n_cells(self):
        return self.rho.shape[0]

    def __eq__(self, other):
        if not isinstance(other, MacroField):
            return NotImplemented
        return np.array_equal(self.rho, other.rho)

    __hash__ = None


@dataclass(frozen=True)
class EquilibriumKind:
    """Diffusive equilibrium (1/2, 1/2) or aligned equilibrium concentrated on k."""
    name: str
    k: int = 0

    def __post_init__(self):
        if self.name == 'diffusive':
            object.__setattr__(self, 'k', 0)
        elif self.name == 'aligned':
            if self.k not in (1, -1):
                raise PreconditionError(f"aligned equilibrium needs k in {{-1, 1}}, got {self.k!r}")
            object.__setattr__(self, 'k', int(self.k))
        else:
            raise PreconditionError(f"unknown equilibrium kind {self.name!r}")

    @classmethod
    def diffusive(cls):
        return cls('diffusive')

    @classmethod
    def aligned(cls, k):
        return cls('aligned', int(k))

    @property
    def is_aligned(self):
        return self.name == 'aligned'

    @property
    def weights(self):
        """(eta_plus, eta_minus) of the Maxwellian eta_j * rho."""
        if not self.is_aligned:
            return 0.5, 0.5
        return (1.0, 0.0) if self.k == 1 else (0.0, 1.0)

    def __str__(self):
        return self.name if not self.is_aligned else f"aligned({self.k:+d})"


class RatePair(NamedTuple):
    """Per-cell rates for orientation +1 and -1; entries may be negative."""
    plus: np.ndarray
    minus: np.ndarray


def _active_cells(state, params):
    # chi(total > 0) with a numerical floor
    return state.total() > params.chi_floor


def _gamma_powers(state, gamma):
    return state.f_plus ** gamma, state.f_minus ** gamma


def collision_q(state, params):
    """
    Evaluate the interaction operator Q[f] cell by cell.

    Q[f](j) = (f(-j) f(j)^g - f(j) f(-j)^g) / (f(j)^g + f(-j)^g) where the total
    density exceeds params.chi_floor, and 0 elsewhere.

    Args:
        state: KineticState with finite, nonnegative entries.
        params: ModelParams supplying gamma and chi_floor.

    Returns:
        RatePair: Q for j = +1 and j = -1. The minus rate is the exact negation
        of the plus rate.

    Raises:
        PreconditionError: On nonfinite or negative input, naming the cell.
    """
    state.validate()
    active = _active_cells(state, params)
    plus_g, minus_g = _gamma_powers(state, params.gamma)
    denominator = plus_g + minus_g
    numerator = state.f_minus * plus_g - state.f_plus * minus_g
    q_plus = np.zeros_like(numerator)
    np.divide(numerator, denominator, out=q_plus, where=active & (denominator > 0.0))
    return RatePair(q_plus, -q_plus)


def collision_gain(state, params):
    """Gain part Q+ of the interaction: f(j)^g f(-j) / (f(j)^g + f(-j)^g)."""
    state.validate()
    active = _active_cells(state, params)
    plus_g, minus_g = _gamma_powers(state, params.gamma)
    denominator = plus_g + minus_g
    where = active & (denominator > 0.0)
    gain_plus = np.zeros(state.n_cells)
    gain_minus = np.zeros(state.n_cells)
    np.divide(plus_g * state.f_minus, denominator, out=gain_plus, where=where)
    np.divide(minus_g * state.f_plus, denominator, out=gain_minus, where=where)
    return RatePair(gain_plus, gain_minus)


def collision_loss(state, params):
    """Loss part Q- of the interaction: f(j) f(-j)^g / (f(j)^g + f(-j)^g)."""
    state.validate()
    active = _active_cells(state, params)
    plus_g, minus_g = _gamma_powers(state, params.gamma)
    denominator = plus_g + minus_g
    where = active & (denominator > 0.0)
    loss_plus = np.zeros(state.n_cells)
    loss_minus = np.zeros(state.n_cells)
    np.divide(state.f_plus * minus_g, denominator, out=loss_plus, where=where)
    np.divide(state.f_minus * plus_g, denominator, out=loss_minus, where=where)
    return RatePair(loss_plus, loss_minus)


def collision_r(state, params):
    """
    Evaluate R[f](j) = f(j)^g (f(1) + f(-1)) / (f(1)^g + f(-1)^g).

    For strictly positive states R[f] - f = Q[f].

    Raises:
        PreconditionError: If any entry is not strictly positive.
    """
    state.validate(strictly_positive=True)
    plus_g, minus_g = _gamma_powers(state, params.gamma)
    scale = state.total() / (plus_g + minus_g)
    return KineticState(plus_g * scale, minus_g * scale)


def maxwellian(kind, rho):
    """
    Build the equilibrium M(j, x) = eta_j rho(x).

    Args:
        kind: EquilibriumKind selecting the weights.
        rho: MacroField (or array-like) with nonnegative entries.

    Returns:
        KineticState: The Maxwellian, annihilated by collision_q.
    """
    if not isinstance(rho, MacroField):
        rho = MacroField(rho)
    eta_plus, eta_minus = kind.weights
    return KineticState(eta_plus * rho.rho, eta_minus * rho.rho)


def linearize_apply(kind, gamma, pair):
    """
    Apply the linearization L of Q at the Maxwellian of the given kind.

    Diffusive: Lf(j) = ((1 - gamma)/2) (f(-j) - f(j)).
    Aligned(k): Lf(k) = f(-k), Lf(-k) = -f(-k).

    Args:
        kind: EquilibriumKind.
        gamma: Sensitivity, positive (and not 1 on the diffusive branch).
        pair: (f(+1), f(-1)); scalars or arrays.

    Returns:
        tuple: (Lf(+1), Lf(-1)).
    """
    if not gamma > 0:
        raise PreconditionError(f"gamma must be positive, got {gamma!r}")
    f_plus, f_minus = pair
    if not kind.is_aligned:
        if gamma == 1:
            raise PreconditionError("diffusive linearization requires gamma != 1")
        factor = (1.0 - gamma) / 2.0
        return factor * (f_minus - f_plus), factor * (f_plus - f_minus)
    if kind.k == 1:
        return f_minus, -f_minus
    return -f_plus, f_plus


def project(kind, pair, which):
    """
    Spectral projection onto the hydrodynamic space (which='hydro') or its
    kinetic complement (which='kinetic').

    Args:
        kind: EquilibriumKind.
        pair: (f(+1), f(-1)); scalars or arrays.
        which: Projection or its string value.

    Returns:
        tuple: Projected (f(+1), f(-1)).
    """
    which = Projection(which)
    f_plus, f_minus = pair
    total = f_plus + f_minus
    if not kind.is_aligned:
        if which is Projection.HYDRO:
            return total / 2.0, total / 2.0
        return (f_plus - f_minus) / 2.0, (f_minus - f_plus) / 2.0
    if kind.k == 1:
        if which is Projection.HYDRO:
            return total, 0.0 * total
        return -f_minus, f_minus
    if which is Projection.HYDRO:
        return 0.0 * total, total
    return f_plus, -f_plus


def mass(state, grid):
    """Discrete mass sum_i (f_plus[i] + f_minus[i]) dx."""
    return float(np.sum(state.total()) * grid.dx)


def _resample_values(values, n_cells):
    n = values.shape[0]
    if n == n_cells:
        return np.array(values, dtype=float)
    # Cell centres sit half a cell off the FFT nodes; undo and redo that phase
    spectrum = np.fft.rfft(values) * np.exp(-1j * np.pi * np.arange(n // 2 + 1) / n) / n
    if n % 2 == 0:
        spectrum = spectrum[:-1]
    target = np.zeros(n_cells // 2 + 1, dtype=complex)
    keep = min(spectrum.shape[0], n_cells // 2 if n_cells % 2 == 0 else target.shape[0])
    target[:keep] = spectrum[:keep]
    target *= n_cells * np.exp(1j * np.pi * np.arange(target.shape[0]) / n_cells)
    return np.fft.irfft(target, n_cells)


def resample(state, n_cells):
    """
    Fourier-resample a state onto a cell-centred grid of n_cells.

    Exact for trigonometric data whose modes fit below both Nyquist limits.
    """
    return KineticState(_resample_values(state.f_plus, n_cells), _resample_values(state.f_minus, n_cells))
