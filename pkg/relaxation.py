"""
Per-cell relaxation kernels.

Inside one cell the interaction conserves m = f(+1) + f(-1), so the cell state
reduces to one scalar w (a component density) obeying

    dw/dtau = G(m, w) = ((m - w) w^g - w (m - w)^g) / ((m - w)^g + w^g)

in the rescaled time tau = stiffness * t. G is integrated with an adaptive
Dormand-Prince 5(4) pair under relative error control. The same kernel drives
the splitting step of the kinetic solver, the space-homogeneous ODE and the
initial-layer ODE.
"""
import logging

import numpy as np
from numba import njit, prange

from errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10

# Pure relative control; w may decay to denormals without stalling the step size
ATOL = 1e-300

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
MAX_SUBSTEPS = 10_000_000

# Dormand-Prince 5(4) tableau
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0
)


@njit(cache=True, nogil=True)
def interaction_rate(m, w, gamma):
    """G(m, w); zero at w = 0, w = m/2 and w = m."""
    other = m - w
    if other < 0.0:
        other = 0.0
    if w <= 0.0:
        return 0.0
    w_g = w ** gamma
    other_g = other ** gamma
    denominator = other_g + w_g
    if denominator <= 0.0:
        return 0.0
    return (other * w_g - w * other_g) / denominator


@njit(cache=True, nogil=True)
def _clamp(w, m):
    if w < 0.0:
        return 0.0
    if w > m:
        return m
    return w


@njit(cache=True, nogil=True)
def relax_scalar(m, w, tau, gamma, rtol, max_substeps=MAX_SUBSTEPS):
    """
    Integrate dw/dtau = G(m, w) over [0, tau] starting from w.

    Returns the final w, clamped to [0, m], or nan when max_substeps steps
    do not reach tau.
    """
    if tau <= 0.0 or m <= 0.0 or np.isnan(w):
        return w
    k1 = interaction_rate(m, w, gamma)
    if k1 == 0.0:
        # w sits on an equilibrium of G
        return w

    t = 0.0
    h = min(tau, 0.1)
    h_min = 1e-14 * tau
    steps = 0
    while tau - t > 1e-15 * tau and steps < max_substeps:
        steps += 1
        if t + h > tau:
            h = tau - t

        k2 = interaction_rate(m, w + h * A21 * k1, gamma)
        k3 = interaction_rate(m, w + h * (A31 * k1 + A32 * k2), gamma)
        k4 = interaction_rate(m, w + h * (A41 * k1 + A42 * k2 + A43 * k3), gamma)
        k5 = interaction_rate(m, w + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), gamma)
        k6 = interaction_rate(m, w + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), gamma)
        w_new = w + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = interaction_rate(m, w_new, gamma)

        error = abs(h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7))
        scale = ATOL + rtol * max(abs(w), abs(w_new))
        ratio = error / scale

        if ratio <= 1.0 or h <= h_min:
            t += h
            clamped = _clamp(w_new, m)
            if clamped != w_new:
                k7 = interaction_rate(m, clamped, gamma)
            w = clamped
            k1 = k7
            if k1 == 0.0:
                break
            if ratio == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * ratio ** -0.2))
        else:
            factor = max(MIN_FACTOR, SAFETY * ratio ** -0.2)
        h = max(h * factor, h_min)
    if steps >= max_substeps and tau - t > 1e-15 * tau and k1 != 0.0:
        return np.nan
    return w


@njit(cache=True, nogil=True, parallel=True)
def relax_cells(f_plus, f_minus, tau, gamma, chi_floor, rtol, max_substeps, out_plus, out_minus):
    """
    Relax every cell over rescaled time tau, writing into out_plus/out_minus.

    The smaller component of each cell is integrated and the other one is
    recovered from the frozen cell mass. Ties take the f_plus branch, where
    the rate is exactly zero, so swapping the inputs swaps the outputs bit for
    bit.
    """
    n = f_plus.shape[0]
    for i in prange(n):
        a = f_plus[i]
        b = f_minus[i]
        m = a + b
        if m <= chi_floor:
            out_plus[i] = a
            out_minus[i] = b
        elif a <= b:
            w = relax_scalar(m, a, tau, gamma, rtol, max_substeps)
            out_plus[i] = w
            out_minus[i] = m - w
        else:
            w = relax_scalar(m, b, tau, gamma, rtol, max_substeps)
            out_minus[i] = w
            out_plus[i] = m - w


@njit(cache=True, nogil=True, parallel=True)
def integrate_profile(rho0, h0, taus, gamma, rtol, out):
    """
    Integrate dh/dtau = G(rho0, h) per cell across the increasing grid taus.

    out has shape (len(taus), n_cells); row 0 holds h0 when taus[0] == 0.
    """
    n = rho0.shape[0]
    n_taus = taus.shape[0]
    for i in prange(n):
        h = relax_scalar(rho0[i], h0[i], taus[0], gamma, rtol)
        out[0, i] = h
        for s in range(1, n_taus):
            h = relax_scalar(rho0[i], h, taus[s] - taus[s - 1], gamma, rtol)
            out[s, i] = h


def check_budget(values, tau):
    """Raise for the first cell a kernel left at nan, i.e. out of substeps."""
    bad = np.flatnonzero(np.isnan(values))
    if bad.size:
        logger.warning(f"Relaxation ran out of substeps in {bad.size} cell(s) over tau = {tau!r}")
        raise PreconditionError(f"relaxation substep budget exhausted over tau = {tau!r}", cell=int(bad[0]))


def relax_pair(f_plus, f_minus, tau, gamma, chi_floor=0.0, rtol=DEFAULT_RTOL, max_substeps=MAX_SUBSTEPS):
    """
    Relax cell-wise densities over rescaled time tau.

    Args:
        f_plus: Array of orientation +1 densities.
        f_minus: Array of orientation -1 densities.
        tau: Rescaled time, stiffness * dt.
        gamma: Sensitivity exponent.
        chi_floor: Cells whose total is at or below this are left untouched.
        rtol: Relative tolerance of the embedded pair.
        max_substeps: Step budget of every cell.

    Returns:
        tuple: New (f_plus, f_minus) arrays.

    Raises:
        PreconditionError: If some cell exhausts its step budget.
    """
    f_plus = np.ascontiguousarray(f_plus, dtype=np.float64)
    f_minus = np.ascontiguousarray(f_minus, dtype=np.float64)
    out_plus = np.empty_like(f_plus)
    out_minus = np.empty_like(f_minus)
    relax_cells(
        f_plus, f_minus, float(tau), float(gamma), float(chi_floor), float(rtol), int(max_substeps),
        out_plus, out_minus,
    )
    check_budget(out_plus, tau)
    return out_plus, out_minus


def layer_profile(rho0, h0, taus, gamma, rtol=DEFAULT_RTOL):
    rho0 = np.ascontiguousarray(rho0, dtype=np.float64)
    h0 = np.ascontiguousarray(h0, dtype=np.float64)
    taus = np.ascontiguousarray(taus, dtype=np.float64)
    out = np.empty((taus.shape[0], rho0.shape[0]))
    integrate_profile(rho0, h0, taus, float(gamma), float(rtol), out)
    check_budget(out[-1], taus[-1])
    return out
