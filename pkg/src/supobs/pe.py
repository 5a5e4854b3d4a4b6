"""Post-hoc persistency-of-excitation diagnostics.

Excitation is measured as the trailing-window energy of an observer's
output error,

    E(t) = integral_{t - T_f}^{t} |yerr(tau)|_inf^2 dtau,

computed by trapezoidal quadrature on a uniformly sampled trace, with the
window endpoint interpolated so non-integer window lengths keep second
order accuracy.  The classical matrix condition uses the windowed Gramian
``integral yerr yerr' dtau`` and reports its minimum eigenvalue floor.

The diagnostics make no claim that a PE property holds globally for a
given input: only the empirical energies, their floor, and the rank
correlation between per-observer excitation and parameter mismatch are
reported (a lower envelope is intentionally never fitted).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import spearmanr

from .errors import WindowTooLongError

__all__ = [
    "windowed_energy",
    "classical_pe_gramian",
    "PEReport",
    "pe_report",
    "pe_scatter",
    "fit_exponential_envelope",
]


def _uniform_dt(ts):
    ts = np.asarray(ts, dtype=float)
    if ts.size < 3:
        raise ValueError("need at least 3 samples")
    steps = np.diff(ts)
    dt = steps[0]
    if np.max(np.abs(steps - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError("trace must be uniformly sampled")
    return dt


def _window_samples(ts, window):
    dt = _uniform_dt(ts)
    duration = ts[-1] - ts[0]
    if window > duration + 1e-12:
        raise WindowTooLongError(f"window {window} exceeds trace duration {duration}")
    q = window / dt
    if q < 2.0:
        raise ValueError("window must span at least 2 samples")
    return dt, q


def _cumtrapz(w, dt):
    # w: (T,) or (T, ...); integral from sample 0, shape preserved
    inner = 0.5 * dt * (w[1:] + w[:-1])
    out = np.concatenate([np.zeros_like(w[:1]), np.cumsum(inner, axis=0)])
    return out


def _windowed(I, q):
    # I: cumulative integral samples; window of fractional length q samples
    T = I.shape[0]
    k0 = int(np.ceil(q - 1e-9))
    ks = np.arange(k0, T)
    j = ks - q  # fractional left endpoints, >= -1e-9
    j = np.maximum(j, 0.0)
    base = np.floor(j).astype(int)
    frac = j - base
    nxt = np.minimum(base + 1, T - 1)
    if I.ndim == 1:
        left = I[base] * (1.0 - frac) + I[nxt] * frac
    else:
        shape = (-1,) + (1,) * (I.ndim - 1)
        f = frac.reshape(shape)
        left = I[base] * (1.0 - f) + I[nxt] * f
    return ks, I[ks] - left


def windowed_energy(ts, y_err, window):
    """Trailing-window energy of the squared infinity norm.

    Parameters
    ----------
    ts : (T,) array_like
        Uniform sample times.
    y_err : (T,) or (T, n_y) array_like
        Sampled output error.
    window : float
        Window length T_f (seconds), at least 2 samples and at most the
        trace duration.

    Returns
    -------
    (ts_valid, E) : arrays over the times with a full trailing window.
    """
    ts = np.asarray(ts, dtype=float)
    dt, q = _window_samples(ts, window)
    Y = np.asarray(y_err, dtype=float)
    if Y.ndim == 1:
        w = Y * Y
    else:
        w = np.max(np.abs(Y), axis=1) ** 2
    I = _cumtrapz(w, dt)
    ks, E = _windowed(I, q)
    return ts[ks], E


def classical_pe_gramian(ts, y_err, window, return_series=False):
    """Minimum eigenvalue floor of the trailing-window output Gramian.

    ``y_err`` is (T, n_y) (a 1-d array is treated as n_y = 1, where the
    Gramian floor coincides with the windowed energy minimum).
    """
    ts = np.asarray(ts, dtype=float)
    dt, q = _window_samples(ts, window)
    Y = np.asarray(y_err, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    outer = Y[:, :, None] * Y[:, None, :]
    I = _cumtrapz(outer, dt)
    ks, Gr = _windowed(I, q)
    lam_min = np.linalg.eigvalsh(Gr)[:, 0]
    floor = float(lam_min.min())
    if return_series:
        return floor, (ts[ks], lam_min)
    return floor


@dataclass(frozen=True)
class PEReport:
    """Per-observer excitation diagnostics for one run."""

    window: float
    p_err_inf: np.ndarray
    min_energy: np.ndarray
    gramian_floor: np.ndarray
    spearman: float


def pe_scatter(p_err_infs, min_energies):
    """(mismatch, excitation) pairs plus their Spearman rank correlation."""
    p = np.asarray(p_err_infs, dtype=float)
    e = np.asarray(min_energies, dtype=float)
    if p.size != e.size:
        raise ValueError("mismatches and energies must pair up")
    if np.ptp(p) == 0.0 and np.ptp(e) == 0.0:
        rho = 1.0  # identical observers: perfectly tied ranks
    else:
        rho = float(spearmanr(p, e).statistic)
    return np.column_stack([p, e]), rho


def pe_report(ts, y_err_inf, window, p_points, p_star) -> PEReport:
    """Bank-wide PE diagnostics from per-observer |yerr_i|_inf samples.

    ``y_err_inf`` is (T, N); ``p_points`` the (N, n_p) observer
    parameters; ``p_star`` the true parameter (diagnostic context only).
    """
    Y = np.asarray(y_err_inf, dtype=float)
    if Y.ndim != 2:
        raise ValueError("y_err_inf must be (T, N)")
    N = Y.shape[1]
    p_points = np.atleast_2d(np.asarray(p_points, dtype=float))
    p_star = np.atleast_1d(np.asarray(p_star, dtype=float))
    dt, q = _window_samples(np.asarray(ts, dtype=float), window)
    I = _cumtrapz(Y * Y, dt)
    _, E = _windowed(I, q)
    min_energy = E.min(axis=0)
    p_err = np.max(np.abs(p_points - p_star), axis=1)
    _, rho = pe_scatter(p_err, min_energy)
    return PEReport(
        window=window,
        p_err_inf=p_err,
        min_energy=min_energy,
        gramian_floor=min_energy.copy(),  # scalar-output plants
        spearman=rho,
    )


def fit_exponential_envelope(ts, norms, tail_floor=1e-12):
    """Log-linear fit of a decaying error norm: k, rate with
    ``norms <= k * exp(-rate * t) * norms[0]`` on the fitted range.

    Fits ``log norms`` against t over the samples above ``tail_floor``
    times the peak, then shifts the intercept up by the largest positive
    residual so the returned pair is a true envelope there.
    """
    ts = np.asarray(ts, dtype=float)
    n = np.asarray(norms, dtype=float)
    if n[0] <= 0:
        raise ValueError("norms[0] must be positive")
    mask = n > tail_floor * n.max()
    if mask.sum() < 3:
        raise ValueError("not enough samples above the floor to fit")
    t_fit, y_fit = ts[mask], np.log(n[mask])
    slope, intercept = np.polyfit(t_fit, y_fit, 1)
    resid = y_fit - (slope * t_fit + intercept)
    k = float(np.exp(intercept + resid.max()) / n[0])
    rate = float(-slope)
    return k, rate
