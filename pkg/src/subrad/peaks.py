"""Multi-Lorentzian peak extraction from spectra."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks, peak_widths

from .traces import Peak, PeakSet, SpectrumTrace


class PeakFitError(RuntimeError):
    """Lorentzian fit did not converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


def lorentzian_sum(freqs: np.ndarray, params: np.ndarray, n_peaks: int) -> np.ndarray:
    """baseline + sum_k A_k / (1 + 4 (nu - c_k)^2 / w_k^2)"""
    y = np.full_like(freqs, params[-1], dtype=float)
    for k in range(n_peaks):
        a, c, w = params[3 * k:3 * k + 3]
        y += a / (1.0 + 4.0 * (freqs - c) ** 2 / w ** 2)
    return y


def _initial_guess(freqs: np.ndarray, signal: np.ndarray, n_peaks: int) -> np.ndarray:
    span = freqs[-1] - freqs[0]
    smax = signal.max()
    idx, props = find_peaks(signal, prominence=1e-3 * max(smax, 1e-300))
    if idx.size:
        order = np.argsort(props["prominences"])[::-1]
        idx = idx[order[:n_peaks]]
    if idx.size < n_peaks:
        # pad with evenly spaced guesses
        extra = np.linspace(freqs[0] + 0.1 * span, freqs[-1] - 0.1 * span,
                            n_peaks - idx.size)
        extra_idx = [int(np.argmin(np.abs(freqs - x))) for x in extra]
        idx = np.concatenate([idx, np.array(extra_idx, dtype=int)])
    widths = peak_widths(signal, np.sort(idx), rel_height=0.5)[0] if idx.size else []
    dv = np.median(np.diff(freqs))
    p0 = []
    for k, i in enumerate(np.sort(idx)):
        w = widths[k] * dv if k < len(widths) and widths[k] > 0 else 0.05 * span
        p0.extend([signal[i], freqs[i], max(w, 2 * dv)])
    p0.append(0.0)
    return np.asarray(p0)


def peak_fit(trace: SpectrumTrace, n_peaks: int,
             init: Optional[Sequence[float]] = None,
             fixed_centers: Optional[Sequence[float]] = None,
             max_nfev: int = 2000) -> PeakSet:
    """Least-squares fit of a sum of Lorentzians plus a constant baseline.

    init, when given, is a flat parameter vector [A1, c1, w1, ..., baseline].
    fixed_centers pins the peak centers (constrained fit for unresolvable
    peaks).  Raises PeakFitError with the last residual on non-convergence.
    """
    if n_peaks < 1:
        raise ValueError("need at least one peak")
    freqs, signal = trace.freqs, trace.signal
    if freqs.size < 3 * n_peaks + 1:
        raise ValueError("trace too short for the requested number of peaks")
    span = freqs[-1] - freqs[0]
    smax = max(signal.max(), 1e-300)

    if init is not None:
        p0 = np.asarray(init, dtype=float)
        if p0.size != 3 * n_peaks + 1:
            raise ValueError(f"init must have {3 * n_peaks + 1} entries")
    else:
        p0 = _initial_guess(freqs, signal, n_peaks)

    if fixed_centers is not None:
        centers = np.asarray(fixed_centers, dtype=float)
        if centers.size != n_peaks:
            raise ValueError("fixed_centers must give one center per peak")

        def resid(q):
            p = np.empty(3 * n_peaks + 1)
            for k in range(n_peaks):
                p[3 * k] = q[2 * k]
                p[3 * k + 1] = centers[k]
                p[3 * k + 2] = q[2 * k + 1]
            p[-1] = q[-1]
            return lorentzian_sum(freqs, p, n_peaks) - signal

        q0 = np.empty(2 * n_peaks + 1)
        for k in range(n_peaks):
            q0[2 * k] = max(p0[3 * k], 0.0)
            q0[2 * k + 1] = p0[3 * k + 2]
        q0[-1] = p0[-1]
        lo = [0.0, 1e-6 * span] * n_peaks + [-smax]
        hi = [10 * smax, 10 * span] * n_peaks + [smax]
        sol = least_squares(resid, np.clip(q0, lo, hi), bounds=(lo, hi),
                            max_nfev=max_nfev)
        params = np.empty(3 * n_peaks + 1)
        for k in range(n_peaks):
            params[3 * k] = sol.x[2 * k]
            params[3 * k + 1] = centers[k]
            params[3 * k + 2] = sol.x[2 * k + 1]
        params[-1] = sol.x[-1]
    else:
        def resid(p):
            return lorentzian_sum(freqs, p, n_peaks) - signal

        margin = 0.5 * span
        lo = [0.0, freqs[0] - margin, 1e-6 * span] * n_peaks + [-smax]
        hi = [10 * smax, freqs[-1] + margin, 10 * span] * n_peaks + [smax]
        sol = least_squares(resid, np.clip(p0, lo, hi), bounds=(lo, hi),
                            max_nfev=max_nfev)
        params = sol.x

    rnorm = float(np.linalg.norm(sol.fun))
    if not sol.success:
        raise PeakFitError(f"Lorentzian fit did not converge: {sol.message}",
                           residual=rnorm)
    # covariance from the Jacobian of the weighted residuals
    try:
        jtj = sol.jac.T @ sol.jac
        dof = max(freqs.size - sol.x.size, 1)
        cov = np.linalg.pinv(jtj) * (rnorm ** 2 / dof)
    except np.linalg.LinAlgError:
        cov = None
    peaks = [Peak(center=float(params[3 * k + 1]), height=float(params[3 * k]),
                  fwhm=float(abs(params[3 * k + 2]))) for k in range(n_peaks)]
    return PeakSet(peaks=peaks, baseline=float(params[-1]), covariance=cov,
                   residual_norm=rnorm, converged=bool(sol.success))
