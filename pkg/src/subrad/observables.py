"""Measured curves: excitation spectra, extinction ratios, second-order
correlations, lifetime traces, saturation series, and the random-resonance
Monte Carlo."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .lindblad import (ANGULAR_MHZ_NS, DensityOperator, Liouvillian,
                       build_liouvillian, emission_rate, lowering_ops,
                       propagate, regression_correlation, steady_state)
from .model import (COUPLING_CONST_MHZ, DressedStates, DriveParams,
                    SystemModel, eigenmodes)
from .peaks import PeakFitError, peak_fit
from .traces import CorrelationTrace, PeakSet, SpectrumTrace

PHOTONS_PER_NS = 1e9  # rate (1/ns) -> photons/s


class NormalizationError(RuntimeError):
    """Zero detected rate; the correlation cannot be normalized."""


def _sideband_rate(model: SystemModel, rho: DensityOperator) -> float:
    """Detected (vibrational-sideband) photon rate in 1/ns."""
    return emission_rate(model, rho, channels="sideband")


def excitation_spectrum(model: SystemModel, drive_amplitude: float,
                        scan: Sequence[float], normalize: bool = False) -> SpectrumTrace:
    """Steady-state sideband scattering rate vs. drive laser frequency.

    The generator is rebuilt in the rotating frame of every scan point; the
    detected signal is (1 - alpha) * gamma0 * sum_i <n_i> (photons/s), or
    rescaled to max 1 when normalize is set.
    """
    scan = np.asarray(scan, dtype=float)
    if scan.size == 0:
        raise ValueError("scan axis must be nonempty")
    signal = np.empty(scan.size)
    for k, w_l in enumerate(scan):
        drive = DriveParams(rabi=drive_amplitude, laser_freq=float(w_l))
        rho = steady_state(build_liouvillian(model, drive))
        signal[k] = _sideband_rate(model, rho) * PHOTONS_PER_NS
    meta = {"drive_amplitude_mhz": float(drive_amplitude),
            "gamma0_mhz": model.gamma0, "alpha": model.alpha}
    if normalize:
        peak = signal.max()
        if peak <= 0:
            raise NormalizationError("spectrum is identically zero")
        signal = signal / peak
    return SpectrumTrace(freqs=scan, signal=signal, normalized=normalize, meta=meta)


@dataclass
class ExtinctionPoint:
    """Sub/superradiant fitted height ratio at one detuning."""

    delta: float
    ratio: float
    flagged: bool = False


def _pair_dressed(model: SystemModel) -> DressedStates:
    if model.n != 2:
        raise ValueError("dressed-state analysis requires exactly two emitters")
    w1, w2 = model.emitters[0].omega, model.emitters[1].omega
    return eigenmodes(w1, w2, float(model.J[0, 1]), model)


def _retuned(model: SystemModel, delta: float) -> SystemModel:
    """Two-emitter model with the same couplings, detuned symmetrically about
    the mean frequency."""
    mean = 0.5 * (model.emitters[0].omega + model.emitters[1].omega)
    return SystemModel.two_emitter(
        omega1=mean + 0.5 * delta, omega2=mean - 0.5 * delta,
        j=float(model.J[0, 1]), gamma0=model.gamma0, alpha=model.alpha,
        dephasing=model.dephasing, gamma12=float(model.Gamma_coll[0, 1]))


def extinction_ratio_curve(model_template: SystemModel, detunings: Sequence[float],
                           drive_amplitude: float, points_per_peak: int = 60,
                           window_widths: float = 8.0) -> List[ExtinctionPoint]:
    """Fitted subradiant/superradiant peak-height ratio vs. pair detuning.

    For each detuning the excitation spectrum is sampled in windows around
    both dressed resonances and fitted with two Lorentzians.  When the
    splitting is below half the expected linewidth the point is flagged and
    the fit constrains the centers to the dressed-state frequencies.
    """
    out = []
    for delta in detunings:
        m = _retuned(model_template, float(delta))
        ds = _pair_dressed(m)
        width = m.gamma0 + 2.0 * m.dephasing
        half = window_widths * width / 2.0
        scan = np.unique(np.concatenate([
            np.linspace(ds.freq_minus - half, ds.freq_minus + half, points_per_peak),
            np.linspace(ds.freq_plus - half, ds.freq_plus + half, points_per_peak)]))
        trace = excitation_spectrum(m, drive_amplitude, scan)
        unresolvable = ds.delta_tilde < width / 2.0
        heights = _fit_pair_heights(trace, ds, constrained=unresolvable)
        sub, sup = heights[ds.subradiant], heights[ds.superradiant]
        if sup <= 0:
            raise PeakFitError("superradiant peak height fitted as nonpositive")
        out.append(ExtinctionPoint(delta=float(delta), ratio=max(sub, 0.0) / sup,
                                   flagged=unresolvable))
    return out


def _fit_pair_heights(trace: SpectrumTrace, ds: DressedStates,
                      constrained: bool = False) -> dict:
    """Two-Lorentzian fit with centers initialized (or pinned) at the dressed
    frequencies; returns fitted heights keyed by branch."""
    smax = trace.signal.max()
    init = [smax, ds.freq_minus, ds.gamma_minus,
            smax, ds.freq_plus, ds.gamma_plus, 0.0]
    if not constrained:
        ps = peak_fit(trace, 2, init=init)
        lo, hi = ps.sorted_by_center()
        # a nearly dark peak lets the free fit wander; if either fitted
        # center strays from its dressed frequency, pin the centers instead
        tol = 0.5 * (ds.gamma_minus + ds.gamma_plus) + 0.25 * ds.delta_tilde
        constrained = (abs(lo.center - ds.freq_minus) > tol
                       or abs(hi.center - ds.freq_plus) > tol)
    if constrained:
        ps = peak_fit(trace, 2, init=init,
                      fixed_centers=[ds.freq_minus, ds.freq_plus])
        lo, hi = ps.peaks[0], ps.peaks[1]
    return {"minus": lo.height, "plus": hi.height}


def _dressed_drive(model: SystemModel, rabi: float, detection: str) -> DriveParams:
    if detection == "total":
        laser = 0.5 * (model.emitters[0].omega + model.emitters[-1].omega)
    else:
        ds = _pair_dressed(model)
        laser = ds.freq(detection)
    return DriveParams(rabi=rabi, laser_freq=laser)


def g2_curve(model: SystemModel, drive, taus: Sequence[float],
             detection: str = "total") -> CorrelationTrace:
    """Normalized second-order correlation of the detected sideband
    fluorescence under continuous drive.

    detection 'plus'/'minus' selects a dressed state by driving at its
    resonance (frequency-selective probing stands in for detection
    filtering); 'total' keeps the laser frequency of the supplied drive.
    A symmetric delay axis (negative taus) is mirrored from tau >= 0.
    """
    if detection not in ("total", "plus", "minus"):
        raise ValueError(f"unknown detection mode {detection!r}")
    if isinstance(drive, (int, float)):
        drive = _dressed_drive(model, float(drive), detection)
    elif detection != "total":
        drive = DriveParams(rabi=drive.rabi,
                            laser_freq=_dressed_drive(model, 0.0, detection).laser_freq)
    taus = np.asarray(taus, dtype=float)
    L = build_liouvillian(model, drive)
    rho_ss = steady_state(L)
    rate = _sideband_rate(model, rho_ss)
    if rate <= 0:
        raise NormalizationError("steady-state detected rate is zero")
    n = model.n
    sm = lowering_ops(n)
    g_side = np.sqrt((1.0 - model.alpha) * model.gamma0 * ANGULAR_MHZ_NS)
    collapse = [g_side * s for s in sm]
    measure = [(1.0 - model.alpha) * model.gamma0 * ANGULAR_MHZ_NS
               * (s.conj().T @ s) for s in sm]
    abs_taus = np.unique(np.abs(taus))
    raw = regression_correlation(L, rho_ss, collapse, measure, abs_taus)
    lookup = dict(zip(abs_taus, raw))
    g2 = np.array([lookup[abs(t)] for t in taus]) / rate**2
    return CorrelationTrace(taus=taus, g2=g2,
                            meta={"detection": detection,
                                  "laser_freq_mhz": drive.laser_freq,
                                  "rate_per_ns": rate})


@dataclass
class LifetimeTrace:
    """Free-decay emission trace with a fitted exponential."""

    times: np.ndarray
    rate: np.ndarray
    tau: float
    gamma_mhz: float
    window: tuple
    multi_exponential: bool = False
    secondary_tau: Optional[float] = None


def _initial_state(model: SystemModel, initial: str) -> DensityOperator:
    n = model.n
    dim = 2**n
    psi = np.zeros(dim, dtype=complex)
    if initial == "single":
        psi[1 << (n - 1)] = 1.0  # emitter 0 excited
    elif initial in ("plus", "minus"):
        ds = _pair_dressed(model)
        a, b = ds.vec(initial)
        psi[2] = a  # |eg>
        psi[1] = b  # |ge>
    else:
        raise ValueError(f"unknown initial state {initial!r}")
    return DensityOperator.from_state_vector(psi)


def lifetime_trace(model: SystemModel, initial: str,
                   times: Optional[Sequence[float]] = None,
                   fit_window: tuple = (0.1, 3.0)) -> LifetimeTrace:
    """Total emission rate after preparing a single-excitation state, with a
    single-exponential fit over the window [0.1, 3] of the estimated decay
    time (early-time transients from eigenstate impurity are excluded).

    A clearly non-exponential residual triggers a two-exponential fit; both
    time constants are then reported.
    """
    if initial == "single":
        gamma_est = model.gamma0
    else:
        ds = _pair_dressed(model)
        gamma_est = ds.gamma(initial)
    tau_est = 1.0 / (gamma_est * ANGULAR_MHZ_NS)
    if times is None:
        times = np.linspace(0.0, fit_window[1] * 1.2 * tau_est, 240)
    times = np.asarray(times, dtype=float)

    rho0 = _initial_state(model, initial)
    mean = float(np.mean(model.omegas))
    L = build_liouvillian(model, DriveParams(rabi=0.0, laser_freq=mean))
    states = propagate(L, rho0, times)
    rate = np.array([emission_rate(model, r, channels="all") for r in states])

    lo, hi = fit_window[0] * tau_est, fit_window[1] * tau_est
    mask = (times >= lo) & (times <= hi) & (rate > 0)
    if mask.sum() < 4:
        raise ValueError("too few samples inside the fit window")
    t_fit, y_fit = times[mask], np.log(rate[mask])
    slope, intercept = np.polyfit(t_fit, y_fit, 1)
    if slope >= 0:
        raise RuntimeError("emission rate is not decaying")
    tau = -1.0 / slope
    resid = y_fit - (slope * t_fit + intercept)
    multi = bool(np.max(np.abs(resid)) > 0.05)
    secondary = None
    if multi:
        secondary = _second_time_constant(t_fit, rate[mask], tau)
    return LifetimeTrace(times=times, rate=rate, tau=float(tau),
                         gamma_mhz=float(1.0 / (tau * ANGULAR_MHZ_NS)),
                         window=(lo, hi), multi_exponential=multi,
                         secondary_tau=secondary)


def _second_time_constant(t: np.ndarray, y: np.ndarray, tau1: float) -> float:
    """Crude second exponential from the residual of the primary fit."""
    from scipy.optimize import least_squares

    def resid(p):
        a1, a2, g1, g2 = p
        return a1 * np.exp(-t / g1) + a2 * np.exp(-t / g2) - y

    p0 = [y[0], 0.1 * y[0], tau1, 0.3 * tau1]
    sol = least_squares(resid, p0, bounds=([0, 0, 1e-3, 1e-3],
                                           [np.inf, np.inf, 1e4, 1e4]))
    g1, g2 = sol.x[2], sol.x[3]
    return float(g2 if abs(g1 - tau1) < abs(g2 - tau1) else g1)


@dataclass
class SaturationStep:
    """One drive power of a saturation series."""

    drive_amplitude: float
    saturation: float
    trace: SpectrumTrace
    peaks: Optional[PeakSet]
    fit_failed: bool = False


def saturation_parameter(model: SystemModel, rabi: float) -> float:
    """s = 2 Omega^2 / gamma0^2 (the I/I_sat convention used throughout)."""
    return 2.0 * (rabi / model.gamma0) ** 2


def rabi_for_saturation(model: SystemModel, s: float) -> float:
    return model.gamma0 * np.sqrt(s / 2.0)


def saturation_series(model: SystemModel, drive_amplitudes: Sequence[float],
                      scan: Sequence[float],
                      two_photon_min_height: float = 0.003) -> List[SaturationStep]:
    """Spectra with increasing drive power plus per-trace Lorentzian
    extraction.

    Below the two-photon threshold only the two dressed-state peaks are
    fitted; once a center component is detected (or the fitted three-peak
    model is clearly favored) a third Lorentzian at the mean frequency is
    included.
    """
    amps = np.asarray(drive_amplitudes, dtype=float)
    if np.any(np.diff(amps) <= 0):
        raise ValueError("drive amplitudes must be increasing")
    ds = _pair_dressed(model)
    mean = 0.5 * (ds.freq_plus + ds.freq_minus)
    out = []
    for amp in amps:
        trace = excitation_spectrum(model, float(amp), scan)
        smax = trace.signal.max()
        width0 = model.gamma0 * np.sqrt(1.0 + saturation_parameter(model, amp))
        init2 = [smax, ds.freq_minus, width0, smax, ds.freq_plus, width0, 0.0]
        peaks = None
        failed = False
        try:
            fit2 = peak_fit(trace, 2, init=init2)
            center_height = _center_height(trace, mean, fit2)
            if center_height > two_photon_min_height * smax:
                init3 = init2[:-1] + [center_height, mean, width0, 0.0]
                fit3 = peak_fit(trace, 3, init=init3)
                peaks = fit3 if fit3.residual_norm < fit2.residual_norm else fit2
            else:
                peaks = fit2
        except PeakFitError:
            failed = True
        out.append(SaturationStep(drive_amplitude=float(amp),
                                  saturation=saturation_parameter(model, amp),
                                  trace=trace, peaks=peaks, fit_failed=failed))
    return out


def _center_height(trace: SpectrumTrace, mean: float, fit2: PeakSet) -> float:
    """Signal excess over the two-peak model near the two-photon frequency."""
    from .peaks import lorentzian_sum

    params = []
    for p in fit2.peaks:
        params.extend([p.height, p.center, p.fwhm])
    params.append(fit2.baseline)
    model_y = lorentzian_sum(trace.freqs, np.asarray(params), 2)
    sel = np.abs(trace.freqs - mean) < 0.25 * abs(fit2.peaks[1].center
                                                 - fit2.peaks[0].center)
    if not np.any(sel):
        return 0.0
    return float(np.max(trace.signal[sel] - model_y[sel]))


@dataclass
class ResonanceEstimate:
    """Monte Carlo estimate of the random-resonance probability."""

    p_hat: float
    stderr: float
    n_samples: int
    seed: int


def pair_coupling_mhz(rvec: np.ndarray, dipole_moment: float,
                      epsilon_r: float) -> np.ndarray:
    """|J| for aligned dipoles (crystal axis z) at separation vectors rvec
    (..., 3) in nm."""
    r = np.linalg.norm(rvec, axis=-1)
    cos2 = (rvec[..., 2] / np.where(r > 0, r, np.inf)) ** 2
    return np.abs(COUPLING_CONST_MHZ * dipole_moment**2 * (1.0 - 3.0 * cos2)
                  / (epsilon_r * r**3))


def baseline_resonance_probability(n_molecules: int, inhom_width_ghz: float,
                                   crystal_size_nm: float, n_samples: int,
                                   seed: int, threshold_scale: float = 2.0,
                                   dipole_moment: float = 10.0,
                                   epsilon_r: float = 2.5,
                                   batch: int = 200_000) -> ResonanceEstimate:
    """Probability that randomly placed and detuned molecules contain a
    resonant pair.

    Positions are uniform in a cube of the given side; transition frequencies
    are uniform over the inhomogeneous width; dipoles are aligned with the
    crystal axis.  A pair counts as resonant when |Delta| <
    threshold_scale * |J(r)| (the subradiant-extinction condition).
    Deterministic for a fixed seed.
    """
    if n_samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    if n_molecules < 2:
        raise ValueError("need at least two molecules")
    rng = np.random.default_rng(seed)
    width_mhz = inhom_width_ghz * 1e3
    hits = 0
    done = 0
    pairs = [(i, j) for i in range(n_molecules) for j in range(i + 1, n_molecules)]
    while done < n_samples:
        m = min(batch, n_samples - done)
        pos = rng.uniform(0.0, crystal_size_nm, size=(m, n_molecules, 3))
        freq = rng.uniform(0.0, width_mhz, size=(m, n_molecules))
        resonant = np.zeros(m, dtype=bool)
        for i, j in pairs:
            jmag = pair_coupling_mhz(pos[:, i] - pos[:, j], dipole_moment, epsilon_r)
            resonant |= np.abs(freq[:, i] - freq[:, j]) < threshold_scale * jmag
        hits += int(resonant.sum())
        done += m
    p = hits / n_samples
    stderr = float(np.sqrt(max(p * (1.0 - p), 1.0 / n_samples) / n_samples))
    return ResonanceEstimate(p_hat=p, stderr=stderr, n_samples=n_samples, seed=seed)
