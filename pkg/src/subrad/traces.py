"""Sampled observable curves and peak-fit results."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass
class SpectrumTrace:
    """Detected scattering rate vs. laser detuning.

    freqs: strictly increasing axis (MHz); signal: photons/s, or max-1
    normalized when the normalized flag is set; meta: model/drive snapshot.
    """

    freqs: np.ndarray
    signal: np.ndarray
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.freqs.shape != self.signal.shape:
            raise ValueError("freqs and signal must have equal length")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("frequency axis must be strictly increasing")
        if np.any(self.signal < -1e-12 * max(np.max(np.abs(self.signal)), 1.0)):
            raise ValueError("signal must be nonnegative")
        self.signal = np.clip(self.signal, 0.0, None)


@dataclass
class CorrelationTrace:
    """Normalized second-order correlation g2 vs. delay (ns)."""

    taus: np.ndarray
    g2: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.taus.shape != self.g2.shape:
            raise ValueError("taus and g2 must have equal length")
        if np.any(self.g2 < -1e-9):
            raise ValueError("g2 must be nonnegative")
        self.g2 = np.clip(self.g2, 0.0, None)


@dataclass
class Peak:
    """One Lorentzian component: height A, center (MHz), FWHM (MHz)."""

    center: float
    height: float
    fwhm: float


@dataclass
class PeakSet:
    """Multi-Lorentzian fit result."""

    peaks: List[Peak]
    baseline: float
    covariance: Optional[np.ndarray]
    residual_norm: float
    converged: bool = True

    def __post_init__(self):
        for p in self.peaks:
            if p.fwhm <= 0:
                raise ValueError("fitted FWHM must be positive")

    def sorted_by_center(self) -> List[Peak]:
        return sorted(self.peaks, key=lambda p: p.center)

    def nearest(self, freq: float) -> Peak:
        return min(self.peaks, key=lambda p: abs(p.center - freq))
