"""Physical data model for radiatively coupled two-level emitters.

Defines emitter/medium/system parameter containers, near-field dipole-dipole
couplings, collective decay rates, and the single-excitation dressed states of
an emitter pair.

Unit conventions
----------------
* All user-facing rates and frequencies are ordinary frequencies in MHz.
* Internal dynamics (see :mod:`subrad.lindblad`) are angular, in rad/ns:
  multiply MHz values by ``ANGULAR_MHZ_NS`` = 2*pi*1e-3.
* Positions in nm, dipole moments in Debye, times in ns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# MHz (ordinary frequency) -> rad/ns (angular frequency)
ANGULAR_MHZ_NS = 2.0 * np.pi * 1e-3

# CODATA values
EPSILON_0 = 8.8541878128e-12  # F/m
PLANCK_H = 6.62607015e-34     # J s
DEBYE = 3.33564e-30           # C m

# d^2 / (4 pi eps0 r^3) expressed as an ordinary frequency:
# MHz per (Debye^2 / nm^3)
COUPLING_CONST_MHZ = DEBYE**2 / (4.0 * np.pi * EPSILON_0 * 1e-27) / PLANCK_H / 1e6

MIN_SEPARATION_NM = 0.1


class ModelError(ValueError):
    """Invalid physical model parameters."""


class DegenerateGeometryError(ModelError):
    """Emitter positions too close to evaluate a dipole coupling."""


@dataclass(frozen=True)
class EmitterParams:
    """A single two-level emitter.

    omega: transition frequency (MHz), dipole: unit orientation vector,
    position in nm, dipole_moment in Debye.
    """

    omega: float
    position: tuple = (0.0, 0.0, 0.0)
    dipole: tuple = (0.0, 0.0, 1.0)
    dipole_moment: float = 1.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ModelError(f"transition frequency must be positive, got {self.omega}")
        d = np.asarray(self.dipole, dtype=float)
        if d.shape != (3,):
            raise ModelError("dipole must be a 3-vector")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ModelError("dipole orientation must be a unit vector (|d| = 1 within 1e-12)")
        r = np.asarray(self.position, dtype=float)
        if r.shape != (3,):
            raise ModelError("position must be a 3-vector")
        object.__setattr__(self, "position", tuple(r))
        object.__setattr__(self, "dipole", tuple(d))


@dataclass(frozen=True)
class MediumParams:
    """Host medium: relative permittivity and transition wavelength (nm)."""

    epsilon_r: float = 1.0
    wavelength: float = 785.0

    def __post_init__(self):
        if self.epsilon_r < 1.0:
            raise ModelError(f"epsilon_r must be >= 1, got {self.epsilon_r}")
        if self.wavelength <= 0:
            raise ModelError("wavelength must be positive")


def dipole_coupling(e_i: EmitterParams, e_j: EmitterParams,
                    medium: MediumParams) -> float:
    """Near-field coherent dipole-dipole coupling J_ij in MHz.

    J_ij = (1 / 4 pi eps0 eps_r) * (d_i.d_j - 3 (d_i.r)(d_j.r)) * |d|^2 / r^3

    Symmetric in i <-> j.  Raises DegenerateGeometryError for coincident
    positions (separation <= 0.1 nm).
    """
    ri = np.asarray(e_i.position, float)
    rj = np.asarray(e_j.position, float)
    rvec = ri - rj
    r = np.linalg.norm(rvec)
    if r <= MIN_SEPARATION_NM:
        raise DegenerateGeometryError(
            f"emitter separation {r:.3g} nm below {MIN_SEPARATION_NM} nm")
    rhat = rvec / r
    di = np.asarray(e_i.dipole, float)
    dj = np.asarray(e_j.dipole, float)
    angular = di @ dj - 3.0 * (di @ rhat) * (dj @ rhat)
    scale = COUPLING_CONST_MHZ * e_i.dipole_moment * e_j.dipole_moment
    return scale * angular / (medium.epsilon_r * r**3)


def greens_decay_factor(e_i: EmitterParams, e_j: EmitterParams,
                        medium: MediumParams) -> float:
    """Cross-decay factor Gamma_ij / Gamma_zpl from the free-space Green's
    function imaginary part (retardation-exact), evaluated at kr with
    k = 2 pi sqrt(eps_r) / wavelength.

    Tends to d_i.d_j as kr -> 0.
    """
    ri = np.asarray(e_i.position, float)
    rj = np.asarray(e_j.position, float)
    rvec = ri - rj
    r = np.linalg.norm(rvec)
    if r <= MIN_SEPARATION_NM:
        raise DegenerateGeometryError(
            f"emitter separation {r:.3g} nm below {MIN_SEPARATION_NM} nm")
    rhat = rvec / r
    di = np.asarray(e_i.dipole, float)
    dj = np.asarray(e_j.dipole, float)
    a = di @ dj - (di @ rhat) * (dj @ rhat)
    b = di @ dj - 3.0 * (di @ rhat) * (dj @ rhat)
    kr = 2.0 * np.pi * np.sqrt(medium.epsilon_r) * r / medium.wavelength
    return 1.5 * (a * np.sin(kr) / kr
                  + b * (np.cos(kr) / kr**2 - np.sin(kr) / kr**3))


@dataclass(frozen=True)
class SystemModel:
    """Full emitter-system description.

    gamma0: total excited-state decay linewidth (MHz); alpha: fraction of the
    decay going into the collective zero-phonon channel; dephasing: pure
    dephasing (coherence decay) rate (MHz); J: symmetric coherent coupling
    matrix with zero diagonal (MHz); Gamma_coll: collective-decay matrix of
    the zero-phonon channel, diagonal alpha * gamma0 (MHz).
    """

    emitters: tuple
    gamma0: float
    alpha: float
    dephasing: float = 0.0
    J: np.ndarray = None
    Gamma_coll: np.ndarray = None

    def __post_init__(self):
        n = len(self.emitters)
        if n == 0:
            raise ModelError("need at least one emitter")
        if self.gamma0 <= 0:
            raise ModelError(f"gamma0 must be positive, got {self.gamma0}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ModelError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.dephasing < 0:
            raise ModelError("dephasing rate must be nonnegative")
        J = np.zeros((n, n)) if self.J is None else np.array(self.J, float)
        G = (self.alpha * self.gamma0 * np.eye(n) if self.Gamma_coll is None
             else np.array(self.Gamma_coll, float))
        for name, m in (("J", J), ("Gamma_coll", G)):
            if m.shape != (n, n):
                raise ModelError(f"{name} must be {n}x{n}")
            if not np.allclose(m, m.T, atol=1e-9):
                raise ModelError(f"{name} must be symmetric")
        if np.max(np.abs(np.diag(J))) > 1e-12:
            raise ModelError("J must have zero diagonal")
        gdiag = self.alpha * self.gamma0
        if not np.allclose(np.diag(G), gdiag, atol=1e-9 * max(gdiag, 1.0)):
            raise ModelError("Gamma_coll diagonal must equal alpha * gamma0")
        off = np.abs(G - np.diag(np.diag(G)))
        if np.any(off > gdiag + 1e-9):
            raise ModelError("|Gamma_ij| must not exceed alpha * gamma0")
        if n > 1 and np.min(np.linalg.eigvalsh(G)) < -1e-8 * max(gdiag, 1.0):
            raise ModelError("Gamma_coll must be positive semidefinite")
        J.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "emitters", tuple(self.emitters))
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "Gamma_coll", G)

    @property
    def n(self) -> int:
        return len(self.emitters)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([e.omega for e in self.emitters])

    @classmethod
    def from_geometry(cls, emitters: Sequence[EmitterParams], medium: MediumParams,
                      gamma0: float, alpha: float, dephasing: float = 0.0,
                      retardation: bool = False) -> "SystemModel":
        """Build couplings from emitter positions and dipole orientations.

        With retardation=True the cross-decay uses the full Green's-function
        factor instead of the near-field limit d_i.d_j.
        """
        n = len(emitters)
        J = np.zeros((n, n))
        G = alpha * gamma0 * np.eye(n)
        for i in range(n):
            for j in range(i + 1, n):
                J[i, j] = J[j, i] = dipole_coupling(emitters[i], emitters[j], medium)
                if retardation:
                    fac = greens_decay_factor(emitters[i], emitters[j], medium)
                else:
                    fac = np.dot(emitters[i].dipole, emitters[j].dipole)
                G[i, j] = G[j, i] = alpha * gamma0 * fac
        return cls(emitters=tuple(emitters), gamma0=gamma0, alpha=alpha,
                   dephasing=dephasing, J=J, Gamma_coll=G)

    @classmethod
    def two_emitter(cls, omega1: float, omega2: float, j: float, gamma0: float,
                    alpha: float, dephasing: float = 0.0,
                    gamma12: Optional[float] = None) -> "SystemModel":
        """Two-emitter model with the coupling given directly (no geometry).

        gamma12 defaults to alpha * gamma0 (aligned dipoles, deeply
        sub-wavelength separation).
        """
        if gamma12 is None:
            gamma12 = alpha * gamma0
        ems = (EmitterParams(omega=omega1), EmitterParams(omega=omega2))
        J = np.array([[0.0, j], [j, 0.0]])
        G = np.array([[alpha * gamma0, gamma12], [gamma12, alpha * gamma0]])
        return cls(emitters=ems, gamma0=gamma0, alpha=alpha,
                   dephasing=dephasing, J=J, Gamma_coll=G)

    @classmethod
    def independent(cls, omegas: Sequence[float], gamma0: float, alpha: float,
                    dephasing: float = 0.0) -> "SystemModel":
        """Uncoupled emitters (J = 0, no cross decay)."""
        ems = tuple(EmitterParams(omega=w) for w in omegas)
        n = len(ems)
        return cls(emitters=ems, gamma0=gamma0, alpha=alpha, dephasing=dephasing,
                   J=np.zeros((n, n)), Gamma_coll=alpha * gamma0 * np.eye(n))


def collective_decay(e_i: EmitterParams, e_j: EmitterParams, model: SystemModel,
                     medium: Optional[MediumParams] = None,
                     retardation: bool = False) -> float:
    """Cross decay rate Gamma_ij of the zero-phonon channel in MHz.

    Near-field (default): alpha * gamma0 * d_i.d_j.  With retardation=True
    (requires a medium) the full Green's-function factor is used instead.
    """
    gzpl = model.alpha * model.gamma0
    if retardation:
        if medium is None:
            raise ModelError("retardation-exact decay requires medium parameters")
        return gzpl * greens_decay_factor(e_i, e_j, medium)
    return gzpl * float(np.dot(e_i.dipole, e_j.dipole))


@dataclass(frozen=True)
class DriveParams:
    """Coherent drive: per-emitter Rabi frequencies (MHz) and laser frequency
    (MHz).  A scalar rabi is broadcast to all emitters."""

    rabi: np.ndarray
    laser_freq: float

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.rabi, float))
        if np.any(r < 0):
            raise ModelError("Rabi frequencies must be nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "rabi", r)

    def rabi_for(self, n: int) -> np.ndarray:
        if self.rabi.size == 1:
            return np.full(n, float(self.rabi[0]))
        if self.rabi.size != n:
            raise ModelError(f"expected {n} Rabi frequencies, got {self.rabi.size}")
        return np.asarray(self.rabi)


@dataclass(frozen=True)
class DressedStates:
    """Single-excitation eigenstates of an emitter pair.

    |+> is the higher-energy eigenstate: freq_plus - freq_minus = delta_tilde
    >= 0.  vec_plus / vec_minus are the amplitudes on (|eg>, |ge>).  The
    superradiant state is the one with the larger decay rate.
    """

    freq_plus: float
    freq_minus: float
    theta: float
    delta_tilde: float
    gamma_plus: float
    gamma_minus: float
    vec_plus: tuple
    vec_minus: tuple

    @property
    def superradiant(self) -> str:
        return "plus" if self.gamma_plus >= self.gamma_minus else "minus"

    @property
    def subradiant(self) -> str:
        return "minus" if self.superradiant == "plus" else "plus"

    def freq(self, branch: str) -> float:
        return self.freq_plus if branch == "plus" else self.freq_minus

    def gamma(self, branch: str) -> float:
        return self.gamma_plus if branch == "plus" else self.gamma_minus

    def vec(self, branch: str) -> tuple:
        return self.vec_plus if branch == "plus" else self.vec_minus


def eigenmodes(omega1: float, omega2: float, j: float,
               model: SystemModel) -> DressedStates:
    """Dressed states of two coupled emitters.

    With detuning D = omega1 - omega2 and generalized detuning
    Dt = sqrt(D^2 + 4 J^2), the mixing angle obeys tan(theta) = 2J / (D + Dt)
    and |+> = cos(theta)|eg> + sin(theta)|ge> at frequency
    (omega1 + omega2)/2 + Dt/2.

    Total decay rates: gamma_pm = gamma0 +- sin(2 theta) * Gamma_12.  Only
    the zero-phonon channel is collective; the sideband channels contribute
    (1 - alpha) * gamma0 to each state, so gamma_plus + gamma_minus
    = 2 * gamma0 always.
    """
    delta = omega1 - omega2
    delta_tilde = float(np.hypot(delta, 2.0 * j))
    if j == 0.0 and delta < 0.0:
        theta = np.pi / 2.0
    else:
        theta = float(np.arctan2(2.0 * j, delta + delta_tilde))
    c, s = np.cos(theta), np.sin(theta)
    mean = 0.5 * (omega1 + omega2)
    g12 = float(model.Gamma_coll[0, 1]) if model.n >= 2 else model.alpha * model.gamma0
    s2t = np.sin(2.0 * theta)
    return DressedStates(
        freq_plus=mean + 0.5 * delta_tilde,
        freq_minus=mean - 0.5 * delta_tilde,
        theta=theta,
        delta_tilde=delta_tilde,
        gamma_plus=model.gamma0 + s2t * g12,
        gamma_minus=model.gamma0 - s2t * g12,
        vec_plus=(c, s),
        vec_minus=(-s, c),
    )
