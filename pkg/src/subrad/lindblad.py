"""Dense Lindblad generator, steady states, propagation, and two-time
correlations for systems of driven two-level emitters with vibrational
branching.

The generator is built in the rotating frame of the drive laser.  The decay
of each emitter splits into a collective zero-phonon channel (rate matrix
Gamma_coll, subject to interference between emitters) and an independent
sideband channel of rate (1 - alpha) * gamma0 per emitter; pure dephasing
adds a coherence-decay rate gamma_phi to every off-diagonal element.

Density operators are vectorized row-major: vec(A rho B) =
(A kron B^T) vec(rho).  All internal rates are angular (rad/ns); see
:mod:`subrad.model` for the unit conventions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, null_space

from .model import ANGULAR_MHZ_NS, DriveParams, ModelError, SystemModel

MAX_EMITTERS = 10

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


class CapacityError(ValueError):
    """System too large for the dense representation."""


class SteadyStateError(RuntimeError):
    """Steady-state extraction failed."""


class NonUniqueSteadyStateError(SteadyStateError):
    """The generator has a degenerate null space."""


class IntegrationError(RuntimeError):
    """Time propagation failed."""


@lru_cache(maxsize=None)
def lowering_ops(n: int):
    """Per-emitter lowering operators on the 2^n product space.

    Basis ordering is the tensor product of per-emitter {|g>, |e>} with
    emitter 0 as the leftmost (most significant) factor.
    """
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    ops = []
    for i in range(n):
        m = np.array([[1.0]], dtype=complex)
        for k in range(n):
            m = np.kron(m, sm if k == i else eye2)
        m.setflags(write=False)
        ops.append(m)
    return tuple(ops)


def product_state_index(excited: Sequence[int]) -> int:
    """Index of the product basis state with the given emitters excited."""
    idx = 0
    for i in excited:
        idx |= 1 << i
    # emitter 0 is the most significant bit
    return idx


@dataclass
class DensityOperator:
    """Dense density matrix over the 2^N product space."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.matrix.shape[0]
        if self.matrix.shape != (d, d) or d & (d - 1):
            raise ValueError("density matrix must be square with 2^N dimension")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_emitters(self) -> int:
        return int(np.log2(self.dim))

    @classmethod
    def ground(cls, n: int) -> "DensityOperator":
        d = 2**n
        m = np.zeros((d, d), dtype=complex)
        m[0, 0] = 1.0
        return cls(m)

    @classmethod
    def from_state_vector(cls, psi: np.ndarray) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def validate(self) -> None:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian (deviation {herm:.3g})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if evals.min() < -POSITIVITY_TOL:
            raise ValueError(f"density matrix not positive (min eigenvalue {evals.min():.3g})")

    def population(self, op: np.ndarray) -> float:
        """Expectation value Tr[op rho] (real part)."""
        return float(np.trace(op @ self.matrix).real)


@dataclass
class Liouvillian:
    """Dense Lindblad generator acting on row-major vectorized density
    operators, together with the model/drive it was built from."""

    generator: np.ndarray
    frame_freq: float
    model: SystemModel
    drive: DriveParams
    _eig: Optional[tuple] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension 2^N."""
        return int(np.sqrt(self.generator.shape[0]))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.generator @ rho.reshape(-1)).reshape(d, d)

    def eig(self):
        """Cached eigendecomposition (w, V, Vinv) of the generator."""
        if self._eig is None:
            w, v = np.linalg.eig(self.generator)
            vinv = np.linalg.inv(v)
            recon = np.max(np.abs((v * w) @ vinv - self.generator))
            scale = max(np.max(np.abs(self.generator)), 1.0)
            ok = recon < 1e-9 * scale
            self._eig = (w, v, vinv, ok)
        return self._eig


def _dissipator(c_left: np.ndarray, c_right: np.ndarray) -> np.ndarray:
    """Superoperator c_right . c_left^dag - (1/2){c_left^dag c_right, .}
    in row-major vectorization (rate factored out)."""
    d = c_left.shape[0]
    eye = np.eye(d, dtype=complex)
    anti = c_left.conj().T @ c_right
    return (np.kron(c_right, c_left.conj())
            - 0.5 * np.kron(anti, eye)
            - 0.5 * np.kron(eye, anti.T))


def build_liouvillian(model: SystemModel, drive: DriveParams) -> Liouvillian:
    """Lindblad generator in the rotating frame of the drive.

    Coherent part: detunings (omega_i - omega_L) on sigma^dag sigma, J_ij
    excitation exchange, and the symmetric drive (Omega_i/2)(sigma_i + h.c.).
    Dissipators: collective zero-phonon channel with rate matrix Gamma_coll,
    independent sideband channels of rate (1 - alpha) * gamma0, and pure
    dephasing with coherence-decay rate gamma_phi per emitter.
    """
    n = model.n
    if n > MAX_EMITTERS:
        raise CapacityError(f"dense representation limited to {MAX_EMITTERS} emitters")
    if n > 1 and np.min(np.linalg.eigvalsh(model.Gamma_coll)) < -1e-8 * model.gamma0:
        raise ModelError("collective decay matrix must be positive semidefinite")
    sm = lowering_ops(n)
    num = [s.conj().T @ s for s in sm]
    d = 2**n
    rabi = drive.rabi_for(n)

    h = np.zeros((d, d), dtype=complex)
    for i in range(n):
        delta = (model.emitters[i].omega - drive.laser_freq) * ANGULAR_MHZ_NS
        h += delta * num[i]
        h += 0.5 * rabi[i] * ANGULAR_MHZ_NS * (sm[i] + sm[i].conj().T)
    for i in range(n):
        for jx in range(n):
            if i != jx:
                h += model.J[i, jx] * ANGULAR_MHZ_NS * sm[i].conj().T @ sm[jx]

    eye = np.eye(d, dtype=complex)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))

    # collective zero-phonon channel
    for i in range(n):
        for jx in range(n):
            g = model.Gamma_coll[i, jx] * ANGULAR_MHZ_NS
            if g != 0.0:
                gen += g * _dissipator(sm[i], sm[jx])
    # independent sideband channels
    g_side = (1.0 - model.alpha) * model.gamma0 * ANGULAR_MHZ_NS
    for i in range(n):
        gen += g_side * _dissipator(sm[i], sm[i])
    # pure dephasing: coherence-decay rate gamma_phi per emitter requires a
    # Lindblad rate 2*gamma_phi on the sigma^dag sigma channel
    g_phi = 2.0 * model.dephasing * ANGULAR_MHZ_NS
    if g_phi != 0.0:
        for i in range(n):
            gen += g_phi * _dissipator(num[i], num[i])

    return Liouvillian(generator=gen, frame_freq=drive.laser_freq,
                       model=model, drive=drive)


def steady_state(L: Liouvillian) -> DensityOperator:
    """Unique steady state via null-space extraction of the generator.

    Raises NonUniqueSteadyStateError when the null space has dimension > 1
    and SteadyStateError when the residual exceeds tolerance.
    """
    ns = null_space(L.generator, rcond=1e-8)
    if ns.shape[1] == 0:
        ns = null_space(L.generator, rcond=1e-6)
    if ns.shape[1] == 0:
        raise SteadyStateError("no null vector found")
    if ns.shape[1] > 1:
        raise NonUniqueSteadyStateError(
            f"steady state not unique (null-space dimension {ns.shape[1]})")
    d = L.dim
    rho = ns[:, 0].reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise SteadyStateError("null vector is traceless; not a physical state")
    rho = rho / tr
    resid = np.max(np.abs(L.apply(rho)))
    if resid > 1e-10:
        raise SteadyStateError(f"steady-state residual {resid:.3g} above 1e-10")
    return DensityOperator(rho)


def propagate(L: Liouvillian, rho0: DensityOperator, times: Sequence[float],
              method: str = "eig") -> List[DensityOperator]:
    """Evolve rho(t) = exp(L t) rho0 at the requested times (ns).

    method: 'eig' (spectral decomposition, default), 'expm'
    (scaling-and-squaring per interval), or 'ode' (adaptive RK integration).
    """
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
        raise ValueError("times must be sorted and nonnegative")
    d = L.dim
    vec0 = rho0.matrix.reshape(-1)
    if method == "eig":
        w, v, vinv, ok = L.eig()
        if ok:
            coeffs = vinv @ vec0
            vecs = (np.exp(np.outer(times, w)) * coeffs) @ v.T
        else:
            method = "expm"
    if method == "expm":
        vecs = np.empty((times.size, d * d), dtype=complex)
        cur = vec0
        prev_t = 0.0
        for k, t in enumerate(times):
            cur = expm(L.generator * (t - prev_t)) @ cur
            prev_t = t
            vecs[k] = cur
    elif method == "ode":
        def rhs(_t, y):
            return L.generator @ y
        t_end = float(times[-1]) if times.size else 0.0
        sol = solve_ivp(rhs, (0.0, t_end), vec0, t_eval=times,
                        method="DOP853", rtol=1e-10, atol=1e-12)
        if not sol.success:
            raise IntegrationError(f"ODE integration failed: {sol.message}")
        vecs = sol.y.T
    elif method != "eig":
        raise ValueError(f"unknown propagation method {method!r}")

    out = []
    for k in range(times.size):
        m = vecs[k].reshape(d, d)
        out.append(DensityOperator(0.5 * (m + m.conj().T)))
    return out


def regression_correlation(L: Liouvillian, rho_ss: DensityOperator,
                           collapse_ops: Sequence[np.ndarray],
                           measure_ops: Sequence[np.ndarray],
                           taus: Sequence[float]) -> np.ndarray:
    """Two-time intensity correlation via the quantum regression theorem.

    G2(tau) = sum_{i,j} Tr[ m_j exp(L tau) (c_i rho_ss c_i^dag) ] for collapse
    operators c_i and intensity operators m_j.  Returns the raw (unnormalized)
    values; clipped negatives beyond numerical tolerance raise.
    """
    d = L.dim
    for op in list(collapse_ops) + list(measure_ops):
        if op.shape != (d, d):
            raise ValueError(f"operator shape {op.shape} does not match dimension {d}")
    resid = np.max(np.abs(L.apply(rho_ss.matrix)))
    if resid > 1e-6:
        raise ValueError(f"rho_ss is not a steady state of L (residual {resid:.3g})")
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise ValueError("delays must be nonnegative")
    # seed state after one detection event, summed over collapse channels
    seed = np.zeros((d, d), dtype=complex)
    for c in collapse_ops:
        seed += c @ rho_ss.matrix @ c.conj().T
    w, v, vinv, ok = L.eig()
    m_sum = np.zeros((d, d), dtype=complex)
    for m in measure_ops:
        m_sum += m
    if ok:
        coeffs = vinv @ seed.reshape(-1)
        # Tr[m rho(tau)] = m_row . vec(rho(tau)) with row-major vec
        m_row = m_sum.T.reshape(-1)
        proj = m_row @ v
        vals = (proj * coeffs) @ np.exp(np.outer(w, taus))
        g2 = vals.real
    else:
        order = np.argsort(taus)
        evolved = propagate(L, DensityOperator(seed), taus[order], method="expm")
        g2 = np.empty(taus.size)
        for k, rho in zip(order, evolved):
            g2[k] = np.trace(m_sum @ rho.matrix).real
    tol = 1e-10 * max(np.max(np.abs(g2)), 1.0)
    if np.any(g2 < -tol):
        raise RuntimeError(f"negative correlation beyond tolerance (min {g2.min():.3g})")
    return np.clip(g2, 0.0, None)


def emission_rate(model: SystemModel, rho: DensityOperator,
                  channels: str = "all") -> float:
    """Total photon emission rate (1/ns, angular bookkeeping) from a state.

    channels: 'sideband' (detected signal), 'zpl' (collective channel,
    including interference), or 'all'.
    """
    n = model.n
    sm = lowering_ops(n)
    rate = 0.0
    if channels in ("sideband", "all"):
        g = (1.0 - model.alpha) * model.gamma0 * ANGULAR_MHZ_NS
        for i in range(n):
            rate += g * rho.population(sm[i].conj().T @ sm[i])
    if channels in ("zpl", "all"):
        for i in range(n):
            for j in range(n):
                g = model.Gamma_coll[i, j] * ANGULAR_MHZ_NS
                if g != 0.0:
                    rate += g * np.trace(sm[i].conj().T @ sm[j] @ rho.matrix).real
    return float(rate)
