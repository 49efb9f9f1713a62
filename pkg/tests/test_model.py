import numpy as np
import pytest

from subrad import (COUPLING_CONST_MHZ, DegenerateGeometryError, EmitterParams,
                    MediumParams, ModelError, SystemModel, collective_decay,
                    dipole_coupling, eigenmodes)

from oracles import diagonalize_pair, greens_cross_decay


def em(omega=100000.0, pos=(0, 0, 0), dip=(0, 0, 1), d=1.0):
    return EmitterParams(omega=omega, position=pos, dipole=dip, dipole_moment=d)


MEDIUM = MediumParams(epsilon_r=2.5, wavelength=785.0)


class TestEmitterParams:
    def test_rejects_nonunit_dipole(self):
        with pytest.raises(ModelError):
            EmitterParams(omega=1.0, dipole=(0, 0, 1.001))

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ModelError):
            EmitterParams(omega=0.0)


class TestDipoleCoupling:
    def test_h_aggregate_positive(self):
        # parallel dipoles perpendicular to the separation
        e1 = em(pos=(0, 0, 0), dip=(0, 0, 1))
        e2 = em(pos=(10, 0, 0), dip=(0, 0, 1))
        j = dipole_coupling(e1, e2, MEDIUM)
        expected = COUPLING_CONST_MHZ / (2.5 * 10.0**3)
        assert j > 0
        assert j == pytest.approx(expected, rel=1e-12)

    def test_j_aggregate_minus_two(self):
        # dipoles along the separation: angular factor 1 - 3 = -2
        e1 = em(pos=(0, 0, 0), dip=(0, 0, 1))
        e2 = em(pos=(0, 0, 10), dip=(0, 0, 1))
        j = dipole_coupling(e1, e2, MEDIUM)
        expected = -2.0 * COUPLING_CONST_MHZ / (2.5 * 10.0**3)
        assert j == pytest.approx(expected, rel=1e-12)

    def test_magic_angle_zero(self):
        c = 1.0 / np.sqrt(3.0)  # cos^2 = 1/3
        s = np.sqrt(1.0 - c**2)
        e1 = em(pos=(0, 0, 0), dip=(s, 0, c))
        e2 = em(pos=(0, 0, 10), dip=(s, 0, c))
        assert abs(dipole_coupling(e1, e2, MEDIUM)) < 1e-9

    def test_symmetric(self):
        e1 = em(pos=(1, 2, 3), dip=(0, 1, 0))
        e2 = em(pos=(4, -1, 7), dip=(0, 0, 1))
        assert dipole_coupling(e1, e2, MEDIUM) == dipole_coupling(e2, e1, MEDIUM)

    def test_inverse_cube_scaling(self):
        e1 = em(pos=(0, 0, 0))
        near = em(pos=(8, 0, 0))
        far = em(pos=(16, 0, 0))
        j1 = dipole_coupling(e1, near, MEDIUM)
        j2 = dipole_coupling(e1, far, MEDIUM)
        assert j2 == pytest.approx(j1 / 8.0, rel=1e-12)

    def test_coincident_positions_rejected(self):
        e1 = em(pos=(0, 0, 0))
        e2 = em(pos=(0.05, 0, 0))
        with pytest.raises(DegenerateGeometryError):
            dipole_coupling(e1, e2, MEDIUM)


class TestCollectiveDecay:
    def test_aligned(self):
        m = SystemModel.two_emitter(100000, 100000, 10.0, 33.0, 0.11)
        e1 = em(pos=(0, 0, 0))
        e2 = em(pos=(10, 0, 0))
        assert collective_decay(e1, e2, m) == pytest.approx(0.11 * 33.0)

    def test_orthogonal(self):
        m = SystemModel.two_emitter(100000, 100000, 10.0, 33.0, 0.11)
        e1 = em(pos=(0, 0, 0), dip=(0, 0, 1))
        e2 = em(pos=(10, 0, 0), dip=(0, 1, 0))
        assert collective_decay(e1, e2, m) == 0.0

    def test_against_greens_function(self):
        # near-field value 3.63 MHz vs. retardation-exact at r = 10 nm
        m = SystemModel.two_emitter(100000, 100000, 10.0, 33.0, 0.11)
        e1 = em(pos=(0, 0, 0))
        e2 = em(pos=(10, 0, 0))
        near = collective_decay(e1, e2, m)
        assert near == pytest.approx(3.63, abs=1e-12)
        exact = greens_cross_decay(0.11 * 33.0, 10.0, 785.0, 2.5,
                                   (0, 0, 1), (0, 0, 1), (1, 0, 0))
        assert near == pytest.approx(exact, rel=5e-3)

    def test_retardation_flag_matches_oracle(self):
        m = SystemModel.two_emitter(100000, 100000, 10.0, 33.0, 0.11)
        e1 = em(pos=(0, 0, 0))
        e2 = em(pos=(0, 30, 0))
        got = collective_decay(e1, e2, m, medium=MEDIUM, retardation=True)
        exact = greens_cross_decay(0.11 * 33.0, 30.0, 785.0, 2.5,
                                   (0, 0, 1), (0, 0, 1), (0, 1, 0))
        assert got == pytest.approx(exact, rel=1e-12)


class TestSystemModelValidation:
    def test_asymmetric_j_rejected(self):
        with pytest.raises(ModelError):
            SystemModel(emitters=(em(), em(omega=100010)), gamma0=33.0, alpha=0.3,
                        J=np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_cross_decay_cap(self):
        with pytest.raises(ModelError):
            SystemModel.two_emitter(100000, 100000, 0.0, 33.0, 0.11,
                                    gamma12=0.2 * 33.0)

    def test_alpha_bounds(self):
        with pytest.raises(ModelError):
            SystemModel.two_emitter(100000, 100000, 0.0, 33.0, 1.2)


class TestEigenmodes:
    def test_resonant_j_aggregate(self):
        # Delta = 0, J = -116 MHz: splitting 232 MHz, |theta| = pi/4,
        # states (|eg> +- |ge>)/sqrt(2)
        m = SystemModel.two_emitter(100000, 100000, -116.0, 37.0, 0.135)
        ds = eigenmodes(100000, 100000, -116.0, m)
        assert ds.freq_plus - ds.freq_minus == pytest.approx(232.0, rel=1e-12)
        assert abs(ds.theta) == pytest.approx(np.pi / 4, rel=1e-12)
        for v in (ds.vec_plus, ds.vec_minus):
            assert abs(v[0] ** 2 - 0.5) < 1e-12
            assert abs(v[1] ** 2 - 0.5) < 1e-12
        # J < 0: the symmetric (superradiant) state lies lower in energy
        assert ds.superradiant == "minus"

    def test_decoupled_limit(self):
        m = SystemModel.independent([100010.0, 100000.0], 33.0, 0.3)
        ds = eigenmodes(100010.0, 100000.0, 0.0, m)
        assert ds.theta == 0.0
        assert ds.vec_plus == (1.0, 0.0)
        assert ds.gamma_plus == ds.gamma_minus == 33.0

    def test_decoupled_negative_detuning(self):
        m = SystemModel.independent([100000.0, 100010.0], 33.0, 0.3)
        ds = eigenmodes(100000.0, 100010.0, 0.0, m)
        # |+> must be the higher-energy bare state |ge>
        assert ds.freq_plus == pytest.approx(100010.0)
        assert abs(ds.vec_plus[1]) == pytest.approx(1.0)

    def test_detuned_pair_values(self):
        m = SystemModel.two_emitter(101300.0, 98700.0, 1020.0, 33.0, 0.11)
        ds = eigenmodes(101300.0, 98700.0, 1020.0, m)
        assert ds.delta_tilde == pytest.approx(3304.7844105, abs=1e-6)
        assert np.sin(2 * ds.theta) == pytest.approx(0.6172868625, abs=1e-9)

    def test_detuned_pair_lifetimes(self):
        # derived pair {4.52, 5.18} ns; paper quotes {4.3, 5.2} ns
        m = SystemModel.two_emitter(101300.0, 98700.0, 1020.0, 33.0, 0.11)
        ds = eigenmodes(101300.0, 98700.0, 1020.0, m)
        taus = sorted(1e3 / (2 * np.pi * g)
                      for g in (ds.gamma_plus, ds.gamma_minus))
        assert taus[0] == pytest.approx(4.5162, abs=2e-4)
        assert taus[1] == pytest.approx(5.1742, abs=2e-4)

    def test_splitting_identity_random(self):
        rng = np.random.default_rng(11)
        m = SystemModel.two_emitter(100000, 100000, 1.0, 33.0, 0.3)
        for _ in range(1000):
            delta = rng.uniform(-5000, 5000)
            j = rng.uniform(-2000, 2000)
            ds = eigenmodes(100000 + delta / 2, 100000 - delta / 2, j, m)
            lhs = (ds.freq_plus - ds.freq_minus) ** 2
            rhs = delta**2 + 4 * j**2
            assert lhs == pytest.approx(rhs, rel=1e-9)
            assert ds.gamma_plus + ds.gamma_minus == pytest.approx(66.0, rel=1e-9)

    def test_eigenvectors_match_numerical_diagonalization(self):
        rng = np.random.default_rng(5)
        m = SystemModel.two_emitter(100000, 100000, 1.0, 33.0, 0.3)
        for _ in range(200):
            delta = rng.uniform(-5000, 5000)
            j = rng.uniform(-2000, 2000)
            w1, w2 = 100000 + delta / 2, 100000 - delta / 2
            ds = eigenmodes(w1, w2, j, m)
            evals, evecs = diagonalize_pair(w1, w2, j)
            assert ds.freq_minus == pytest.approx(evals[0], abs=1e-7)
            assert ds.freq_plus == pytest.approx(evals[1], abs=1e-7)
            overlap_p = abs(np.dot(ds.vec_plus, evecs[:, 1]))
            overlap_m = abs(np.dot(ds.vec_minus, evecs[:, 0]))
            assert overlap_p >= 1 - 1e-10
            assert overlap_m >= 1 - 1e-10
