import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from oracles import K_quadrature, M_LAME, sn_landen
from susy_confluent.elliptic import (ELLIPTIC_IDENTITY_TOLERANCES, bloch_multiplier,
                                     elliptic_identity_suite, elliptic_K, jacobi_sn,
                                     lattice_from_modulus, quasimomentum, weierstrass_p,
                                     weierstrass_p_prime, weierstrass_sigma, weierstrass_zeta,
                                     wp_taylor, zeta_taylor)


@pytest.fixture(scope="module")
def lat():
    return lattice_from_modulus(M_LAME)


class TestCompleteIntegral:
    def test_m_zero(self):
        assert elliptic_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)

    @pytest.mark.parametrize("m", [0.1, 0.5, 0.9, 0.999])
    def test_against_references(self, m):
        assert elliptic_K(m) == pytest.approx(special.ellipk(m), rel=1e-13)
        assert elliptic_K(m) == pytest.approx(K_quadrature(m), rel=1e-12)

    def test_derivative_against_quadrature(self):
        # dK/dm = int sin^2 / (2 (1 - m sin^2)^{3/2})
        from scipy import integrate
        m, h = 0.5, 1e-4
        fd = (elliptic_K(m + h) - elliptic_K(m - h)) / (2 * h)
        exact, _ = integrate.quad(
            lambda t: 0.5 * math.sin(t) ** 2 / (1 - m * math.sin(t) ** 2) ** 1.5, 0, math.pi / 2,
            epsabs=1e-14, epsrel=1e-14)
        assert fd == pytest.approx(exact, rel=1e-7)

    @pytest.mark.parametrize("m", [1.0, -0.1, 1.5])
    def test_rejects(self, m):
        with pytest.raises(ValueError):
            elliptic_K(m)


class TestJacobiSn:
    def test_special_values(self):
        assert jacobi_sn(0.0, 0.5) == 0.0
        assert jacobi_sn(elliptic_K(0.5), 0.5) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("x", [0.3, 1.1, 2.7])
    def test_landen_oracle(self, x):
        assert abs(jacobi_sn(x, 0.5) - sn_landen(x, 0.5)) < 1e-12

    def test_scipy_oracle_and_period(self):
        x = np.linspace(-20, 20, 301)
        for m in (0.2, 0.5, 0.9):
            assert np.max(np.abs(jacobi_sn(x, m) - special.ellipj(x, m)[0])) < 1e-12
            K = elliptic_K(m)
            assert np.max(np.abs(jacobi_sn(x + 4 * K, m) - jacobi_sn(x, m))) < 1e-12

    def test_rejects_modulus(self):
        with pytest.raises(ValueError):
            jacobi_sn(0.3, 1.0)


class TestLattice:
    def test_half_periods_and_roots(self, lat):
        assert lat.omega == pytest.approx(elliptic_K(0.5))
        assert lat.omega_prime.real == 0 and lat.omega_prime.imag == pytest.approx(elliptic_K(0.5))
        assert abs(lat.q) < 1
        m = lat.m
        # e1 - e3 = 1 and e2 - e3 = m for omega = K(m)
        assert lat.e1 == pytest.approx((2 - m) / 3, abs=1e-13)
        assert lat.e2 == pytest.approx((2 * m - 1) / 3, abs=1e-13)
        assert lat.e3 == pytest.approx(-(1 + m) / 3, abs=1e-13)

    def test_legendre_relation(self, lat):
        assert lat.eta * lat.omega_prime - lat.eta_prime * lat.omega == pytest.approx(0.5j * math.pi)

    def test_rejects_modulus(self):
        with pytest.raises(ValueError):
            lattice_from_modulus(0.0)


class TestWeierstrass:
    def test_wp_against_jacobi(self, lat):
        x = np.linspace(0.05, 2 * lat.omega - 0.05, 97)
        sn = special.ellipj(x, lat.m)[0]
        ref = lat.e3 + 1.0 / sn ** 2
        assert np.max(np.abs(weierstrass_p(x, lat) - ref) / np.abs(ref)) < 1e-12

    def test_half_period_values(self, lat):
        for w, e in zip(lat.half_periods, (lat.e1, lat.e2, lat.e3)):
            assert abs(weierstrass_p(w, lat) - e) < 1e-12
            assert abs(weierstrass_p_prime(w, lat)) < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 1.5), st.floats(-1.5, 1.5))
    def test_parity(self, a, b):
        lat = lattice_from_modulus(M_LAME)
        z = complex(a, b)
        assert abs(weierstrass_p(-z, lat) - weierstrass_p(z, lat)) < 1e-10 * max(1, abs(weierstrass_p(z, lat)))
        assert abs(weierstrass_zeta(-z, lat) + weierstrass_zeta(z, lat)) < 1e-10 * max(1, abs(weierstrass_zeta(z, lat)))
        assert abs(weierstrass_sigma(-z, lat) + weierstrass_sigma(z, lat)) < 1e-10 * max(1, abs(weierstrass_sigma(z, lat)))

    def test_laurent_limit(self, lat):
        for z in (1e-3, 1e-3j, 1e-3 * (1 + 1j)):
            assert abs(z * z * weierstrass_p(z, lat) - 1) < 1e-6
            assert abs(weierstrass_sigma(z, lat) / z - 1) < 1e-6

    def test_periodicity(self, lat):
        z = np.array([0.3 + 0.2j, 1.1 - 0.4j, 2.0 + 1.0j])
        for T in (2 * lat.omega, 2 * lat.omega_prime):
            p = weierstrass_p(z, lat)
            assert np.max(np.abs(weierstrass_p(z + T, lat) - p) / np.abs(p)) < 1e-11
        dz = weierstrass_zeta(z + 2 * lat.omega, lat) - weierstrass_zeta(z, lat)
        assert np.max(np.abs(dz - 2 * lat.eta)) < 1e-11

    def test_sigma_quasi_periodicity(self, lat):
        z = np.array([0.3 + 0.2j, 0.7 - 0.4j])
        w = lat.omega
        ratio = weierstrass_sigma(z + 2 * w, lat) / weierstrass_sigma(z, lat)
        assert np.max(np.abs(ratio + np.exp(2 * lat.eta * (z + w)))) < 1e-10 * np.max(np.abs(ratio))

    def test_pole_rejected(self, lat):
        with pytest.raises(ValueError):
            weierstrass_p(0.0, lat)
        with pytest.raises(ValueError):
            weierstrass_zeta(2 * lat.omega, lat)

    @pytest.mark.parametrize("frac", [0.4, 0.9])
    def test_derivative_sigma_relation(self, lat, frac):
        x = frac * lat.omega
        lhs = weierstrass_p_prime(x, lat)
        rhs = -weierstrass_sigma(2 * x, lat) / weierstrass_sigma(x, lat) ** 4
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)

    def test_taylor_series(self, lat):
        z, t = 0.6 + 0.3j, 0.05
        p = wp_taylor(z, lat, 14)
        approx = np.polynomial.polynomial.polyval(t, p)
        assert abs(approx - weierstrass_p(z + t, lat)) < 1e-12
        zt = zeta_taylor(z, lat, 14)
        assert abs(np.polynomial.polynomial.polyval(t, zt) - weierstrass_zeta(z + t, lat)) < 1e-12

    def test_large_real_arguments(self, lat):
        # argument reduction keeps figure-scale grids accurate
        x = 40.3
        ref = lat.e3 + 1 / special.ellipj(x, lat.m)[0] ** 2
        assert abs(weierstrass_p(x, lat) - ref) < 1e-10 * abs(ref)


class TestIdentitySuite:
    @pytest.mark.parametrize("m", [0.2, 0.5, 0.8])
    def test_all_identities(self, m):
        dev = elliptic_identity_suite(lattice_from_modulus(m))
        assert set(dev) == set(ELLIPTIC_IDENTITY_TOLERANCES)
        for name, value in dev.items():
            assert value < ELLIPTIC_IDENTITY_TOLERANCES[name], name

    def test_lame_identity_dense(self, lat):
        x = np.linspace(0, 4 * lat.omega, 2001)
        lhs = lat.m * jacobi_sn(x, lat.m) ** 2
        rhs = weierstrass_p(x + lat.omega_prime, lat) + (lat.m + 1) / 3
        assert np.max(np.abs(lhs - rhs)) < 1e-10


class TestQuasimomentum:
    def test_multiplier_matches_kappa(self, lat):
        delta = 0.7
        assert abs(bloch_multiplier(delta, lat) - np.exp(1j * quasimomentum(delta, lat))) < 1e-12

    def test_lower_gap_is_decaying(self, lat):
        kappa = quasimomentum(0.7, lat)
        assert abs(kappa.real) < 1e-12 and kappa.imag != 0
