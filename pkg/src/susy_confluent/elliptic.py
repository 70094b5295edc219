"""Elliptic functions on the rectangular lattice of the Lamé modulus.

Half-periods are ``omega = K(m)`` (real) and ``omega_prime = i K(1 - m)``.
The Weierstrass functions are built from the Jacobi theta function
``theta_1`` in the nome ``q = exp(i pi omega_prime / omega)``; arguments are
folded into the fundamental cell first and the quasi-periodicity factors of
``sigma`` and ``zeta`` are applied analytically.

With this normalisation ``e1 - e3 = 1`` and ``m sn^2(x|m) = wp(x + omega') + (m + 1)/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import series

_SERIES_FLOOR = 1e-18
POLE_DISTANCE = 1e-8


def _agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention."""
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic_K needs 0 <= m < 1, got {m}")
    return math.pi / (2.0 * _agm(1.0, math.sqrt(1.0 - m)))


def jacobi_sn(x, m: float):
    """sn(x|m) for real x by the arithmetic-geometric mean scheme (DLMF 22.20(ii))."""
    m = float(m)
    if not 0.0 < m < 1.0:
        raise ValueError(f"jacobi_sn needs 0 < m < 1, got {m}")
    x = np.asarray(x, dtype=float)
    a = [1.0]
    c = [math.sqrt(m)]
    b = math.sqrt(1.0 - m)
    while abs(c[-1]) > 1e-17 and len(a) < 40:
        an = 0.5 * (a[-1] + b)
        c.append(0.5 * (a[-1] - b))
        b = math.sqrt(a[-1] * b)
        a.append(an)
    n = len(a) - 1
    phi = (2.0 ** n) * a[-1] * x
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] / a[j] * np.sin(phi)))
    out = np.sin(phi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Lattice:
    """Rectangular period lattice attached to the modulus ``m``."""

    m: float
    omega: float
    omega_prime: complex
    q: complex
    eta: float
    eta_prime: complex
    e1: float
    e2: float
    e3: float
    g2: float
    g3: float
    theta1_prime0: float
    n_terms: int

    @property
    def tau(self) -> complex:
        return self.omega_prime / self.omega

    @property
    def half_periods(self):
        return (self.omega, self.omega + self.omega_prime, self.omega_prime)


def _theta_amplitudes(q: complex, n_terms: int) -> np.ndarray:
    n = np.arange(n_terms)
    tau_pi = np.log(q) if q != 0 else -np.inf
    return 2.0 * (-1.0) ** n * np.exp(tau_pi * (n + 0.5) ** 2)


def _theta1_jet(v, amplitudes: np.ndarray, nder: int) -> np.ndarray:
    """theta_1 and its first ``nder`` v-derivatives, shape (nder + 1, *v.shape)."""
    v = np.asarray(v, dtype=complex)
    out = np.zeros((nder + 1,) + v.shape, dtype=complex)
    for n, amp in enumerate(amplitudes):
        k = 2 * n + 1
        s = np.sin(k * v)
        c = np.cos(k * v)
        cycle = (s, c, -s, -c)
        scale = amp
        for j in range(nder + 1):
            out[j] += scale * cycle[j % 4]
            scale = scale * k
    return out


def lattice_from_modulus(m: float) -> Lattice:
    m = float(m)
    if not 0.0 < m < 1.0:
        raise ValueError(f"Lamé modulus must lie in (0, 1), got {m}")
    omega = elliptic_K(m)
    omega_prime = 1j * elliptic_K(1.0 - m)
    tau = omega_prime / omega
    q = complex(np.exp(1j * np.pi * tau))
    # enough terms for derivatives up to order ~12 anywhere in the reduced cell
    im_tau = tau.imag
    n_terms = 1
    while 2.0 * math.exp(-math.pi * im_tau * (n_terms ** 2 - 0.25)) * (2 * n_terms + 1) ** 12 > _SERIES_FLOOR:
        n_terms += 1
    n_terms += 1
    amps = _theta_amplitudes(q, n_terms)
    jet0 = _theta1_jet(0.0, amps, 3)
    t1p = jet0[1].real
    t1ppp = jet0[3].real
    eta = -(math.pi ** 2) * t1ppp / (12.0 * omega * t1p)
    eta_prime = (eta * omega_prime - 0.5j * math.pi) / omega
    n = np.arange(n_terms)
    qn2 = np.exp(np.log(q) * n[1:] ** 2).real
    th2 = _theta_amplitudes(q, n_terms).real @ ((-1.0) ** n)
    th3 = 1.0 + 2.0 * qn2.sum()
    th4 = 1.0 + 2.0 * (((-1.0) ** n[1:]) * qn2).sum()
    scale = (math.pi / (2.0 * omega)) ** 2
    e1 = scale * (th3 ** 4 + th4 ** 4) / 3.0
    e2 = scale * (th2 ** 4 - th4 ** 4) / 3.0
    e3 = -scale * (th2 ** 4 + th3 ** 4) / 3.0
    g2 = 2.0 * (e1 ** 2 + e2 ** 2 + e3 ** 2)
    g3 = 4.0 * e1 * e2 * e3
    return Lattice(m, omega, omega_prime, q, eta, eta_prime, e1, e2, e3, g2, g3, t1p, n_terms)


def _reduce(z, lat: Lattice):
    z = np.asarray(z, dtype=complex)
    a = np.rint(z.real / (2.0 * lat.omega))
    b = np.rint(z.imag / (2.0 * lat.omega_prime.imag))
    z0 = z - 2.0 * a * lat.omega - 2.0 * b * lat.omega_prime
    return z0, a, b


def _jet_at(z0, lat: Lattice, nder: int):
    amps = _theta_amplitudes(lat.q, lat.n_terms)
    v0 = np.pi * z0 / (2.0 * lat.omega)
    return _theta1_jet(v0, amps, nder)


def _check_pole(z0):
    if np.any(np.abs(z0) < POLE_DISTANCE):
        raise ValueError("argument lies on a lattice point (pole)")


def weierstrass_sigma(z, lat: Lattice):
    coef, log_scale = sigma_series(z, lat, 0)
    out = coef[0] * np.exp(log_scale)
    return out if np.ndim(out) else complex(out)


def sigma_series(z, lat: Lattice, order: int):
    """Taylor coefficients of sigma about ``z`` with a separate log-scale.

    Returns ``(coef, log_scale)`` with ``sigma(z + t) = exp(log_scale) *
    sum_j coef[j] t^j``; keeping the quasi-periodic exponential apart lets
    callers form ratios of sigma at far-apart arguments without overflow.
    """
    z0, a, b = _reduce(z, lat)
    k = np.pi / (2.0 * lat.omega)
    jet = _jet_at(z0, lat, order)
    theta = np.empty_like(jet)
    for j in range(order + 1):
        theta[j] = jet[j] * k ** j / math.factorial(j)
    big_h = a * lat.eta + b * lat.eta_prime
    big_omega = a * lat.omega + b * lat.omega_prime
    sign = (-1.0) ** ((a + b + a * b) % 2)
    expo = np.zeros((min(order, 2) + 1,) + z0.shape, dtype=complex)
    expo[0] = lat.eta * z0 ** 2 / (2.0 * lat.omega)
    if order >= 1:
        expo[1] = lat.eta * z0 / lat.omega + 2.0 * big_h
    if order >= 2:
        expo[2] = lat.eta / (2.0 * lat.omega)
    gauss = series.exp(expo, order) if order else np.exp(expo)
    coef = series.mul(gauss, theta, order) * (sign * 2.0 * lat.omega / (np.pi * lat.theta1_prime0))
    log_scale = 2.0 * big_h * (z0 + big_omega)
    return coef, log_scale


def weierstrass_zeta(z, lat: Lattice):
    z0, a, b = _reduce(z, lat)
    _check_pole(z0)
    jet = _jet_at(z0, lat, 1)
    k = np.pi / (2.0 * lat.omega)
    out = lat.eta * z0 / lat.omega + k * jet[1] / jet[0] + 2.0 * (a * lat.eta + b * lat.eta_prime)
    return out if np.ndim(out) else complex(out)


def _wp_and_prime(z, lat: Lattice):
    z0, _, _ = _reduce(z, lat)
    _check_pole(z0)
    jet = _jet_at(z0, lat, 3)
    k = np.pi / (2.0 * lat.omega)
    r1 = jet[1] / jet[0]
    r2 = jet[2] / jet[0]
    r3 = jet[3] / jet[0]
    wp = -lat.eta / lat.omega - k ** 2 * (r2 - r1 * r1)
    wpp = -k ** 3 * (r3 - 3.0 * r2 * r1 + 2.0 * r1 ** 3)
    return wp, wpp


def weierstrass_p(z, lat: Lattice):
    wp, _ = _wp_and_prime(z, lat)
    return wp if np.ndim(wp) else complex(wp)


def weierstrass_p_prime(z, lat: Lattice):
    _, wpp = _wp_and_prime(z, lat)
    return wpp if np.ndim(wpp) else complex(wpp)


def wp_taylor(z, lat: Lattice, order: int) -> np.ndarray:
    """Taylor coefficients of wp about ``z`` from wp'' = 6 wp^2 - g2/2."""
    wp, wpp = _wp_and_prime(z, lat)
    wp = np.asarray(wp)
    out = np.zeros((max(order, 1) + 1,) + wp.shape, dtype=complex)
    out[0] = wp
    out[1] = wpp
    for n in range(0, order - 1):
        acc = 6.0 * sum(out[i] * out[n - i] for i in range(n + 1))
        if n == 0:
            acc = acc - 0.5 * lat.g2
        out[n + 2] = acc / ((n + 2) * (n + 1))
    return out[: order + 1]


def zeta_taylor(z, lat: Lattice, order: int) -> np.ndarray:
    """Taylor coefficients of zeta about ``z`` (zeta' = -wp)."""
    p = wp_taylor(z, lat, max(order - 1, 0))
    z0 = np.asarray(weierstrass_zeta(z, lat))
    out = np.zeros((order + 1,) + z0.shape, dtype=complex)
    out[0] = z0
    for n in range(1, order + 1):
        out[n] = -p[n - 1] / n
    return out


def quasimomentum(delta, lat: Lattice):
    """kappa = 2i [omega zeta(delta) - delta zeta(omega)], unreduced."""
    return 2j * (lat.omega * weierstrass_zeta(delta, lat) - delta * lat.eta)


def bloch_multiplier(delta, lat: Lattice):
    """beta = exp[2 delta zeta(omega) - 2 omega zeta(delta)]."""
    return np.exp(2.0 * delta * lat.eta - 2.0 * lat.omega * weierstrass_zeta(delta, lat))


def _central_derivative(f, z, h):
    """Fourth-order central difference with one Richardson level."""
    def d(step):
        return (-f(z + 2 * step) + 8 * f(z + step) - 8 * f(z - step) + f(z - 2 * step)) / (12 * step)
    coarse, fine = d(h), d(h / 2)
    return fine + (fine - coarse) / 15.0


ELLIPTIC_IDENTITY_TOLERANCES = {
    "sigma_derivative": 1e-9,
    "zeta_derivative": 1e-9,
    "wp_derivative": 1e-10,
    "zeta_addition": 1e-10,
    "sigma_product": 1e-10,
    "lame_identity": 1e-10,
}


def elliptic_identity_suite(lat: Lattice, n_pairs: int = 20, seed: int = 0) -> dict:
    """Largest relative deviation of each classical identity at sample points.

    Covers sigma' = sigma zeta, zeta' = -wp, wp' = -sigma(2z)/sigma^4, the
    zeta addition law, the sigma product law
    sigma(z1 + z2) sigma(z1 - z2) = -sigma^2(z1) sigma^2(z2) (wp(z1) - wp(z2))
    and the link m sn^2(x) = wp(x + w') + (m + 1)/3.
    """
    rng = np.random.default_rng(seed)
    w, wpr = lat.omega, lat.omega_prime
    z1 = rng.uniform(0.1, 0.9, n_pairs) * w + rng.uniform(0.1, 0.9, n_pairs) * wpr
    z2 = rng.uniform(0.1, 0.9, n_pairs) * w - rng.uniform(0.1, 0.9, n_pairs) * wpr

    def rel(a, b):
        a, b = np.asarray(a), np.asarray(b)
        return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))

    out = {}
    h = 1e-3
    sig = lambda z: weierstrass_sigma(z, lat)  # noqa: E731
    zet = lambda z: weierstrass_zeta(z, lat)  # noqa: E731
    out["sigma_derivative"] = rel(_central_derivative(sig, z1, h), sig(z1) * zet(z1))
    out["zeta_derivative"] = rel(_central_derivative(zet, z1, h), -weierstrass_p(z1, lat))
    pts = np.array([0.4, 0.9]) * w
    out["wp_derivative"] = max(
        rel(weierstrass_p_prime(z1, lat), -sig(2 * z1) / sig(z1) ** 4),
        rel(weierstrass_p_prime(pts, lat), -sig(2 * pts) / sig(pts) ** 4))
    p1, p2 = weierstrass_p(z1, lat), weierstrass_p(z2, lat)
    q1, q2 = weierstrass_p_prime(z1, lat), weierstrass_p_prime(z2, lat)
    out["zeta_addition"] = rel(zet(z1 + z2) - zet(z1) - zet(z2), 0.5 * (q1 - q2) / (p1 - p2))
    out["sigma_product"] = rel(sig(z1 + z2) * sig(z1 - z2), -sig(z1) ** 2 * sig(z2) ** 2 * (p1 - p2))
    x = np.linspace(0.0, 4.0 * w, 101)
    lhs = lat.m * jacobi_sn(x, lat.m) ** 2
    rhs = weierstrass_p(x + wpr, lat) + (lat.m + 1.0) / 3.0
    out["lame_identity"] = float(np.max(np.abs(lhs - rhs)))
    return out
