"""Bloch seeds for the single-gap Lamé potential V0 = 2 m sn^2(x|m).

The Bloch solutions are

    psi_d(x) = sigma(x + w' + d) sigma(w') / (sigma(x + w') sigma(w' + d)) * exp(-x zeta(d))

with energy eps = 2(m + 1)/3 - wp(d).  We take u = psi_delta and
v = (e3 - wp(delta)) / wp'(delta) * psi_{-delta}, which makes u(0) = 1 and
W(u, v) = 1 exactly.

Energy derivatives of every order are obtained from Taylor series in the
displacement ``t = delta - delta0``: sigma, zeta and wp are expanded about
the base points, the Bloch form is assembled as a series in ``t`` and then
re-expanded in ``s = eps - eps0`` through the reverted series of
``eps(delta0 + t)``.  A finite-difference route in ``delta`` is kept as an
independent cross-check.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.optimize import brentq

from .. import series
from ..elliptic import (Lattice, lattice_from_modulus, sigma_series, weierstrass_p,
                        weierstrass_p_prime, weierstrass_zeta, wp_taylor, zeta_taylor,
                        quasimomentum)
from ..numerics import fornberg_weights
from ..potentials import lame_potential
from . import SeedError, SeedEvaluation, SeedFamily, SeedRequest

NEWTON_TOL = 1e-12
W_TOL = 1e-8


class LameRegion(enum.Enum):
    LOWER_GAP = "lower_gap"
    LOWER_BAND = "lower_band"
    BAND_GAP = "band_gap"
    UPPER_BAND = "upper_band"

    @property
    def allowed(self) -> bool:
        return self in (LameRegion.LOWER_BAND, LameRegion.UPPER_BAND)


class BandError(ValueError):
    """The requested energy lies in (or too close to) the spectrum."""


def band_edges(lat: Lattice) -> tuple[float, float, float]:
    """Edges m, 1, 1 + m of the spectrum [m, 1] U [1 + m, inf)."""
    c = 2.0 * (lat.m + 1.0) / 3.0
    return (c - lat.e1, c - lat.e2, c - lat.e3)


def lame_region(epsilon: float, lat: Lattice) -> LameRegion:
    e1, e2, e3 = band_edges(lat)
    if epsilon < e1:
        return LameRegion.LOWER_GAP
    if epsilon <= e2:
        return LameRegion.LOWER_BAND
    if epsilon < e3:
        return LameRegion.BAND_GAP
    return LameRegion.UPPER_BAND


def epsilon_from_delta(delta, lat: Lattice) -> complex:
    return 2.0 * (lat.m + 1.0) / 3.0 - weierstrass_p(delta, lat)


def _segment(region: LameRegion, lat: Lattice):
    """Path s -> delta(s) on which wp is real and monotone, with its s-range."""
    w, wp_im = lat.omega, lat.omega_prime.imag
    if region is LameRegion.LOWER_GAP:
        return (lambda s: complex(s, 0.0)), 0.0, w
    if region is LameRegion.LOWER_BAND:
        return (lambda s: complex(w, s)), 0.0, wp_im
    if region is LameRegion.BAND_GAP:
        return (lambda s: complex(s, wp_im)), 0.0, w
    return (lambda s: complex(0.0, s)), 0.0, wp_im


def lame_delta_from_epsilon(epsilon, lat: Lattice, band_margin: float = 1e-3,
                            allow_bands: bool = False, max_iter: int = 50) -> complex:
    """Solve wp(delta) = 2(m + 1)/3 - eps for delta in the fundamental cell.

    Branches: the lower gap uses delta in (0, w], the band gap uses
    delta = w' + (0, w], and the allowed bands (only with
    ``allow_bands``) use w + i[0, |w'|] and i(0, |w'|].  On each segment wp
    is real and monotone, so a bracketing solve is followed by a damped
    complex Newton polish.
    """
    eps = complex(epsilon)
    if abs(eps.imag) > 0:
        raise ValueError("complex energies are not supported")
    E = eps.real
    edges = band_edges(lat)
    region = lame_region(E, lat)
    if region.allowed and not allow_bands:
        raise BandError(f"eps = {E} lies inside an allowed band of the Lamé spectrum")
    if not allow_bands and min(abs(E - e) for e in edges) < band_margin:
        raise BandError(f"eps = {E} is within {band_margin} of a band edge")
    target = 2.0 * (lat.m + 1.0) / 3.0 - E
    path, lo, hi = _segment(region, lat)

    def f(s):
        return weierstrass_p(path(s), lat).real - target

    if lo == 0.0 and region in (LameRegion.LOWER_GAP, LameRegion.UPPER_BAND):
        # wp has its pole at the origin of these segments
        lo = 0.5 * min(hi, 1.0 / math.sqrt(abs(target) + 1.0))
        for _ in range(200):
            if f(lo) * f(hi) <= 0:
                break
            lo *= 0.5
        else:
            raise SeedError("could not bracket delta")
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise SeedError(f"no root of wp(delta) = {target} on the {region.value} branch")
    s = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    delta = path(s)
    res = abs(weierstrass_p(delta, lat) - target)
    for _ in range(max_iter):
        if res < NEWTON_TOL * max(1.0, abs(target)):
            return delta
        step = (weierstrass_p(delta, lat) - target) / weierstrass_p_prime(delta, lat)
        lam = 1.0
        while lam > 1e-6:
            trial = delta - lam * step
            trial_res = abs(weierstrass_p(trial, lat) - target)
            if trial_res < res:
                delta, res = trial, trial_res
                break
            lam *= 0.5
        else:
            break
    if res < NEWTON_TOL * max(1.0, abs(target)):
        return delta
    raise SeedError(f"Newton iteration for delta did not converge (residual {res:.3e})")


def reduced_quasimomentum(delta, lat: Lattice) -> complex:
    """Quasi-momentum folded to Re in [0, 2 pi) and Im >= 0."""
    kappa = complex(quasimomentum(delta, lat))
    if kappa.imag < 0:
        kappa = -kappa
    re = math.fmod(kappa.real, 2.0 * math.pi)
    if re < 0:
        re += 2.0 * math.pi
    if abs(re - 2.0 * math.pi) < 1e-12:
        re = 0.0
    return complex(re, kappa.imag)


def _bloch_series(x, delta0, lat: Lattice, order: int, sign: int):
    """Series in t of psi_{sign (delta0 + t)}(x) and its x-derivative.

    Returns ``(psi, psi_x)`` each of shape ``(order + 1, len(x))``.
    """
    x = np.asarray(x, dtype=float)
    wpr = lat.omega_prime
    fix = series.reflect if sign < 0 else (lambda a: a)
    num_raw, num_ls = sigma_series(x + wpr + sign * delta0, lat, order + 1)
    num = fix(num_raw[: order + 1])
    dnum = fix(series.derivative(num_raw))
    den_raw, den_ls = sigma_series(wpr + sign * delta0, lat, order)
    den = fix(den_raw)
    sx, sx_ls = sigma_series(x + wpr, lat, 0)
    s0, s0_ls = sigma_series(wpr, lat, 0)
    zx = weierstrass_zeta(x + wpr, lat)
    z_ser = sign * zeta_taylor(delta0, lat, order)
    shift = np.zeros((order + 1,) + x.shape, dtype=complex)
    shift[1:] = -np.multiply.outer(z_ser[1:], x)
    expo = series.exp(shift, order)
    log_scale = num_ls - den_ls + s0_ls - sx_ls - x * z_ser[0]
    front = np.exp(log_scale) * s0[0] / sx[0]
    ratio = series.div(num, den, order)
    psi = series.mul(ratio, expo, order) * front
    zsum = np.zeros_like(shift)
    zsum[:] = np.multiply.outer(z_ser, np.ones_like(x))
    zsum[0] = zsum[0] + zx
    inner = series.div(dnum, den, order) - series.mul(ratio, zsum, order)
    psi_x = series.mul(inner, expo, order) * front
    return psi, psi_x


def lame_series(x, delta0, lat: Lattice, order: int):
    """Taylor series in s = eps - eps0 of u, v, u_x and v_x."""
    p = wp_taylor(delta0, lat, order + 1)
    eps_of_t = np.zeros(order + 1, dtype=complex)
    eps_of_t[1:] = -p[1: order + 1]
    t_of_s = series.revert(eps_of_t, order)
    u, ux = _bloch_series(x, delta0, lat, order, +1)
    m, mx = _bloch_series(x, delta0, lat, order, -1)
    numer = -p[: order + 1].copy()
    numer[0] += lat.e3
    pref = series.div(numer, series.derivative(p), order)
    v = series.mul(pref, m, order)
    vx = series.mul(pref, mx, order)
    return tuple(series.compose(f, t_of_s, order) for f in (u, v, ux, vx))


def lame_seed_values(epsilon, x, lat: Lattice, k: int, band_margin: float = 1e-3):
    delta = lame_delta_from_epsilon(epsilon, lat, band_margin)
    u, v, ux, vx = (series.taylor_to_derivatives(a) for a in lame_series(x, delta, lat, k - 1))
    return delta, u, v, ux, vx


def lame_bloch_seed(req: SeedRequest) -> SeedEvaluation:
    lat = lattice_from_modulus(req.m)
    delta, u, v, ux, vx = lame_seed_values(req.epsilon, req.grid.x, lat, req.k, req.band_margin)
    seed = SeedEvaluation(SeedFamily.LAME, req.grid, complex(req.epsilon),
                          lame_potential(req.grid, lat), u, v, ux, vx, lat, delta)
    err = np.max(np.abs(seed.wronskian_uv() - 1.0))
    if not err < W_TOL:
        raise SeedError(f"W(u, v) deviates from 1 by {err:.3e}; elliptic layer inaccurate")
    return seed


def delta_derivative_u(x, delta, lat: Lattice):
    """d u / d delta = [zeta(x + delta + w') - zeta(delta + w') + x wp(delta)] u."""
    x = np.asarray(x, dtype=float)
    u, _ = _bloch_series(x, delta, lat, 0, +1)
    wpr = lat.omega_prime
    factor = (weierstrass_zeta(x + delta + wpr, lat) - weierstrass_zeta(delta + wpr, lat)
              + x * weierstrass_p(delta, lat))
    return factor * u[0]


def fd_epsilon_derivatives(x, delta0, lat: Lattice, order: int, rel_step: float = 1e-3,
                           accuracy: int = 4):
    """Energy derivatives of u and v from central differences in delta.

    Each delta-derivative uses a centred stencil of the given accuracy plus
    one Richardson level (steps h and h/2); the results are converted to
    energy derivatives with the exact delta(eps) expansion.
    """
    h = rel_step * abs(delta0)

    def base(d):
        u, _ = _bloch_series(x, d, lat, 0, +1)
        m, _ = _bloch_series(x, d, lat, 0, -1)
        pref = (lat.e3 - weierstrass_p(d, lat)) / weierstrass_p_prime(d, lat)
        return np.stack([u[0], pref * m[0]])

    def dstack(step):
        coeffs = [base(delta0)]
        for n in range(1, order + 1):
            r = (n + 1) // 2 - 1 + accuracy // 2
            offsets = np.arange(-r, r + 1)
            w = fornberg_weights(offsets, n)
            acc = sum(c * base(delta0 + o * step) for c, o in zip(w, offsets) if c != 0)
            coeffs.append(acc / step ** n / math.factorial(n))
        return np.array(coeffs)

    coarse, fine = dstack(h), dstack(0.5 * h)
    rich = fine + (fine - coarse) / (2 ** accuracy - 1)
    p = wp_taylor(delta0, lat, order + 1)
    eps_of_t = np.zeros(order + 1, dtype=complex)
    eps_of_t[1:] = -p[1: order + 1]
    t_of_s = series.revert(eps_of_t, order)
    composed = series.compose(rich, t_of_s, order)
    d = series.taylor_to_derivatives(composed)
    return d[:, 0], d[:, 1]
