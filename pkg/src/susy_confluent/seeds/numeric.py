"""Seeds for an arbitrary sampled potential by ODE integration.

Writing u(x; eps0 + s) = sum_n u_n(x) s^n, the Schrödinger equation and
its energy derivatives become the triangular system

    u_n'' = (V - eps0) u_n - u_{n-1},

which is integrated as one first-order system with an explicit 8th-order
Runge-Kutta method.  u starts at the left edge with unit value and the
WKB slope sqrt(V - eps); v starts at the right edge with the decaying WKB
slope and the value fixing W(u, v) = 1, then runs leftwards.  Because the
whole energy series is integrated together, W(u, v) = 1 holds for every
eps, so the energy derivatives of v are consistent with those of u.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .. import series
from ..potentials import sampled_potential
from . import SeedError, SeedEvaluation, SeedFamily, SeedRequest

RTOL = 1e-13
OVERFLOW = 1e250


def _wkb_slope(a0: float, order: int) -> np.ndarray:
    """Series of sqrt(a0 - s), or zero where the edge is classically allowed."""
    if a0 <= 0:
        return np.zeros(order + 1, dtype=complex)
    a = np.zeros(order + 1)
    a[0] = a0
    if order >= 1:
        a[1] = -1.0
    return series.sqrt(a, order).real


def _integrate(spline, eps0, order, x_span, x_eval, y0):
    n = order + 1

    def rhs(x, y):
        u, up = y[:n], y[n:]
        upp = (spline(x) - eps0) * u
        upp[1:] -= u[:-1]
        return np.concatenate([up, upp])

    sol = solve_ivp(rhs, x_span, y0, method="DOP853", t_eval=x_eval,
                    rtol=RTOL, atol=1e-300)
    if not sol.success:
        raise SeedError(f"ODE integration failed: {sol.message}")
    return sol.y


def _integrate_pair(x, values, eps0, order, scale):
    spline = CubicSpline(x, values)
    n = order + 1
    u0 = np.zeros(n)
    u0[0] = scale
    up0 = scale * _wkb_slope(values[0] - eps0, order)
    yu = _integrate(spline, eps0, order, (x[0], x[-1]), x, np.concatenate([u0, up0]))
    u_end, up_end = yu[:n, -1], yu[n:, -1]
    kappa_r = _wkb_slope(values[-1] - eps0, order)
    denom = series.mul(kappa_r, u_end, order).real + up_end
    if abs(denom[0]) < 1e-300:
        raise SeedError("cannot normalise v at the right edge")
    v_end = -series.reciprocal(denom, order).real
    vp_end = -series.mul(kappa_r, v_end, order).real
    yv = _integrate(spline, eps0, order, (x[-1], x[0]), x[::-1], np.concatenate([v_end, vp_end]))
    yv = yv[:, ::-1]
    return yu[:n], yu[n:], yv[:n], yv[n:]


def numeric_seed(req: SeedRequest) -> SeedEvaluation:
    eps = complex(req.epsilon)
    if eps.imag != 0:
        raise ValueError("numeric seeds need a real energy")
    samples = req.potential_samples
    if samples.grid != req.grid:
        raise ValueError("potential samples must live on the request grid")
    if samples.max_imag() > 1e-12 * max(1.0, samples.sup()):
        raise ValueError("numeric seeds need a real potential")
    x = req.grid.x
    values = samples.real
    order = req.k - 1
    scale = 1.0
    for attempt in range(2):
        with np.errstate(over="ignore", invalid="ignore"):
            parts = _integrate_pair(x, values, eps.real, order, scale)
        peak = max(np.max(np.abs(p)) for p in parts)
        if np.isfinite(peak) and peak < OVERFLOW:
            break
        if attempt:
            raise SeedError("seed overflows even after rescaling")
        # rescale by the WKB growth across the window and retry
        growth = np.trapezoid(np.sqrt(np.maximum(values - eps.real, 0.0)), x)
        scale = math.exp(-min(growth, 690.0))
    fact = np.array([math.factorial(j) for j in range(req.k)], dtype=float)[:, None]
    u, ux, v, vx = (p * fact for p in parts)
    seed = SeedEvaluation(SeedFamily.NUMERIC_POTENTIAL, req.grid, eps, sampled_potential(samples),
                          u, v, ux, vx)
    err = np.max(np.abs(seed.wronskian_uv() - 1.0))
    if not err < 1e-8:
        raise SeedError(f"W(u, v) drifted to 1 + {err:.3e} during integration")
    return seed
