"""Free-particle seeds u = exp(kx), v = -exp(-kx)/(2k) with eps = -k^2.

Energy derivatives are generated exactly: every d^j u / d eps^j is a finite
sum of terms ``c x^a kappa^(-b) exp(+-kappa x)`` with rational ``c``, and
d/d eps = -(1/(2 kappa)) d/d kappa acts on such terms in closed form.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..potentials import free_potential
from . import SeedEvaluation, SeedFamily, SeedRequest

Terms = dict  # {(a, b): Fraction} for  x^a * kappa^(-b)


def _d_eps(terms: Terms, sign: int) -> Terms:
    out: Terms = {}
    half = Fraction(1, 2)
    for (a, b), c in terms.items():
        key = (a + 1, b + 1)
        out[key] = out.get(key, 0) - sign * half * c
        if b:
            key = (a, b + 2)
            out[key] = out.get(key, 0) + half * b * c
    return {key: c for key, c in out.items() if c != 0}


def _d_x(terms: Terms, sign: int) -> Terms:
    out: Terms = {}
    for (a, b), c in terms.items():
        if a:
            key = (a - 1, b)
            out[key] = out.get(key, 0) + a * c
        key = (a, b - 1)
        out[key] = out.get(key, 0) + sign * c
    return {key: c for key, c in out.items() if c != 0}


@lru_cache(maxsize=None)
def seed_terms(j: int, sign: int) -> tuple:
    """Exact terms of d^j/d eps^j of u (``sign=+1``) or v (``sign=-1``)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 (u) or -1 (v)")
    if j == 0:
        base = {(0, 0): Fraction(1)} if sign == 1 else {(0, 1): Fraction(-1, 2)}
        return tuple(sorted(base.items()))
    return tuple(sorted(_d_eps(dict(seed_terms(j - 1, sign)), sign).items()))


def evaluate_terms(terms, kappa: float, x, sign: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    poly = np.zeros_like(x)
    for (a, b), c in terms:
        poly = poly + float(c) * x ** a * kappa ** (-b)
    return poly * np.exp(sign * kappa * x)


def kappa_free(epsilon) -> float:
    eps = complex(epsilon)
    if eps.imag != 0 or eps.real >= 0:
        raise ValueError(f"free-particle seeds need real eps < 0, got {epsilon}")
    return math.sqrt(-eps.real)


def free_seed_values(epsilon, x, k: int):
    """Return (u, v, u_x, v_x) derivative stacks of shape (k, len(x))."""
    kappa = kappa_free(epsilon)
    stacks = []
    for sign in (1, -1):
        vals, dvals = [], []
        for j in range(k):
            terms = seed_terms(j, sign)
            vals.append(evaluate_terms(terms, kappa, x, sign))
            dvals.append(evaluate_terms(tuple(sorted(_d_x(dict(terms), sign).items())), kappa, x, sign))
        stacks.append((np.array(vals), np.array(dvals)))
    (u, ux), (v, vx) = stacks
    return u, v, ux, vx


def free_seed(req: SeedRequest) -> SeedEvaluation:
    u, v, ux, vx = free_seed_values(req.epsilon, req.grid.x, req.k)
    return SeedEvaluation(SeedFamily.FREE_PARTICLE, req.grid, complex(req.epsilon),
                          free_potential(req.grid), u, v, ux, vx)
