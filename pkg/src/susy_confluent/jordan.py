"""Jordan chains u_1..u_k built from the energy derivatives of a seed pair.

With U_l = d^l u / d eps^l / l! (and likewise V_l) the chain members are

    u_j = sum_{l=0}^{j-1} (C_{j-1-l} U_l + D_{j-1-l} V_l),   C_0 = 1, D_0 = 0,

i.e. u_j is the s^{j-1} coefficient of C(s) U(s) + D(s) V(s).  They obey
(H - eps) u_1 = 0 and (H - eps) u_j = u_{j-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import series
from .numerics import ChainParameters, DerivativeStencil, SampledFunction
from .seeds import SeedEvaluation

RESIDUAL_TOL = 1e-6


def coefficient_matrices(params: ChainParameters) -> tuple[np.ndarray, np.ndarray]:
    """Matrices A, B with u_j = sum_l A[j, l] d^l u + B[j, l] d^l v (0-based j)."""
    k = params.k
    A = np.zeros((k, k))
    B = np.zeros((k, k))
    for j in range(k):
        for l in range(j + 1):
            A[j, l] = params.c(j - l) / math.factorial(l)
            B[j, l] = params.d(j - l) / math.factorial(l)
    return A, B


@dataclass(frozen=True, eq=False)
class JordanChain:
    params: ChainParameters
    seed: SeedEvaluation
    members: np.ndarray
    members_x: np.ndarray

    @property
    def k(self) -> int:
        return self.params.k

    def member(self, j: int) -> SampledFunction:
        """u_j with the 1-based numbering of the chain."""
        return SampledFunction(self.seed.grid, self.members[j - 1])


def build_chain(seed: SeedEvaluation, params: ChainParameters) -> JordanChain:
    if seed.k < params.k:
        raise ValueError(f"seed carries {seed.k} energy derivatives, chain needs {params.k}")
    if abs(complex(params.epsilon) - seed.epsilon) > 1e-12 * max(1.0, abs(seed.epsilon)):
        raise ValueError("chain energy differs from the seed energy")
    k = params.k
    A, B = coefficient_matrices(params)
    members = A @ seed.u_derivs[:k] + B @ seed.v_derivs[:k]
    members_x = A @ seed.ux_derivs[:k] + B @ seed.vx_derivs[:k]
    members.setflags(write=False)
    members_x.setflags(write=False)
    return JordanChain(params, seed, members, members_x)


@dataclass(frozen=True)
class ChainResiduals:
    """Relative residuals of (H - eps) u_1 = 0 and (H - eps) u_j = u_{j-1}."""

    links: tuple
    tolerance: float

    @property
    def failing(self) -> list[int]:
        return [j + 1 for j, r in enumerate(self.links) if not r < self.tolerance]

    @property
    def ok(self) -> bool:
        return not self.failing

    @property
    def worst(self) -> float:
        return max(self.links)


def verify_chain(chain: JordanChain, V0: SampledFunction | np.ndarray | None = None,
                 tolerance: float = RESIDUAL_TOL, accuracy: int = 6) -> ChainResiduals:
    """Residuals with the finite-difference second derivative.

    Entry ``j - 1`` of the result is the j-th link, j = 1 being the
    homogeneous equation for u_1.
    """
    grid = chain.seed.grid
    if V0 is None:
        V = chain.seed.potential.values
    else:
        V = V0.values if isinstance(V0, SampledFunction) else np.asarray(V0)
    eps = chain.params.epsilon
    d2 = DerivativeStencil(2, accuracy)
    out = []
    for j in range(chain.k):
        f = chain.members[j]
        r = -d2.apply(f, grid.h) + (V - eps) * f
        if j:
            prev = chain.members[j - 1]
            r = r - prev
            scale = max(np.max(np.abs(f)), np.max(np.abs(prev)))
        else:
            scale = np.max(np.abs(f))
        out.append(float(np.max(np.abs(r)) / scale))
    return ChainResiduals(tuple(out), tolerance)


def renormalize_params(params: ChainParameters, scale_taylor) -> ChainParameters:
    """Constants reproducing the same chain after u -> c(eps) u, v -> v / c(eps).

    ``scale_taylor`` holds the Taylor coefficients of c about the chain
    energy.  The returned constants give members equal to c(eps0) times the
    original ones, so V_k and psi_k (up to scale) are unchanged.
    """
    k = params.k
    order = k - 1
    c = np.zeros(order + 1, dtype=complex)
    given = np.asarray(scale_taylor, dtype=complex)[: order + 1]
    c[: len(given)] = given
    C = np.array([params.c(l) for l in range(k)], dtype=complex)
    D = np.array([params.d(l) for l in range(k)], dtype=complex)
    c0 = c[0]
    new_C = series.div(C, c, order) * c0
    new_D = series.mul(D, c, order) * c0
    if np.max(np.abs(new_C.imag)) > 1e-12 * max(1.0, np.max(np.abs(new_C))) or \
            np.max(np.abs(new_D.imag)) > 1e-12 * max(1.0, np.max(np.abs(new_D))):
        raise ValueError("renormalised constants are not real")
    return params.replace(C=tuple(new_C.real[1:]), D=tuple(new_D.real[1:]))
