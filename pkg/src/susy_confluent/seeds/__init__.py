"""Seed pairs (u, v) with W(u, v) = 1 and their energy derivatives.

Three families are available: the free particle (exact symbolic
derivatives), single-gap Lamé Bloch states (elliptic functions) and an
arbitrary sampled potential (ODE integration).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..elliptic import Lattice
from ..numerics import Grid, SampledFunction
from ..potentials import Potential


class SeedError(RuntimeError):
    """A seed could not be built or failed its self-checks."""


class SeedFamily(enum.Enum):
    FREE_PARTICLE = "free"
    LAME = "lame"
    NUMERIC_POTENTIAL = "numeric"

    @classmethod
    def parse(cls, name) -> "SeedFamily":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"free": cls.FREE_PARTICLE, "free_particle": cls.FREE_PARTICLE,
                   "freeparticle": cls.FREE_PARTICLE, "lame": cls.LAME,
                   "numeric": cls.NUMERIC_POTENTIAL, "numeric_potential": cls.NUMERIC_POTENTIAL,
                   "numericpotential": cls.NUMERIC_POTENTIAL}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown seed family {name!r}") from None


@dataclass(frozen=True)
class SeedRequest:
    family: SeedFamily
    epsilon: complex
    k: int
    grid: Grid
    m: float | None = None
    potential_samples: SampledFunction | None = field(default=None, compare=False)
    band_margin: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "family", SeedFamily.parse(self.family))
        if self.k < 1:
            raise ValueError("chain order k must be at least 1")
        if self.family is SeedFamily.LAME and self.m is None:
            raise ValueError("Lamé seeds need the modulus m")
        if self.family is SeedFamily.NUMERIC_POTENTIAL and self.potential_samples is None:
            raise ValueError("numeric seeds need potential samples")


@dataclass(frozen=True, eq=False)
class SeedEvaluation:
    """Energy derivatives of the seed pair on a grid.

    Each of ``u_derivs``, ``v_derivs``, ``ux_derivs`` and ``vx_derivs`` has
    shape ``(k, n)``; row ``j`` holds d^j/d eps^j of u, v, u' and v'.
    """

    family: SeedFamily
    grid: Grid
    epsilon: complex
    potential: Potential
    u_derivs: np.ndarray
    v_derivs: np.ndarray
    ux_derivs: np.ndarray
    vx_derivs: np.ndarray
    lattice: Lattice | None = None
    delta: complex | None = None

    def __post_init__(self):
        for name in ("u_derivs", "v_derivs", "ux_derivs", "vx_derivs"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.u_derivs.shape[0]

    def u(self, j: int = 0) -> SampledFunction:
        return SampledFunction(self.grid, self.u_derivs[j])

    def v(self, j: int = 0) -> SampledFunction:
        return SampledFunction(self.grid, self.v_derivs[j])

    def wronskian_uv(self) -> np.ndarray:
        return self.u_derivs[0] * self.vx_derivs[0] - self.ux_derivs[0] * self.v_derivs[0]

    def truncated(self, k: int) -> "SeedEvaluation":
        if k > self.k:
            raise ValueError("cannot extend a seed evaluation")
        return SeedEvaluation(self.family, self.grid, self.epsilon, self.potential,
                              self.u_derivs[:k], self.v_derivs[:k], self.ux_derivs[:k],
                              self.vx_derivs[:k], self.lattice, self.delta)


def build_seed(req: SeedRequest) -> SeedEvaluation:
    """Dispatch on the request family."""
    from .free import free_seed
    from .lame import lame_bloch_seed
    from .numeric import numeric_seed

    if req.family is SeedFamily.FREE_PARTICLE:
        return free_seed(req)
    if req.family is SeedFamily.LAME:
        return lame_bloch_seed(req)
    return numeric_seed(req)


__all__ = ["SeedError", "SeedFamily", "SeedRequest", "SeedEvaluation", "build_seed"]
