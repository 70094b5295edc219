"""Initial potentials V0 together with their x-derivative jets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .elliptic import Lattice, wp_taylor
from .numerics import DerivativeStencil, Grid, SampledFunction


@dataclass(frozen=True, eq=False)
class Potential:
    """Samples of V0 plus a callable returning derivatives up to a given order."""

    grid: Grid
    values: np.ndarray
    name: str
    jet_fn: Callable[[int], np.ndarray] = field(repr=False)

    def jets(self, order: int) -> np.ndarray:
        """Array of shape (order + 1, n) holding V0, V0', ..., V0^(order)."""
        return self.jet_fn(order)

    def sampled(self) -> SampledFunction:
        return SampledFunction(self.grid, self.values)


def free_potential(grid: Grid) -> Potential:
    zeros = np.zeros(grid.n_points, dtype=complex)
    return Potential(grid, zeros, "free",
                     lambda order: np.zeros((order + 1, grid.n_points), dtype=complex))


def lame_potential(grid: Grid, lat: Lattice) -> Potential:
    """V0 = 2 m sn^2(x|m) written as 2 wp(x + omega') + 2(m + 1)/3."""
    z = grid.x + lat.omega_prime
    shift = 2.0 * (lat.m + 1.0) / 3.0

    def jets(order):
        coef = wp_taylor(z, lat, max(order, 1))[: order + 1]
        fact = np.array([math.factorial(n) for n in range(order + 1)], dtype=float)
        out = 2.0 * coef * fact[:, None]
        out[0] += shift
        return out

    return Potential(grid, jets(0)[0], "lame", jets)


def sampled_potential(samples: SampledFunction, accuracy: int = 6) -> Potential:
    grid = samples.grid
    d1 = DerivativeStencil(1, accuracy)
    d2 = DerivativeStencil(2, accuracy)

    def jets(order):
        out = [samples.values]
        for n in range(1, order + 1):
            if n % 2 == 0:
                out.append(d2.apply(out[n - 2], grid.h))
            else:
                out.append(d1.apply(out[n - 1], grid.h))
        return np.array(out, dtype=complex)

    return Potential(grid, samples.values, "numeric", jets)
