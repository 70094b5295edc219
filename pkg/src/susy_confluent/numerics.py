"""Uniform grids, sampled functions and finite-difference stencils."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

MIN_POINTS = 9
DEFAULT_ACCURACY = 6
BOUNDARY_EXTRA = 4


class GridError(ValueError):
    pass


class SingularWronskianError(ArithmeticError):
    """Raised when a Wronskian vanishes inside the sampling window."""

    def __init__(self, brackets):
        self.brackets = list(brackets)
        super().__init__(f"Wronskian vanishes inside the window near {self.brackets[:5]}")


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.x_min) or not np.isfinite(self.x_max):
            raise GridError("grid bounds must be finite")
        if self.x_max == self.x_min:
            raise GridError("empty interval")
        if self.x_max < self.x_min:
            raise GridError("reversed bounds: x_min must be below x_max")
        if self.n_points < MIN_POINTS:
            raise GridError(f"need at least {MIN_POINTS} points, got {self.n_points}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        # linspace pins both endpoints exactly
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def __len__(self):
        return self.n_points


def make_grid(x_min: float, x_max: float, n_points: int) -> Grid:
    return Grid(float(x_min), float(x_max), int(n_points))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray
    check_finite: bool = field(default=True, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {values.shape}"
            )
        if self.check_finite and not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> "SampledFunction":
        return cls(grid, fn(grid.x))

    @property
    def x(self):
        return self.grid.x

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _coerce(self, other):
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise GridError("sampled functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - self._coerce(other))

    def __mul__(self, other):
        return SampledFunction(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def __len__(self):
        return len(self.values)


def fornberg_weights(offsets: Sequence[float], order: int, x0: float = 0.0) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Fornberg's recursion (Math. Comp. 51, 1988) on arbitrary node offsets.
    """
    z = np.asarray(offsets, dtype=float)
    n = len(z)
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = z[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = z[i] - x0
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=None)
def _boundary_table(order: int, accuracy: int, width: int, rows: int) -> np.ndarray:
    degree = accuracy + order - 1
    nodes = np.arange(width, dtype=float)
    moments = np.zeros(degree + 1)
    moments[order] = math.factorial(order)
    table = []
    for i in range(rows):
        z = (nodes - i) / width
        vander = np.vander(z, degree + 1, increasing=True).T
        c = np.linalg.lstsq(vander, moments, rcond=None)[0]
        table.append(c / float(width) ** order)
    table = np.array(table)
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class DerivativeStencil:
    """Centered interior stencil plus one-sided boundary stencils.

    The boundary stencils keep the interior accuracy, so the outermost
    ``half_width`` points carry the largest error.
    """

    order: int = 1
    accuracy: int = DEFAULT_ACCURACY

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("stencil order must be 1 or 2")
        if self.accuracy < 4 or self.accuracy % 2:
            raise ValueError("accuracy must be an even integer >= 4")

    @property
    def half_width(self) -> int:
        return (2 * ((self.order + 1) // 2) - 1 + self.accuracy) // 2

    @property
    def boundary_width(self) -> int:
        return self.accuracy + self.order

    @cached_property
    def weights(self) -> np.ndarray:
        r = self.half_width
        return fornberg_weights(np.arange(-r, r + 1), self.order)

    def boundary_weights(self, n: int) -> np.ndarray:
        """Row ``i`` holds weights over nodes 0..w-1 for the derivative at node i.

        Where the grid allows, the one-sided window is widened by
        ``BOUNDARY_EXTRA`` nodes and the minimum-norm weights of the same
        polynomial exactness are used; the tight one-sided stencils amplify
        rounding by two orders of magnitude at the edge node.
        """
        tight = self.boundary_width
        w = tight + BOUNDARY_EXTRA if n >= tight + BOUNDARY_EXTRA else tight
        return _boundary_table(self.order, self.accuracy, w, self.half_width)

    def apply(self, values: np.ndarray, h: float) -> np.ndarray:
        """Differentiate samples along the last axis."""
        f = np.asarray(values)
        n = f.shape[-1]
        r = self.half_width
        if n < max(2 * r + 1, self.boundary_width):
            raise GridError("grid too small for this stencil")
        bw = self.boundary_weights(n)
        w = bw.shape[1]
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        wts = self.weights
        for j, c in enumerate(wts):
            out[..., r:n - r] += c * f[..., j:n - 2 * r + j]
        left = f[..., :w]
        right = f[..., n - w:][..., ::-1]
        sign = -1.0 if self.order % 2 else 1.0
        for i in range(r):
            out[..., i] = left @ bw[i]
            out[..., n - 1 - i] = sign * (right @ bw[i])
        return out / h ** self.order


def differentiate(f: SampledFunction, order: int = 1,
                  stencil: DerivativeStencil | None = None) -> SampledFunction:
    if stencil is None:
        stencil = DerivativeStencil(order)
    elif stencil.order != order:
        raise ValueError("stencil order does not match the requested derivative")
    if not np.all(np.isfinite(f.values)):
        raise ValueError("cannot differentiate non-finite samples")
    return SampledFunction(f.grid, stencil.apply(f.values, f.grid.h))


def _phase_aligned(values: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(values)))
    if values[k] == 0:
        return values
    return values * (abs(values[k]) / values[k])


def zero_brackets(W: SampledFunction | np.ndarray, grid: Grid | None = None,
                  rel_threshold: float = 1e-12, window: int = 4,
                  imag_tol: float = 1e-8) -> list[tuple[float, float]]:
    """Bracket the zeros of a (numerically real) sampled function.

    Sign changes of the real part are counted once the imaginary part is
    below ``imag_tol`` relative to the local magnitude; tangential zeros
    show up as interior local minima of ``|W|`` that dip below
    ``rel_threshold`` times the largest value in a ``window``-point
    neighbourhood.  The threshold is local because confluent Wronskians
    routinely vary over dozens of orders of magnitude across the window.
    """
    if isinstance(W, SampledFunction):
        grid = W.grid
        W = W.values
    x = grid.x
    w = _phase_aligned(np.asarray(W, dtype=complex))
    mag = np.abs(w)
    realish = np.abs(w.imag) <= imag_tol * np.maximum(mag, np.finfo(float).tiny)
    re = w.real
    brackets = set()
    both_real = realish[:-1] & realish[1:]
    flips = both_real & ((re[:-1] * re[1:] < 0) | (re[:-1] == 0))
    for i in np.flatnonzero(flips):
        brackets.add((float(x[i]), float(x[i + 1])))
    if re[-1] == 0:
        brackets.add((float(x[-2]), float(x[-1])))
    pad = np.pad(mag, window, mode="edge")
    local_max = np.max(
        np.lib.stride_tricks.sliding_window_view(pad, 2 * window + 1), axis=-1
    )
    interior = np.zeros_like(mag, dtype=bool)
    interior[1:-1] = (mag[1:-1] <= mag[:-2]) & (mag[1:-1] <= mag[2:])
    dips = interior & (mag <= rel_threshold * local_max)
    for i in np.flatnonzero(dips):
        brackets.add((float(x[i - 1]), float(x[i + 1])))
    merged: list[tuple[float, float]] = []
    for lo, hi in sorted(brackets):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def second_log_derivative(W: SampledFunction, dW=None, d2W=None,
                          stencil_accuracy: int = DEFAULT_ACCURACY,
                          rel_threshold: float = 1e-12) -> SampledFunction:
    """Return (W''W - W'^2)/W^2 without taking a logarithm.

    Analytic ``dW``/``d2W`` samples are used when supplied, otherwise the
    derivatives come from the finite-difference stencils.
    """
    brackets = zero_brackets(W, rel_threshold=rel_threshold)
    if brackets:
        raise SingularWronskianError(brackets)
    w = W.values
    d1 = _values(dW) if dW is not None else DerivativeStencil(1, stencil_accuracy).apply(w, W.grid.h)
    d2 = _values(d2W) if d2W is not None else DerivativeStencil(2, stencil_accuracy).apply(w, W.grid.h)
    r1 = d1 / w
    return SampledFunction(W.grid, d2 / w - r1 * r1)


def _values(f):
    return f.values if isinstance(f, SampledFunction) else np.asarray(f)


@dataclass(frozen=True)
class ChainParameters:
    """Factorization energy and the constants C_1..C_{k-1}, D_1..D_{k-1}.

    ``C[k-2]`` (that is C_{k-1}) is accepted for symmetry although it never
    reaches the k-th Wronskian.
    """

    epsilon: complex
    k: int
    C: tuple = ()
    D: tuple = ()

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError("chain order k must be an integer >= 2")
        C = tuple(float(c) for c in self.C) if len(self.C) else (0.0,) * (self.k - 1)
        D = tuple(float(d) for d in self.D) if len(self.D) else (0.0,) * (self.k - 1)
        if len(C) != self.k - 1 or len(D) != self.k - 1:
            raise ValueError(f"C and D need exactly k - 1 = {self.k - 1} entries")
        if not all(math.isfinite(c) for c in C + D):
            raise ValueError("chain constants must be finite")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        object.__setattr__(self, "k", int(self.k))

    def c(self, l: int) -> float:
        """C_l with the convention C_0 = 1."""
        return 1.0 if l == 0 else self.C[l - 1]

    def d(self, l: int) -> float:
        """D_l with the convention D_0 = 0."""
        return 0.0 if l == 0 else self.D[l - 1]

    def replace(self, **changes) -> "ChainParameters":
        fields = {"epsilon": self.epsilon, "k": self.k, "C": self.C, "D": self.D}
        fields.update(changes)
        return ChainParameters(**fields)
