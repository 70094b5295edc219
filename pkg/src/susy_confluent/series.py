"""Truncated power series with array-valued coefficients.

A series is an ndarray whose leading axis indexes the power of the
expansion variable; trailing axes broadcast (typically one value per grid
point).  All routines keep ``order + 1`` coefficients.
"""

import math

import numpy as np


def _zero_like(a, order):
    a = np.asarray(a)
    return np.zeros((order + 1,) + a.shape[1:], dtype=np.result_type(a, complex))


def mul(a, b, order=None):
    """Cauchy product of two series."""
    a = np.asarray(a)
    b = np.asarray(b)
    if order is None:
        order = min(len(a), len(b)) - 1
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.zeros((order + 1,) + shape, dtype=np.result_type(a, b, complex))
    for n in range(order + 1):
        for i in range(max(0, n - len(b) + 1), min(n, len(a) - 1) + 1):
            out[n] = out[n] + a[i] * b[n - i]
    return out


def reciprocal(a, order=None):
    a = np.asarray(a)
    if order is None:
        order = len(a) - 1
    out = _zero_like(a, order)
    out[0] = 1.0 / a[0]
    for n in range(1, order + 1):
        acc = 0
        for i in range(1, min(n, len(a) - 1) + 1):
            acc = acc + a[i] * out[n - i]
        out[n] = -acc * out[0]
    return out


def div(a, b, order=None):
    if order is None:
        order = min(len(a), len(b)) - 1
    return mul(a, reciprocal(b, order), order)


def exp(a, order=None):
    """exp of a series, using e' = a' e."""
    a = np.asarray(a)
    if order is None:
        order = len(a) - 1
    out = _zero_like(a, order)
    out[0] = np.exp(a[0])
    for n in range(1, order + 1):
        acc = 0
        for k in range(1, min(n, len(a) - 1) + 1):
            acc = acc + k * a[k] * out[n - k]
        out[n] = acc / n
    return out


def sqrt(a, order=None):
    a = np.asarray(a)
    if order is None:
        order = len(a) - 1
    out = _zero_like(a, order)
    out[0] = np.sqrt(a[0].astype(complex) if np.iscomplexobj(a) else a[0] + 0j)
    for n in range(1, order + 1):
        acc = a[n] if n < len(a) else 0
        for k in range(1, n):
            acc = acc - out[k] * out[n - k]
        out[n] = acc / (2 * out[0])
    return out


def derivative(a):
    """Series of d/dt; one order is lost."""
    a = np.asarray(a)
    n = np.arange(1, len(a)).reshape((-1,) + (1,) * (a.ndim - 1))
    return a[1:] * n


def reflect(a):
    """Coefficients of f(-t) from those of f(t)."""
    a = np.asarray(a)
    signs = (-1.0) ** np.arange(len(a))
    return a * signs.reshape((-1,) + (1,) * (a.ndim - 1))


def compose(f, g, order=None):
    """f(g(s)) for an inner series g with g[0] == 0 (g scalar-valued)."""
    f = np.asarray(f)
    g = np.asarray(g)
    if order is None:
        order = len(f) - 1
    if abs(g[0]) != 0:
        raise ValueError("inner series must vanish at the origin")
    out = _zero_like(f, order)
    power = np.zeros(order + 1, dtype=complex)
    power[0] = 1.0
    for j in range(min(order, len(f) - 1) + 1):
        out = out + np.multiply.outer(power, f[j]) if f.ndim > 1 else out + power * f[j]
        power = mul(power, g, order)
    return out


def revert(f, order=None):
    """Compositional inverse g of f (f[0] == 0, f[1] != 0), so f(g(s)) = s."""
    f = np.asarray(f, dtype=complex)
    if order is None:
        order = len(f) - 1
    if order == 0:
        return np.zeros(1, dtype=complex)
    if len(f) < 2 or f[1] == 0:
        raise ZeroDivisionError("series is not invertible: vanishing linear term")
    target = np.zeros(order + 1, dtype=complex)
    if order >= 1:
        target[1] = 1.0
    g = target / f[1]
    for _ in range(order):
        g = g - (compose(f, g, order) - target) / f[1]
    return g


def taylor_to_derivatives(a):
    """Convert Taylor coefficients to derivatives: d^n f = n! a_n."""
    a = np.asarray(a)
    fact = np.array([math.factorial(n) for n in range(len(a))], dtype=float)
    return a * fact.reshape((-1,) + (1,) * (a.ndim - 1))
