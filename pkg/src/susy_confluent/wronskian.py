"""Wronskians of Jordan chains: determinant, expanded and reduced forms.

The determinant route is the reference.  Higher x-derivatives of the chain
members are generated exactly from the Schrödinger equation,

    f'' = (V0 - eps) f - c g,

where ``g`` is the source term (the previous chain member for u_j, or
``j d^{j-1}u`` for the seed derivative d^j u), so only the seed values and
first derivatives are ever needed.

Notation for the expanded and reduced forms: ``u, v`` are the seeds and
``a, b, c, d, e`` stand for du, dv, d^2u, d^2v, d^3u (energy derivatives).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .jordan import build_chain, coefficient_matrices
from .numerics import (ChainParameters, DerivativeStencil, GridError, SampledFunction,
                       fornberg_weights)
from .seeds import SeedEvaluation


class WronskianMethod(enum.Enum):
    DETERMINANT = "determinant"
    EXPANDED = "expanded"
    REDUCED = "reduced"


# ---------------------------------------------------------------- primitives

def wronskian_from_jets(jets, derivatives: bool = False):
    """Pointwise Wronskian of k functions from their x-derivative jets.

    ``jets`` has shape ``(k, r, n)`` with row ``i`` of function ``f`` equal to
    the i-th x-derivative.  ``r >= k`` is needed for W, and ``r >= k + 2`` for
    the derivatives W' and W'' (returned when ``derivatives`` is set).
    """
    jets = np.asarray(jets)
    k, r, _ = jets.shape
    need = k + 2 if derivatives else k
    if r < need:
        raise ValueError(f"need {need} derivative rows, got {r}")
    mat = np.moveaxis(jets, -1, 0)  # (n, k, r): column = function, here as rows

    def det(rows):
        block = mat[:, :, list(rows)]  # (n, k functions, k rows)
        return np.linalg.det(block)

    W = det(range(k))
    if not derivatives:
        return W
    dW = det(list(range(k - 1)) + [k])
    if k == 1:
        d2W = det([2])
    else:
        d2W = det(list(range(k - 2)) + [k - 1, k]) + det(list(range(k - 1)) + [k + 1])
    return W, dW, d2W


def stencil_jets(functions, n_rows: int, accuracy: int = 6) -> np.ndarray:
    """x-derivative jets by repeated finite differencing (generic fallback)."""
    grid = functions[0].grid
    d1 = DerivativeStencil(1, accuracy)
    out = []
    for f in functions:
        if f.grid != grid:
            raise GridError("functions live on different grids")
        rows = [np.asarray(f.values)]
        for _ in range(1, n_rows):
            rows.append(d1.apply(rows[-1], grid.h))
        out.append(rows)
    return np.array(out, dtype=complex)


def wronskian_det(functions, jets=None, accuracy: int = 6) -> SampledFunction:
    """W(f_1, ..., f_k) as a pointwise determinant.

    Without ``jets`` the derivatives come from repeated stencils, which is
    only accurate for well-resolved smooth inputs.
    """
    functions = list(functions)
    if not functions:
        raise ValueError("need at least one function")
    grid = functions[0].grid
    if jets is None:
        jets = stencil_jets(functions, len(functions), accuracy)
    W = wronskian_from_jets(jets)
    if not np.all(np.isfinite(W)):
        raise ValueError("non-finite Wronskian entries")
    return SampledFunction(grid, W)


def wronskian2(f, fx, g, gx):
    return f * gx - fx * g


def schrodinger_jets(value, value_x, potential_jets, eps, n_rows: int,
                     source=None, weight: float = 1.0) -> np.ndarray:
    """Derivatives 0..n_rows-1 of f with f'' = (V0 - eps) f - weight * g.

    ``source`` holds the jets of g (at least ``n_rows - 2`` rows) or is None.
    """
    q = np.array(potential_jets[: max(n_rows - 2, 1)], dtype=complex)
    q[0] = q[0] - eps
    out = [np.asarray(value, dtype=complex), np.asarray(value_x, dtype=complex)]
    for n in range(n_rows - 2):
        acc = sum(math.comb(n, i) * q[i] * out[n - i] for i in range(n + 1))
        if source is not None and weight:
            acc = acc - weight * source[n]
        out.append(acc)
    return np.array(out[:n_rows])


def seed_jets(seed: SeedEvaluation, n_rows: int):
    """Jets of every d^j u and d^j v, arrays of shape (k, n_rows, n)."""
    pot = seed.potential.jets(max(n_rows - 3, 0))
    ujets, vjets = [], []
    for j in range(seed.k):
        for vals, dvals, store in ((seed.u_derivs, seed.ux_derivs, ujets),
                                   (seed.v_derivs, seed.vx_derivs, vjets)):
            src = store[j - 1] if j else None
            store.append(schrodinger_jets(vals[j], dvals[j], pot, seed.epsilon, n_rows,
                                          source=src, weight=j))
    return np.array(ujets), np.array(vjets)


def chain_jets(seed: SeedEvaluation, params: ChainParameters, n_rows: int) -> np.ndarray:
    """Jets of the chain members u_1..u_k, shape (k, n_rows, n)."""
    A, B = coefficient_matrices(params)
    ujets, vjets = seed_jets(seed.truncated(params.k), n_rows)
    return np.einsum("jl,lrn->jrn", A, ujets) + np.einsum("jl,lrn->jrn", B, vjets)


# ------------------------------------------------------------ expanded forms

# basis index: 2 l -> d^l u, 2 l + 1 -> d^l v
_NAMES = {"u": 0, "v": 1, "a": 2, "b": 3, "c": 4, "d": 5, "e": 6}


@dataclass(frozen=True)
class ExpandedTerm:
    coefficient: float
    basis: tuple  # indices into the (u, v, du, dv, ...) basis


def _terms_k3(p: ChainParameters):
    C1, D1, D2 = p.c(1), p.d(1), p.d(2)
    table = [
        ("uva", C1 * D1 - D2),
        ("uvb", D1 ** 2),
        ("uvc", D1 / 2),
        ("uab", D1),
        ("uac", 0.5),
    ]
    return [ExpandedTerm(c, tuple(_NAMES[s] for s in key)) for key, c in table]


def _terms_k4(p: ChainParameters):
    C1, C2 = p.c(1), p.c(2)
    D1, D2, D3 = p.d(1), p.d(2), p.d(3)
    g = C1 * D1 - D2
    table = [
        ("uvab", C1 * D1 * D2 - C2 * D1 ** 2 + D1 * D3 - D2 ** 2),
        ("uvac", (C1 ** 2 * D1 - C1 * D2 - C2 * D1 + D3) / 2),
        ("uvad", D1 * g / 2),
        ("uvae", g / 6),
        ("uvbc", D1 * g / 2),
        ("uvbd", D1 ** 3 / 2),
        ("uvbe", D1 ** 2 / 6),
        ("uvcd", D1 ** 2 / 4),
        ("uvce", D1 / 12),
        ("uabc", g / 2),
        ("uabd", D1 ** 2 / 2),
        ("uabe", D1 / 6),
        ("uacd", D1 / 4),
        ("uace", 1 / 12),
    ]
    return [ExpandedTerm(c, tuple(_NAMES[s] for s in key)) for key, c in table]


def coefficient_basis_matrix(params: ChainParameters) -> np.ndarray:
    """Matrix M (k x 2k) expressing u_j in the basis (u, v, du, dv, ...)."""
    A, B = coefficient_matrices(params)
    k = params.k
    M = np.zeros((k, 2 * k))
    M[:, 0::2] = A
    M[:, 1::2] = B
    return M


def cauchy_binet_terms(params: ChainParameters, tol: float = 0.0):
    """All k-subsets of the basis with their minors of the coefficient matrix."""
    M = coefficient_basis_matrix(params)
    k = params.k
    terms = []
    for cols in itertools.combinations(range(2 * k), k):
        coef = float(np.linalg.det(M[:, cols]))
        if abs(coef) > tol:
            terms.append(ExpandedTerm(coef, cols))
    return terms


def expanded_terms(params: ChainParameters):
    """Weighted basis Wronskians summing to W(u_1, ..., u_k).

    k = 3 and k = 4 use the closed-form coefficient tables (5 and 14 terms);
    other orders fall back to Cauchy-Binet over the basis.
    """
    if params.k == 3:
        return _terms_k3(params)
    if params.k == 4:
        return _terms_k4(params)
    return cauchy_binet_terms(params, tol=0.0)


def _basis_jets(seed: SeedEvaluation, n_rows: int) -> np.ndarray:
    ujets, vjets = seed_jets(seed, n_rows)
    out = np.empty((2 * seed.k,) + ujets.shape[1:], dtype=complex)
    out[0::2] = ujets
    out[1::2] = vjets
    return out


def w_expanded(seed: SeedEvaluation, params: ChainParameters, terms=None) -> SampledFunction:
    k = params.k
    terms = expanded_terms(params) if terms is None else terms
    basis = _basis_jets(seed.truncated(k), k)
    total = np.zeros(seed.grid.n_points, dtype=complex)
    for t in terms:
        if t.coefficient:
            total = total + t.coefficient * wronskian_from_jets(basis[list(t.basis)])
    return SampledFunction(seed.grid, total)


def w3_expanded(seed, params):
    _require_k(params, 3)
    return w_expanded(seed, params)


def w4_expanded(seed, params):
    _require_k(params, 4)
    return w_expanded(seed, params)


# ------------------------------------------------------------- reduced forms

def _require_k(params, k):
    if params.k != k:
        raise ValueError(f"this form needs k = {k}, got k = {params.k}")


def _seed_w2(seed: SeedEvaluation, i: int, fi: str, j: int, fj: str):
    """Two-function Wronskian of energy derivatives, e.g. (1, 'u', 2, 'v')."""
    src = {"u": (seed.u_derivs, seed.ux_derivs), "v": (seed.v_derivs, seed.vx_derivs)}
    f, fx = src[fi][0][i], src[fi][1][i]
    g, gx = src[fj][0][j], src[fj][1][j]
    return wronskian2(f, fx, g, gx)


def w2_reduced(seed: SeedEvaluation, params: ChainParameters) -> SampledFunction:
    """W(u_1, u_2) = D_1 + W(u, du)."""
    _require_k(params, 2)
    return SampledFunction(seed.grid, params.d(1) + _seed_w2(seed, 0, "u", 1, "u"))


def w3_reduced(seed: SeedEvaluation, params: ChainParameters,
               form: str = "identity") -> SampledFunction:
    """Three-member Wronskian from two-function Wronskians.

    ``form="identity"`` uses W3 = u_1 W(u_1, u_3) - u_2 W(u_1, u_2) on the
    chain members; ``form="coefficients"`` spells it out in the seed
    derivatives.
    """
    _require_k(params, 3)
    if form == "identity":
        ch = build_chain(seed, params)
        m, mx = ch.members, ch.members_x
        W = m[0] * wronskian2(m[0], mx[0], m[2], mx[2]) - m[1] * wronskian2(m[0], mx[0], m[1], mx[1])
        return SampledFunction(seed.grid, W)
    if form != "coefficients":
        raise ValueError(f"unknown reduced form {form!r}")
    C1, D1, D2 = params.c(1), params.d(1), params.d(2)
    u, v, a = seed.u_derivs[0], seed.v_derivs[0], seed.u_derivs[1]
    w_ua = _seed_w2(seed, 0, "u", 1, "u")
    w_ub = _seed_w2(seed, 0, "u", 1, "v")
    w_uc = _seed_w2(seed, 0, "u", 2, "u")
    W = ((D2 - C1 * D1 + D1 * w_ub + 0.5 * w_uc) * u - D1 ** 2 * v - D1 * a
         - (D1 * v + a) * w_ua)
    return SampledFunction(seed.grid, W)


def w4_blocks(seed: SeedEvaluation, params: ChainParameters):
    """The blocks W(u_1,u_2), W(u_1,u_4) + W(u_2,u_3) and W(u_1,u_3) in seed terms."""
    _require_k(params, 4)
    C1, C2 = params.c(1), params.c(2)
    D1, D2, D3 = params.d(1), params.d(2), params.d(3)
    w = lambda i, fi, j, fj: _seed_w2(seed, i, fi, j, fj)  # noqa: E731
    w_ua, w_ub, w_uc = w(0, "u", 1, "u"), w(0, "u", 1, "v"), w(0, "u", 2, "u")
    w12 = D1 + w_ua
    w13 = D2 + C1 * w_ua + D1 * w_ub + 0.5 * w_uc
    middle = (D3 + C1 * D2 - C2 * D1 + C1 ** 2 * w_ua + 2 * C1 * D1 * w_ub + C1 * w_uc
              + D1 * w(0, "v", 2, "u") + w(0, "u", 3, "u") / 6 + D1 ** 2 * w(0, "v", 1, "v")
              + 0.5 * w(1, "u", 2, "u"))
    return w12, middle, w13


def w4_reduced(seed: SeedEvaluation, params: ChainParameters,
               form: str = "blocks") -> SampledFunction:
    """W4 = W(u_1,u_2)[W(u_1,u_4) + W(u_2,u_3)] - W(u_1,u_3)^2."""
    _require_k(params, 4)
    if form == "identity":
        ch = build_chain(seed, params)
        m, mx = ch.members, ch.members_x
        w = lambda i, j: wronskian2(m[i], mx[i], m[j], mx[j])  # noqa: E731
        w12, middle, w13 = w(0, 1), w(0, 3) + w(1, 2), w(0, 2)
    elif form == "blocks":
        w12, middle, w13 = w4_blocks(seed, params)
    else:
        raise ValueError(f"unknown reduced form {form!r}")
    return SampledFunction(seed.grid, w12 * middle - w13 ** 2)


def w_reduced(seed: SeedEvaluation, params: ChainParameters) -> SampledFunction:
    if params.k == 1:
        return seed.u(0)
    if params.k == 2:
        return w2_reduced(seed, params)
    if params.k == 3:
        return w3_reduced(seed, params)
    if params.k == 4:
        return w4_reduced(seed, params)
    raise ValueError("reduced forms exist for k <= 4 only")


# ------------------------------------------------------------------- bundles

@dataclass(frozen=True, eq=False)
class WronskianBundle:
    """W_k, W_{k-1} and the derivatives of W_k needed for V_k."""

    params: ChainParameters
    W_k: SampledFunction
    W_km1: SampledFunction
    dW: np.ndarray
    d2W: np.ndarray
    method: WronskianMethod
    crosscheck: float = float("nan")
    crosscheck_detail: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.W_k.grid


def relative_deviation(a, b) -> float:
    """sup |a - b| / sup max(|a|, |b|)."""
    a = a.values if isinstance(a, SampledFunction) else np.asarray(a)
    b = b.values if isinstance(b, SampledFunction) else np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(a - b)) / scale)


def pointwise_relative_deviation(a, b, floor: float = 0.0) -> float:
    a = a.values if isinstance(a, SampledFunction) else np.asarray(a)
    b = b.values if isinstance(b, SampledFunction) else np.asarray(b)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    diff = np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)
    return float(np.max(ratio))


def compute_bundle(seed: SeedEvaluation, params: ChainParameters,
                   method: WronskianMethod | str = WronskianMethod.DETERMINANT,
                   crosscheck: bool = False) -> WronskianBundle:
    """Evaluate W_k with the chosen method; derivatives always come from jets.

    With ``crosscheck`` every other available method is evaluated as well
    and the largest pointwise relative deviation is recorded.
    """
    method = WronskianMethod(method)
    k = params.k
    jets = chain_jets(seed, params, k + 2)
    W_det, dW, d2W = wronskian_from_jets(jets, derivatives=True)
    W_km1 = wronskian_from_jets(jets[: k - 1, : k - 1]) if k > 1 else np.ones_like(W_det)
    values = {WronskianMethod.DETERMINANT: W_det}
    if method is WronskianMethod.EXPANDED or (crosscheck and k >= 2):
        values[WronskianMethod.EXPANDED] = w_expanded(seed, params).values
    if method is WronskianMethod.REDUCED or (crosscheck and 2 <= k <= 4):
        values[WronskianMethod.REDUCED] = w_reduced(seed, params).values
    detail = {}
    ref = values[WronskianMethod.DETERMINANT]
    for m, val in values.items():
        if m is not WronskianMethod.DETERMINANT:
            detail[m.value] = pointwise_relative_deviation(val, ref)
    worst = max(detail.values()) if detail else float("nan")
    W = values[method]
    if not np.all(np.isfinite(W)):
        raise ValueError("Wronskian is not finite on the grid")
    return WronskianBundle(params, SampledFunction(seed.grid, W),
                           SampledFunction(seed.grid, W_km1), dW, d2W, method, worst, detail)


# -------------------------------------------------------------- identities

DEFAULT_IDENTITY_PARAMS = {3: ((0.3, -0.2), (0.5, 0.1)), 4: ((0.3, -0.2, 0.7), (0.5, 0.1, -0.4))}


@dataclass(frozen=True)
class IdentityReport:
    deviations: dict
    tolerances: dict

    @property
    def failing(self) -> list[str]:
        return [k for k, v in self.deviations.items()
                if k in self.tolerances and not v < self.tolerances[k]]

    @property
    def ok(self) -> bool:
        return not self.failing


def identity_suite(seed: SeedEvaluation, tolerances: dict | None = None,
                   params3: ChainParameters | None = None,
                   params4: ChainParameters | None = None) -> IdentityReport:
    """Pointwise checks of the Wronskian identities used by the construction.

    Deviations are relative to the sup-norm of the two sides.  The entry
    ``eps_identity_2_printed_sign`` evaluates the second energy-derivative
    identity with the opposite overall sign; it is informational and is not
    expected to vanish.
    """
    if seed.k < 3:
        raise ValueError("identity suite needs energy derivatives up to order 2")
    x = seed.grid.x
    u, ux = seed.u_derivs[0], seed.ux_derivs[0]
    dev = {}
    dev["w_uv_is_one"] = float(np.max(np.abs(seed.wronskian_uv() - 1.0)))
    h, hx = x ** 2, 2 * x
    lhs = wronskian2(u, ux, h * u, hx * u + h * ux)
    dev["w_f_hf"] = relative_deviation(lhs, hx * u ** 2)
    w = lambda i, fi, j, fj: _seed_w2(seed, i, fi, j, fj)  # noqa: E731
    dev["eps_identity_1"] = relative_deviation(w(0, "u", 1, "v"), w(0, "v", 1, "u"))
    lhs = w(1, "u", 1, "v")
    rhs = 0.5 * (w(0, "v", 2, "u") - w(0, "u", 2, "v"))
    dev["eps_identity_2"] = relative_deviation(lhs, rhs)
    dev["eps_identity_2_printed_sign"] = relative_deviation(lhs, -rhs)
    eps = seed.epsilon
    p3 = params3 or ChainParameters(eps, 3, *DEFAULT_IDENTITY_PARAMS[3])
    det3 = wronskian_from_jets(chain_jets(seed, p3, 3))
    dev["three_member_reduction"] = relative_deviation(w3_reduced(seed, p3, "identity"), det3)
    if seed.k >= 4:
        p4 = params4 or ChainParameters(eps, 4, *DEFAULT_IDENTITY_PARAMS[4])
        det4 = wronskian_from_jets(chain_jets(seed, p4, 4))
        dev["four_member_reduction"] = relative_deviation(w4_reduced(seed, p4, "identity"), det4)
    if tolerances is None:
        tolerances = default_identity_tolerances(seed)
    return IdentityReport(dev, tolerances)


def default_identity_tolerances(seed: SeedEvaluation) -> dict:
    from .seeds import SeedFamily

    loose = seed.family is not SeedFamily.FREE_PARTICLE
    return {
        "w_uv_is_one": 1e-8 if loose else 1e-9,
        "w_f_hf": 1e-8 if loose else 1e-9,
        "eps_identity_1": 1e-6 if loose else 1e-9,
        "eps_identity_2": 1e-6 if loose else 1e-9,
        "three_member_reduction": 1e-8 if loose else 1e-9,
        "four_member_reduction": 1e-8 if loose else 1e-9,
    }
