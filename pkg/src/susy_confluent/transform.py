"""The confluent SUSY transformation: new potential and added eigenstate."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .jordan import RESIDUAL_TOL, build_chain, verify_chain
from .numerics import (ChainParameters, DerivativeStencil, SampledFunction, zero_brackets)
from .seeds import SeedEvaluation, SeedFamily
from .wronskian import WronskianBundle, WronskianMethod, compute_bundle


class Normalizability(enum.Enum):
    PHYSICAL = "physical"
    MATHEMATICAL = "mathematical"


@dataclass(frozen=True, eq=False)
class TransformResult:
    V0: SampledFunction
    Vk: SampledFunction
    psi_k: SampledFunction
    W_k: SampledFunction
    singularities: list
    diagnostics: dict = field(default_factory=dict)
    params: ChainParameters | None = None

    @property
    def singular(self) -> bool:
        return bool(self.singularities)

    @property
    def grid(self):
        return self.V0.grid


def _sampled(grid, values):
    return SampledFunction(grid, values, check_finite=bool(np.all(np.isfinite(values))))


def transform(V0: SampledFunction, bundle: WronskianBundle) -> TransformResult:
    """V_k = V0 - 2 (W'' W - W'^2) / W^2 and psi_k = W_{k-1} / W_k.

    A Wronskian with zeros in the window yields a result whose
    ``singularities`` list brackets them; the sampled V_k and psi_k are then
    kept as computed (possibly non-finite near the zeros).
    """
    if V0.grid != bundle.grid:
        raise ValueError("potential and Wronskian live on different grids")
    W = bundle.W_k.values
    brackets = zero_brackets(bundle.W_k)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r1 = bundle.dW / W
        log2 = bundle.d2W / W - r1 * r1
        Vk = V0.values - 2.0 * log2
        psi = bundle.W_km1.values / W
    grid = V0.grid
    return TransformResult(V0, _sampled(grid, Vk), _sampled(grid, psi), bundle.W_k, brackets,
                           {}, bundle.params)


def added_state(bundle: WronskianBundle) -> SampledFunction:
    brackets = zero_brackets(bundle.W_k)
    if brackets:
        from .numerics import SingularWronskianError

        raise SingularWronskianError(brackets)
    return SampledFunction(bundle.grid, bundle.W_km1.values / bundle.W_k.values)


def schrodinger_residual(psi: SampledFunction, V: SampledFunction, eps: complex,
                         accuracy: int = 6) -> float:
    """sup |(-d^2 + V - eps) psi| / sup |psi| with the stencil second derivative."""
    d2 = DerivativeStencil(2, accuracy).apply(psi.values, psi.grid.h)
    r = -d2 + (V.values - eps) * psi.values
    return float(np.max(np.abs(r)) / np.max(np.abs(psi.values)))


def normalizability_check(psi: SampledFunction, inner_fraction: float = 0.8,
                          tail_tol: float = 0.05) -> Normalizability:
    """Classify psi by how much of its window norm sits outside the inner part.

    The state counts as physical when the outer ``1 - inner_fraction`` of
    the window carries less than ``tail_tol`` of the trapezoid norm and the
    edge values are small against the peak.
    """
    x = psi.grid.x
    dens = np.abs(psi.values) ** 2
    total = np.trapezoid(dens, x)
    if not np.isfinite(total) or total == 0:
        return Normalizability.MATHEMATICAL
    centre = 0.5 * (x[0] + x[-1])
    half = 0.5 * inner_fraction * (x[-1] - x[0])
    inner = np.abs(x - centre) <= half
    tail = 1.0 - np.trapezoid(dens[inner], x[inner]) / total
    edge = max(abs(psi.values[0]), abs(psi.values[-1])) / np.max(np.abs(psi.values))
    if tail < tail_tol and edge < np.sqrt(tail_tol):
        return Normalizability.PHYSICAL
    return Normalizability.MATHEMATICAL


def imag_ratio(f: SampledFunction) -> float:
    """Largest imaginary part relative to max(1, sup |f|)."""
    return float(np.max(np.abs(f.values.imag)) / max(1.0, np.max(np.abs(f.values))))


def default_tolerances(family: SeedFamily) -> dict:
    analytic = family is SeedFamily.FREE_PARTICLE
    return {
        "chain_residual": RESIDUAL_TOL if analytic else 1e-4,
        "psi_residual": 1e-6 if analytic else 1e-4,
        "crosscheck": 1e-8 if analytic else 1e-7,
        "imag": 1e-10,
    }


def run_transform(seed: SeedEvaluation, params: ChainParameters,
                  method: WronskianMethod | str = WronskianMethod.DETERMINANT,
                  crosscheck: bool = True, diagnostics: bool = True) -> TransformResult:
    """Seed + parameters -> transformed potential with a diagnostics block."""
    if seed.k < params.k:
        raise ValueError("seed has too few energy derivatives for this chain")
    bundle = compute_bundle(seed, params, method, crosscheck=crosscheck)
    V0 = seed.potential.sampled()
    result = transform(V0, bundle)
    if not diagnostics:
        return result
    diag = {"method": bundle.method.value, "crosscheck": bundle.crosscheck,
            "crosscheck_detail": dict(bundle.crosscheck_detail),
            "spectator": {"C_%d" % (params.k - 1): params.C[-1], "effect": "none"}}
    chain = build_chain(seed, params)
    diag["chain_residuals"] = list(verify_chain(chain).links)
    if not result.singular:
        diag["psi_residual"] = schrodinger_residual(result.psi_k, result.Vk, params.epsilon)
        diag["imag_Vk"] = imag_ratio(result.Vk)
        diag["imag_psi"] = float(np.max(np.abs(result.psi_k.values.imag))
                                 / np.max(np.abs(result.psi_k.values)))
        diag["normalizability"] = normalizability_check(result.psi_k).value
    diag["tolerances"] = default_tolerances(seed.family)
    return TransformResult(result.V0, result.Vk, result.psi_k, result.W_k,
                           result.singularities, diag, params)
