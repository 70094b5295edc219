"""Confluent higher-order SUSY transformations of 1D Schrödinger potentials.

Typical use::

    from susy_confluent import ChainParameters, SeedRequest, build_seed, make_grid, run_transform

    grid = make_grid(-10, 10, 4001)
    seed = build_seed(SeedRequest("free", -1.0, 3, grid))
    result = run_transform(seed, ChainParameters(-1.0, 3, (0.0, 0.0), (0.0, -0.01)))
"""

from .elliptic import Lattice, elliptic_K, jacobi_sn, lattice_from_modulus
from .jordan import JordanChain, build_chain, verify_chain
from .numerics import (ChainParameters, DerivativeStencil, Grid, GridError, SampledFunction,
                       SingularWronskianError, differentiate, make_grid, second_log_derivative)
from .seeds import SeedError, SeedEvaluation, SeedFamily, SeedRequest, build_seed
from .spectral import BandClass, classify_energy, detect_band_edges, singularity_scan
from .transform import Normalizability, TransformResult, run_transform, transform
from .wronskian import WronskianMethod, compute_bundle, identity_suite

__version__ = "0.1.0"

__all__ = [
    "BandClass", "ChainParameters", "DerivativeStencil", "Grid", "GridError", "JordanChain",
    "Lattice", "Normalizability", "SampledFunction", "SeedError", "SeedEvaluation",
    "SeedFamily", "SeedRequest", "SingularWronskianError", "TransformResult",
    "WronskianMethod", "build_chain", "build_seed", "classify_energy", "compute_bundle",
    "detect_band_edges", "differentiate", "elliptic_K", "identity_suite", "jacobi_sn",
    "lattice_from_modulus", "make_grid", "run_transform", "second_log_derivative",
    "singularity_scan", "transform", "verify_chain",
]
