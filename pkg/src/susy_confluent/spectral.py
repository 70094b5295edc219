"""Band classification, singularity scans and the Pöschl-Teller matcher."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .elliptic import Lattice, lattice_from_modulus
from .numerics import ChainParameters, SampledFunction, zero_brackets
from .seeds import SeedEvaluation
from .seeds.lame import band_edges, lame_delta_from_epsilon, reduced_quasimomentum
from .wronskian import chain_jets, wronskian_from_jets

THREADS_ENV = "SUSY_CONFLUENT_THREADS"


class BandClass(enum.Enum):
    ALLOWED_BAND = "AllowedBand"
    BAND_GAP = "BandGap"
    LOWER_GAP = "LowerGap"
    BAND_EDGE = "BandEdge"


@dataclass(frozen=True)
class BandReport:
    energy: float
    delta: complex
    quasimomentum: complex
    classification: BandClass


def _classify_kappa(kappa: complex, band_tol: float) -> BandClass:
    if abs(kappa.imag) < band_tol:
        return BandClass.ALLOWED_BAND
    # gaps pin Re kappa to 0 (lower gap) or pi (finite gap)
    if abs(kappa.real - math.pi) < 0.5 * math.pi:
        return BandClass.BAND_GAP
    return BandClass.LOWER_GAP


def classify_energy(E: float, m: float | Lattice, edge_tol: float = 1e-3,
                    band_tol: float = 1e-8) -> BandReport:
    """Classify E by the quasi-momentum of its Bloch solutions.

    Energies within ``edge_tol`` of a band edge are reported as
    ``BandEdge`` and left unclassified.
    """
    lat = m if isinstance(m, Lattice) else lattice_from_modulus(m)
    E = float(E)
    if min(abs(E - e) for e in band_edges(lat)) < edge_tol:
        try:
            delta = lame_delta_from_epsilon(E, lat, band_margin=0.0, allow_bands=True)
            kappa = reduced_quasimomentum(delta, lat)
        except Exception:  # exactly at an edge the solve may sit on a segment end
            delta, kappa = complex("nan"), complex("nan")
        return BandReport(E, delta, kappa, BandClass.BAND_EDGE)
    delta = lame_delta_from_epsilon(E, lat, band_margin=0.0, allow_bands=True)
    kappa = reduced_quasimomentum(delta, lat)
    return BandReport(E, delta, kappa, _classify_kappa(kappa, band_tol))


def band_sweep(m: float, e_min: float = -2.0, e_max: float = 4.0, n: int = 400,
               edge_tol: float = 1e-3) -> list[BandReport]:
    lat = lattice_from_modulus(m)
    return [classify_energy(E, lat, edge_tol) for E in np.linspace(e_min, e_max, n)]


def detect_band_edges(m: float, e_min: float = -2.0, e_max: float = 4.0, n: int = 400,
                      tol: float = 1e-6, band_tol: float = 1e-8) -> list[float]:
    """Locate the energies where the quasi-momentum classification changes.

    A coarse sweep finds neighbouring energies with different classes; each
    such pair is bisected on the raw quasi-momentum test (no edge flag).
    """
    lat = lattice_from_modulus(m)

    def cls(E):
        delta = lame_delta_from_epsilon(E, lat, band_margin=0.0, allow_bands=True)
        return _classify_kappa(reduced_quasimomentum(delta, lat), band_tol)

    energies = np.linspace(e_min, e_max, n)
    classes = [cls(E) for E in energies]
    edges = []
    for a, b, ca, cb in zip(energies[:-1], energies[1:], classes[:-1], classes[1:]):
        if ca is cb:
            continue
        lo, hi = float(a), float(b)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if cls(mid) is ca:
                lo = mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    return edges


# ------------------------------------------------------------------ scanning

@dataclass(frozen=True)
class ScanRecord:
    params: ChainParameters
    singular: bool
    n_zeros: int
    min_abs_W: float
    error: str | None = None


def _scan_one(seed: SeedEvaluation, params: ChainParameters) -> ScanRecord:
    try:
        W = wronskian_from_jets(chain_jets(seed, params, params.k))
        if not np.all(np.isfinite(W)):
            raise ValueError("non-finite Wronskian")
        n_zeros = len(zero_brackets(W, seed.grid))
        return ScanRecord(params, n_zeros > 0, n_zeros, float(np.min(np.abs(W))))
    except Exception as exc:  # record and keep scanning
        return ScanRecord(params, True, 0, float("nan"), f"{type(exc).__name__}: {exc}")


def scan_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def singularity_scan(seed_for, params_list, threads: int | None = None) -> list[ScanRecord]:
    """Evaluate W_k for every parameter set and record its zeros.

    ``seed_for`` is either a :class:`SeedEvaluation` shared by all records
    or a callable mapping a :class:`ChainParameters` to a seed (seeds are
    cached per energy by the caller).  Failures are recorded, not raised.
    """
    params_list = list(params_list)
    if not params_list:
        return []

    def job(p):
        try:
            seed = seed_for if isinstance(seed_for, SeedEvaluation) else seed_for(p)
        except Exception as exc:
            return ScanRecord(p, True, 0, float("nan"), f"{type(exc).__name__}: {exc}")
        return _scan_one(seed, p)

    threads = threads or scan_threads()
    if threads == 1 or len(params_list) == 1:
        return [job(p) for p in params_list]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, params_list))


# -------------------------------------------------------------- Pöschl-Teller

@dataclass(frozen=True)
class PoschlTellerFit:
    kappa_fit: float
    x0_fit: float
    sup_error: float


def poschl_teller(x, kappa: float, x0: float):
    """-2 kappa^2 sech^2(kappa (x + x0))."""
    return -2.0 * kappa ** 2 / np.cosh(kappa * (np.asarray(x) + x0)) ** 2


def poschl_teller_match(V: SampledFunction) -> PoschlTellerFit:
    """Read kappa from the well depth and x0 from its position.

    The minimum is refined by the parabola through the three lowest
    samples, so wells centred between grid points are still matched.
    """
    vals = V.values
    if np.max(np.abs(vals.imag)) > 1e-8 * max(1.0, np.max(np.abs(vals))):
        raise ValueError("potential is not real")
    v = vals.real
    if np.min(v) >= 0:
        raise ValueError("potential has no well to fit")
    x = V.grid.x
    i = int(np.argmin(v))
    xm, vm = x[i], v[i]
    if 0 < i < len(v) - 1:
        a, b, c = v[i - 1], v[i], v[i + 1]
        denom = a - 2 * b + c
        if denom > 0:
            t = 0.5 * (a - c) / denom
            xm = x[i] + t * V.grid.h
            vm = b - 0.25 * (a - c) * t
    kappa = math.sqrt(-vm / 2.0)
    x0 = float(-xm)
    err = float(np.max(np.abs(v - poschl_teller(x, kappa, x0))))
    return PoschlTellerFit(kappa, x0, err)
