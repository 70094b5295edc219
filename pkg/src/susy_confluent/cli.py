"""Command-line interface: transform, verify, scan, bands and identities."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
import threading
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .elliptic import (ELLIPTIC_IDENTITY_TOLERANCES, elliptic_K, elliptic_identity_suite,
                       lattice_from_modulus)
from .jordan import build_chain, verify_chain
from .numerics import ChainParameters, SampledFunction, make_grid
from .seeds import SeedFamily, SeedRequest, build_seed
from .seeds.lame import epsilon_from_delta
from .spectral import (band_sweep, detect_band_edges, scan_threads, singularity_scan)
from .transform import default_tolerances, run_transform
from .wronskian import identity_suite

SCHEMA = 1
EXIT_OK, EXIT_ERROR, EXIT_SINGULAR = 0, 1, 2
DEFAULT_N = 4001
DEFAULT_SCAN_CAP = 100_000
CSV_COLUMNS = ("x", "V0", "Vk", "psi_k_re", "psi_k_im", "W_re", "W_im")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce one run; round-trips through JSON."""

    family: str = "free"
    k: int = 2
    epsilon: float | None = None
    delta: complex | None = None
    m: float | None = None
    C: tuple = ()
    D: tuple = ()
    x_min: float | None = None
    x_max: float | None = None
    n_points: int | None = None
    out: str | None = None
    format: str = "csv"
    verify: bool = False
    normalize: bool = False
    potential_file: str | None = None
    method: str = "determinant"

    def __post_init__(self):
        self.family = SeedFamily.parse(self.family).value
        self.k = int(self.k)
        if self.k < 2:
            raise ConfigError("k must be at least 2")
        if (self.epsilon is None) == (self.delta is None):
            raise ConfigError("give exactly one of epsilon and delta")
        if self.delta is not None:
            if self.family != SeedFamily.LAME.value:
                raise ConfigError("delta is only meaningful for the Lamé family")
            self.delta = complex(self.delta)
        if self.epsilon is not None:
            self.epsilon = float(self.epsilon)
        self.C = tuple(float(c) for c in self.C) or (0.0,) * (self.k - 1)
        self.D = tuple(float(d) for d in self.D) or (0.0,) * (self.k - 1)
        if len(self.C) != self.k - 1 or len(self.D) != self.k - 1:
            raise ConfigError(f"C and D need k - 1 = {self.k - 1} values each")
        if self.family == SeedFamily.LAME.value:
            if self.m is None:
                raise ConfigError("the Lamé family needs m")
            self.m = float(self.m)
        if self.family == SeedFamily.NUMERIC_POTENTIAL.value and not self.potential_file:
            raise ConfigError("the numeric family needs a potential file")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    # ---- serialisation
    def to_dict(self) -> dict:
        d = asdict(self)
        d["C"], d["D"] = list(self.C), list(self.D)
        if self.delta is not None:
            d["delta"] = [self.delta.real, self.delta.imag]
        d["schema"] = SCHEMA
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        schema = data.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema}")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(data.get("delta"), (list, tuple)):
            re, im = data["delta"]
            data["delta"] = complex(re, im)
        return cls(**data)

    # ---- derived objects
    def resolved_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        eps = epsilon_from_delta(self.delta, lattice_from_modulus(self.m))
        if abs(eps.imag) > 1e-10:
            raise ConfigError("delta gives a complex energy")
        return float(eps.real)

    def params(self) -> ChainParameters:
        return ChainParameters(self.resolved_epsilon(), self.k, self.C, self.D)

    def grid(self):
        if self.family == SeedFamily.NUMERIC_POTENTIAL.value:
            return load_potential(self.potential_file).grid
        if self.family == SeedFamily.LAME.value:
            half = 4.0 * elliptic_K(self.m)
        else:
            half = 15.0
        x_min = -half if self.x_min is None else self.x_min
        x_max = half if self.x_max is None else self.x_max
        return make_grid(x_min, x_max, self.n_points or DEFAULT_N)

    def seed_request(self, k: int | None = None, epsilon: float | None = None) -> SeedRequest:
        grid = self.grid()
        samples = load_potential(self.potential_file) if self.potential_file else None
        eps = self.resolved_epsilon() if epsilon is None else epsilon
        return SeedRequest(self.family, eps, k or self.k, grid, m=self.m,
                           potential_samples=samples)


def load_potential(path: str) -> SampledFunction:
    """Read a two-column CSV (header ``x,V``) sampled on a uniform grid."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError("empty potential file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["x", "V"]:
        raise ConfigError("potential file needs the header 'x,V'")
    data = np.array([[float(a), float(b)] for a, b, *_ in rows[1:]])
    x, V = data[:, 0], data[:, 1]
    grid = make_grid(x[0], x[-1], len(x))
    if np.max(np.abs(grid.x - x)) > 1e-9 * max(1.0, np.max(np.abs(x))):
        raise ConfigError("potential samples must lie on a uniform grid")
    return SampledFunction(grid, V)


CAPTION_LAYOUTS = ("auto", "m-eps", "eps-full")


def caption_to_config(values, family: str, k: int, m: float | None = None,
                      layout: str = "auto") -> dict:
    """Map figure-caption parameter lists onto config fields.

    Layouts:

    * ``m-eps``: ``[m,] eps, C_1..C_{k-2}, D_1..D_{k-1}`` with the spectator
      C_{k-1} omitted (m only for the Lamé family);
    * ``eps-full``: ``eps, C_1..C_{k-1}, D_1..D_{k-1}`` with m from the option.

    ``auto`` picks ``m-eps`` when the count fits and, for Lamé, the leading
    value is a valid modulus; otherwise ``eps-full``.
    """
    values = [float(v) for v in values]
    if layout not in CAPTION_LAYOUTS:
        raise ConfigError(f"unknown caption layout {layout!r}")
    lame = SeedFamily.parse(family) is SeedFamily.LAME
    lead = 1 if lame else 0
    short = lead + 1 + (k - 2) + (k - 1)
    full = 1 + 2 * (k - 1)
    fits_short = len(values) == short and (not lame or 0.0 < values[0] < 1.0)
    if layout == "m-eps" or (layout == "auto" and fits_short):
        if len(values) != short:
            raise ConfigError(f"layout m-eps needs {short} values for k = {k}")
        m_val = values[0] if lame else m
        eps, rest = values[lead], values[lead + 1:]
        return {"m": m_val, "epsilon": eps, "C": rest[: k - 2] + [0.0], "D": rest[k - 2:]}
    if len(values) != full:
        raise ConfigError(f"cannot map {len(values)} caption values for k = {k}")
    eps, rest = values[0], values[1:]
    return {"m": m, "epsilon": eps, "C": rest[: k - 1], "D": rest[k - 1:]}


# ------------------------------------------------------------------ output

def atomic_write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    return "%.17g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_transform(cfg: RunConfig) -> int:
    params = cfg.params()
    seed = build_seed(cfg.seed_request())
    result = run_transform(seed, params, method=cfg.method)
    x = result.grid.x
    psi = result.psi_k.values
    if cfg.normalize and not result.singular:
        psi = psi / math.sqrt(np.trapezoid(np.abs(psi) ** 2, x))
    cols = {
        "x": x, "V0": result.V0.values.real, "Vk": result.Vk.values.real,
        "psi_k_re": psi.real, "psi_k_im": psi.imag,
        "W_re": result.W_k.values.real, "W_im": result.W_k.values.imag,
    }
    diag = dict(result.diagnostics)
    diag["singularities"] = [list(b) for b in result.singularities]
    diag["singular"] = result.singular
    if cfg.format == "csv":
        rows = ([_fmt(cols[c][i]) for c in CSV_COLUMNS] for i in range(len(x)))
        atomic_write(cfg.out, _csv_text(CSV_COLUMNS, rows))
        if result.singular:
            print(f"singular: W_k vanishes near {diag['singularities'][:5]}", file=sys.stderr)
    else:
        payload = {"schema": SCHEMA, "config": cfg.to_dict(),
                   "columns": {c: cols[c].tolist() for c in CSV_COLUMNS},
                   "diagnostics": diag}
        atomic_write(cfg.out, dumps(payload))
    return EXIT_SINGULAR if result.singular else EXIT_OK


def verification_report(cfg: RunConfig) -> dict:
    """Run every diagnostic available for the configuration."""
    params = cfg.params()
    seed = build_seed(cfg.seed_request(k=max(cfg.k, 3)))
    tol = default_tolerances(seed.family)
    checks = {}

    def add(name, value, limit):
        checks[name] = {"value": value, "tolerance": limit,
                        "pass": bool(np.isfinite(value) and value < limit)}

    add("w_uv_is_one", float(np.max(np.abs(seed.wronskian_uv() - 1.0))), 1e-8)
    chain = build_chain(seed, params)
    for j, r in enumerate(verify_chain(chain).links, start=1):
        add(f"chain_link_{j}", r, tol["chain_residual"])
    result = run_transform(seed, params, method=cfg.method, crosscheck=True)
    if not math.isnan(result.diagnostics["crosscheck"]):
        add("method_crosscheck", result.diagnostics["crosscheck"], tol["crosscheck"])
    if not result.singular:
        add("psi_residual", result.diagnostics["psi_residual"], tol["psi_residual"])
        add("imag_Vk", result.diagnostics["imag_Vk"], tol["imag"])
    report = identity_suite(seed)
    for name, value in report.deviations.items():
        if name in report.tolerances:
            add(f"identity_{name}", value, report.tolerances[name])
    if seed.lattice is not None:
        for name, value in elliptic_identity_suite(seed.lattice).items():
            add(f"elliptic_{name}", value, ELLIPTIC_IDENTITY_TOLERANCES[name])
    return {"schema": SCHEMA, "config": cfg.to_dict(), "singular": result.singular,
            "singularities": [list(b) for b in result.singularities],
            "checks": checks, "pass": all(c["pass"] for c in checks.values())}


def cmd_verify(cfg: RunConfig) -> int:
    report = verification_report(cfg)
    atomic_write(cfg.out, dumps(report))
    return EXIT_OK if report["pass"] else EXIT_ERROR


def cmd_identities(cfg: RunConfig) -> int:
    seed = build_seed(cfg.seed_request(k=max(cfg.k, 4)))
    report = identity_suite(seed)
    out = {"schema": SCHEMA, "wronskian": report.deviations,
           "wronskian_tolerances": report.tolerances}
    ok = report.ok
    if seed.lattice is not None:
        ell = elliptic_identity_suite(seed.lattice)
        out["elliptic"] = ell
        out["elliptic_tolerances"] = ELLIPTIC_IDENTITY_TOLERANCES
        ok = ok and all(v < ELLIPTIC_IDENTITY_TOLERANCES[k] for k, v in ell.items())
    out["pass"] = ok
    atomic_write(cfg.out, dumps(out))
    return EXIT_OK if ok else EXIT_ERROR


def parse_ranges(specs, k: int) -> list[tuple[str, np.ndarray]]:
    valid = {"epsilon"} | {f"C{i}" for i in range(1, k)} | {f"D{i}" for i in range(1, k)}
    out = []
    for name, start, stop, num in specs or []:
        if name not in valid:
            raise ConfigError(f"unknown scan parameter {name!r}; choose from {sorted(valid)}")
        n = int(num)
        if n < 0:
            raise ConfigError("range counts must be non-negative")
        out.append((name, np.linspace(float(start), float(stop), n)))
    return out


def scan_params(cfg: RunConfig, ranges, cap: int = DEFAULT_SCAN_CAP) -> list[ChainParameters]:
    total = 1
    for _, vals in ranges:
        total *= len(vals)
    if total > cap:
        raise ConfigError(f"scan would produce {total} records, above the cap of {cap}")
    base = {"epsilon": cfg.resolved_epsilon()}
    base.update({f"C{i}": c for i, c in enumerate(cfg.C, start=1)})
    base.update({f"D{i}": d for i, d in enumerate(cfg.D, start=1)})
    names = [n for n, _ in ranges]
    out = []
    for combo in itertools.product(*(vals for _, vals in ranges)):
        values = dict(base)
        values.update(zip(names, (float(v) for v in combo)))
        C = [values[f"C{i}"] for i in range(1, cfg.k)]
        D = [values[f"D{i}"] for i in range(1, cfg.k)]
        out.append(ChainParameters(values["epsilon"], cfg.k, C, D))
    return out


def run_scan(cfg: RunConfig, ranges, cap: int = DEFAULT_SCAN_CAP, threads: int | None = None):
    params_list = scan_params(cfg, ranges, cap)
    cache: dict = {}
    lock = threading.Lock()

    def seed_for(p: ChainParameters):
        key = p.epsilon.real
        with lock:
            if key not in cache:
                try:
                    cache[key] = build_seed(cfg.seed_request(epsilon=key))
                except Exception as exc:  # remembered so the scan records it
                    cache[key] = exc
        seed = cache[key]
        if isinstance(seed, Exception):
            raise seed
        return seed

    records = singularity_scan(seed_for, params_list, threads or scan_threads())
    order = sorted(range(len(records)),
                   key=lambda i: (-records[i].min_abs_W if math.isfinite(records[i].min_abs_W)
                                  else math.inf, i))
    return [records[i] for i in order]


def cmd_scan(cfg: RunConfig, ranges, cap: int = DEFAULT_SCAN_CAP) -> int:
    records = run_scan(cfg, ranges, cap)
    k = cfg.k
    header = (["epsilon"] + [f"C{i}" for i in range(1, k)] + [f"D{i}" for i in range(1, k)]
              + ["singular", "n_zeros", "min_abs_W", "error"])
    rows = []
    for r in records:
        p = r.params
        rows.append([_fmt(p.epsilon.real)] + [_fmt(c) for c in p.C] + [_fmt(d) for d in p.D]
                    + [int(r.singular), r.n_zeros, _fmt(r.min_abs_W), r.error or ""])
    if cfg.format == "csv":
        atomic_write(cfg.out, _csv_text(header, rows))
    else:
        atomic_write(cfg.out, dumps({"schema": SCHEMA, "config": cfg.to_dict(),
                                     "columns": header, "rows": rows}))
    return EXIT_OK


def cmd_bands(m: float, e_min: float, e_max: float, n: int, out: str | None,
              fmt: str = "csv", edge_tol: float = 1e-3) -> int:
    reports = band_sweep(m, e_min, e_max, n, edge_tol)
    edges = detect_band_edges(m, e_min, e_max, max(n, 2)) if n >= 2 else []
    header = ["energy", "delta_re", "delta_im", "kappa_re", "kappa_im", "classification"]
    rows = [[_fmt(r.energy), _fmt(r.delta.real), _fmt(r.delta.imag),
             _fmt(r.quasimomentum.real), _fmt(r.quasimomentum.imag), r.classification.value]
            for r in reports]
    if fmt == "csv":
        atomic_write(out, _csv_text(header, rows))
        print("band edges: " + ", ".join("%.6f" % e for e in edges),
              file=sys.stderr if out in (None, "-") else sys.stdout)
    else:
        atomic_write(out, dumps({"schema": SCHEMA, "m": m, "columns": header, "rows": rows,
                                 "edges": edges}))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration (schema 1)")
    p.add_argument("--family", choices=["free", "lame", "numeric"])
    p.add_argument("--m", type=float, help="Lamé modulus")
    p.add_argument("--epsilon", type=float, help="factorization energy")
    p.add_argument("--delta", type=complex, help="Lamé displacement instead of epsilon")
    p.add_argument("--k", type=int, help="order of the transformation")
    p.add_argument("--C", type=float, nargs="*", help="C_1 .. C_{k-1}")
    p.add_argument("--D", type=float, nargs="*", help="D_1 .. D_{k-1}")
    p.add_argument("--caption", type=float, nargs="+",
                   help="parameters in figure-caption order (see README)")
    p.add_argument("--caption-layout", choices=CAPTION_LAYOUTS, default="auto")
    p.add_argument("--potential", dest="potential_file", help="CSV with columns x,V")
    p.add_argument("--xmin", dest="x_min", type=float)
    p.add_argument("--xmax", dest="x_max", type=float)
    p.add_argument("--n", dest="n_points", type=int)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--method", choices=["determinant", "expanded", "reduced"])
    p.add_argument("--normalize", action="store_true", default=None,
                   help="L2-normalise psi_k over the window")


def config_from_args(args) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        data.pop("schema", None)
    keys = ["family", "m", "epsilon", "delta", "k", "C", "D", "potential_file", "x_min",
            "x_max", "n_points", "out", "format", "method", "normalize"]
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "caption", None):
        data.update({k: v for k, v in caption_to_config(
            args.caption, data.get("family", "free"), int(data.get("k", 2)),
            data.get("m"), args.caption_layout).items() if v is not None})
    if isinstance(data.get("delta"), (list, tuple)):
        data["delta"] = complex(*data["delta"])
    if args.delta is not None:
        data.pop("epsilon", None)
    elif args.epsilon is not None:
        data.pop("delta", None)
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="susy-confluent",
        description="Confluent higher-order SUSY transformations of 1D Schrödinger potentials.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("transform", "write V0, Vk, psi_k and W_k on the grid"),
                            ("verify", "run residual, identity and cross-method checks"),
                            ("identities", "run the Wronskian and elliptic identity suites")):
        _add_run_options(sub.add_parser(name, help=help_text))
    scan = sub.add_parser("scan", help="singularity scan over parameter ranges")
    _add_run_options(scan)
    scan.add_argument("--range", nargs=4, action="append", metavar=("NAME", "START", "STOP", "NUM"),
                      help="sweep NAME (epsilon, C1.., D1..) over NUM points; repeatable")
    scan.add_argument("--max-records", type=int, default=DEFAULT_SCAN_CAP)
    bands = sub.add_parser("bands", help="classify Lamé energies into bands and gaps")
    bands.add_argument("--m", type=float, required=True)
    bands.add_argument("--emin", type=float, default=-2.0)
    bands.add_argument("--emax", type=float, default=4.0)
    bands.add_argument("--n", type=int, default=400)
    bands.add_argument("--edge-tol", type=float, default=1e-3)
    bands.add_argument("--out")
    bands.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bands":
            if not 0.0 < args.m < 1.0:
                raise ConfigError("m must lie in (0, 1)")
            return cmd_bands(args.m, args.emin, args.emax, args.n, args.out, args.format,
                             args.edge_tol)
        cfg = config_from_args(args)
        if args.command == "transform":
            return cmd_transform(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "identities":
            return cmd_identities(cfg)
        ranges = parse_ranges(args.range, cfg.k)
        return cmd_scan(cfg, ranges, args.max_records)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
