"""Command-line entry point: ``id-regret <command> [options]``.

Configuration comes from an optional flat ``key = value`` file with dotted
keys, overridden by command-line flags and ``--set key=value`` pairs.  Every
run writes one result file (CSV or JSON) and a ``.provenance.json`` sidecar.

Exit codes: 0 success, 2 tolerance failure, 3 configuration error.
"""

from __future__ import annotations

import os

# cap BLAS/OpenMP pools before numpy is loaded
_THREADS = os.environ.get("ID_REGRET_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = _THREADS

import argparse
import csv
import io
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, bayes, classify, energy, levy, regret, suite
from .errors import ClassificationError, ConfigError, IdRegretError, QuadratureError
from .grid import Grid1D

log = logging.getLogger("id_regret")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 2, 3
COMMANDS = ("classify", "regret", "energy", "identity", "blyth", "capacity", "catalog", "suite")
MAX_N = 65536

IDENTITY_COLUMNS = ["model", "prior", "param", "lhs", "rhs_spectral", "rhs_finite_h", "rhs_gradient", "ratio", "grid_n"]
VERDICT_COLUMNS = ["d", "trait", "recurrence", "admissibility", "rule"]

# default grids per model family: (half width, n)
DEFAULT_GRIDS = {"gaussian": (80.0, 2048), "cauchy": (400.0, 2048), "stable": (400.0, 2048)}


# configuration


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


# flag name -> dotted config key
FLAG_KEYS = {
    "model": "model.name", "v": "model.v", "c": "model.c", "alpha": "model.alpha", "scale": "model.scale",
    "prior": "prior.kind", "sigma2": "prior.sigma2", "beta": "prior.beta", "r0": "prior.r0",
    "theta0": "prior.theta0", "d": "d", "trait": "trait",
    "lower": "grid.lower", "upper": "grid.upper", "n": "grid.n",
    "h": "schedule.h", "n_list": "schedule.n", "R": "schedule.R",
    "output": "output.path", "format": "output.format", "criteria": "suite.criteria",
    "rate": "energy.rate", "seed": "energy.seed",
}


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required setting '{key}'")
        return float(default)
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"setting '{key}' must be a number, got {cfg[key]!r}") from exc


def _int(cfg, key, default=None):
    val = _float(cfg, key, default)
    if val != int(val):
        raise ConfigError(f"setting '{key}' must be an integer")
    return int(val)


def _list(cfg, key, default, cast=float):
    if key not in cfg:
        return list(default)
    try:
        return [cast(s) for s in str(cfg[key]).replace(";", ",").split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"setting '{key}' must be a comma-separated list") from exc


def build_model(cfg) -> levy.LevyTriplet:
    name = cfg.get("model.name", "gaussian").lower()
    try:
        if name == "gaussian":
            return levy.gaussian_model(_float(cfg, "model.v", 1.0))
        if name == "cauchy":
            return levy.cauchy_model(_float(cfg, "model.c", 1.0))
        if name == "stable":
            return levy.stable_model(_float(cfg, "model.alpha"), _float(cfg, "model.scale", 1.0))
    except (ValueError, IdRegretError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model parameters: {exc}") from exc
    raise ConfigError(f"unknown model '{name}' (expected gaussian, cauchy or stable)")


def build_prior(cfg) -> bayes.PriorSpec:
    kind = cfg.get("prior.kind", "uniform").lower().replace("-", "_")
    try:
        if kind == "uniform":
            return bayes.PriorSpec.uniform()
        if kind == "gaussian":
            s2 = _float(cfg, "prior.sigma2")
            return bayes.PriorSpec.point_mass(0.0) if s2 == 0 else bayes.PriorSpec.gaussian(s2)
        if kind in ("power_law", "powerlaw"):
            return bayes.PriorSpec.power_law(_float(cfg, "prior.beta"), _float(cfg, "prior.r0", 1.0))
        if kind == "student":
            return bayes.PriorSpec.student(_float(cfg, "prior.beta"), _float(cfg, "prior.r0", 1.0))
        if kind in ("point_mass", "pointmass"):
            return bayes.PriorSpec.point_mass(_float(cfg, "prior.theta0", 0.0))
    except ValueError as exc:
        raise ConfigError(f"invalid prior parameters: {exc}") from exc
    raise ConfigError(f"unknown prior '{kind}'")


def build_grid(cfg) -> Grid1D:
    name = cfg.get("model.name", "gaussian").lower()
    half, n_default = DEFAULT_GRIDS.get(name, (80.0, 2048))
    n = _int(cfg, "grid.n", n_default)
    if n < 8 or n > MAX_N or n & (n - 1):
        raise ConfigError(f"grid.n must be a power of two between 8 and {MAX_N}, got {n}")
    lower = _float(cfg, "grid.lower", -half)
    upper = _float(cfg, "grid.upper", half)
    if not upper > lower:
        raise ConfigError("grid.upper must exceed grid.lower")
    return Grid1D(lower, upper, n)


def build_trait(cfg):
    trait = cfg.get("trait")
    if trait is not None:
        t = trait.lower().replace("-", "_")
        if t in ("finite_variance", "finitevariance", "fv"):
            return classify.FiniteVariance()
        if t.startswith("stable"):
            return classify.StableTail(_float(cfg, "model.alpha"))
        raise ConfigError(f"unknown trait '{trait}'")
    name = cfg.get("model.name", "gaussian").lower()
    if name == "gaussian":
        return classify.FiniteVariance()
    if name == "cauchy":
        return classify.StableTail(1.0)
    if name == "stable":
        return classify.StableTail(_float(cfg, "model.alpha"))
    raise ConfigError(f"unknown model '{name}'")


# output


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_fmt(v) for v in value]
    if hasattr(value, "value") and not isinstance(value, str):
        return value.value
    return value


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def emit(rows, fmt: str, path, columns=None) -> Path:
    """Write ``rows`` (list of dicts) as CSV with ``columns`` or as JSON."""
    path = Path(path)
    if fmt == "csv":
        columns = columns or list(rows[0].keys()) if rows else columns or []
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(c)) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        payload = [_fmt(r) for r in rows]
        text = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2, sort_keys=False) + "\n"
    else:
        raise ConfigError(f"unknown output format '{fmt}'")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


def write_provenance(path: Path, cfg: dict, status: int, seconds: float, extra=None) -> Path:
    side = Path(str(path) + ".provenance.json")
    record = {
        "config": cfg,
        "status": status,
        "wall_time_s": round(seconds, 3),
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "threads": _THREADS,
        "tolerances": {"identity_estimators": 5e-3, "density_mass": 1e-6, "suite_budget_s": suite.SUITE_BUDGET},
    }
    if extra:
        record.update(extra)
    try:
        side.parent.mkdir(parents=True, exist_ok=True)
        side.write_text(json.dumps(_fmt(record), indent=2, default=str) + "\n")
    except OSError as exc:
        log.error("cannot write provenance sidecar %s: %s", side, exc)
    return side


# commands; each returns (rows, columns, ok, extra)


def cmd_classify(cfg):
    v = classify.classify_admissibility(_int(cfg, "d", 1), build_trait(cfg))
    return [v.row()], VERDICT_COLUMNS, True, None


def cmd_regret(cfg):
    model, prior, grid = build_model(cfg), build_prior(cfg), build_grid(cfg)
    value = regret.integrated_regret(model, prior, grid)
    row = {"model": regret.describe_model(model), "prior": prior.describe(), "regret": value, "grid_n": grid.n}
    return [row], ["model", "prior", "regret", "grid_n"], bool(np.isfinite(value)), None


def cmd_identity(cfg):
    model, prior, grid = build_model(cfg), build_prior(cfg), build_grid(cfg)
    if prior.kind is bayes.PriorKind.UNIFORM:
        raise ConfigError("identity needs a non-uniform prior")
    h = _list(cfg, "schedule.h", energy.DEFAULT_H)
    rep = regret.verify_identity(model, prior, grid, h)
    return [rep.row()], IDENTITY_COLUMNS, rep.check(), {"notes": rep.notes}


def cmd_energy(cfg):
    model, prior, grid = build_model(cfg), build_prior(cfg), build_grid(cfg)
    if prior.kind is bayes.PriorKind.UNIFORM:
        raise ConfigError("energy needs a non-uniform prior")
    sym = levy.symmetrize(model)
    marginal = bayes.marginal_density(model, prior, grid)
    root = marginal.sqrt()
    ests = [energy.energy_spectral(sym, root),
            energy.energy_finite_h(sym, root, _list(cfg, "schedule.h", energy.DEFAULT_H))]
    if cfg.get("energy.rate", "false").lower() in ("1", "true", "yes"):
        ests.append(energy.rate_function_lower_bound(sym, marginal.function, seed=_int(cfg, "energy.seed", 0)))
    rows = [{"method": e.method.value, "value": e.value, "tolerance": e.tolerance} for e in ests]
    ok = abs(ests[1].value - ests[0].value) <= energy.SPECTRAL_RTOL * max(ests[0].value, 1e-12) + 1e-10
    return rows, ["method", "value", "tolerance"], ok, None


def cmd_blyth(cfg):
    model, grid = build_model(cfg), build_grid(cfg)
    n_list = _list(cfg, "schedule.n", suite.BLYTH_SCHEDULE, int)
    est = energy.blyth_sequence_energies(levy.symmetrize(model), energy.default_eta(grid), n_list)
    rows = [{"n": k, "energy": e.value} for k, e in zip(n_list, est)]
    return rows, ["n", "energy"], True, None


def cmd_capacity(cfg):
    d = _int(cfg, "d", 1)
    alpha = _float(cfg, "model.alpha", 1.0)
    beta = _float(cfg, "prior.beta", 1.0)
    R_list = _list(cfg, "schedule.R", (1e2, 1e3, 1e4))
    recs = classify.capacity_profile(d, alpha, classify.ClosedExponent(beta), R_list)
    rows = [{"R": r.R, "energy": r.energy, "J": r.J, "product": r.product} for r in recs]
    return rows, ["R", "energy", "J", "product"], True, None


def cmd_catalog(cfg):
    rows = [v.row() for v in classify.catalog_report()]
    return rows, VERDICT_COLUMNS, True, None


def cmd_suite(cfg):
    only = _list(cfg, "suite.criteria", (), int) or None
    results = suite.run_suite(only)
    rows = [r for res in results for r in res.rows()]
    summary = {f"criterion_{r.number}": {"passed": r.passed, "seconds": round(r.seconds, 2)} for r in results}
    for r in results:
        print(f"criterion {r.number:2d} {'PASS' if r.passed else 'FAIL'}  {r.title}")
    return rows, ["criterion", "check", "value", "bound", "passed"], all(r.passed for r in results), {"criteria": summary}


HANDLERS = {"classify": cmd_classify, "regret": cmd_regret, "energy": cmd_energy, "identity": cmd_identity,
            "blyth": cmd_blyth, "capacity": cmd_capacity, "catalog": cmd_catalog, "suite": cmd_suite}
DEFAULT_FORMAT = {"classify": "json"}


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 3)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: configuration error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="id-regret", description="KL regret, Dirichlet energies and admissibility "
                                "classification for infinitely divisible location models.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat key = value file with dotted keys")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any dotted key")
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=("gaussian", "cauchy", "stable"))
    g.add_argument("--v", help="Gaussian variance")
    g.add_argument("--c", help="Cauchy scale")
    g.add_argument("--alpha", help="stable index")
    g.add_argument("--scale", help="stable scale")
    g.add_argument("--d", help="dimension (classify, capacity)")
    g.add_argument("--trait", help="finite-variance or stable (classify)")
    g = p.add_argument_group("prior")
    g.add_argument("--prior", help="uniform, gaussian, power_law, student or point_mass")
    g.add_argument("--sigma2")
    g.add_argument("--beta")
    g.add_argument("--r0")
    g.add_argument("--theta0")
    g = p.add_argument_group("grid and schedules")
    g.add_argument("--lower")
    g.add_argument("--upper")
    g.add_argument("--n", help="grid size, a power of two")
    g.add_argument("--h", help="comma-separated h schedule")
    g.add_argument("--n-list", dest="n_list", help="comma-separated Blyth schedule")
    g.add_argument("--R", help="comma-separated radii (capacity)")
    g.add_argument("--criteria", help="comma-separated criterion numbers (suite)")
    g.add_argument("--rate", action="store_const", const="true", help="also compute the rate-function bound")
    g.add_argument("--seed")
    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", help="result file (default: <command>.<format>)")
    g.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def resolve_config(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = str(val)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = v.strip()
    cfg["command"] = args.command
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    cfg = {"command": args.command}
    fmt = DEFAULT_FORMAT.get(args.command, "csv")
    out = Path(f"{args.command}.{fmt}")
    try:
        cfg = resolve_config(args)
        fmt = cfg.get("output.format", DEFAULT_FORMAT.get(args.command, "csv"))
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown output format '{fmt}'")
        out = Path(cfg.get("output.path", f"{args.command}.{fmt}"))
        rows, columns, ok, extra = HANDLERS[args.command](cfg)
    except (ConfigError, ClassificationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        write_provenance(out, cfg, EXIT_CONFIG, time.perf_counter() - t0, {"error": str(exc)})
        return EXIT_CONFIG
    except (QuadratureError, IdRegretError, FloatingPointError) as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        write_provenance(out, cfg, EXIT_TOLERANCE, time.perf_counter() - t0, {"error": str(exc)})
        return EXIT_TOLERANCE
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        write_provenance(out, cfg, EXIT_CONFIG, time.perf_counter() - t0, {"error": str(exc)})
        return EXIT_CONFIG
    status = EXIT_OK if ok else EXIT_TOLERANCE
    try:
        emit(rows, fmt, out, columns)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        write_provenance(out, cfg, EXIT_CONFIG, time.perf_counter() - t0, {"error": str(exc)})
        return EXIT_CONFIG
    write_provenance(out, cfg, status, time.perf_counter() - t0, extra)
    if args.command != "suite":
        print(out.read_text(), end="")
    if not ok:
        print("tolerance check failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
