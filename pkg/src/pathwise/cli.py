"""Experiment runner.

Subcommands map onto the analysis modules:

    generate    synthesize or ingest a path and write it as t,value CSV
    variation   cumulative p-th variation per level     (level,t,value)
    local-time  discrete local time field               (level,t,x,value)
    tanaka      change-of-variable / Tanaka-Meyer / Ito (identity CSV)
    identities  local-time identity suite + scaling + occupation checks
    ranks       integration-along-ranks decomposition   (k,level,t,A,B,C,D,residual)
    acceptance  full acceptance suite with artifacts and summary
    run         drive any combination from a JSON config

Outputs are deterministic functions of the configuration: floats are
written with shortest round-trip formatting, seeds are pinned, and the
worker count (env PATHWISE_WORKERS) never changes any byte of output.
A failing exact-class identity makes the exit status non-zero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import acceptance as acc
from .errors import ConfigError, PathwiseError
from .integrate import TANAKA_CLASS_NAMES, tanaka_class
from .localtime import SpaceGrid, discrete_local_time
from .partitions import dyadic_hierarchy, lebesgue_hierarchy
from .paths import PathSpec, generate, write_path_csv
from .ranks import build_rank_system, rank_decomposition, rank_sum_identity
from .tanaka import (
    CellIndicator,
    finite_n_report,
    identity_suite,
    ito_residual,
    occupation_check,
    scaling_check,
    tanaka_meyer_report,
)
from .variation import pth_variation, variation_convergence_report

SUMMARY_SCHEMA_VERSION = 1
DEFAULT_MAX_TENSOR_BYTES = 1 << 30

IDENTITY_FIELDS = ("identity", "level", "lhs", "rhs", "residual", "class")
RANK_FIELDS = ("k", "level", "t", "A", "B", "C", "D", "residual")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path: str, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# -- config handling -----------------------------------------------------


def _require(cfg: dict, field: str, typ, default=None):
    if field not in cfg:
        if default is not None:
            return default
        raise ConfigError(f"config field {field!r} is missing")
    val = cfg[field]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise ConfigError(f"config field {field!r} must be {typ.__name__}, got {type(val).__name__}")
    return val


def _path_spec_from(cfg: dict, where: str) -> PathSpec:
    kind = cfg.get("kind")
    if kind not in ("fbm", "bm", "linear", "triangle", "constant", "csv"):
        raise ConfigError(f"config field {where}.kind must name a path kind, got {kind!r}")
    kwargs = {
        "kind": kind,
        "T": float(cfg.get("T", 1.0)),
        "n_max": int(cfg.get("n_max", 10)),
        "seed": int(cfg.get("seed", 0)),
    }
    for opt in ("hurst", "slope", "peak_time", "peak_value", "value"):
        if opt in cfg:
            kwargs[opt] = float(cfg[opt])
    if "file" in cfg:
        kwargs["file"] = cfg["file"]
    try:
        return PathSpec(**kwargs)
    except PathwiseError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def validate_run_config(cfg: dict) -> dict:
    p = _require(cfg, "p", int)
    if p < 2 or p % 2 != 0:
        raise ConfigError(f"config field 'p' must be an even integer >= 2, got {p}")
    raw_paths = _require(cfg, "paths", list)
    if not raw_paths:
        raise ConfigError("config field 'paths' must list at least one path spec")
    specs = [_path_spec_from(pc, f"paths[{i}]") for i, pc in enumerate(raw_paths)]
    partition = cfg.get("partition", "dyadic")
    if partition not in ("dyadic", "lebesgue"):
        raise ConfigError(f"config field 'partition' must be dyadic or lebesgue, got {partition!r}")
    levels = _require(cfg, "levels", int, default=min(s.n_max for s in specs))
    if levels > min(s.n_max for s in specs):
        raise ConfigError("config field 'levels' exceeds the smallest path n_max")
    analyses = cfg.get("analyses", ["variation"])
    known = ("variation", "local-time", "tanaka", "identities", "ranks")
    for a in analyses:
        if a not in known:
            raise ConfigError(f"config field 'analyses' contains unknown analysis {a!r}")
    tf = cfg.get("test_functions", [{"name": "abs_pow", "params": {"a": 0.0}}])
    for i, item in enumerate(tf):
        if item.get("name") not in TANAKA_CLASS_NAMES:
            raise ConfigError(
                f"config field test_functions[{i}].name must be one of {TANAKA_CLASS_NAMES}"
            )
    seeds = cfg.get("seeds", {"count": 1, "base": None})
    if _require(seeds, "count", int, default=1) < 1:
        raise ConfigError("config field 'seeds.count' must be >= 1")
    checkpoints = cfg.get("checkpoints", [0.25, 0.5, 0.75, 1.0])
    if not checkpoints:
        raise ConfigError("config field 'checkpoints' must be non-empty")
    out = dict(cfg)
    out.update(
        p=p, specs=specs, partition=partition, levels=levels, analyses=analyses,
        test_functions=tf, seeds=seeds, checkpoints=[float(c) for c in checkpoints],
        grid_cells=int(cfg.get("grid_cells", 128)),
        output_dir=cfg.get("output_dir", "pathwise-out"),
        max_tensor_bytes=int(cfg.get("max_tensor_bytes", DEFAULT_MAX_TENSOR_BYTES)),
    )
    return out


def _seed_variants(spec: PathSpec, seeds_cfg: dict) -> List[PathSpec]:
    count = seeds_cfg.get("count", 1)
    base = seeds_cfg.get("base")
    if count <= 1 or spec.kind not in ("fbm", "bm"):
        return [spec]
    start = spec.seed if base is None else int(base)
    return [PathSpec(**{**spec.__dict__, "seed": start + i}) for i in range(count)]


def _hierarchy(path, partition: str, levels: int):
    if partition == "lebesgue":
        return lebesgue_hierarchy(path, levels)
    return dyadic_hierarchy(path, levels)


def _build_test_function(item: dict, p: int):
    params = item.get("params", {})
    return item["name"], tanaka_class(
        item["name"], p, a=float(params.get("a", 0.0)), coeffs=params.get("coeffs")
    )


# -- the run driver -------------------------------------------------------


def run(cfg: dict) -> int:
    """Execute the configured analyses; returns the process exit status.

    Deterministic for a fixed config.  Any exact-class identity row that
    misses its threshold flips the exit status to 1.
    """
    cfg = validate_run_config(cfg)
    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    p = cfg["p"]
    t_final = max(cfg["checkpoints"])

    paths = []
    for i, spec in enumerate(cfg["specs"]):
        for variant in _seed_variants(spec, cfg["seeds"]):
            spec_p = variant
            if spec_p.kind in ("fbm", "bm"):
                spec_p.warn_if_hurst_mismatch(p)
            paths.append((f"p{i}_s{spec_p.seed}", generate(spec_p)))

    identity_rows = []
    exact_failures = []
    trend_stats = {}
    outputs = []

    def record(report):
        for row in report.to_csv_rows():
            identity_rows.append(row)
        if report.exactness == "exact-per-level" and report.passed is False:
            exact_failures.append(report.identity)
        if report.exactness == "limit-only" and report.residuals.size:
            trend_stats[report.identity] = {
                "first_residual": float(report.residuals[0]),
                "last_residual": float(report.residuals[-1]),
            }

    for tag, path in paths:
        hier = _hierarchy(path, cfg["partition"], cfg["levels"])

        if "variation" in cfg["analyses"]:
            curve = pth_variation(path, hier, p, cfg["checkpoints"])
            name = os.path.join(out_dir, f"variation_{tag}.csv")
            _write_csv(name, ("level", "t", "value"), curve.to_csv_rows())
            outputs.append(os.path.basename(name))
            if hier.n_levels >= 2:
                rep = variation_convergence_report(curve)
                trend_stats[f"variation convergence {tag}"] = {
                    "first_sup_diff": float(rep.sup_diffs[0]),
                    "last_sup_diff": float(rep.sup_diffs[-1]),
                    "monotone_decreasing": rep.monotone_decreasing,
                }

        if "local-time" in cfg["analyses"]:
            cells = cfg["grid_cells"]
            need = hier.n_levels * len(cfg["checkpoints"]) * cells * 8
            if need > cfg["max_tensor_bytes"]:
                raise ConfigError(
                    f"config field 'grid_cells': local-time tensor would need {need} bytes, "
                    f"over the max_tensor_bytes cap {cfg['max_tensor_bytes']}"
                )
            grid = SpaceGrid.cover([path], cells)
            field = discrete_local_time(path, hier, p, grid, cfg["checkpoints"])
            name = os.path.join(out_dir, f"localtime_{tag}.csv")
            _write_csv(name, ("level", "t", "x", "value"), field.to_csv_rows())
            outputs.append(os.path.basename(name))

        if "tanaka" in cfg["analyses"]:
            for item in cfg["test_functions"]:
                f_name, f = _build_test_function(item, p)
                rep = finite_n_report(path, hier, p, f, t_final)
                rep.identity = f"{rep.identity} [{tag}]"
                record(rep)
                if f.smoothness is None:
                    ito = ito_residual(path, hier, p, f, t_final)
                    ito.identity = f"{ito.identity} {f_name} [{tag}]"
                    record(ito)
            m, M = float(path.values.min()), float(path.values.max())
            a = m + 0.37 * (M - m) if M > m else m - 0.25
            tm = tanaka_meyer_report(path, hier, p, a, t_final)
            tm.identity = f"{tm.identity} [{tag}]"
            record(tm)

        if "identities" in cfg["analyses"]:
            affine = tanaka_class("poly", p, coeffs=[0.0, 2.0])
            rep = scaling_check(path, affine, 0.0, hier, p)
            rep.identity = f"{rep.identity} [{tag}]"
            record(rep)
            grid = SpaceGrid.cover([path], cfg["grid_cells"])
            occ = occupation_check(
                path, p, CellIndicator(grid, range(cfg["grid_cells"] // 3, cfg["grid_cells"] // 2)),
                grid, t_final,
            )
            occ.identity = f"{occ.identity} [{tag}]"
            record(occ)

    if "identities" in cfg["analyses"] and len(paths) >= 2:
        (tag_x, X), (tag_y, Y) = paths[0], paths[1]
        hier = _hierarchy(X, cfg["partition"], cfg["levels"])
        for rep in identity_suite(X, Y, hier, p):
            rep.identity = f"{rep.identity} [{tag_x},{tag_y}]"
            record(rep)

    if "ranks" in cfg["analyses"]:
        if len(paths) < 2:
            raise ConfigError("analysis 'ranks' needs at least two paths (config field 'paths'/'seeds')")
        system = build_rank_system([path for _, path in paths])
        hier = _hierarchy(paths[0][1], cfg["partition"], cfg["levels"])
        f = tanaka_class("poly", p, coeffs=[0.0, 1.0])
        rank_rows = []
        for k in range(1, system.m + 1):
            dec = rank_decomposition(system, k, hier, p, f, cfg["checkpoints"])
            rank_rows.extend(dec.to_csv_rows())
            if not dec.passed:
                exact_failures.append(f"rank decomposition k={k}")
        name = os.path.join(out_dir, "ranks.csv")
        _write_csv(name, RANK_FIELDS, rank_rows)
        outputs.append(os.path.basename(name))
        record(rank_sum_identity(system, hier, p))

    if identity_rows:
        name = os.path.join(out_dir, "identities.csv")
        _write_csv(name, IDENTITY_FIELDS, identity_rows)
        outputs.append(os.path.basename(name))

    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "suite": "run",
        "p": p,
        "partition": cfg["partition"],
        "levels": cfg["levels"],
        "checkpoints": cfg["checkpoints"],
        "paths": [tag for tag, _ in paths],
        "outputs": sorted(outputs),
        "exact_identity_failures": exact_failures,
        "trend_stats": trend_stats,
        "ok": not exact_failures,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if not exact_failures else 1


# -- argument parsing ------------------------------------------------------


def _add_path_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--kind", default="fbm", choices=["fbm", "bm", "linear", "triangle", "constant", "csv"])
    sp.add_argument("--hurst", type=float, default=None)
    sp.add_argument("--slope", type=float, default=1.0)
    sp.add_argument("--peak-time", type=float, default=0.5)
    sp.add_argument("--peak-value", type=float, default=1.0)
    sp.add_argument("--value", type=float, default=0.0)
    sp.add_argument("--file", default=None, help="CSV input for --kind csv (header t,value)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--n-max", type=int, default=10, help="grid resolution exponent")


def _add_common_args(sp: argparse.ArgumentParser) -> None:
    _add_path_args(sp)
    sp.add_argument("--p", type=int, default=2, help="variation order (even integer >= 2)")
    sp.add_argument("--partition", default="dyadic", choices=["dyadic", "lebesgue"])
    sp.add_argument("--levels", type=int, default=None)
    sp.add_argument("--checkpoints", default="0.25,0.5,0.75,1.0",
                    help="comma-separated checkpoint times")
    sp.add_argument("--grid-cells", type=int, default=128)
    sp.add_argument("--out-dir", default="pathwise-out")


def _spec_dict(args: argparse.Namespace) -> dict:
    d = {"kind": args.kind, "seed": args.seed, "T": args.T, "n_max": args.n_max}
    if args.hurst is not None:
        d["hurst"] = args.hurst
    if args.kind == "linear":
        d["slope"] = args.slope
    if args.kind == "triangle":
        d.update(peak_time=args.peak_time, peak_value=args.peak_value)
    if args.kind == "constant":
        d["value"] = args.value
    if args.file:
        d["file"] = args.file
    return d


def _config_from_args(args: argparse.Namespace, analyses: List[str]) -> dict:
    cfg = {
        "paths": [_spec_dict(args)],
        "p": args.p,
        "partition": args.partition,
        "levels": args.levels if args.levels is not None else min(args.n_max, 8),
        "checkpoints": [float(c) for c in args.checkpoints.split(",")],
        "grid_cells": args.grid_cells,
        "analyses": analyses,
        "output_dir": args.out_dir,
    }
    if getattr(args, "m", None):
        cfg["seeds"] = {"count": args.m, "base": args.seed}
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathwise",
        description="pathwise calculus engine: p-th variation, order-p local times, "
        "compensated-sum integrals and rank decompositions",
        epilog="Worker count for seed-replicated work comes from PATHWISE_WORKERS "
        "(default 1); outputs are byte-identical for any worker count.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a path as t,value CSV")
    _add_path_args(g)
    g.add_argument("--out", default=None, help="output file (default stdout)")

    for name, analyses, extra in (
        ("variation", ["variation"], None),
        ("local-time", ["local-time"], None),
        ("tanaka", ["tanaka"], None),
        ("identities", ["identities"], "pair"),
        ("ranks", ["ranks"], "group"),
    ):
        sp = sub.add_parser(name, help=f"run the {name} analysis")
        _add_common_args(sp)
        if extra == "pair":
            sp.add_argument("--m", type=int, default=2, help="number of seed replicates (>= 2)")
        if extra == "group":
            sp.add_argument("--m", type=int, default=3, help="number of paths in the rank system")

    a = sub.add_parser("acceptance", help="run the acceptance suite")
    a.add_argument("--out-dir", default=None, help="artifact directory (default: report only)")
    a.add_argument("--criterion", default=None, help="run a single criterion, e.g. C5")

    r = sub.add_parser("run", help="drive analyses from a JSON config")
    r.add_argument("--config", required=True)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            spec = _path_spec_from(_spec_dict(args), "path")
            path = generate(spec)
            if args.out:
                write_path_csv(path, args.out)
            else:
                write_path_csv(path, sys.stdout)
            return 0
        if args.command == "acceptance":
            if args.criterion:
                res = acc.run_criterion(args.criterion.upper())
                print(res.status_line())
                return 0 if res.passed else 1
            results = acc.run_all(out_dir=args.out_dir)
            for res in results:
                print(res.status_line())
            ok = all(r.passed for r in results if r.gated)
            print("acceptance suite:", "PASS" if ok else "FAIL")
            return 0 if ok else 1
        if args.command == "run":
            return run(load_config(args.config))
        return run(_config_from_args(args, {
            "variation": ["variation"],
            "local-time": ["local-time"],
            "tanaka": ["tanaka"],
            "identities": ["identities"],
            "ranks": ["ranks"],
        }[args.command]))
    except ConfigError as exc:
        print(f"pathwise: config error: {exc}", file=sys.stderr)
        return 2
    except PathwiseError as exc:
        print(f"pathwise: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
