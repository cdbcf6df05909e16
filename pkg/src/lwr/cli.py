"""Command-line experiment runner.

Subcommands::

    lwr run <preset|config.json> [flags]   train and evaluate, write tables and curves
    lwr heatmap [--c C]                    meta-loss grid over (l, r)
    lwr boundary <preset|config.json>      sign grids of h and r for a 2-D model
    lwr fetch-data [--data-dir DIR]        download the benchmark CSVs

Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Output files contain no timestamps, so reruns with the same seed and config
are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (BUNDLED_SCHEMAS, CsvSchema, DataError, Dataset, gen_grouped_regression,
                   gen_synthetic_gaussian, load_csv_dataset)
from .kernels import BACKEND
from .losses import grid_axis, meta_loss_grid
from .metrics import MetricError
from .numerics import RandomStream, derive_seed
from .presets import HEATMAP_DEFAULTS, PRESET_NAMES, ExperimentConfig, load_experiment, resolve_schema
from .protocols import fit_pipeline, fresh_draws, kfold_repeated, leave_one_group_out, repeated_split
from .tables import TableError, write_table
from .trainer import RejectiveModel, save_model

log = logging.getLogger("lwr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- outputs

def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def boundary_grid(model: RejectiveModel, x_range, y_range, steps: int):
    """Sign grids of ``h`` and ``r`` over a rectangle.

    Cell ``[i, j]`` is evaluated at ``(xs[j], ys[i])`` where ``xs``/``ys`` are
    ``steps`` evenly spaced points over each range. A score of exactly 0 maps
    to +1 in both grids.
    """
    if model.raw_dim != 2:
        raise ValueError(f"boundary grids need a model with 2 input features, got {model.raw_dim}")
    xs = grid_axis(float(x_range[0]), float(x_range[1]), steps)
    ys = grid_axis(float(y_range[0]), float(y_range[1]), steps)
    gx, gy = np.meshgrid(xs, ys)
    h, r = model.predict_batch(np.column_stack([gx.ravel(), gy.ravel()]))
    h_sign = np.where(h >= 0.0, 1, -1).reshape(gx.shape)
    r_sign = np.where(r >= 0.0, 1, -1).reshape(gx.shape)
    return h_sign, r_sign


def _write_boundary(path: Path, model: RejectiveModel, spec: dict) -> None:
    steps = int(spec.get("steps", 61))
    h_sign, r_sign = boundary_grid(model, spec["x_range"], spec["y_range"], steps)
    xs = grid_axis(*map(float, spec["x_range"]), steps)
    ys = grid_axis(*map(float, spec["y_range"]), steps)
    h, r = model.predict_batch(np.column_stack([np.tile(xs, steps), np.repeat(ys, steps)]))
    rows = [["x", "y", "h", "r", "h_sign", "r_sign"]]
    for i, yv in enumerate(ys):
        for j, xv in enumerate(xs):
            k = i * steps + j
            rows.append([float(xv), float(yv), float(h[k]), float(r[k]), int(h_sign[i, j]), int(r_sign[i, j])])
    _write_csv(path, rows)


def _write_curves(path: Path, summary) -> None:
    rows = [["metric", "mode", "fraction", "mean", "std"]]
    for mode, table in (("learned", summary.learned), ("random", summary.random)):
        for metric in summary.metrics:
            if metric not in table:
                continue
            for f, m, s in zip(summary.fractions, table[metric]["mean"], table[metric]["std"]):
                rows.append([metric, mode, float(f), float(m), float(s)])
    _write_csv(path, rows)


def _write_folds(path: Path, folds) -> None:
    rows = [["repeat", "fold", "group", "metric", "mode", "fraction", "value"]]
    for fr in folds:
        for mode, table in (("learned", fr.learned), ("random", fr.random)):
            for metric, values in table.items():
                for f, v in zip(fr.fractions, values):
                    rows.append([fr.repeat, fr.fold, "" if fr.group is None else fr.group, metric, mode,
                                 float(f), float(v)])
    _write_csv(path, rows)


# ---------------------------------------------------------------- config handling

def _parse_fractions(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--fractions expects comma-separated numbers, got {text!r}") from None


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    """Fold command-line flags into ``cfg`` and revalidate."""
    obj = cfg.to_dict()
    train = obj["train"]
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.c is not None:
        train["c"] = args.c
    if args.epochs is not None:
        train["epochs"] = args.epochs
    if args.fractions is not None:
        obj["fractions"] = _parse_fractions(args.fractions)
    if args.rff_dim is not None:
        obj["rff_dim"] = args.rff_dim or None
    if args.gamma is not None:
        obj["rff_gamma"] = args.gamma
    if args.repeats is not None:
        if "repeats" not in obj["protocol"]:
            raise UsageError(f"--repeats does not apply to the {obj['protocol']['name']} protocol")
        obj["protocol"]["repeats"] = args.repeats
    if args.random_trials is not None:
        obj["random_trials"] = args.random_trials

    dataset = dict(obj["dataset"])
    if args.schema is not None:
        dataset = {"source": "csv", "schema": args.schema}
    if args.data is not None:
        if dataset["source"] == "synthetic":
            raise UsageError("--data does not apply to a synthetic-Gaussian experiment")
        if dataset["source"] == "grouped_synthetic":
            if args.group_col is None:
                raise UsageError("--data on a grouped experiment needs --group-col (or a --schema)")
            # header row, target in the last column
            dataset = {"source": "csv", "schema": None, "label_column": -1}
        dataset["path"] = args.data
    if args.group_col is not None:
        if dataset["source"] != "csv":
            raise UsageError("--group-col needs a CSV dataset (--data or --schema)")
        dataset["group_column"] = int(args.group_col) if args.group_col.lstrip("-").isdigit() else args.group_col
    if args.data_dir is not None and dataset["source"] == "csv":
        dataset["data_dir"] = args.data_dir
    obj["dataset"] = dataset
    return ExperimentConfig.from_dict(obj)


def load_dataset(cfg: ExperimentConfig):
    ds = cfg.dataset
    source = ds["source"]
    if source == "csv":
        if ds.get("schema") is None and "path" in ds:
            schema = CsvSchema(path=str(ds["path"]), has_header=True, task="regression",
                               label_column=ds.get("label_column", -1), group_column=ds.get("group_column"))
        else:
            schema = resolve_schema(ds, ds.get("data_dir"))
        if not schema.resolved_path().exists() and ds.get("schema") in BUNDLED_SCHEMAS:
            raise DataError(f"data file not found: {schema.resolved_path()} (run `lwr fetch-data` first)")
        return load_csv_dataset(schema)
    if source == "grouped_synthetic":
        params = {k: v for k, v in ds.items() if k in ("groups", "n_per_group", "d")}
        if "groups" in params:
            params["groups"] = tuple(str(g) for g in params["groups"])
        return gen_grouped_regression(RandomStream(cfg.seed, (99,)), **params)
    params = _synthetic_params(ds)
    data = gen_synthetic_gaussian(RandomStream(cfg.seed, (98,)), **params)
    if ds.get("task") == "regression":
        data = Dataset(data.X, data.y, name=data.name, task="regression")
    return data


def _synthetic_params(ds: dict) -> dict:
    params = {k: v for k, v in ds.items() if k in ("n_per_class", "center_pos", "center_neg", "sigma")}
    for key in ("center_pos", "center_neg"):
        if key in params:
            params[key] = tuple(float(v) for v in params[key])
    return params


# ---------------------------------------------------------------- commands

def _run_protocol(cfg: ExperimentConfig):
    pipeline = cfg.pipeline()
    proto = cfg.protocol
    kw = dict(fractions=cfg.fractions, metrics=cfg.metrics, seed=cfg.seed, random_trials=cfg.random_trials)
    name = proto["name"]
    if name == "fresh":
        task = cfg.dataset.get("task", "classification")
        summary, folds, models = fresh_draws(_synthetic_params(cfg.dataset), int(proto.get("repeats", 10)),
                                             pipeline, task=task, **kw)
        return summary, folds, models[0] if models else None
    data = load_dataset(cfg)
    log.info("dataset %s: %d rows, %d features, task %s", data.name, data.n, data.d, data.task)
    if name == "kfold":
        summary, folds = kfold_repeated(data, int(proto.get("k", 5)), int(proto.get("repeats", 10)),
                                        pipeline, **kw)
    elif name == "split":
        summary, folds = repeated_split(data, float(proto.get("train_fraction", 0.9)),
                                        int(proto.get("repeats", 20)), pipeline, **kw)
    else:
        summary, folds = leave_one_group_out(data, pipeline, **kw)
    return summary, folds, None


def cmd_run(args) -> int:
    if args.target == "heatmap":
        return cmd_heatmap(args)
    cfg = apply_overrides(load_experiment(args.target), args)
    out = Path(args.out_dir) / cfg.name
    resolved = cfg.to_dict()
    log.info("seed %d, kernel backend %s", cfg.seed, BACKEND)
    log.info("resolved config: %s", json.dumps(resolved, sort_keys=True))

    summary, folds, model = _run_protocol(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "config.json", resolved)
    _dump_json(out / "summary.json", {"summary": summary.to_dict(), "folds": [f.to_dict() for f in folds]})
    _write_curves(out / "curves.csv", summary)
    _write_folds(out / "folds.csv", folds)
    if cfg.table is not None:
        write_table(out / "table.csv", summary, cfg.table)
    if model is not None and cfg.boundary and model.raw_dim == 2:
        _write_boundary(out / "boundary.csv", model, cfg.boundary)

    for metric in cfg.metrics:
        values = ", ".join(f"{f:g}: {m:.4f}" for f, m in zip(summary.fractions, summary.learned[metric]["mean"]))
        acc = summary.accepted[metric]["mean"]
        acc_text = "undefined" if acc is None else f"{acc:.4f}"
        print(f"{cfg.name} {metric} by fraction rejected {{{values}}}; on r > 0: {acc_text}")
    print(f"{cfg.name} mean accepted fraction {summary.accepted_fraction['mean']:.3f}; outputs in {out}")
    return EXIT_OK


def cmd_heatmap(args) -> int:
    c = HEATMAP_DEFAULTS["c"] if args.c is None else args.c
    grid, l_values, r_values = meta_loss_grid(c, tuple(HEATMAP_DEFAULTS["r_range"]), tuple(HEATMAP_DEFAULTS["l_range"]))
    out = Path(args.out_dir) / "heatmap"
    out.mkdir(parents=True, exist_ok=True)
    rows = [["l", "r", "L"]]
    for i, lv in enumerate(l_values):
        for j, rv in enumerate(r_values):
            rows.append([float(lv), float(rv), float(grid[i, j])])
    _write_csv(out / "heatmap.csv", rows)
    _dump_json(out / "config.json", {"name": "heatmap", **HEATMAP_DEFAULTS, "c": c})
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    print(f"heatmap c={c:g}: minimum L={grid[i, j]:.4f} at l={l_values[i]:g}, r={r_values[j]:.4f}; "
          f"outputs in {out}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    cfg = apply_overrides(load_experiment(args.target), args)
    spec = dict(cfg.boundary or {"x_range": [-3.0, 3.0], "y_range": [-3.0, 3.0], "steps": 61})
    if args.steps is not None:
        spec["steps"] = args.steps
    if cfg.dataset["source"] == "synthetic":
        data = gen_synthetic_gaussian(RandomStream(cfg.seed, (0, 0)), **_synthetic_params(cfg.dataset))
        if cfg.dataset.get("task") == "regression":
            data = Dataset(data.X, data.y, name=data.name, task="regression")
    else:
        data = load_dataset(cfg)
    if data.d != 2:
        raise UsageError(f"boundary grids need 2-D inputs; {data.name} has {data.d} features")
    log.info("seed %d, resolved config: %s", cfg.seed, json.dumps(cfg.to_dict(), sort_keys=True))
    model, _ = fit_pipeline(data, cfg.pipeline(), derive_seed(cfg.seed, 0, 0))
    out = Path(args.out_dir) / f"{cfg.name}-boundary"
    out.mkdir(parents=True, exist_ok=True)
    _write_boundary(out / "boundary.csv", model, spec)
    save_model(model, out / "model.json")
    _dump_json(out / "config.json", {**cfg.to_dict(), "boundary": spec})
    print(f"boundary grid for {cfg.name} written to {out}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    from .datasets import fetch_all

    unknown = sorted(set(args.names) - set(BUNDLED_SCHEMAS))
    if unknown:
        raise UsageError(f"unknown datasets {unknown}; choose from {', '.join(BUNDLED_SCHEMAS)}")
    names = args.names or None
    sources = fetch_all(args.data_dir or "data", names, overwrite=args.overwrite)
    for name, source in sources.items():
        print(f"{name}: {source}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def _add_experiment_flags(p):
    p.add_argument("target", help=f"preset ({', '.join(PRESET_NAMES)}) or experiment config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--c", type=float, help="rejection cost")
    p.add_argument("--epochs", type=int)
    p.add_argument("--fractions", help="comma-separated rejection fractions, e.g. 0,0.1,0.2")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--data", help="CSV file overriding the experiment's data path")
    p.add_argument("--schema", help="schema JSON file or bundled schema name")
    p.add_argument("--data-dir", help="directory holding the bundled CSVs (default ./data)")
    p.add_argument("--group-col", help="group column (name or 0-based index)")
    p.add_argument("--rff-dim", type=int, help="random Fourier feature dimension (0 disables)")
    p.add_argument("--gamma", type=float, help="RBF bandwidth for random Fourier features")
    p.add_argument("--repeats", type=int, help="override the protocol's repeat count")
    p.add_argument("--random-trials", type=int, help="random-rejection trials per fraction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lwr", description="Learning with rejection experiments.")
    parser.add_argument("--version", action="version", version=f"lwr {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run a preset or config file")
    _add_experiment_flags(run)
    run.set_defaults(func=cmd_run)

    heat = sub.add_parser("heatmap", help="meta-loss grid over (l, r)")
    heat.add_argument("--c", type=float)
    heat.add_argument("--out-dir", default="out")
    heat.set_defaults(func=cmd_heatmap)

    bnd = sub.add_parser("boundary", help="decision and rejection sign grids for a 2-D model")
    _add_experiment_flags(bnd)
    bnd.add_argument("--steps", type=int, help="grid points per axis")
    bnd.set_defaults(func=cmd_boundary)

    fetch = sub.add_parser("fetch-data", help="download the benchmark CSVs")
    fetch.add_argument("names", nargs="*", help=f"subset of {', '.join(BUNDLED_SCHEMAS)} (default: all)")
    fetch.add_argument("--data-dir")
    fetch.add_argument("--overwrite", action="store_true")
    fetch.set_defaults(func=cmd_fetch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, TableError) as exc:
        print(f"lwr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, MetricError) as exc:
        print(f"lwr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"lwr: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"lwr: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
