"""Command-line entry point: validate / train / bench / synth.

Exit codes: 0 success, 1 runtime failure, 2 invalid input. Every subcommand
is deterministic given --seed; all outputs land under --out.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import bench as bench_mod
from .data import SETTINGS, apply_setting, load_dataset, save_dataset, synth_sbm_generate
from .errors import ConfigError, DataFormatError, GraphSSLError
from .train import MODEL_KINDS, GridSpec, TrainConfig, fit, grid_search, _derived_seed

log = logging.getLogger("graph_ssl")

ALL_MODELS = ("mlp", "gcn", "gat", "lsm_gcn", "lsm_gat", "sbm_gcn", "sbm_gat")

CONFIG_KEYS = {
    "model": str, "hidden": int, "lr": float, "eta": float, "p0": float, "p1": float,
    "dropout": float, "weight_decay": float, "max_epochs": int, "patience": int,
    "seed": int, "gat_units": str, "lsm_symmetrize": bool,
}


def _parse_config_file(path: str) -> dict:
    """Flat TOML-like key = value file; '#' starts a comment."""
    out = {}
    with open(path) as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path} line {line_no}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            value = value.strip("\"'")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path} line {line_no}: unknown key {key!r}")
            caster = CONFIG_KEYS[key]
            try:
                out[key] = value.lower() in ("true", "1", "yes") if caster is bool else caster(value)
            except ValueError:
                raise ConfigError(f"{path} line {line_no}: bad value for {key}") from None
    return out


def resolve_dataset_path(name_or_path: str) -> str:
    if os.path.isdir(name_or_path):
        return name_or_path
    root = os.environ.get("GRAPH_SSL_DATA", "data")
    candidate = os.path.join(root, name_or_path)
    if os.path.isdir(candidate):
        return candidate
    raise DataFormatError(
        f"dataset {name_or_path!r} not found (tried {name_or_path!r} and {candidate!r}; "
        f"set GRAPH_SSL_DATA to your dataset root)"
    )


def _build_config(args, skip=(), warn_baseline_eta=True) -> TrainConfig:
    values = _parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        if key in skip:
            values.pop(key, None)
            continue
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    config = TrainConfig(**values)
    if warn_baseline_eta and not config.generative:
        if getattr(args, "eta", None) is not None:
            log.warning("--eta ignored: %s has no supervised-weight term", config.model)
        config = replace(config, eta=1.0)
    return config


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    ds = load_dataset(resolve_dataset_path(args.dataset))
    ds.validate()
    g = ds.graph
    print(f"nodes:      {ds.n}")
    print(f"edges:      {g.num_edges}")
    print(f"features:   {ds.num_features}")
    print(f"classes:    {ds.num_classes}")
    print(f"train/val/test: {int(ds.train_mask.sum())}/{int(ds.val_mask.sum())}/{int(ds.test_mask.sum())}")
    print("invariants: ok (no self-loops, deduped, symmetric, disjoint splits)")
    return 0


def cmd_synth(args) -> int:
    ds = synth_sbm_generate(
        n=args.n, num_classes=args.classes, p0=args.p0, p1=args.p1,
        feature_dim=args.feature_dim, feature_noise=args.noise,
        rng=np.random.default_rng(args.seed),
        labeled_frac=args.labeled_frac, val_frac=args.val_frac,
    )
    save_dataset(ds, args.out)
    print(f"wrote {args.out}: n={ds.n} edges={ds.graph.num_edges} classes={ds.num_classes}")
    return 0


def _write_checkpoint(bundle, path: str) -> None:
    payload = {"params": [
        {"name": p.name, "shape": list(p.shape), "values": p.value.ravel().tolist()}
        for p in bundle.parameters()
    ]}
    with open(path, "w") as f:
        json.dump(payload, f)


def cmd_train(args) -> int:
    config = _build_config(args)
    pristine = load_dataset(resolve_dataset_path(args.dataset))
    ds = apply_setting(pristine, args.setting,
                       np.random.default_rng(np.random.SeedSequence((config.seed, 0x5E7))))
    result = fit(config, ds)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "train_log.jsonl"), "w") as f:
        for entry in result.log:
            f.write(json.dumps(entry) + "\n")
    _write_checkpoint(result.bundle, os.path.join(args.out, "checkpoint.json"))
    metrics = {
        "config": asdict(config), "setting": args.setting,
        "best_epoch": result.best_epoch, "best_val_ce": result.best_val_ce,
        "val_accuracy": result.val_accuracy, "test_accuracy": result.test_accuracy,
        "wall_time": result.wall_time, "epochs_run": len(result.log),
    }
    with open(os.path.join(args.out, "metrics.json"), "w") as f:
        json.dump(metrics, f, indent=2)
        f.write("\n")
    print(f"test accuracy: {result.test_accuracy:.4f} (best epoch {result.best_epoch})")
    return 0


def _bench_cell(task: dict) -> dict:
    """One (dataset, setting, model) cell: optional grid search, then trials.

    Runs in a worker process; everything in and out is picklable.
    """
    pristine = load_dataset(task["path"])
    base = TrainConfig(**task["config"])
    cell_seed = _derived_seed(task["seed"], task["index"])
    if task["grid"]:
        grid_ds = apply_setting(
            pristine, task["setting"],
            np.random.default_rng(np.random.SeedSequence((cell_seed, 0x5E7))),
        )
        searched = grid_search(GridSpec(base=base), grid_ds,
                               trials_per_cell=task["grid_trials"], base_seed=cell_seed)
        chosen, grid_report = searched.best, searched.report
    else:
        chosen, grid_report = base, []
    summary = bench_mod.run_trials(pristine, task["setting"], chosen, task["trials"],
                                   base_seed=cell_seed, dataset_name=task["name"])
    return {
        "key": [task["name"], task["setting"], task["model"]],
        "config": asdict(chosen),
        "grid_report": grid_report,
        "trials": [t.row() for t in summary.trials],
        "mean": summary.mean,
        "std": summary.std,
    }


def _cell_log_path(out_dir: str, name: str, setting: str, model: str) -> str:
    return os.path.join(out_dir, "cells", f"{name}_{setting}_{model}.jsonl")


def _load_completed_cell(path: str, n_trials: int) -> dict | None:
    if not os.path.isfile(path):
        return None
    lines = [json.loads(line) for line in open(path) if line.strip()]
    header = next((l for l in lines if l.get("type") == "cell"), None)
    trials = [l for l in lines if l.get("type") == "trial"]
    if header is None or len(trials) < n_trials:
        return None
    header["trials"] = trials
    return header


def cmd_bench(args) -> int:
    config = _build_config(args, skip=("model",), warn_baseline_eta=False)
    datasets = [d.strip() for d in args.dataset.split(",")]
    settings = [s.strip() for s in args.setting.split(",")]
    models = [m.strip() for m in args.model.split(",")]
    for m in models:
        if m not in MODEL_KINDS:
            raise ConfigError(f"unknown model {m!r}; choose from {MODEL_KINDS}")
    for s in settings:
        if s not in SETTINGS:
            raise ConfigError(f"unknown setting {s!r}; choose from {SETTINGS}")

    os.makedirs(os.path.join(args.out, "cells"), exist_ok=True)
    tasks, cached = [], {}
    index = 0
    for dataset_arg in datasets:
        path = resolve_dataset_path(dataset_arg)
        name = os.path.basename(os.path.normpath(dataset_arg))
        for setting in settings:
            for model in models:
                index += 1
                log_path = _cell_log_path(args.out, name, setting, model)
                if args.resume:
                    done = _load_completed_cell(log_path, args.trials)
                    if done is not None:
                        cached[(name, setting, model)] = done
                        continue
                tasks.append({
                    "path": path, "name": name, "setting": setting, "model": model,
                    "config": asdict(replace(config, model=model)),
                    "trials": args.trials, "seed": config.seed, "index": index,
                    "grid": not args.no_grid, "grid_trials": args.grid_trials,
                })

    failures = []
    results = {}
    if args.jobs > 1 and tasks:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_bench_cell, t): t for t in tasks}
            for fut in concurrent.futures.as_completed(futures):
                t = futures[fut]
                try:
                    results[(t["name"], t["setting"], t["model"])] = fut.result()
                except Exception as e:  # record, keep going
                    failures.append((t, str(e)))
    else:
        for t in tasks:
            try:
                results[(t["name"], t["setting"], t["model"])] = _bench_cell(t)
            except Exception as e:
                failures.append((t, str(e)))

    for key, payload in results.items():
        name, setting, model = key
        with open(_cell_log_path(args.out, name, setting, model), "w") as f:
            header = {"type": "cell", "key": list(key), "config": payload["config"],
                      "mean": payload["mean"], "std": payload["std"],
                      "grid_report": payload["grid_report"]}
            f.write(json.dumps(header) + "\n")
            for row in payload["trials"]:
                row = {"type": "trial", **row}
                f.write(json.dumps(row) + "\n")
        if payload["grid_report"]:
            grid_path = _cell_log_path(args.out, name, setting, model).replace(
                ".jsonl", "_grid.csv")
            with open(grid_path, "w", newline="") as f:
                writer = csv.DictWriter(f, fieldnames=list(payload["grid_report"][0]))
                writer.writeheader()
                writer.writerows(payload["grid_report"])
    for t, message in failures:
        err_path = _cell_log_path(args.out, t["name"], t["setting"], t["model"]) + ".error"
        with open(err_path, "w") as f:
            f.write(message + "\n")
        log.error("cell %s/%s/%s failed: %s", t["name"], t["setting"], t["model"], message)

    cells = {}
    for key, payload in {**cached, **{k: v for k, v in results.items()}}.items():
        if isinstance(key, tuple):
            name, setting, model = key
        else:
            name, setting, model = payload["key"]
        trials = [
            bench_mod.TrialReport(
                config=TrainConfig(**{k: r[k] for k in CONFIG_KEYS if k in r}),
                seed=r["seed"], test_accuracy=r["test_accuracy"],
                best_epoch=r["best_epoch"], wall_time=r["wall_time"])
            for r in payload["trials"]
        ]
        accs = np.array([t.test_accuracy for t in trials])
        cells[(name, setting, model)] = bench_mod.CellSummary(
            dataset=name, setting=setting, model=model,
            mean=float(accs.mean()), std=float(accs.std(ddof=1)), trials=trials)
    if cells:
        csv_path, md_path = bench_mod.emit_report(cells, args.out)
        print(f"summary: {csv_path} {md_path}")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser, include_model: bool = True) -> None:
    p.add_argument("--config", help="TOML-like key=value file; flags override it")
    if include_model:
        p.add_argument("--model", choices=MODEL_KINDS)
    p.add_argument("--hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--p1", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gat-units", dest="gat_units", choices=("total", "per_head"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graph-ssl",
                                     description="generative semi-supervised node classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset directory")
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="single training run")
    p.add_argument("--dataset", required=True)
    p.add_argument("--setting", choices=SETTINGS, default="standard")
    p.add_argument("--out", default="runs/train")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="multi-trial benchmark with summary tables")
    p.add_argument("--dataset", required=True, help="comma-separated names or paths")
    p.add_argument("--setting", default="standard", help="comma-separated settings")
    p.add_argument("--model", default=",".join(ALL_MODELS), help="comma-separated models")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs/bench")
    p.add_argument("--resume", action="store_true", help="skip cells already logged in --out")
    p.add_argument("--grid-trials", dest="grid_trials", type=int, default=1)
    p.add_argument("--no-grid", dest="no_grid", action="store_true",
                   help="skip grid search; use the given config directly")
    _add_config_flags(p, include_model=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a planted-partition dataset directory")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--p0", type=float, default=0.9)
    p.add_argument("--p1", type=float, default=0.1)
    p.add_argument("--feature-dim", dest="feature_dim", type=int, default=8)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--labeled-frac", dest="labeled_frac", type=float, default=0.1)
    p.add_argument("--val-frac", dest="val_frac", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GraphSSLError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
