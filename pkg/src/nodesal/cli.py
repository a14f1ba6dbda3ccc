"""Command-line front end: ``nodesal {synth,train,rank,pca,bench}``.

Every command writes into ``--out-dir`` (created if missing) plus a
``<command>.run.json`` sidecar recording flags, seed, library versions and a
timestamp. On failure, files already written by the command are removed and
the exit code is nonzero.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .autoencoder import encode, load_model, save_model
from .dataio import (
    NormalizationRecord,
    apply_normalizer,
    fit_normalizer,
    generate_synthetic,
    load_matrix,
    save_matrix,
    select_subset,
)
from .pca import fit_pca, project
from .saliency import DEFAULT_BINS, node_weight_profile, rank_nodes
from .trainer import DivergenceError, TrainConfig, benchmark_scaling, train, write_benchmark_csv

log = logging.getLogger("nodesal")


class CommandError(Exception):
    pass


class _Outputs:
    """Tracks files a command writes so a failed run can be rolled back."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.paths: list[Path] = []
        self._created_dirs: list[Path] = []

    def path(self, name) -> Path:
        p = Path(name)
        if not p.is_absolute():
            p = self.out_dir / p
        self.mkdir(p.parent)
        self.paths.append(p)
        return p

    def mkdir(self, d: Path) -> None:
        missing = []
        for parent in [d, *d.parents]:
            if parent.exists():
                break
            missing.append(parent)
        d.mkdir(parents=True, exist_ok=True)
        self._created_dirs.extend(reversed(missing))

    def rollback(self) -> None:
        for p in reversed(self.paths):
            p.unlink(missing_ok=True)
        for d in reversed(self._created_dirs):
            try:
                d.rmdir()
            except OSError:
                pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _existing(text: str) -> Path:
    p = Path(text)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory (default .)")
    common.add_argument("--bins", type=int, default=DEFAULT_BINS,
                        help=f"histogram bin count k (default {DEFAULT_BINS})")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="nodesal",
        description="Autoencoder node saliency: train, rank hidden nodes, compare with PCA.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic two-class dataset")
    p.add_argument("--n", type=int, default=200, help="samples per class (default 200)")
    p.add_argument("--d", type=int, default=50, help="feature count (default 50)")
    p.add_argument("--informative", type=int, default=5, help="features carrying the class shift (default 5)")
    p.add_argument("--sep", type=float, default=4.0, help="class mean shift in noise SDs (default 4)")
    p.add_argument("--groups", type=int, default=0, help="round-robin group tags g0..g{N-1} (default none)")
    p.add_argument("-o", "--output", type=Path, default=None,
                   help="dataset path (default <out-dir>/synthetic.tsv)")

    defaults = TrainConfig()
    p = sub.add_parser("train", parents=[common], help="train the autoencoder (optionally a config sweep)")
    p.add_argument("--data", type=_existing, required=True, help="dataset file")
    p.add_argument("--hidden", type=_int_list, default=[defaults.hidden_width],
                   help=f"hidden width (default {defaults.hidden_width}); comma list with --sweep")
    p.add_argument("--lr", type=_float_list, default=[defaults.learning_rate],
                   help=f"learning rate (default {defaults.learning_rate}); comma list with --sweep")
    p.add_argument("--batch", type=_int_list, default=[defaults.batch_size],
                   help=f"batch size (default {defaults.batch_size}); comma list with --sweep")
    p.add_argument("--epochs", type=int, default=defaults.epochs, help=f"epochs (default {defaults.epochs})")
    p.add_argument("--workers", type=int, default=defaults.workers, help="data-parallel workers (default 1)")
    p.add_argument("--val-fraction", type=float, default=defaults.validation_fraction,
                   help=f"validation fraction (default {defaults.validation_fraction})")
    p.add_argument("--no-shuffle", action="store_true", help="keep sample order in every epoch")
    p.add_argument("--normalize", action="store_true",
                   help="fit per-feature min-max scaling and save it as normalizer.tsv")
    p.add_argument("--sweep", action="store_true", help="train every hidden x batch x lr combination")
    p.add_argument("--plots", action="store_true", help="render training curves")

    p = sub.add_parser("rank", parents=[common], help="rank hidden nodes by supervised saliency")
    p.add_argument("--model", type=_existing, required=True, help="model file from train")
    p.add_argument("--data", type=_existing, required=True, help="labeled dataset file")
    p.add_argument("--normalizer", type=_existing, default=None, help="normalization record to apply")
    p.add_argument("--group", default=None, help="only samples whose group tag equals this value")
    p.add_argument("--top", type=int, default=6, help="nodes to export histograms for (default 6)")
    p.add_argument("--plots", action="store_true", help="render histograms and ranking figures")
    p.add_argument("--weights", type=int, default=None, metavar="S",
                   help="export the input-weight profile of node S (1-based)")
    p.add_argument("--top-features", type=int, default=20,
                   help="features listed in the weight profile summary (default 20)")

    p = sub.add_parser("pca", parents=[common], help="PCA baseline: fit on one dataset, project another")
    p.add_argument("--fit", type=_existing, required=True, help="dataset to fit the components on")
    p.add_argument("--project", type=_existing, default=None, help="dataset to project (default: --fit)")
    p.add_argument("--components", type=int, default=2, help="principal components (default 2)")
    p.add_argument("--tol", type=float, default=1e-12, help="power-iteration tolerance")
    p.add_argument("--max-iter", type=int, default=100_000, help="power-iteration cap per component")

    p = sub.add_parser("bench", parents=[common], help="strong-scaling benchmark of data-parallel training")
    p.add_argument("--workers", type=_int_list, default=[1, 2, 4], help="worker counts (default 1,2,4)")
    p.add_argument("--data", type=_existing, default=None, help="dataset (default: synthetic)")
    p.add_argument("--n", type=int, default=5000, help="synthetic samples per class (default 5000)")
    p.add_argument("--d", type=int, default=500, help="synthetic feature count (default 500)")
    p.add_argument("--hidden", type=int, default=64, help="hidden width (default 64)")
    p.add_argument("--batch", type=int, default=256, help="batch size (default 256)")
    p.add_argument("--lr", type=float, default=defaults.learning_rate, help="learning rate")
    p.add_argument("--epochs", type=int, default=2, help="epochs per worker count (default 2)")
    p.add_argument("--plots", action="store_true", help="render the speedup curve")
    return parser


def _load_labeled(path, normalizer=None, group=None):
    ds = load_matrix(path)
    if normalizer is not None:
        ds = apply_normalizer(NormalizationRecord.load(normalizer), ds)
    if group is not None:
        ds = select_subset(ds, group)
    return ds


def cmd_synth(args, out: _Outputs) -> dict:
    if args.n < 1 or args.d < 1:
        raise CommandError("--n and --d must be positive")
    ds = generate_synthetic(args.n, args.d, args.informative, args.sep, args.seed, n_groups=args.groups)
    path = out.path(args.output if args.output is not None else "synthetic.tsv")
    save_matrix(ds, path)
    log.info("wrote %d x %d dataset to %s", ds.n, ds.d, path)
    return {"dataset": str(path), "rows": ds.n, "features": ds.d}


def _train_one(ds, cfg, out: _Outputs, subdir: str, plots: bool) -> dict:
    model, hist = train(ds, cfg)
    save_model(model, out.path(Path(subdir) / "model.ansm"))
    hist.to_csv(out.path(Path(subdir) / "history.csv"))
    if plots:
        plotting.training_history(hist, out.path(Path(subdir) / "history.svg"))
    return {
        "epochs_completed": len(hist),
        "final_train_mse": hist.train_mse[-1],
        "final_val_mse": hist.val_mse[-1],
        "final_val_pearson": hist.val_pearson[-1],
    }


def cmd_train(args, out: _Outputs) -> dict:
    ds = load_matrix(args.data)
    if args.normalize:
        record, ds = fit_normalizer(ds)
        record.save(out.path("normalizer.tsv"))
    elif not ds.is_normalized():
        raise CommandError(f"{args.data}: values outside [0, 1]; pass --normalize")

    grid = list(itertools.product(args.hidden, args.batch, args.lr))
    if not args.sweep and len(grid) > 1:
        raise CommandError("comma-separated --hidden/--batch/--lr need --sweep")

    def config(h, bsz, lr):
        return TrainConfig(hidden_width=h, learning_rate=lr, batch_size=bsz, epochs=args.epochs,
                           seed=args.seed, workers=args.workers,
                           validation_fraction=args.val_fraction, shuffle=not args.no_shuffle)

    if not args.sweep:
        h, bsz, lr = grid[0]
        result = _train_one(ds, config(h, bsz, lr), out, ".", args.plots)
        log.info("final validation Pearson %.4f", result["final_val_pearson"])
        return {"config": asdict(config(h, bsz, lr)), **result}

    cells = []
    for h, bsz, lr in grid:
        name = f"cell_h{h}_b{bsz}_lr{lr:g}"
        cell = {"cell": name, "hidden": h, "batch": bsz, "lr": lr, "seed": args.seed}
        try:
            cell.update(status="ok", **_train_one(ds, config(h, bsz, lr), out, name, args.plots))
        except DivergenceError as exc:
            log.warning("%s diverged: %s", name, exc)
            cell.update(status="diverged", error=str(exc))
        log.info("%s: %s", name, cell["status"])
        cells.append(cell)

    with open(out.path("summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("cell", "hidden", "batch", "lr", "seed", "status", "final_val_mse", "final_val_pearson"))
        for c in cells:
            w.writerow([c["cell"], c["hidden"], c["batch"], repr(c["lr"]), c["seed"], c["status"],
                        repr(c.get("final_val_mse", float("nan"))),
                        repr(c.get("final_val_pearson", float("nan")))])
    return {"cells": cells}


def cmd_rank(args, out: _Outputs) -> dict:
    model = load_model(args.model)
    ds = _load_labeled(args.data, args.normalizer, args.group)
    if ds.labels is None:
        raise CommandError(f"{args.data}: dataset has no label column")
    if ds.d != model.d:
        raise CommandError(f"model expects {model.d} features, dataset has {ds.d}")
    if len(np.unique(ds.labels)) < 2:
        raise CommandError("selected samples contain only one class")

    report = rank_nodes(encode(model, ds.values), ds.labels, args.bins)
    report.to_csv(out.path("saliency.csv"))

    top = report.ranking[: max(args.top, 0)]
    for s in top:
        report.histogram(s).to_csv(out.path(f"node_{s}_hist.csv"))
        if args.plots:
            plotting.node_histogram(report.histogram(s), s, report.by_node(s).sns, out.path(f"node_{s}.svg"))
    if args.plots:
        plotting.sns_curve(report, out.path("sns_curve.svg"))
        plotting.ned_profile(report, out.path("ned_top.svg"))

    result = {
        "samples": ds.n,
        "best_node": report.ranking[0],
        "best_sns": report.by_node(report.ranking[0]).sns,
        "top_nodes": top,
        "good_classifiers_in_top": [s for s in top if report.by_node(s).good_classifier],
    }
    if args.weights is not None:
        if not 1 <= args.weights <= model.m:
            raise CommandError(f"--weights {args.weights} outside 1..{model.m}")
        prof = node_weight_profile(model, args.weights, args.top_features, ds.feature_ids)
        prof.to_csv(out.path(f"weights_node{args.weights}.csv"), ds.feature_ids)
        plotting.weight_histogram(prof, out.path(f"weights_node{args.weights}.svg"))
        result["top_features"] = list(prof.top_features)
    for ns in report.ranked()[: max(args.top, 0)]:
        log.info("node %d  SNS %.4f  NED %.3f  NED0 %.3f  NED1 %.3f  good=%s",
                 ns.node, ns.sns, ns.ned, ns.ned0, ns.ned1, ns.good_classifier)
    return result


def cmd_pca(args, out: _Outputs) -> dict:
    fit_ds = load_matrix(args.fit)
    proj_ds = load_matrix(args.project) if args.project is not None else fit_ds
    if proj_ds.d != fit_ds.d:
        raise CommandError(f"fit data has {fit_ds.d} features, projected data has {proj_ds.d}")
    model = fit_pca(fit_ds.values, args.components, tol=args.tol, max_iter=args.max_iter)
    scores = project(model, proj_ds.values)

    with open(out.path("pca_scores.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", *[f"pc{j + 1}" for j in range(model.n_components)], "label", "group"])
        for i, sid in enumerate(proj_ds.sample_ids):
            label = "" if proj_ds.labels is None else int(proj_ds.labels[i])
            group = "" if proj_ds.group_tags is None else proj_ds.group_tags[i]
            w.writerow([sid, *(repr(float(v)) for v in scores[i]), label, group])
    with open(out.path("pca_eigenvalues.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("component", "eigenvalue"))
        for j, v in enumerate(model.eigenvalues, start=1):
            w.writerow([j, repr(float(v))])
    plotting.pca_scatter(scores, out.path("pca_scatter.svg"), proj_ds.group_tags, proj_ds.labels)
    return {"eigenvalues": [float(v) for v in model.eigenvalues], "projected": proj_ds.n}


def cmd_bench(args, out: _Outputs) -> dict:
    if not args.workers or any(w < 1 for w in args.workers):
        raise CommandError("--workers needs positive integers")
    if args.data is not None:
        ds = load_matrix(args.data)
    else:
        ds = generate_synthetic(args.n, args.d, min(5, args.d), 4.0, args.seed)
    cfg = TrainConfig(hidden_width=args.hidden, learning_rate=args.lr, batch_size=args.batch,
                      epochs=args.epochs, seed=args.seed)
    rows = benchmark_scaling(ds, cfg, args.workers)
    write_benchmark_csv(rows, out.path("benchmark.csv"))
    if args.plots:
        plotting.scaling(rows, out.path("scaling.svg"))
    for r in rows:
        log.info("workers=%d  %.4fs/epoch  speedup %.2f", r.workers, r.mean_epoch_seconds, r.speedup)
    return {
        "rows": [r.__dict__ for r in rows],
        "cpu_count": os.cpu_count(),
        "samples": ds.n,
        "features": ds.d,
    }


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "rank": cmd_rank, "pca": cmd_pca, "bench": cmd_bench}


def _metadata(args, argv, result) -> dict:
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    return {
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "seed": args.seed,
        "versions": {"nodesal": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "result": result,
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and not 0 <= args.informative <= args.d:
        parser.error(f"--informative {args.informative} must lie in [0, --d={args.d}]")
    if args.bins < 2:
        parser.error("--bins must be at least 2")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)

    out = _Outputs(args.out_dir)
    t0 = time.perf_counter()
    try:
        out.mkdir(args.out_dir)
        result = COMMANDS[args.command](args, out)
        meta = _metadata(args, argv, result)
        meta["elapsed_seconds"] = time.perf_counter() - t0
        with open(out.path(f"{args.command}.run.json"), "w") as fh:
            json.dump(meta, fh, indent=2, default=_json_default)
    except (CommandError, ValueError, RuntimeError, OSError) as exc:
        out.rollback()
        print(f"nodesal {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        out.rollback()
        raise
    return 0


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


if __name__ == "__main__":
    sys.exit(main())
