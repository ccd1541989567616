"""Command-line orchestration: bench, pretrain, extract, evolve, eval,
sweep, and synth.

Every command writes a manifest.json with the fully resolved configuration
and SHA-256 hashes of its artifacts.  Data outputs (models, CSVs) are
byte-identical across reruns with the same inputs and seed; timestamps live
only in manifests.  EVOLM_THREADS caps the worker pool for independent
bench seeds and sweep rows.
"""

import argparse
import concurrent.futures
import csv
import json
import os
import statistics
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import benchfns, cnn, dataset, elm, evaluation, modelio, numerics, pipeline, sca
from .errors import EvolmError

DEFAULT_THRESHOLDS = (0.1, 0.2, 0.3, 0.4)

DEFAULT_SWEEP_LEVELS = {
    "layers_config": [
        "in_4c_2p_8c_2p",
        "in_6c_2p_12c_2p",
        "in_8c_2p_16c_2p",
        "in_10c_2p_20c_2p",
    ],
    "a": [0.25, 0.5, 0.75, 1.0],
    "batch": [6, 8, 10, 12],
}

# 16-run orthogonal-array pattern over three 4-level parameters
# (level indices are 1-based).
SWEEP_ROWS = [
    (1, 1, 1), (1, 2, 2), (1, 3, 3), (1, 4, 4),
    (2, 1, 2), (2, 2, 1), (2, 3, 4), (2, 4, 3),
    (3, 1, 1), (3, 2, 4), (3, 3, 2), (3, 4, 3),
    (4, 1, 4), (4, 2, 3), (4, 3, 2), (4, 4, 1),
]


def _worker_count():
    env = os.environ.get("EVOLM_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _write_manifest(out_dir, command, config, artifact_paths):
    artifacts = {}
    for p in artifact_paths:
        p = Path(p)
        artifacts[p.name] = modelio.sha256_file(p)
    modelio.write_json(
        Path(out_dir) / "manifest.json",
        {
            "format_version": modelio.FORMAT_VERSION,
            "command": command,
            "config": config,
            "artifacts": artifacts,
            "created": datetime.now(timezone.utc).isoformat(),
        },
    )


def _load_augmented_train(args):
    split = dataset.load_directory(args.data)
    records = list(split.train)
    if args.augment > 1:
        stream = numerics.RngStream(args.seed).child("augmentation")
        positives = [r for r in records if r.label == 1]
        records.extend(dataset.augment(positives, args.augment, stream))
    return split, records


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stream = numerics.RngStream(args.seed).child("synthesize")
    split = dataset.synthesize(args.count, stream, train_fraction=args.train_fraction)
    dataset.write_dataset_png(split, out)
    config = {
        "count": args.count,
        "train_fraction": args.train_fraction,
        "seed": args.seed,
        "train_counts": split.class_counts("train"),
        "test_counts": split.class_counts("test"),
    }
    _write_manifest(out, "synth", config, [])
    print(f"synth: wrote {len(split.train)} train / {len(split.test)} test images to {out}")
    return 0


def cmd_pretrain(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, records = _load_augmented_train(args)
    imgs = dataset.images(records)
    labs = dataset.labels(records)

    root = numerics.RngStream(args.seed)
    model = cnn.build_model(args.arch, root.child("cnn-init"), classes=2)
    t0 = time.perf_counter()
    trace = cnn.pretrain_gdbp(
        model, imgs, labs, lr=args.lr, batch=args.batch, epochs=args.epochs,
        stream=root.child("data-shuffle"),
    )
    train_ms = (time.perf_counter() - t0) * 1000.0
    cnn.freeze(model)
    cnn.save_model(model, out / pipeline.CNN_FILE)

    trace_path = out / "loss_trace.csv"
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(trace, start=1):
            writer.writerow([epoch, repr(loss)])

    config = {
        "data": str(args.data), "arch": args.arch, "lr": args.lr, "batch": args.batch,
        "epochs": args.epochs, "augment": args.augment, "seed": args.seed,
        "train_images": len(records), "pretrain_ms": train_ms,
    }
    _write_manifest(out, "pretrain", config, [out / pipeline.CNN_FILE, trace_path])
    print(f"pretrain: {len(records)} images, {args.epochs} epochs, final loss {trace[-1]:.6f}")
    return 0


def cmd_extract(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = cnn.load_model(Path(args.bundle) / pipeline.CNN_FILE)
    split, train_records = _load_augmented_train(args)

    written = []
    wanted = ("train", "test") if args.split == "both" else (args.split,)
    for which in wanted:
        records = train_records if which == "train" else split.test
        feats = cnn.extract_features(model, dataset.images(records))
        path = out / f"features_{which}.csv"
        dataset.write_features_csv(
            path, [r.id for r in records], dataset.labels(records), feats
        )
        written.append(path)

    config = {
        "data": str(args.data), "bundle": str(args.bundle), "split": args.split,
        "augment": args.augment, "seed": args.seed,
        "feature_dim": model.architecture.feature_dim,
    }
    _write_manifest(out, "extract", config, written)
    print(f"extract: wrote {', '.join(str(p) for p in written)}")
    return 0


def cmd_evolve(args):
    bundle = Path(args.bundle)
    conv = cnn.load_model(bundle / pipeline.CNN_FILE)
    _, labs, feats = dataset.read_features_csv(args.features)
    if feats.shape[1] != conv.architecture.feature_dim:
        raise EvolmError(
            f"features have dim {feats.shape[1]}, bundle cnn produces "
            f"{conv.architecture.feature_dim}"
        )

    config = sca.ScaConfig(
        population=args.pop,
        max_iterations=args.iters,
        a=args.a,
        loss_threshold=args.loss_threshold,
        seed=numerics.derive_seed(args.seed, "sca"),
    )
    t0 = time.perf_counter()
    head, diagnostics = pipeline.evolve_elm(
        feats, pipeline.one_hot(labs), config, args.hidden
    )
    evolve_ms = (time.perf_counter() - t0) * 1000.0
    elm.save_model(head, bundle / pipeline.ELM_FILE)

    diag_path = bundle / "sca_diagnostics.csv"
    sca.write_diagnostics_csv(diagnostics, diag_path)

    modelio.write_json(
        bundle / pipeline.MANIFEST_FILE,
        {
            "format_version": modelio.FORMAT_VERSION,
            "architecture": conv.architecture.text,
            "seed": args.seed,
            "hyperparameters": {
                "pop": args.pop, "iters": args.iters, "a": args.a,
                "hidden": args.hidden, "loss_threshold": args.loss_threshold,
            },
            "threshold": args.threshold,
            "best_training_loss": diagnostics.convergence_curve[-1],
            "evolve_ms": evolve_ms,
            "created": datetime.now(timezone.utc).isoformat(),
        },
    )
    print(
        f"evolve: best training loss {diagnostics.convergence_curve[-1]:.6f} "
        f"after {diagnostics.iterations} iterations"
    )
    return 0


def cmd_eval(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = pipeline.load_bundle(args.bundle)
    split = dataset.load_directory(args.data)
    records = split.test
    imgs = dataset.images(records)
    labs = dataset.labels(records)

    t0 = time.perf_counter()
    grades = pipeline.predict_epg_batch(model, imgs)
    test_ms = (time.perf_counter() - t0) * 1000.0

    thresholds = [float(t) for t in args.thresholds.split(",")]
    rows = evaluation.threshold_sweep(grades, labs, thresholds)
    curves = evaluation.roc_pr_auc(grades, labs)

    grades_path = out / "grades.csv"
    evaluation.write_grades_csv(grades_path, [r.id for r in records], labs, grades)
    thr_path = out / "thresholds.csv"
    evaluation.write_threshold_csv(thr_path, rows)
    roc_path = out / "roc.csv"
    evaluation.write_roc_csv(roc_path, curves.roc_points)
    pr_path = out / "pr.csv"
    evaluation.write_pr_csv(pr_path, curves.pr_points)

    wilcoxon = None
    if args.baseline_grades:
        own = [grades] + [evaluation.read_grades_csv(p)[2] for p in (args.prior_grades or [])]
        base = [evaluation.read_grades_csv(p)[2] for p in args.baseline_grades]
        own_labels = [labs] + [evaluation.read_grades_csv(p)[1] for p in (args.prior_grades or [])]
        base_labels = [evaluation.read_grades_csv(p)[1] for p in args.baseline_grades]
        wilcoxon = {}
        for thr in thresholds:
            for metric in ("sensitivity", "specificity"):
                a = _metric_across_runs(own, own_labels, thr, metric)
                b = _metric_across_runs(base, base_labels, thr, metric)
                if a and b:
                    wilcoxon[f"{metric}@{thr:g}"] = evaluation.wilcoxon_rank_sum(a, b)

    timings = {
        "test_ms": f"{test_ms:.3f}",
        "per_image_ms": f"{test_ms / len(records):.3f}",
    }
    bundle_manifest = modelio.read_json(Path(args.bundle) / pipeline.MANIFEST_FILE)
    if "evolve_ms" in bundle_manifest:
        timings["train_evolve_ms"] = f"{bundle_manifest['evolve_ms']:.3f}"

    summary = evaluation.format_summary(
        curves.auc, rows, (int(np.sum(labs == 1)), int(np.sum(labs == 0))),
        timings=timings, wilcoxon=wilcoxon,
    )
    summary_path = out / "summary.txt"
    summary_path.write_text(summary, encoding="utf-8")

    config = {
        "bundle": str(args.bundle), "data": str(args.data),
        "thresholds": thresholds, "test_images": len(records),
        "auc": curves.auc, "test_ms": test_ms,
    }
    _write_manifest(
        out, "eval", config, [grades_path, thr_path, roc_path, pr_path, summary_path]
    )
    print(summary)
    return 0


def _metric_across_runs(grade_sets, label_sets, thr, metric):
    values = []
    for g, l in zip(grade_sets, label_sets):
        row = evaluation.threshold_sweep(g, l, [thr])[0]
        v = getattr(row, metric)
        if v is not None:
            values.append(v)
    return values


def _bench_one(fn, seed, pop, iters, a):
    config = sca.ScaConfig(
        population=pop,
        max_iterations=iters,
        a=a,
        bounds=[(fn.lower, fn.upper)] * fn.dim,
        seed=seed,
    )
    return sca.optimize(lambda x: benchfns.evaluate(fn, x), config)


def cmd_bench(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = benchfns.FUNCTION_IDS if args.functions == "all" else args.functions.split(",")
    for fid in ids:
        if fid not in benchfns.FUNCTION_IDS:
            raise EvolmError(f"unknown benchmark function id: {fid}")

    jobs = []
    for fid in ids:
        fn = benchfns.get(fid, args.dim if benchfns.get(fid).scalable else None)
        for s in range(args.seeds):
            jobs.append((fn, numerics.derive_seed(args.seed, f"{fid}-run{s}"), fid, s))

    workers = _worker_count()
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda j: _bench_one(j[0], j[1], args.pop, args.iters, args.a), jobs)
            )
    else:
        results = [_bench_one(j[0], j[1], args.pop, args.iters, args.a) for j in jobs]

    written = []
    finals = {fid: [] for fid in ids}
    for (fn, _, fid, s), res in zip(jobs, results):
        path = out / f"{fid}_seed{s}.csv"
        sca.write_diagnostics_csv(res.diagnostics, path)
        written.append(path)
        finals[fid].append(res.best_fitness)

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["function", "dim", "seeds", "median_final", "best_final", "mean_final"])
        for fid in ids:
            fn = benchfns.get(fid, args.dim if benchfns.get(fid).scalable else None)
            vals = finals[fid]
            writer.writerow(
                [fid, fn.dim, len(vals), repr(statistics.median(vals)),
                 repr(min(vals)), repr(statistics.fmean(vals))]
            )
    written.append(summary_path)

    config = {
        "functions": list(ids), "dim": args.dim, "pop": args.pop, "iters": args.iters,
        "a": args.a, "seeds": args.seeds, "seed": args.seed, "workers": workers,
    }
    _write_manifest(out, "bench", config, written)
    for fid in ids:
        print(f"bench {fid}: median final {statistics.median(finals[fid]):.6g}")
    return 0


def _load_levels(path):
    if path is None:
        return dict(DEFAULT_SWEEP_LEVELS)
    with open(path, "r", encoding="utf-8") as fh:
        levels = json.load(fh)
    for key in ("layers_config", "a", "batch"):
        if key not in levels:
            raise EvolmError(f"levels file must define {key!r}")
        if len(levels[key]) != 4:
            raise EvolmError(f"parameter {key!r} needs exactly 4 levels, got {len(levels[key])}")
    return levels


def _sweep_one(row_index, levels_row, imgs, labs, args):
    arch, a, batch = levels_row
    hyper = pipeline.PipelineHyper(
        lr=args.lr, batch=batch, epochs=args.epochs,
        pop=args.pop, iters=args.iters, a=a, hidden=args.hidden,
    )
    _, report = pipeline.train_pipeline(
        imgs, labs, arch, hyper, numerics.derive_seed(args.seed, f"row-{row_index}")
    )
    return report.sca_diagnostics.convergence_curve[-1]


def cmd_sweep(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    levels = _load_levels(args.levels)
    split = dataset.load_directory(args.data)
    imgs = dataset.images(split.train)
    labs = dataset.labels(split.train)

    rows = [
        (
            levels["layers_config"][i - 1],
            float(levels["a"][j - 1]),
            int(levels["batch"][k - 1]),
        )
        for (i, j, k) in SWEEP_ROWS
    ]

    workers = _worker_count()
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            losses = list(
                pool.map(lambda idx: _sweep_one(idx, rows[idx], imgs, labs, args), range(len(rows)))
            )
    else:
        losses = [_sweep_one(idx, rows[idx], imgs, labs, args) for idx in range(len(rows))]

    sweep_path = out / "sweep.csv"
    with open(sweep_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["experiment", "layers_level", "a_level", "batch_level",
             "layers_config", "a", "batch", "loss"]
        )
        for idx, ((i, j, k), (arch, a, batch), loss) in enumerate(
            zip(SWEEP_ROWS, rows, losses), start=1
        ):
            writer.writerow([idx, i, j, k, arch, repr(a), batch, repr(loss)])

    level_means = {}
    for p_idx, name in enumerate(("layers_config", "a", "batch")):
        means = []
        for level in range(1, 5):
            vals = [
                loss for (combo, loss) in zip(SWEEP_ROWS, losses) if combo[p_idx] == level
            ]
            means.append(statistics.fmean(vals))
        level_means[name] = means

    means_path = out / "level_means.csv"
    with open(means_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "level", "value", "mean_loss"])
        for name, means in level_means.items():
            for level, mean in enumerate(means, start=1):
                writer.writerow([name, level, levels[name][level - 1], repr(mean)])

    best_levels = {
        name: {
            "level": int(np.argmin(means)) + 1,
            "value": levels[name][int(np.argmin(means))],
        }
        for name, means in level_means.items()
    }
    config = {
        "data": str(args.data), "levels": levels, "lr": args.lr, "epochs": args.epochs,
        "pop": args.pop, "iters": args.iters, "hidden": args.hidden, "seed": args.seed,
        "best_levels": best_levels, "workers": workers,
    }
    _write_manifest(out, "sweep", config, [sweep_path, means_path])
    for name, best in best_levels.items():
        print(f"sweep: best {name} = {best['value']} (level {best['level']})")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evolm",
        description="Conv-feature + ELM classifier with a sine-cosine optimizer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic two-class blob dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100, help="images per class")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pretrain", help="train the conv stack and freeze it")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", default="in_8c_2p_16c_2p")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=12)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--augment", type=int, default=1,
                   help="training-positive augmentation factor (1 disables)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="bundle directory")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("extract", help="extract features with a frozen conv stack")
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--split", choices=("train", "test", "both"), default="both")
    p.add_argument("--augment", type=int, default=1)
    p.add_argument("--seed", type=int, default=0,
                   help="must match pretrain's seed to reproduce augmentation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evolve", help="tune the ELM head on extracted features")
    p.add_argument("--features", required=True, help="features_train.csv")
    p.add_argument("--bundle", required=True)
    p.add_argument("--hidden", type=int, default=120)
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--loss-threshold", type=float, default=None)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="decision threshold stored in the bundle")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("eval", help="evaluate a bundle on a dataset's test split")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--thresholds", default=",".join(str(t) for t in DEFAULT_THRESHOLDS))
    p.add_argument("--prior-grades", nargs="*", default=None,
                   help="grades.csv files from earlier runs of this model")
    p.add_argument("--baseline-grades", nargs="*", default=None,
                   help="grades.csv files from a baseline model to rank-sum against")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run the optimizer over benchmark functions")
    p.add_argument("--functions", default="all", help="comma list of tf1..tf9 or 'all'")
    p.add_argument("--dim", type=int, default=None,
                   help="override dimension for scalable functions")
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0, help="master seed for the run family")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="16-run orthogonal-array parameter sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--levels", default=None, help="JSON file with 4 levels per parameter")
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--pop", type=int, default=10)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--hidden", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EvolmError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
