"""Command-line interface.

Subcommands: synth, build-graph, fuse, embed, eval, pipeline.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure (divergence detector).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dataset import (
    load_embeddings,
    load_features,
    load_labels,
    save_embeddings,
    save_features,
    save_labels,
    synth_multimodal,
)
from .ejgraph import build_ejg, load_graph, save_graph
from .embed import TrainConfig, train
from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    PipelineStageError,
)
from .evalharness import (
    PipelineConfig,
    ResultRow,
    ResultTable,
    SplitSpec,
    knn_classify,
    make_splits,
    run_pipeline,
    sweep_report,
)
from .fusion import build_samplers, fuse_graphs, load_affinity, normalize_affinity, save_affinity
from .knn import build_index

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgfusion",
        description="Multi-modal feature fusion via extended Jaccard graphs "
        "and negative-sampling graph embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-modality fixture")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--complementarity", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")

    p = sub.add_parser("build-graph", help="build one modality's extended Jaccard graph")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--weight-mode", choices=("literal", "jaccard-scaled"), default="jaccard-scaled")
    p.add_argument("--modality", default=None, help="modality name (default: file stem)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--graph-format", choices=("csv", "binary"), default="csv")

    p = sub.add_parser("fuse", help="fuse modality graphs and emit the affinity matrix")
    p.add_argument("--graphs", type=Path, nargs="+", required=True)
    p.add_argument("--graph-format", choices=("csv", "binary"), default="csv")
    p.add_argument("--combine", choices=("sum", "max"), default="sum")
    p.add_argument("--kernel", choices=("dissimilarity", "literal"), default="dissimilarity")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--affinity-format", choices=("csv", "binary"), default="binary")

    p = sub.add_parser("embed", help="train fused embeddings from an affinity matrix")
    p.add_argument("--affinity", type=Path, required=True)
    p.add_argument("--affinity-format", choices=("csv", "binary"), default="binary")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples-per-node", type=int, default=100)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.025, help="starting learning rate")
    p.add_argument("--lr-end", type=float, default=1e-4)
    p.add_argument("--init-scale", type=float, default=1.0)
    p.add_argument("--noise-power", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "binary"), default="binary")
    p.add_argument("--report", type=Path, default=None, help="write a JSON training report")

    p = sub.add_parser("eval", help="split-and-classify a feature or embedding file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", type=Path)
    src.add_argument("--embeddings", type=Path)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--header", action="store_true")
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument(
        "--protocol",
        choices=("per_class_train_m", "leave_instance_out", "random_fraction"),
        default="per_class_train_m",
    )
    p.add_argument("--m", type=int, default=None, help="training samples per class")
    p.add_argument("--fraction", type=float, default=None, help="training fraction")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--votes", type=int, default=1)
    p.add_argument("--classify-metric", choices=("euclidean", "cosine"), default="euclidean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="write results CSV here")

    p = sub.add_parser("pipeline", help="run the full fusion + evaluation pipeline")
    p.add_argument("--config", type=Path, required=True, help="pipeline JSON config")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--k", type=int, nargs="+", default=None, help="override the k sweep")
    p.add_argument("--d", type=int, nargs="+", default=None, help="override the d sweep")
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--metric", choices=("euclidean", "cosine"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--samples-per-node", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--lr", type=float, default=None, help="override the starting learning rate")
    p.add_argument("--lr-end", type=float, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--votes", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--weight-mode", choices=("literal", "jaccard-scaled"), default=None)
    p.add_argument("--combine", choices=("sum", "max"), default=None)
    p.add_argument("--kernel", choices=("dissimilarity", "literal"), default=None)
    p.add_argument("--noise-power", type=float, default=None)
    p.add_argument(
        "--embeddings-format", choices=("csv", "binary"), default="binary",
        help="format of the emitted embedding files",
    )
    return parser


def _cmd_synth(args) -> int:
    mat_a, mat_b, labels = synth_multimodal(
        args.classes, args.per_class, args.noise, args.complementarity, args.seed
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    ext = "csv" if args.format == "csv" else "bin"
    path_a = args.out_dir / f"modality_a.{ext}"
    path_b = args.out_dir / f"modality_b.{ext}"
    path_labels = args.out_dir / "labels.txt"
    save_features(mat_a, path_a, args.format)
    save_features(mat_b, path_b, args.format)
    save_labels(labels, path_labels)
    print(path_a)
    print(path_b)
    print(path_labels)
    return EXIT_OK


def _cmd_build_graph(args) -> int:
    features = load_features(args.features, args.format, args.header, args.modality)
    index = build_index(features, args.metric)
    graph = build_ejg(
        index, args.k, k1=args.k1, k2=args.k2, mode=args.weight_mode,
        modality_name=features.modality_name,
    )
    save_graph(graph, args.out, args.graph_format)
    print(f"{args.out}: {graph.n} nodes, {graph.edge_count} edges")
    return EXIT_OK


def _cmd_fuse(args) -> int:
    graphs = [load_graph(path, args.graph_format, modality_name=path.stem) for path in args.graphs]
    fused = fuse_graphs(graphs, combine=args.combine)
    affinity = normalize_affinity(fused, kernel_input=args.kernel)
    save_affinity(affinity, args.out, args.affinity_format)
    print(f"{args.out}: {affinity.n} rows")
    return EXIT_OK


def _cmd_embed(args) -> int:
    affinity = load_affinity(args.affinity, args.affinity_format)
    samplers = build_samplers(affinity, noise_power=args.noise_power, seed=args.seed)
    cfg = TrainConfig(
        d=args.dim,
        samples_per_node=args.samples_per_node,
        negatives=args.negatives,
        epochs=args.epochs,
        lr_start=args.lr,
        lr_end=args.lr_end,
        init_scale=args.init_scale,
        seed=args.seed,
    )
    embeddings, report = train(affinity, samplers, cfg, threads=args.threads)
    save_embeddings(embeddings, args.out, args.format)
    if args.report is not None:
        args.report.write_text(
            json.dumps(
                {
                    "epoch_loss": report.epoch_loss,
                    "positive_pairs": report.positive_pairs,
                    "wall_seconds": report.wall_seconds,
                },
                indent=2,
            ),
            encoding="utf-8",
        )
    print(f"{args.out}: {embeddings.n} x {embeddings.dim}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    if args.features is not None:
        data = load_features(args.features, args.format, args.header)
        source = args.features
    else:
        data = load_embeddings(args.embeddings, args.format)
        source = args.embeddings
    labels = load_labels(args.labels)
    if args.protocol == "random_fraction":
        if args.fraction is None:
            raise ConfigError("random_fraction requires --fraction")
        m_or_fraction = args.fraction
    else:
        if args.m is None:
            raise ConfigError(f"{args.protocol} requires --m")
        m_or_fraction = args.m
    spec = SplitSpec(args.protocol, m_or_fraction, args.repeats, args.seed)
    splits = make_splits(labels, spec)
    accs = tuple(
        knn_classify(data, labels, tr, te, args.classify_metric, args.votes)
        for tr, te in splits
    )
    table = ResultTable([ResultRow(method=Path(source).stem, k=None, d=data.dim, accuracies=accs)])
    if args.out is not None:
        table.save_csv(args.out)
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.from_json(args.config)
    overrides = {
        "k": args.k,
        "d": args.d,
        "k1": args.k1,
        "k2": args.k2,
        "metric": args.metric,
        "seed": args.seed,
        "epochs": args.epochs,
        "samples_per_node": args.samples_per_node,
        "negatives": args.negatives,
        "lr_start": args.lr,
        "lr_end": args.lr_end,
        "repeats": args.repeats,
        "votes": args.votes,
        "threads": args.threads,
        "weight_mode": args.weight_mode,
        "combine": args.combine,
        "kernel": args.kernel,
        "noise_power": args.noise_power,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)

    result = run_pipeline(config)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    results_path = args.out_dir / "results.csv"
    result.table.save_csv(results_path)

    ext = "csv" if args.embeddings_format == "csv" else "bin"
    emb_paths = {}
    for (k_val, d_val), emb in result.embeddings.items():
        path = args.out_dir / f"embeddings_k{k_val}_d{d_val}.{ext}"
        save_embeddings(emb, path, args.embeddings_format)
        emb_paths[f"k{k_val}_d{d_val}"] = str(path)
    result.manifest["outputs"] = {
        "results": str(results_path),
        "embeddings": emb_paths,
    }
    for axis in ("k", "d"):
        if len(set(getattr(config, axis))) >= 2:
            sweep_path = args.out_dir / f"sweep_{axis}.csv"
            sweep_path.write_text(sweep_report(result.table, axis), encoding="utf-8")
            result.manifest["outputs"][f"sweep_{axis}"] = str(sweep_path)
    (args.out_dir / "manifest.json").write_text(
        json.dumps(result.manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    sys.stdout.write(result.table.to_csv())
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "build-graph": _cmd_build_graph,
    "fuse": _cmd_fuse,
    "embed": _cmd_embed,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, PipelineStageError):
        cause = exc.__cause__
        if isinstance(cause, Exception):
            return _exit_code(cause)
        return EXIT_DATA
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DivergenceError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, FileNotFoundError, OSError)):
        return EXIT_DATA
    raise exc


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
