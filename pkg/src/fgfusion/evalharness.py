"""Split protocols, nearest-neighbor classification, and the pipeline driver.

The driver runs load -> knn -> per-modality graph -> fusion -> affinity ->
samplers -> embedding training, then scores raw single-modality baselines,
a z-scored concatenation baseline, and the fused embeddings on identical
train/test splits. Results are collected in a table of per-split
accuracies with mean and sample standard deviation per row.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import ejgraph, fusion, knn
from .dataset import (
    EmbeddingMatrix,
    FeatureMatrix,
    LabelVector,
    load_features,
    load_labels,
    validate_alignment,
)
from .embed import TrainConfig, TrainReport, train
from .errors import (
    ClassTooSmallError,
    EmptyTrainSetError,
    FgfError,
    InsufficientDataError,
    InvalidConfigError,
    InvalidSpecError,
    PipelineStageError,
)
from .randomness import rng_stream

PROTOCOLS = ("per_class_train_m", "leave_instance_out", "random_fraction")

FGF_METHOD = "fgf"
JOINT_METHOD = "joint"


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    protocol: str
    m_or_fraction: float
    repeats: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise InvalidSpecError(f"unknown protocol {self.protocol!r}")
        if self.repeats < 1:
            raise InvalidSpecError("repeats must be >= 1")
        if self.protocol == "per_class_train_m":
            if int(self.m_or_fraction) != self.m_or_fraction or self.m_or_fraction < 1:
                raise InvalidSpecError("per_class_train_m needs a positive integer m")
        elif self.protocol == "random_fraction":
            if not 0.0 < self.m_or_fraction < 1.0:
                raise InvalidSpecError("random_fraction needs a fraction in (0, 1)")


def make_splits(labels: LabelVector, spec: SplitSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Generate ``spec.repeats`` train/test partitions of the sample indices."""
    spec.validate()
    if labels.n_classes < 2:
        raise InvalidSpecError("evaluation needs at least 2 distinct classes")
    n = labels.n
    classes = labels.classes
    out: list[tuple[np.ndarray, np.ndarray]] = []
    for r in range(spec.repeats):
        rng = rng_stream(spec.seed, "splits", r)
        if spec.protocol == "per_class_train_m":
            m = int(spec.m_or_fraction)
            train_parts = []
            for c in classes:
                idx = np.flatnonzero(labels.labels == c)
                if m >= idx.size:
                    raise ClassTooSmallError(
                        f"class {c!r} has {idx.size} samples, cannot hold out m={m}"
                    )
                train_parts.append(rng.choice(idx, size=m, replace=False))
            train_idx = np.sort(np.concatenate(train_parts))
        elif spec.protocol == "leave_instance_out":
            if labels.instance_ids is None:
                raise InvalidSpecError("leave_instance_out requires instance ids")
            test_parts = []
            for c in classes:
                idx = np.flatnonzero(labels.labels == c)
                instances = sorted(set(labels.instance_ids[idx].tolist()))
                if len(instances) < 2:
                    raise ClassTooSmallError(
                        f"class {c!r} has {len(instances)} instance(s); need >= 2"
                    )
                held_out = instances[int(rng.integers(len(instances)))]
                test_parts.append(idx[labels.instance_ids[idx] == held_out])
            test_idx = np.sort(np.concatenate(test_parts))
            train_idx = np.setdiff1d(np.arange(n), test_idx)
            out.append((train_idx, test_idx))
            continue
        else:  # random_fraction: fraction of all samples used for training
            n_train = int(round(spec.m_or_fraction * n))
            n_train = min(max(n_train, 1), n - 1)
            train_idx = np.sort(rng.choice(n, size=n_train, replace=False))
        test_idx = np.setdiff1d(np.arange(n), train_idx)
        out.append((train_idx, test_idx))
    return out


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    if isinstance(data, EmbeddingMatrix):
        return data.vectors
    return np.asarray(data, dtype=np.float64)


def knn_classify(
    data,
    labels: LabelVector,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    metric: str = "euclidean",
    votes: int = 1,
) -> float:
    """Majority-vote nearest-neighbor accuracy of test against train.

    Vote ties are resolved in favor of the tied label whose representative
    appears earliest in the distance-ordered vote list.
    """
    matrix = _as_matrix(data)
    train_idx = np.asarray(train_idx, dtype=np.int64)
    test_idx = np.asarray(test_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise EmptyTrainSetError("empty train set")
    if np.intersect1d(train_idx, test_idx).size:
        raise InvalidSpecError("train and test indices overlap")
    if votes < 1:
        raise InvalidConfigError("votes must be >= 1")
    votes = min(votes, train_idx.size)

    dists = knn.pairwise_distances(matrix[test_idx], matrix[train_idx], metric)
    order = np.argsort(dists, axis=1, kind="stable")[:, :votes]
    vote_labels = labels.labels[train_idx[order]]
    truth = labels.labels[test_idx]

    if votes == 1:
        return float(np.mean(vote_labels[:, 0] == truth))
    correct = 0
    for row_labels, true_label in zip(vote_labels, truth):
        counts: dict = {}
        for lab in row_labels:
            counts[lab] = counts.get(lab, 0) + 1
        best = max(counts.values())
        winner = next(lab for lab in row_labels if counts[lab] == best)
        correct += winner == true_label
    return correct / len(truth)


def zscore_concat(modalities: list[FeatureMatrix]) -> np.ndarray:
    """Concatenate modalities after per-dimension standardization."""
    parts = []
    for m in modalities:
        mean = m.data.mean(axis=0)
        std = m.data.std(axis=0)
        std[std == 0.0] = 1.0
        parts.append((m.data - mean) / std)
    return np.hstack(parts)


# ---------------------------------------------------------------------------
# Result table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    method: str
    k: int | None
    d: int | None
    accuracies: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    @property
    def repeats(self) -> int:
        return len(self.rows[0].accuracies) if self.rows else 0

    def fgf_rows(self) -> list[ResultRow]:
        return [r for r in self.rows if r.method == FGF_METHOD]

    def to_csv(self) -> str:
        reps = self.repeats
        for row in self.rows:
            if len(row.accuracies) != reps:
                raise InvalidConfigError("rows have differing split counts")
        header = ["method", "k", "d"] + [f"s-{i + 1}" for i in range(reps)] + ["mean", "std"]
        lines = [",".join(header)]
        for row in self.rows:
            cells = [
                row.method,
                "" if row.k is None else str(row.k),
                "" if row.d is None else str(row.d),
            ]
            cells += [repr(float(a)) for a in row.accuracies]
            cells += [repr(row.mean), repr(row.std)]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def save_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def sweep_report(table: ResultTable, axis: str) -> str:
    """CSV sensitivity summary of the fused-embedding rows along k or d.

    One line per distinct axis value: the mean of the row means sharing
    that value and their max - min spread.
    """
    if axis not in ("k", "d"):
        raise InvalidConfigError(f"axis must be 'k' or 'd', got {axis!r}")
    rows = table.fgf_rows()
    values = sorted({getattr(r, axis) for r in rows})
    if len(values) < 2:
        raise InsufficientDataError(
            f"need >= 2 distinct values on axis {axis!r}, found {len(values)}"
        )
    lines = [f"{axis},mean_accuracy,spread"]
    for v in values:
        means = [r.mean for r in rows if getattr(r, axis) == v]
        lines.append(f"{v},{repr(float(np.mean(means)))},{repr(float(max(means) - min(means)))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Pipeline configuration and driver
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    """Everything a pipeline run needs; JSON keys mirror the CLI flags."""

    features: list[dict]  # [{"path": ..., "format": "csv"|"binary", "name": ...}]
    labels: str
    header: bool = False
    metric: str = "euclidean"
    k: list[int] = field(default_factory=lambda: [20])
    k1: int | None = None
    k2: int | None = None
    weight_mode: str = "jaccard-scaled"
    combine: str = "sum"
    kernel: str = "dissimilarity"
    noise_power: float = 0.75
    d: list[int] = field(default_factory=lambda: [16])
    samples_per_node: int = 100
    negatives: int = 5
    epochs: int = 50
    lr_start: float = 0.025
    lr_end: float = 1e-4
    init_scale: float = 1.0
    protocol: str = "per_class_train_m"
    m_or_fraction: float = 3
    repeats: int = 10
    votes: int = 1
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if len(self.features) < 2:
            raise InvalidConfigError("pipeline needs at least two modalities")
        for spec in self.features:
            if "path" not in spec:
                raise InvalidConfigError("each feature entry needs a 'path'")
        if not self.k or any(int(v) < 1 for v in self.k):
            raise InvalidConfigError("k sweep must be a nonempty list of positive ints")
        if not self.d or any(int(v) < 1 for v in self.d):
            raise InvalidConfigError("d sweep must be a nonempty list of positive ints")
        SplitSpec(self.protocol, self.m_or_fraction, self.repeats, self.seed).validate()
        if self.votes < 1:
            raise InvalidConfigError("votes must be >= 1")
        if self.threads < 1:
            raise InvalidConfigError("threads must be >= 1")

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: invalid JSON ({exc})") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        if "features" not in raw or "labels" not in raw:
            raise InvalidConfigError(f"{path}: 'features' and 'labels' are required")
        cfg = cls(**raw)
        base = path.parent
        for spec in cfg.features:
            spec["path"] = str((base / spec["path"]).resolve())
        cfg.labels = str((base / cfg.labels).resolve())
        return cfg

    def resolved(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["features"] = [dict(spec) for spec in self.features]
        return out


def derive_seed(root: int, *keys) -> int:
    """Stable 63-bit child seed for a named stream."""
    return int(rng_stream(root, *keys).integers(0, 2**63))


@dataclass
class PipelineResult:
    table: ResultTable
    manifest: dict
    embeddings: dict[tuple[int, int], EmbeddingMatrix]
    reports: dict[tuple[int, int], TrainReport]


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (FgfError, OSError)):
            raise PipelineStageError(self.name, exc) from exc
        return False


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute the full fusion pipeline and score all methods per split."""
    config.validate()

    with _Stage("load"):
        modalities = [
            load_features(
                spec["path"],
                fmt=spec.get("format", "csv"),
                header=config.header,
                modality_name=spec.get("name"),
            )
            for spec in config.features
        ]
        labels = load_labels(config.labels)
        validate_alignment(modalities, labels)

    with _Stage("splits"):
        splits = make_splits(
            labels,
            SplitSpec(config.protocol, config.m_or_fraction, config.repeats, config.seed),
        )

    table = ResultTable()
    with _Stage("baselines"):
        for modality in modalities:
            accs = tuple(
                knn_classify(modality, labels, tr, te, "euclidean", config.votes)
                for tr, te in splits
            )
            table.rows.append(
                ResultRow(method=modality.modality_name, k=None, d=modality.dim, accuracies=accs)
            )
        joint = zscore_concat(modalities)
        accs = tuple(
            knn_classify(joint, labels, tr, te, "euclidean", config.votes) for tr, te in splits
        )
        table.rows.append(
            ResultRow(method=JOINT_METHOD, k=None, d=joint.shape[1], accuracies=accs)
        )

    with _Stage("knn"):
        indexes = [knn.build_index(m, config.metric) for m in modalities]

    embeddings: dict[tuple[int, int], EmbeddingMatrix] = {}
    reports: dict[tuple[int, int], TrainReport] = {}
    timings: dict[str, float] = {}
    for k_val in (int(v) for v in config.k):
        with _Stage(f"graphs[k={k_val}]"):
            started = time.perf_counter()
            graphs = [
                ejgraph.build_ejg(
                    idx,
                    k_val,
                    k1=config.k1,
                    k2=config.k2,
                    mode=config.weight_mode,
                    modality_name=m.modality_name,
                )
                for idx, m in zip(indexes, modalities)
            ]
            fused = fusion.fuse_graphs(graphs, combine=config.combine)
            affinity = fusion.normalize_affinity(fused, kernel_input=config.kernel)
            samplers = fusion.build_samplers(
                affinity,
                noise_power=config.noise_power,
                seed=derive_seed(config.seed, "sampler", k_val),
            )
            timings[f"graphs_k{k_val}"] = time.perf_counter() - started
        for d_val in (int(v) for v in config.d):
            with _Stage(f"embed[k={k_val},d={d_val}]"):
                cfg = TrainConfig(
                    d=d_val,
                    samples_per_node=config.samples_per_node,
                    negatives=config.negatives,
                    epochs=config.epochs,
                    lr_start=config.lr_start,
                    lr_end=config.lr_end,
                    init_scale=config.init_scale,
                    seed=derive_seed(config.seed, "train", k_val, d_val),
                )
                emb, report = train(affinity, samplers, cfg, threads=config.threads)
                embeddings[(k_val, d_val)] = emb
                reports[(k_val, d_val)] = report
            with _Stage(f"classify[k={k_val},d={d_val}]"):
                accs = tuple(
                    knn_classify(emb, labels, tr, te, "cosine", config.votes)
                    for tr, te in splits
                )
                table.rows.append(
                    ResultRow(method=FGF_METHOD, k=k_val, d=d_val, accuracies=accs)
                )

    manifest = {
        "config": config.resolved(),
        "n_samples": modalities[0].n,
        "n_classes": labels.n_classes,
        "classifier": {
            "family": "k-nearest-neighbor majority vote",
            "votes": config.votes,
            "baseline_metric": "euclidean",
            "fgf_metric": "cosine",
        },
        "joint_baseline": "per-dimension z-score within each modality, then concatenation",
        "std_convention": "sample standard deviation (ddof=1); 0.0 for a single split",
        "train_reports": {
            f"k{k}_d{d}": {
                "epoch_loss": rep.epoch_loss,
                "positive_pairs": rep.positive_pairs,
                "wall_seconds": rep.wall_seconds,
            }
            for (k, d), rep in reports.items()
        },
        "timings": timings,
    }
    return PipelineResult(table=table, manifest=manifest, embeddings=embeddings, reports=reports)
