"""Feature matrices, labels, embeddings, and their persistence.

File formats
------------
CSV features/embeddings: one sample per row, numeric fields separated by
commas or tabs, ``.`` decimal, no header unless explicitly skipped.

Binary features/embeddings: a fixed little-endian layout —

    magic (4 bytes: ``EJGF`` for features, ``EJGE`` for embeddings)
    u32 version (currently 1)
    u64 n, u64 D
    n * D IEEE-754 float64 values, row-major

Labels: one record per line, ``label[,instance_id]``. Instance ids are
all-or-none across the file.

All containers are immutable after construction (arrays are materialized
copies); they can be shared freely across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidConfigError,
    LengthMismatchError,
    NonFiniteValueError,
    ParseError,
)
from .randomness import rng_stream

FEATURE_MAGIC = b"EJGF"
EMBEDDING_MAGIC = b"EJGE"
BINARY_VERSION = 1

_FIELD_SPLIT = re.compile(r"[,\t]")


@dataclass(frozen=True)
class FeatureMatrix:
    """n samples by D dimensions of one modality, all entries finite."""

    data: np.ndarray
    modality_name: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", arr)
        if arr.ndim != 2:
            raise DimensionMismatchError(
                f"feature matrix must be 2-D, got shape {arr.shape}"
            )
        if arr.shape[0] < 2 or arr.shape[1] < 1:
            raise DimensionMismatchError(
                f"need n >= 2 and D >= 1, got n={arr.shape[0]}, D={arr.shape[1]}"
            )
        _check_finite(arr, self.modality_name or "features")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n fused feature vectors of dimensionality d."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", arr)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise DimensionMismatchError(
                f"embedding matrix must be 2-D with d >= 1, got shape {arr.shape}"
            )
        _check_finite(arr, "embeddings")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class LabelVector:
    """Per-sample class labels, optionally with instance identifiers."""

    labels: np.ndarray
    instance_ids: np.ndarray | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=object)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or labels.size == 0:
            raise DimensionMismatchError("labels must be a nonempty 1-D sequence")
        if self.instance_ids is not None:
            inst = np.asarray(self.instance_ids, dtype=object)
            if inst.shape != labels.shape:
                raise LengthMismatchError(
                    f"{inst.size} instance ids for {labels.size} labels"
                )
            object.__setattr__(self, "instance_ids", inst)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def classes(self) -> list:
        return sorted(set(self.labels.tolist()))

    @property
    def n_classes(self) -> int:
        return len(set(self.labels.tolist()))


def _check_finite(arr: np.ndarray, what: str) -> None:
    finite = np.isfinite(arr)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise NonFiniteValueError(
            f"non-finite value in {what} at row {row}, col {col}",
            row=int(row),
            col=int(col),
        )


# ---------------------------------------------------------------------------
# CSV / binary matrix IO
# ---------------------------------------------------------------------------


def _parse_numeric_csv(path: Path, skip_header: bool) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    start = 1 if skip_header else 0
    data_row = 0
    for lineno, line in enumerate(lines[start:], start=start):
        stripped = line.strip()
        if not stripped:
            continue
        fields = _FIELD_SPLIT.split(stripped)
        parsed = []
        for col, tok in enumerate(fields):
            try:
                value = float(tok.strip())
            except ValueError:
                raise ParseError(
                    f"line {lineno}: field {col} ({tok.strip()!r}) is not numeric",
                    line=lineno,
                    offset=col,
                ) from None
            if not math.isfinite(value):
                raise NonFiniteValueError(
                    f"non-finite value at row {data_row}, col {col}",
                    row=data_row,
                    col=col,
                )
            parsed.append(value)
        if width is None:
            width = len(parsed)
        elif len(parsed) != width:
            raise DimensionMismatchError(
                f"line {lineno}: {len(parsed)} fields, expected {width}"
            )
        rows.append(parsed)
        data_row += 1
    if not rows:
        raise ParseError(f"{path}: no data rows", line=0)
    return np.array(rows, dtype=np.float64)


def _write_numeric_csv(arr: np.ndarray, path: Path) -> None:
    # repr() of a Python float is the shortest round-tripping decimal form,
    # so CSV persistence is value-exact.
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _read_binary_matrix(path: Path, magic: bytes) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 24:
        raise ParseError(f"{path}: truncated header", line=0)
    if blob[:4] != magic:
        raise ParseError(
            f"{path}: bad magic {blob[:4]!r}, expected {magic!r}", line=0
        )
    version = int(np.frombuffer(blob, dtype="<u4", count=1, offset=4)[0])
    if version != BINARY_VERSION:
        raise ParseError(f"{path}: unsupported version {version}", line=0)
    n, d = (int(v) for v in np.frombuffer(blob, dtype="<u8", count=2, offset=8))
    expected = 24 + 8 * n * d
    if len(blob) != expected:
        raise ParseError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}", line=0
        )
    data = np.frombuffer(blob, dtype="<f8", count=n * d, offset=24)
    return data.reshape(n, d).copy()


def _write_binary_matrix(arr: np.ndarray, path: Path, magic: bytes) -> None:
    header = (
        magic
        + np.asarray([BINARY_VERSION], dtype="<u4").tobytes()
        + np.asarray(arr.shape, dtype="<u8").tobytes()
    )
    Path(path).write_bytes(header + np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _check_format(fmt: str) -> str:
    if fmt not in ("csv", "binary"):
        raise InvalidConfigError(f"unknown format {fmt!r}, expected 'csv' or 'binary'")
    return fmt


def load_features(
    path: str | Path,
    fmt: str = "csv",
    header: bool = False,
    modality_name: str | None = None,
) -> FeatureMatrix:
    """Load a feature matrix from ``path`` in the declared format."""
    path = Path(path)
    _check_format(fmt)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "csv":
        data = _parse_numeric_csv(path, skip_header=header)
    else:
        data = _read_binary_matrix(path, FEATURE_MAGIC)
    name = modality_name if modality_name is not None else path.stem
    return FeatureMatrix(data, modality_name=name)


def save_features(features: FeatureMatrix, path: str | Path, fmt: str = "csv") -> None:
    _check_format(fmt)
    if fmt == "csv":
        _write_numeric_csv(features.data, Path(path))
    else:
        _write_binary_matrix(features.data, Path(path), FEATURE_MAGIC)


def load_embeddings(path: str | Path, fmt: str = "csv") -> EmbeddingMatrix:
    path = Path(path)
    _check_format(fmt)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt == "csv":
        data = _parse_numeric_csv(path, skip_header=False)
    else:
        data = _read_binary_matrix(path, EMBEDDING_MAGIC)
    return EmbeddingMatrix(data)


def save_embeddings(embeddings: EmbeddingMatrix, path: str | Path, fmt: str = "csv") -> None:
    """Persist embeddings; binary round-trips bitwise, CSV value-exact."""
    _check_format(fmt)
    if fmt == "csv":
        _write_numeric_csv(embeddings.vectors, Path(path))
    else:
        _write_binary_matrix(embeddings.vectors, Path(path), EMBEDDING_MAGIC)


def load_labels(path: str | Path) -> LabelVector:
    """Load ``label[,instance_id]`` records, one per line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    labels: list[str] = []
    instances: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            stripped = line.strip()
            if not stripped:
                continue
            parts = [p.strip() for p in _FIELD_SPLIT.split(stripped)]
            if len(parts) > 2 or not parts[0]:
                raise ParseError(
                    f"line {lineno}: expected 'label[,instance_id]'", line=lineno
                )
            labels.append(parts[0])
            if len(parts) == 2:
                instances.append(parts[1])
    if not labels:
        raise ParseError(f"{path}: no label records", line=0)
    if instances and len(instances) != len(labels):
        raise ParseError("instance ids must be given for all records or none")
    return LabelVector(
        np.array(labels, dtype=object),
        np.array(instances, dtype=object) if instances else None,
    )


def save_labels(labels: LabelVector, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(labels.n):
            if labels.instance_ids is not None:
                fh.write(f"{labels.labels[i]},{labels.instance_ids[i]}\n")
            else:
                fh.write(f"{labels.labels[i]}\n")


def validate_alignment(
    modalities: list[FeatureMatrix], labels: LabelVector | None = None
) -> None:
    """Check that all modalities (and labels) describe the same n samples.

    Ordering is positional: row i everywhere refers to the same sample.
    """
    if not modalities:
        raise InvalidConfigError("at least one modality required")
    n = modalities[0].n
    for m in modalities[1:]:
        if m.n != n:
            raise DimensionMismatchError(
                f"modality {m.modality_name!r} has {m.n} samples, expected {n}"
            )
    if labels is not None and labels.n != n:
        raise LengthMismatchError(f"{labels.n} labels for {n} samples")


# ---------------------------------------------------------------------------
# Synthetic complementary-modality fixture
# ---------------------------------------------------------------------------


def synth_multimodal(
    n_classes: int,
    per_class: int,
    noise: float = 0.0,
    complementarity: float = 1.0,
    seed: int = 0,
) -> tuple[FeatureMatrix, FeatureMatrix, LabelVector]:
    """Generate two modalities whose discriminative directions are complementary.

    Classes are grouped into pairs. Both modalities carry the pair identity
    on a one-hot coordinate block; the within-pair distinction lives on a
    second block whose amplitude depends on the modality: modality A keeps
    it at full strength for the first half of the pairs and scales it by
    ``1 - complementarity`` for the rest, modality B mirrors that. At
    ``complementarity=1`` each modality can therefore tell the two classes
    of a pair apart only for its own half of the pairs; concatenating both
    modalities separates everything. i.i.d. Gaussian noise of standard
    deviation ``noise`` is added to every coordinate. The output is a pure
    function of the arguments.
    """
    if n_classes < 2 or per_class < 2:
        raise InvalidConfigError("need n_classes >= 2 and per_class >= 2")
    if noise < 0:
        raise InvalidConfigError("noise must be >= 0")
    if not 0.0 <= complementarity <= 1.0:
        raise InvalidConfigError("complementarity must be in [0, 1]")

    pair_scale = 4.0
    bit_scale = 1.0
    n_pairs = (n_classes + 1) // 2
    a_pairs = (n_pairs + 1) // 2  # pairs [0, a_pairs) are separated by modality A
    dim = 2 * n_pairs
    weak = 1.0 - complementarity

    means_a = np.zeros((n_classes, dim))
    means_b = np.zeros((n_classes, dim))
    for cls in range(n_classes):
        pair = cls // 2
        sign = 1.0 if cls % 2 == 0 else -1.0
        means_a[cls, pair] = pair_scale
        means_b[cls, pair] = pair_scale
        gain_a = 1.0 if pair < a_pairs else weak
        gain_b = weak if pair < a_pairs else 1.0
        means_a[cls, n_pairs + pair] = sign * bit_scale * gain_a
        means_b[cls, n_pairs + pair] = sign * bit_scale * gain_b

    class_idx = np.repeat(np.arange(n_classes), per_class)
    rng = rng_stream(seed, "synth")
    n = n_classes * per_class
    mat_a = means_a[class_idx] + rng.normal(0.0, noise, size=(n, dim))
    mat_b = means_b[class_idx] + rng.normal(0.0, noise, size=(n, dim))
    labels = np.array([f"c{j:02d}" for j in class_idx], dtype=object)
    return (
        FeatureMatrix(mat_a, modality_name="modality_a"),
        FeatureMatrix(mat_b, modality_name="modality_b"),
        LabelVector(labels),
    )
