"""Exact brute-force k-nearest-neighbor search.

Queries are answered from full pairwise distances computed in row blocks,
so results are exact and independent of evaluation order. Ties are broken
by ascending sample index (stable sort), and a sample is never its own
neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import InvalidMetricError, KOutOfRangeError, ZeroVectorError

METRICS = ("euclidean", "cosine")

_BLOCK = 1024


@dataclass(frozen=True)
class NeighborList:
    query_id: int
    neighbor_ids: np.ndarray  # int64, nearest first
    distances: np.ndarray  # float64, non-decreasing


class KnnIndex:
    """Immutable index over one feature matrix under a fixed metric."""

    def __init__(self, matrix: np.ndarray, metric: str):
        if metric not in METRICS:
            raise InvalidMetricError(f"unknown metric {metric!r}, expected one of {METRICS}")
        self.metric = metric
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self.n = self.matrix.shape[0]
        if metric == "euclidean":
            self.sq_norms = np.einsum("ij,ij->i", self.matrix, self.matrix)
            self.unit = None
        else:
            norms = np.linalg.norm(self.matrix, axis=1)
            zero = np.flatnonzero(norms == 0.0)
            if zero.size:
                raise ZeroVectorError(
                    f"cosine metric undefined for zero vector at row {zero[0]}"
                )
            self.sq_norms = None
            self.unit = self.matrix / norms[:, None]

    def _distance_block(self, rows: np.ndarray) -> np.ndarray:
        """Distances from the given query rows to every sample."""
        if self.metric == "euclidean":
            sq = (
                self.sq_norms[rows, None]
                + self.sq_norms[None, :]
                - 2.0 * (self.matrix[rows] @ self.matrix.T)
            )
            return np.sqrt(np.maximum(sq, 0.0))
        sims = self.unit[rows] @ self.unit.T
        return np.maximum(1.0 - sims, 0.0)

    def _topk_block(self, rows: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        dists = self._distance_block(rows)
        dists[np.arange(rows.size), rows] = np.inf  # exclude self
        # stable argsort: equal distances resolve to the lower sample index
        order = np.argsort(dists, axis=1, kind="stable")[:, :k]
        return order, np.take_along_axis(dists, order, axis=1)


def build_index(features: FeatureMatrix | np.ndarray, metric: str = "euclidean") -> KnnIndex:
    matrix = features.data if isinstance(features, FeatureMatrix) else np.asarray(features)
    return KnnIndex(matrix, metric)


def _check_k(index: KnnIndex, k: int) -> None:
    if not 1 <= k <= index.n - 1:
        raise KOutOfRangeError(f"k={k} outside [1, {index.n - 1}] for n={index.n}")


def knns(index: KnnIndex, q: int, k: int) -> NeighborList:
    """The k samples nearest to q, excluding q itself."""
    _check_k(index, k)
    if not 0 <= q < index.n:
        raise KOutOfRangeError(f"query index {q} outside [0, {index.n})")
    ids, dists = index._topk_block(np.array([q]), k)
    return NeighborList(query_id=q, neighbor_ids=ids[0], distances=dists[0])


def all_knns(index: KnnIndex, k: int) -> list[NeighborList]:
    """knns() for every sample, computed in blocks."""
    ids, dists = topk_arrays(index, k)
    return [
        NeighborList(query_id=q, neighbor_ids=ids[q], distances=dists[q])
        for q in range(index.n)
    ]


def topk_arrays(index: KnnIndex, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(n, k) neighbor-id and distance arrays; batch form of knns()."""
    _check_k(index, k)
    ids = np.empty((index.n, k), dtype=np.int64)
    dists = np.empty((index.n, k), dtype=np.float64)
    for start in range(0, index.n, _BLOCK):
        rows = np.arange(start, min(start + _BLOCK, index.n))
        ids[rows], dists[rows] = index._topk_block(rows, k)
    return ids, dists


def pairwise_distances(
    queries: np.ndarray, gallery: np.ndarray, metric: str = "euclidean"
) -> np.ndarray:
    """Dense (len(queries), len(gallery)) distance matrix.

    When queries and gallery are the same object the diagonal is exactly 0,
    which the quadratic-expansion trick alone does not guarantee.
    """
    if metric not in METRICS:
        raise InvalidMetricError(f"unknown metric {metric!r}, expected one of {METRICS}")
    same = queries is gallery
    queries = np.asarray(queries, dtype=np.float64)
    gallery = queries if same else np.asarray(gallery, dtype=np.float64)
    if metric == "euclidean":
        sq = (
            np.einsum("ij,ij->i", queries, queries)[:, None]
            + np.einsum("ij,ij->i", gallery, gallery)[None, :]
            - 2.0 * (queries @ gallery.T)
        )
        out = np.sqrt(np.maximum(sq, 0.0))
    else:
        qn = np.linalg.norm(queries, axis=1)
        gn = qn if same else np.linalg.norm(gallery, axis=1)
        for name, norms in (("query", qn), ("gallery", gn)):
            zero = np.flatnonzero(norms == 0.0)
            if zero.size:
                raise ZeroVectorError(
                    f"cosine metric undefined for zero {name} vector at row {zero[0]}"
                )
        sims = (queries / qn[:, None]) @ (gallery / gn[:, None]).T
        out = np.maximum(1.0 - sims, 0.0)
    if same:
        np.fill_diagonal(out, 0.0)
    return out
