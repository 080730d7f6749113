"""Multi-modal feature fusion via extended Jaccard graphs and SGD embeddings.

Pipeline: per-modality k-NN graphs with Jaccard-corroborated edge weights,
edge-union fusion, Gaussian-kernel row normalization, and negative-sampling
SGD training of fused feature vectors, plus a split-and-classify
evaluation harness.
"""

__version__ = "0.1.0"

from .dataset import (
    EmbeddingMatrix,
    FeatureMatrix,
    LabelVector,
    load_embeddings,
    load_features,
    load_labels,
    save_embeddings,
    save_features,
    save_labels,
    synth_multimodal,
    validate_alignment,
)
from .ejgraph import (
    EdgeContext,
    SparseGraph,
    build_ejg,
    edge_weight,
    jaccard_sets,
    load_graph,
    outlier_indicator,
    save_graph,
)
from .embed import TrainConfig, TrainReport, init_embeddings, sgd_step, surrogate_loss, train
from .evalharness import (
    PipelineConfig,
    PipelineResult,
    ResultRow,
    ResultTable,
    SplitSpec,
    knn_classify,
    make_splits,
    run_pipeline,
    sweep_report,
    zscore_concat,
)
from .fusion import (
    AffinityMatrix,
    SamplerTable,
    build_samplers,
    fuse_graphs,
    load_affinity,
    normalize_affinity,
    save_affinity,
)
from .knn import KnnIndex, NeighborList, all_knns, build_index, knns, pairwise_distances

__all__ = [
    "AffinityMatrix",
    "EdgeContext",
    "EmbeddingMatrix",
    "FeatureMatrix",
    "KnnIndex",
    "LabelVector",
    "NeighborList",
    "PipelineConfig",
    "PipelineResult",
    "ResultRow",
    "ResultTable",
    "SamplerTable",
    "SparseGraph",
    "SplitSpec",
    "TrainConfig",
    "TrainReport",
    "all_knns",
    "build_ejg",
    "build_index",
    "build_samplers",
    "edge_weight",
    "fuse_graphs",
    "init_embeddings",
    "jaccard_sets",
    "knn_classify",
    "knns",
    "load_affinity",
    "load_embeddings",
    "load_features",
    "load_graph",
    "load_labels",
    "make_splits",
    "normalize_affinity",
    "outlier_indicator",
    "pairwise_distances",
    "run_pipeline",
    "save_affinity",
    "save_embeddings",
    "save_features",
    "save_graph",
    "save_labels",
    "sgd_step",
    "surrogate_loss",
    "sweep_report",
    "synth_multimodal",
    "train",
    "validate_alignment",
    "zscore_concat",
]
