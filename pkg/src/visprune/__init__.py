"""Query-aware visual token pruning with a decoder FLOPs cost model.

The selector keeps, per frame, a budgeted subset of visual tokens chosen
greedily to maximize spread (min cosine dissimilarity to the already kept
set) plus alpha times query relevance. The cost model estimates how much
decoder compute that saves. Everything is plain numpy and files; no model
weights are involved.
"""

from .core import (
    ConfigError,
    CostModelSpec,
    DataError,
    FeatureMatrix,
    PruneConfig,
    QuerySpec,
    Selection,
    ShapeError,
    VideoFeatures,
    VispruneError,
    normalize_rows,
)
from .flops import DECODER_PRESETS, CostReport, SweepPoint, layer_flops, pruned_cost, sweep
from .query import QueryEmbedding, build_query, no_text_query, weights_for
from .scoring import candidate_set, dissimilarity, relevance
from .selection import compute_budget, gather_kept, greedy_select, prune_video
from .tensorio import (
    NpyFormatError,
    read_array,
    read_features,
    read_query_embeddings,
    read_selection,
    write_array,
    write_pruned_features,
    write_selection,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CostModelSpec",
    "CostReport",
    "DECODER_PRESETS",
    "DataError",
    "FeatureMatrix",
    "NpyFormatError",
    "PruneConfig",
    "QueryEmbedding",
    "QuerySpec",
    "Selection",
    "ShapeError",
    "SweepPoint",
    "VideoFeatures",
    "VispruneError",
    "build_query",
    "candidate_set",
    "compute_budget",
    "dissimilarity",
    "gather_kept",
    "greedy_select",
    "layer_flops",
    "no_text_query",
    "normalize_rows",
    "prune_video",
    "pruned_cost",
    "read_array",
    "read_features",
    "read_query_embeddings",
    "read_selection",
    "relevance",
    "sweep",
    "weights_for",
    "write_array",
    "write_pruned_features",
    "write_selection",
    "__version__",
]
