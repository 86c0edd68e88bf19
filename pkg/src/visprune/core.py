"""Shared domain types, numeric conventions, and the error taxonomy.

All internal arithmetic runs at 64-bit precision regardless of input file
precision so that greedy argmax decisions reproduce bit-for-bit across
platforms and BLAS builds. Indices are 0-based everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DTYPE = np.float64

#: Floor applied to norms before division; near-zero vectors stay near zero
#: instead of blowing up, so zero tokens score 0 relevance and dissimilarity 1.
DEFAULT_EPS = 1e-12

WEIGHTING_SCHEMES = ("none", "uniform", "middle-peak", "exponential", "explicit")


class VispruneError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(VispruneError):
    """Invalid configuration value or combination of values."""


class DataError(VispruneError):
    """Input data violates a validity requirement (non-finite entries, empty)."""


class ShapeError(VispruneError):
    """Array rank or dimension mismatch."""


def _owned_matrix(data, name: str) -> np.ndarray:
    """Copy `data` into an immutable, C-contiguous float64 matrix."""
    arr = np.array(data, dtype=DTYPE, order="C", copy=True)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got rank {arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def _owned_vector(data, name: str) -> np.ndarray:
    arr = np.array(data, dtype=DTYPE, copy=True)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got rank {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """One frame of visual tokens: one row per token, in original patch order."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _owned_matrix(self.data, "features"))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class VideoFeatures:
    """Ordered per-frame token matrices; an image is the single-frame case."""

    frames: tuple[FeatureMatrix, ...]

    def __post_init__(self):
        frames = tuple(
            f if isinstance(f, FeatureMatrix) else FeatureMatrix(f) for f in self.frames
        )
        if len(frames) < 1:
            raise ShapeError("video must contain at least one frame")
        cols = frames[0].cols
        for i, f in enumerate(frames):
            if f.cols != cols:
                raise ShapeError(
                    f"frame {i} has {f.cols} feature channels, expected {cols}"
                )
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_array(cls, arr) -> "VideoFeatures":
        """Build from an L x C matrix (single frame) or an N x L x C stack."""
        arr = np.asarray(arr)
        if arr.ndim == 2:
            return cls((FeatureMatrix(arr),))
        if arr.ndim == 3:
            return cls(tuple(FeatureMatrix(arr[i]) for i in range(arr.shape[0])))
        raise ShapeError(f"features must be rank 2 or 3, got rank {arr.ndim}")

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def feature_dim(self) -> int:
        return self.frames[0].cols


@dataclass(frozen=True, eq=False)
class QuerySpec:
    """Text-token embeddings plus the weighting rule that aggregates them.

    `token_embeddings` is J x C. With `weighting="explicit"` the caller
    supplies nonnegative per-token weights (how externally computed attention
    weights are consumed). An optional `projection` (C_v x C_text) maps
    embeddings into the visual feature space before aggregation.
    """

    token_embeddings: np.ndarray | None
    weighting: str = "uniform"
    explicit_weights: np.ndarray | None = None
    gamma: float = 1.5
    projection: np.ndarray | None = None

    def __post_init__(self):
        if self.weighting not in WEIGHTING_SCHEMES:
            raise ConfigError(
                f"unknown weighting {self.weighting!r}, expected one of {WEIGHTING_SCHEMES}"
            )
        if self.weighting != "none":
            if self.token_embeddings is None:
                raise ConfigError(f"weighting {self.weighting!r} requires token embeddings")
            object.__setattr__(
                self,
                "token_embeddings",
                _owned_matrix(self.token_embeddings, "token embeddings"),
            )
        if not (self.gamma > 0) or not math.isfinite(self.gamma):
            raise ConfigError(f"gamma must be a positive finite real, got {self.gamma}")
        if (self.explicit_weights is None) != (self.weighting != "explicit"):
            raise ConfigError("explicit weights are required iff weighting is 'explicit'")
        if self.explicit_weights is not None:
            w = _owned_vector(self.explicit_weights, "explicit weights")
            if w.shape[0] != self.token_embeddings.shape[0]:
                raise ConfigError(
                    f"got {w.shape[0]} explicit weights for "
                    f"{self.token_embeddings.shape[0]} tokens"
                )
            if np.any(w < 0):
                raise ConfigError("explicit weights must be nonnegative")
            if not w.sum() > 0:
                raise ConfigError("explicit weights must sum to a positive value")
            object.__setattr__(self, "explicit_weights", w)
        if self.projection is not None:
            object.__setattr__(
                self, "projection", _owned_matrix(self.projection, "projection")
            )

    @property
    def num_tokens(self) -> int:
        return 0 if self.token_embeddings is None else self.token_embeddings.shape[0]


@dataclass(frozen=True)
class PruneConfig:
    """Knobs for one pruning run.

    `cap_m` is the candidate-pool cap (None = unbounded); `beta` caps the
    per-step pool at ceil(beta * remaining_budget) (math.inf = unbounded).
    The tie-break policy is fixed: every argmax resolves toward the lowest
    token index, which makes runs reproducible across platforms.
    """

    r: float = 0.15
    alpha: float = 1.0
    tau: float = 0.0
    cap_m: int | None = None
    beta: float = 3.0
    eps: float = DEFAULT_EPS
    tie_break: str = "lowest-index"

    def __post_init__(self):
        if not (0 < self.r <= 1):
            raise ConfigError(f"keep ratio must be in (0, 1], got {self.r}")
        if not (self.alpha >= 0) or not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must be a finite nonnegative real, got {self.alpha}")
        if not (-1 <= self.tau <= 1):
            raise ConfigError(f"tau must be in [-1, 1], got {self.tau}")
        if self.cap_m is not None and self.cap_m < 1:
            raise ConfigError(f"cap_m must be a positive count, got {self.cap_m}")
        if math.isfinite(self.beta) and self.beta < 1:
            raise ConfigError(f"beta must be >= 1 when bounded, got {self.beta}")
        if not (self.eps > 0):
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.tie_break != "lowest-index":
            raise ConfigError("only the 'lowest-index' tie-break policy is supported")


@dataclass(frozen=True, eq=False)
class Selection:
    """Result of pruning one frame.

    `kept` is the sorted index list fed downstream; `selection_order` records
    the order picks were made (needed for oracle equality and debugging).
    `tie_events` counts argmax steps where two or more candidates scored
    exactly equal.
    """

    kept: tuple[int, ...]
    relevance: np.ndarray
    selection_order: tuple[int, ...]
    budget: int
    tie_events: int = 0

    def __post_init__(self):
        kept = tuple(int(i) for i in self.kept)
        order = tuple(int(i) for i in self.selection_order)
        rel = np.array(self.relevance, dtype=DTYPE, copy=True)
        rel.setflags(write=False)
        if len(kept) != self.budget:
            raise ShapeError(f"kept {len(kept)} indices for budget {self.budget}")
        if any(b <= a for a, b in zip(kept, kept[1:])):
            raise ShapeError("kept indices must be strictly increasing")
        if tuple(sorted(order)) != kept:
            raise ShapeError("kept must be the sorted selection order")
        if kept and (kept[0] < 0 or kept[-1] >= rel.shape[0]):
            raise ShapeError("kept indices out of range")
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "selection_order", order)
        object.__setattr__(self, "relevance", rel)


@dataclass(frozen=True)
class CostModelSpec:
    """Decoder dimensions and sequence lengths for the FLOPs model.

    `K` is the first layer that sees the shortened sequence: K=0 models
    pruning before the decoder, K=T recovers the unpruned baseline.
    """

    d: int
    m: int
    T: int
    K: int = 0
    t: int = 0
    v_full: int = 0
    v_pruned: int = 0

    def __post_init__(self):
        for name in ("d", "m", "T", "K", "t", "v_full", "v_pruned"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"{name} must be a nonnegative integer, got {value!r}")
        if self.K > self.T:
            raise ConfigError(f"K ({self.K}) must not exceed T ({self.T})")
        if self.v_pruned > self.v_full:
            raise ConfigError(
                f"v_pruned ({self.v_pruned}) must not exceed v_full ({self.v_full})"
            )


def normalize_rows(x, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Divide each row by max(its l2 norm, eps).

    Rows with norm <= eps are scaled by 1/eps, so exact zero rows stay zero.
    """
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    arr = np.asarray(x, dtype=DTYPE)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got rank {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError("matrix contains non-finite values")
    norms = np.linalg.norm(arr, axis=1)
    return arr / np.maximum(norms, eps)[:, None]
