"""Prompt-query construction.

Aggregates text-token embeddings into a single normalized query direction
under a chosen per-token weighting scheme. Position-based schemes:
uniform averaging, a triangular middle-peak profile, and exponential
weights that grow toward the end of the prompt (where instruction-style
prompts tend to put the key verbs and entities).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_EPS,
    DTYPE,
    ConfigError,
    QuerySpec,
    ShapeError,
)


@dataclass(frozen=True, eq=False)
class QueryEmbedding:
    """A unit-norm query direction, or the zero vector when degenerate."""

    vector: np.ndarray
    scheme_used: str
    degenerate: bool = False

    def __post_init__(self):
        vec = np.array(self.vector, dtype=DTYPE, copy=True)
        if vec.ndim != 1:
            raise ShapeError(f"query vector must be 1-D, got rank {vec.ndim}")
        norm = float(np.linalg.norm(vec))
        if self.degenerate:
            if norm != 0.0:
                raise ShapeError("degenerate query must be the zero vector")
        elif abs(norm - 1.0) > 1e-6:
            raise ShapeError(f"query vector norm {norm} is not within 1e-6 of 1")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def weights_for(
    scheme: str,
    num_tokens: int,
    gamma: float = 1.5,
    explicit=None,
) -> np.ndarray:
    """Per-token aggregation weights: nonnegative, summing to 1.

    uniform      all tokens weighted 1/J.
    exponential  w_j proportional to gamma**(j-1); gamma > 1 emphasizes the
                 end of the prompt.
    middle-peak  triangular profile 1 - |2(j-1)/(J-1) - 1|, peaked at the
                 center; J=1 gets weight 1, and J=2 (where the raw profile
                 is identically zero) falls back to uniform.
    explicit     caller-supplied nonnegative weights, normalized to sum 1.
    """
    if num_tokens < 1:
        raise ConfigError(f"need at least one token, got {num_tokens}")
    j = num_tokens
    if scheme == "uniform":
        return np.full(j, 1.0 / j, dtype=DTYPE)
    if scheme == "exponential":
        if not gamma > 0:
            raise ConfigError(f"gamma must be positive, got {gamma}")
        # Shift exponents so the largest raw weight is gamma**0 = 1; keeps the
        # normalization finite for long prompts and gamma > 1.
        exponents = np.arange(j, dtype=DTYPE)
        if gamma > 1:
            exponents -= j - 1
        raw = np.power(gamma, exponents)
        return raw / raw.sum()
    if scheme == "middle-peak":
        if j == 1:
            return np.ones(1, dtype=DTYPE)
        raw = 1.0 - np.abs(2.0 * np.arange(j, dtype=DTYPE) / (j - 1) - 1.0)
        total = raw.sum()
        if total <= 0:
            return np.full(j, 1.0 / j, dtype=DTYPE)
        return raw / total
    if scheme == "explicit":
        if explicit is None:
            raise ConfigError("explicit weighting requires supplied weights")
        raw = np.asarray(explicit, dtype=DTYPE)
        if raw.ndim != 1 or raw.shape[0] != j:
            raise ConfigError(f"expected {j} explicit weights, got shape {raw.shape}")
        if not np.all(np.isfinite(raw)) or np.any(raw < 0):
            raise ConfigError("explicit weights must be finite and nonnegative")
        total = raw.sum()
        if not total > 0:
            raise ConfigError("explicit weights must not be all zero")
        return raw / total
    raise ConfigError(f"no aggregation weights for scheme {scheme!r}")


def build_query(spec: QuerySpec, eps: float = DEFAULT_EPS) -> QueryEmbedding:
    """Aggregate token embeddings into a normalized query direction.

    Returns a degenerate (all-zero) embedding when the weighted sum has norm
    at most eps; downstream scoring then treats every token as relevance 0.
    """
    if spec.weighting == "none":
        raise ConfigError("cannot build a query with weighting 'none'; "
                          "use no_text_query for the text-free variant")
    embeddings = spec.token_embeddings
    if spec.projection is not None:
        if spec.projection.shape[1] != embeddings.shape[1]:
            raise ShapeError(
                f"projection maps {spec.projection.shape[1]}-dim embeddings, "
                f"got {embeddings.shape[1]}-dim tokens"
            )
        embeddings = embeddings @ spec.projection.T
    weights = weights_for(
        spec.weighting, spec.num_tokens, spec.gamma, spec.explicit_weights
    )
    q = weights @ embeddings
    norm = float(np.linalg.norm(q))
    if norm <= eps:
        return QueryEmbedding(np.zeros(q.shape[0]), spec.weighting, degenerate=True)
    return QueryEmbedding(q / norm, spec.weighting)


def no_text_query(dim: int) -> QueryEmbedding:
    """Zero query for text-free pruning: all relevance scores become 0, so
    selection degenerates to lowest-index initialization plus pure diversity."""
    if dim < 1:
        raise ConfigError(f"query dimension must be positive, got {dim}")
    return QueryEmbedding(np.zeros(dim), "none", degenerate=True)
