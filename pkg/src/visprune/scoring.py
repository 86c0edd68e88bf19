"""Per-frame scoring: text relevance, pairwise cosine dissimilarity, and the
threshold/cap candidate pre-filter consumed by the greedy selector."""

from __future__ import annotations

import math

import numpy as np

from .core import (
    DEFAULT_EPS,
    DTYPE,
    ConfigError,
    FeatureMatrix,
    ShapeError,
    normalize_rows,
)

#: Above this token count the full dissimilarity matrix is not materialized;
#: rows are recomputed from the normalized features on demand. Memory, not
#: FLOPs, is the practical ceiling for the Gram matrix.
DENSE_DISSIM_MAX_TOKENS = 4096


def relevance(x_hat, q_hat) -> np.ndarray:
    """Cosine relevance of each (unit-norm) token row against the unit query."""
    x_hat = np.asarray(x_hat, dtype=DTYPE)
    q_hat = np.asarray(q_hat, dtype=DTYPE)
    if x_hat.ndim != 2 or q_hat.ndim != 1:
        raise ShapeError("expected a 2-D token matrix and a 1-D query vector")
    if x_hat.shape[1] != q_hat.shape[0]:
        raise ShapeError(
            f"token dim {x_hat.shape[1]} does not match query dim {q_hat.shape[0]}"
        )
    return x_hat @ q_hat


def dissimilarity(x_hat) -> np.ndarray:
    """Pairwise cosine dissimilarity 1 - <x_i, x_j>, clamped to [0, 2]."""
    x_hat = np.asarray(x_hat, dtype=DTYPE)
    if x_hat.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got rank {x_hat.ndim}")
    return np.clip(1.0 - x_hat @ x_hat.T, 0.0, 2.0)


class ScoreState:
    """Normalized tokens, relevance vector, and dissimilarity access for one
    frame. Private to a single selection run; never shared across frames.

    Scores and distances are computed on the deduplicated row set and fanned
    back out: BLAS kernels round by row position, so bitwise-equal rows fed
    through a single matrix product can come back a ulp apart, silently
    breaking duplicate ties that must resolve toward the lower index.
    """

    __slots__ = ("x_hat", "s", "_uniq", "_inverse", "_dense")

    def __init__(self, frame: FeatureMatrix, query_vector, eps: float = DEFAULT_EPS):
        self.x_hat = normalize_rows(frame.data, eps)
        self._uniq, inverse = np.unique(self.x_hat, axis=0, return_inverse=True)
        self._inverse = np.asarray(inverse, dtype=np.intp).reshape(-1)
        self.s = relevance(self._uniq, query_vector)[self._inverse]
        if frame.rows <= DENSE_DISSIM_MAX_TOKENS:
            self._dense = dissimilarity(self._uniq)[np.ix_(self._inverse, self._inverse)]
        else:
            self._dense = None

    @property
    def num_tokens(self) -> int:
        return self.x_hat.shape[0]

    def dissim_row(self, u: int) -> np.ndarray:
        """Row u of the dissimilarity matrix."""
        if self._dense is not None:
            return self._dense[u]
        row = np.clip(1.0 - self._uniq @ self._uniq[self._inverse[u]], 0.0, 2.0)
        return row[self._inverse]


def _descending_order(s: np.ndarray) -> np.ndarray:
    """Indices sorted by descending relevance, ties toward the lower index."""
    return np.argsort(-s, kind="stable")


def _filter_candidates(
    s: np.ndarray,
    rem_order: np.ndarray,
    tau: float,
    need: int,
    cap_m: int | None,
    beta: float,
) -> np.ndarray:
    """Candidate pre-filter over `rem_order` (remaining indices already in
    descending-relevance order).

    With tau <= 0 every remaining token is a candidate. With tau > 0 the
    threshold set {s_i >= tau} is used; when it cannot cover `need` picks it
    is replaced by the top-M_rem remaining tokens, M_rem = max(need,
    min(cap_m, remaining)). The result is finally capped to the best
    min(|C|, M_rem, ceil(beta * need)) by relevance.
    """
    n_rem = rem_order.shape[0]
    if cap_m is None:
        m_rem = n_rem
    else:
        m_rem = max(need, min(cap_m, n_rem))
    if tau <= 0:
        cand = rem_order
    else:
        cand = rem_order[s[rem_order] >= tau]
        if cand.shape[0] < need:
            cand = rem_order[:m_rem]
    limit = min(cand.shape[0], m_rem)
    if math.isfinite(beta):
        limit = min(limit, math.ceil(beta * need))
    return cand[:limit]


def candidate_set(
    s,
    remaining,
    tau: float,
    need: int,
    cap_m: int | None = None,
    beta: float = math.inf,
) -> np.ndarray:
    """Candidate indices for the next `need` picks, in descending-relevance
    order (ties toward the lower index). Always returns at least `need`
    indices drawn from `remaining`."""
    s = np.asarray(s, dtype=DTYPE)
    rem = np.unique(np.asarray(list(remaining), dtype=np.intp))
    if rem.size == 0:
        raise ConfigError("remaining index set must be nonempty")
    if rem[0] < 0 or rem[-1] >= s.shape[0]:
        raise ShapeError("remaining indices out of range for the relevance vector")
    if need < 1 or need > rem.size:
        raise ConfigError(f"need must be in [1, {rem.size}], got {need}")
    rem_order = rem[_descending_order(s[rem])]
    return _filter_candidates(s, rem_order, tau, need, cap_m, beta)
