"""Deliberately naive scalar re-implementation of the selection pipeline.

This module exists for testing and diagnostics only. It re-derives the
whole algorithm with plain Python loops and explicit tie-break scans,
sharing nothing with the vectorized scoring/selection modules except the
domain types, so that an equality test between the two paths cannot be
satisfied by a bug they share. It is allowed to be orders of magnitude
slower than the main path.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .core import ConfigError, FeatureMatrix, PruneConfig, Selection, ShapeError
from .query import QueryEmbedding


def _normalized_rows(frame: FeatureMatrix, eps: float) -> list[list[float]]:
    rows = []
    for i in range(frame.rows):
        row = [float(v) for v in frame.data[i]]
        norm = math.sqrt(sum(v * v for v in row))
        divisor = norm if norm > eps else eps
        rows.append([v / divisor for v in row])
    return rows


def _relevance_scores(x_hat: list[list[float]], q: list[float]) -> list[float]:
    scores = []
    for row in x_hat:
        acc = 0.0
        for a, b in zip(row, q):
            acc += a * b
        scores.append(acc)
    return scores


def _dissimilarity_table(x_hat: list[list[float]]) -> list[list[float]]:
    n = len(x_hat)
    table = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for a, b in zip(x_hat[i], x_hat[j]):
                acc += a * b
            value = 1.0 - acc
            if value < 0.0:
                value = 0.0
            elif value > 2.0:
                value = 2.0
            table[i][j] = value
    return table


def _budget(r: float, num_tokens: int) -> int:
    return min(num_tokens, max(1, math.floor(r * num_tokens + 0.5)))


def _candidates(
    s: list[float],
    remaining: list[int],
    tau: float,
    need: int,
    cap_m: int | None,
    beta: float,
) -> list[int]:
    by_score = sorted(remaining, key=lambda i: (-s[i], i))
    n_rem = len(remaining)
    m_rem = n_rem if cap_m is None else max(need, min(cap_m, n_rem))
    if tau <= 0:
        cand = by_score
    else:
        cand = [i for i in by_score if s[i] >= tau]
        if len(cand) < need:
            cand = by_score[:m_rem]
    limit = min(len(cand), m_rem)
    if math.isfinite(beta):
        limit = min(limit, math.ceil(beta * need))
    return cand[:limit]


def oracle_prune(frame, q_hat: QueryEmbedding, cfg: PruneConfig) -> Selection:
    """Scalar-loop twin of greedy_select with the identical contract."""
    if not isinstance(frame, FeatureMatrix):
        frame = FeatureMatrix(frame)
    if frame.cols != q_hat.dim:
        raise ShapeError(
            f"frame has {frame.cols} feature channels but query has {q_hat.dim}"
        )
    x_hat = _normalized_rows(frame, cfg.eps)
    q = [float(v) for v in q_hat.vector]
    s = _relevance_scores(x_hat, q)
    dissim = _dissimilarity_table(x_hat)

    num_tokens = frame.rows
    budget = _budget(cfg.r, num_tokens)
    remaining = list(range(num_tokens))
    picks: list[int] = []
    tie_events = 0

    while len(picks) < budget:
        need = budget - len(picks)
        cand = _candidates(s, remaining, cfg.tau, need, cfg.cap_m, cfg.beta)
        best_idx = -1
        best_score = -math.inf
        tied = False
        for i in sorted(cand):
            if picks:
                score = min(dissim[u][i] for u in picks) + cfg.alpha * s[i]
            else:
                score = s[i]
            if score > best_score:
                best_score = score
                best_idx = i
                tied = False
            elif score == best_score:
                tied = True
        if tied:
            tie_events += 1
        picks.append(best_idx)
        remaining.remove(best_idx)

    return Selection(
        kept=tuple(sorted(picks)),
        relevance=np.array(s),
        selection_order=tuple(picks),
        budget=budget,
        tie_events=tie_events,
    )


def subset_objective(frame, q_hat: QueryEmbedding, alpha: float, subset) -> float:
    """Set objective: min pairwise dissimilarity within the subset plus
    alpha times total relevance. Needs at least two members."""
    if not isinstance(frame, FeatureMatrix):
        frame = FeatureMatrix(frame)
    idx = sorted(int(i) for i in subset)
    if len(idx) < 2:
        raise ConfigError("subset objective needs at least two members")
    x_hat = _normalized_rows(frame, 1e-12)
    q = [float(v) for v in q_hat.vector]
    s = _relevance_scores(x_hat, q)
    dissim = _dissimilarity_table(x_hat)
    min_pair = min(dissim[i][j] for i, j in combinations(idx, 2))
    return min_pair + alpha * sum(s[i] for i in idx)


def oracle_exhaustive_objective(
    frame, q_hat: QueryEmbedding, alpha: float, k: int
) -> tuple[tuple[int, ...], float]:
    """Enumerate every size-k subset and return the objective maximizer.

    Guarded to small frames; ties resolve to the lexicographically smallest
    subset. Used to report the greedy/optimal gap, never as an equality
    target for the greedy path.
    """
    if not isinstance(frame, FeatureMatrix):
        frame = FeatureMatrix(frame)
    if frame.rows > 16:
        raise ConfigError(f"exhaustive search is limited to 16 tokens, got {frame.rows}")
    if not (2 <= k <= frame.rows):
        raise ConfigError(f"k must be in [2, {frame.rows}], got {k}")
    x_hat = _normalized_rows(frame, 1e-12)
    q = [float(v) for v in q_hat.vector]
    s = _relevance_scores(x_hat, q)
    dissim = _dissimilarity_table(x_hat)

    best_subset: tuple[int, ...] | None = None
    best_value = -math.inf
    for subset in combinations(range(frame.rows), k):
        min_pair = min(dissim[i][j] for i, j in combinations(subset, 2))
        value = min_pair + alpha * sum(s[i] for i in subset)
        if value > best_value:
            best_value = value
            best_subset = subset
    assert best_subset is not None
    return best_subset, best_value
