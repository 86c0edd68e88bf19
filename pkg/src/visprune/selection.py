"""Greedy relevance-diversity token selection under a per-frame budget.

Each frame is handled independently: compute the keep budget, seed the
subset with the most relevant candidate, then repeatedly add the candidate
maximizing (min dissimilarity to the selected set) + alpha * relevance.
Kept indices are restored to original token order before gathering.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import (
    ConfigError,
    FeatureMatrix,
    PruneConfig,
    Selection,
    ShapeError,
    VideoFeatures,
)
from .query import QueryEmbedding
from .scoring import ScoreState, _descending_order, _filter_candidates


def compute_budget(r: float, num_tokens: int) -> int:
    """Per-frame keep budget max(1, round(r * L)), clamped to L.

    Rounding is half-away-from-zero, so 57.6 -> 58 and 205.6 -> 206.
    """
    if not (0 < r <= 1):
        raise ConfigError(f"keep ratio must be in (0, 1], got {r}")
    if num_tokens < 1:
        raise ConfigError(f"token count must be positive, got {num_tokens}")
    return min(num_tokens, max(1, math.floor(r * num_tokens + 0.5)))


def _as_frame(frame) -> FeatureMatrix:
    return frame if isinstance(frame, FeatureMatrix) else FeatureMatrix(frame)


def greedy_select(frame, q_hat: QueryEmbedding, cfg: PruneConfig) -> Selection:
    """Select compute_budget(cfg.r, L) tokens from one frame.

    The first pick is the most relevant candidate; each later pick maximizes
    min_{u in selected} D[u, i] + alpha * s_i over the per-step candidate
    set. Every argmax breaks ties toward the lower index, so the result is
    deterministic. Degenerate geometry (duplicate rows, zero rows, a zero
    query) never fails; it only produces ties, which the policy resolves.
    """
    frame = _as_frame(frame)
    if frame.cols != q_hat.dim:
        raise ShapeError(
            f"frame has {frame.cols} feature channels but query has {q_hat.dim}"
        )
    state = ScoreState(frame, q_hat.vector, cfg.eps)
    num_tokens = frame.rows
    budget = compute_budget(cfg.r, num_tokens)

    order = _descending_order(state.s)
    remaining = np.ones(num_tokens, dtype=bool)
    min_dissim = np.full(num_tokens, np.inf)
    picks: list[int] = []
    tie_events = 0

    while len(picks) < budget:
        need = budget - len(picks)
        rem_order = order[remaining[order]]
        cand = _filter_candidates(
            state.s, rem_order, cfg.tau, need, cfg.cap_m, cfg.beta
        )
        if cand.shape[0] == 0:  # unreachable by construction; defensive only
            cand = rem_order
        if not picks:
            # Initialization: argmax relevance. cand is already in
            # descending-relevance order with ties toward the lower index.
            pick = int(cand[0])
            if cand.shape[0] > 1 and state.s[cand[1]] == state.s[pick]:
                tie_events += 1
        else:
            scores = min_dissim[cand] + cfg.alpha * state.s[cand]
            best = scores.max()
            winners = cand[scores == best]
            pick = int(winners.min())
            if winners.shape[0] > 1:
                tie_events += 1
        picks.append(pick)
        remaining[pick] = False
        np.minimum(min_dissim, state.dissim_row(pick), out=min_dissim)

    return Selection(
        kept=tuple(sorted(picks)),
        relevance=state.s,
        selection_order=tuple(picks),
        budget=budget,
        tie_events=tie_events,
    )


def prune_video(
    video,
    q_hat: QueryEmbedding,
    cfg: PruneConfig,
    workers: int | None = None,
) -> list[Selection]:
    """Prune every frame independently; results are ordered by frame index
    and bit-identical for any worker count."""
    if isinstance(video, np.ndarray):
        video = VideoFeatures.from_array(video)
    if not isinstance(video, VideoFeatures):
        video = VideoFeatures(tuple(video))
    if video.feature_dim != q_hat.dim:
        raise ShapeError(
            f"frames have {video.feature_dim} feature channels but query has {q_hat.dim}"
        )
    if workers is not None and workers < 1:
        raise ConfigError(f"worker count must be positive, got {workers}")
    if workers and workers > 1 and video.num_frames > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda f: greedy_select(f, q_hat, cfg), video.frames))
    return [greedy_select(frame, q_hat, cfg) for frame in video.frames]


def gather_kept(frame, sel: Selection) -> FeatureMatrix:
    """Rows of `frame` at the kept indices, in ascending token order."""
    frame = _as_frame(frame)
    idx = np.asarray(sel.kept, dtype=np.intp)
    if idx.size == 0 or idx[0] < 0 or idx[-1] >= frame.rows:
        raise ShapeError("kept indices out of range for this frame")
    return FeatureMatrix(frame.data[idx])
