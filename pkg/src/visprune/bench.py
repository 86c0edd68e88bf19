"""Synthetic retrieval benchmark for selection strategies.

Generates frames where a few planted tokens point near the query direction
and a tunable share of the rest are exact duplicates of each other, then
measures how well each strategy recovers the planted tokens and how spread
out the kept set is. Three strategies are compared under one budget:

    relevance-only   top-k by query dot product (candidate cap pinned to k)
    diversity-only   max-min spread with the query term switched off
    combined         relevance plus diversity, the default configuration
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConfigError, FeatureMatrix, PruneConfig, normalize_rows
from .query import QueryEmbedding, no_text_query
from .scoring import dissimilarity
from .selection import greedy_select

STRATEGIES = ("relevance-only", "diversity-only", "combined")


@dataclass(frozen=True)
class BenchInstance:
    """One generated frame plus its ground truth."""

    frame: FeatureMatrix
    query: np.ndarray
    planted: tuple[int, ...]


@dataclass(frozen=True)
class BenchRow:
    strategy: str
    r: float
    recall: float
    mean_dissimilarity: float
    micros: float | None = None


def generate_instance(
    rng: np.random.Generator,
    tokens: int = 128,
    dims: int = 32,
    planted_relevant: int = 8,
    redundancy: float = 0.5,
) -> BenchInstance:
    """Build a frame of unit-ish tokens with planted structure.

    `planted_relevant` rows are the query direction plus small noise;
    `redundancy` is the fraction of the remaining rows overwritten with
    exact copies of other non-planted rows.
    """
    if not 0 < planted_relevant < tokens:
        raise ConfigError("planted_relevant must lie strictly between 0 and tokens")
    if not 0.0 <= redundancy < 1.0:
        raise ConfigError("redundancy must lie in [0, 1)")
    q = rng.standard_normal(dims)
    q /= np.linalg.norm(q)
    x = rng.standard_normal((tokens, dims))
    planted = rng.choice(tokens, size=planted_relevant, replace=False)
    x[planted] = q + 0.05 * rng.standard_normal((planted_relevant, dims))
    others = np.setdiff1d(np.arange(tokens), planted)
    n_dup = int(round(redundancy * others.size))
    if n_dup and others.size >= 2:
        dup_targets = rng.choice(others, size=n_dup, replace=False)
        dup_sources = rng.choice(others, size=n_dup, replace=True)
        x[dup_targets] = x[dup_sources]
    return BenchInstance(
        frame=FeatureMatrix(x),
        query=q,
        planted=tuple(sorted(int(i) for i in planted)),
    )


def strategy_config(strategy: str, r: float, alpha: float = 1.0) -> PruneConfig:
    if strategy == "relevance-only":
        # beta=1 caps candidates at exactly the budget, so the greedy pass
        # can only keep the top-k scoring tokens.
        return PruneConfig(r=r, alpha=alpha, tau=0.0, beta=1.0)
    if strategy == "diversity-only":
        return PruneConfig(r=r, alpha=0.0, tau=0.0, beta=float("inf"))
    if strategy == "combined":
        return PruneConfig(r=r, alpha=alpha, tau=0.0, beta=3.0)
    raise ConfigError(f"unknown strategy {strategy!r}")


def _query_for(strategy: str, inst: BenchInstance) -> QueryEmbedding:
    if strategy == "diversity-only":
        return no_text_query(inst.frame.cols)
    return QueryEmbedding(inst.query, "precomputed")


def _recall(kept: tuple[int, ...], planted: tuple[int, ...]) -> float:
    return len(set(kept) & set(planted)) / len(planted)


def _mean_pairwise_dissim(frame: FeatureMatrix, kept: tuple[int, ...]) -> float:
    if len(kept) < 2:
        return 0.0
    d = dissimilarity(normalize_rows(frame.data[list(kept)]))
    iu = np.triu_indices(len(kept), k=1)
    return float(d[iu].mean())


def planted_count(fraction: float, tokens: int) -> int:
    """Planted-token count for a fraction of the frame, kept in (0, tokens)."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"planted fraction must lie in (0, 1), got {fraction}")
    return max(1, min(tokens - 1, round(fraction * tokens)))


def run_bench(
    seed: int = 0,
    frames: int = 20,
    tokens: int = 128,
    dims: int = 32,
    planted_fraction: float = 0.1,
    redundancy: float = 0.5,
    ratios: tuple[float, ...] = (0.1, 0.15, 0.25),
    alpha: float = 1.0,
    timing: bool = False,
) -> list[BenchRow]:
    """Score every strategy at every ratio, averaged over generated frames."""
    rng = np.random.default_rng(seed)
    n_planted = planted_count(planted_fraction, tokens)
    instances = [
        generate_instance(rng, tokens, dims, n_planted, redundancy)
        for _ in range(frames)
    ]
    rows = []
    for r in ratios:
        for strategy in STRATEGIES:
            cfg = strategy_config(strategy, r, alpha)
            recalls, spreads = [], []
            start = time.perf_counter() if timing else None
            for inst in instances:
                sel = greedy_select(inst.frame, _query_for(strategy, inst), cfg)
                recalls.append(_recall(sel.kept, inst.planted))
                spreads.append(_mean_pairwise_dissim(inst.frame, sel.kept))
            micros = None
            if timing:
                micros = (time.perf_counter() - start) * 1e6 / frames
            rows.append(
                BenchRow(
                    strategy=strategy,
                    r=r,
                    recall=float(np.mean(recalls)),
                    mean_dissimilarity=float(np.mean(spreads)),
                    micros=micros,
                )
            )
    return rows


def write_csv(rows: list[BenchRow], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "r", "recall", "mean_dissimilarity", "micros"])
        for row in rows:
            writer.writerow(
                [
                    row.strategy,
                    f"{row.r:.6g}",
                    f"{row.recall:.6f}",
                    f"{row.mean_dissimilarity:.6f}",
                    "" if row.micros is None else f"{row.micros:.3f}",
                ]
            )


def format_table(rows: list[BenchRow]) -> str:
    header = f"{'strategy':<16} {'r':>6} {'recall':>8} {'spread':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.strategy:<16} {row.r:>6.3f} {row.recall:>8.4f}"
            f" {row.mean_dissimilarity:>8.4f}"
        )
    return "\n".join(lines)
