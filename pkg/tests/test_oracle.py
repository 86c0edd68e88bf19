import math

import numpy as np
import pytest

from visprune import ConfigError, PruneConfig, greedy_select, no_text_query
from visprune.oracle import (
    oracle_exhaustive_objective,
    oracle_prune,
    subset_objective,
)
from visprune.query import QueryEmbedding

from _instances import iter_cases


def unit_query(vec) -> QueryEmbedding:
    v = np.asarray(vec, dtype=float)
    return QueryEmbedding(v / np.linalg.norm(v), "precomputed")


def test_oracle_hand_trace():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1 / math.sqrt(2), 1 / math.sqrt(2)], [1.0, 0.0]])
    sel = oracle_prune(x, unit_query([1.0, 0.0]), PruneConfig(r=0.5, alpha=0.5, tau=0.0))
    assert sel.kept == (0, 1)
    assert sel.selection_order == (0, 1)


def test_oracle_full_budget():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((7, 3))
    sel = oracle_prune(x, no_text_query(3), PruneConfig(r=1.0))
    assert sel.kept == tuple(range(7))


def test_oracle_equals_main_path_on_a_sample():
    for frame, query, cfg in iter_cases(60, seed=11, max_tokens=32, max_dims=8):
        fast = greedy_select(frame, query, cfg)
        slow = oracle_prune(frame, query, cfg)
        assert fast.kept == slow.kept
        assert fast.selection_order == slow.selection_order


def test_exhaustive_full_set_single_subset():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 4))
    q = unit_query(rng.standard_normal(4))
    subset, value = oracle_exhaustive_objective(x, q, alpha=0.5, k=5)
    assert subset == (0, 1, 2, 3, 4)
    assert value == pytest.approx(subset_objective(x, q, 0.5, subset))


def test_exhaustive_antiparallel_pair():
    angles = np.deg2rad([0.0, 10.0, 90.0, 180.0])
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    q = unit_query([1.0, 0.0])
    subset, value = oracle_exhaustive_objective(pts, q, alpha=0.0, k=2)
    assert subset == (0, 3)
    assert value == pytest.approx(2.0, abs=1e-12)


def test_exhaustive_guards():
    q = no_text_query(2)
    with pytest.raises(ConfigError):
        oracle_exhaustive_objective(np.ones((17, 2)), q, alpha=0.0, k=2)
    with pytest.raises(ConfigError):
        oracle_exhaustive_objective(np.ones((4, 2)), q, alpha=0.0, k=1)


def test_subset_objective_needs_two_members():
    with pytest.raises(ConfigError):
        subset_objective(np.ones((3, 2)), no_text_query(2), 1.0, [0])


def test_greedy_never_beats_exhaustive_small_sample():
    rng = np.random.default_rng(2)
    for _ in range(20):
        length = int(rng.integers(4, 10))
        x = rng.standard_normal((length, 3))
        q = unit_query(rng.standard_normal(3))
        alpha = float(rng.choice([0.0, 0.5, 1.0]))
        k = int(rng.integers(2, length))
        r = k / length
        sel = greedy_select(x, q, PruneConfig(r=r, alpha=alpha, tau=0.0, beta=math.inf))
        if sel.budget < 2:
            continue
        greedy_val = subset_objective(x, q, alpha, sel.kept)
        _, best_val = oracle_exhaustive_objective(x, q, alpha, sel.budget)
        assert greedy_val <= best_val + 1e-12


def test_exhaustive_prefers_lexicographically_smallest_tie():
    # Four identical tokens: every pair scores the same; the first pair wins.
    x = np.tile(np.array([[1.0, 0.0]]), (4, 1))
    subset, value = oracle_exhaustive_objective(x, no_text_query(2), alpha=0.0, k=2)
    assert subset == (0, 1)
    assert value == pytest.approx(0.0, abs=1e-12)
