import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visprune import ConfigError, FeatureMatrix, ShapeError, candidate_set, dissimilarity, relevance
from visprune.core import normalize_rows
from visprune.scoring import ScoreState, _descending_order


def unit_rows(rng, n, c):
    return normalize_rows(rng.standard_normal((n, c)))


def test_relevance_self_orthogonal_and_diagonal_cases():
    q = np.array([1.0, 0.0])
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(relevance(x, q), [1.0, 0.0], atol=1e-15)


def test_relevance_45_degrees():
    x = normalize_rows(np.array([[1.0, 1.0]]))
    np.testing.assert_allclose(relevance(x, np.array([1.0, 0.0])), [1 / math.sqrt(2)], atol=1e-12)
    np.testing.assert_allclose(relevance(x, np.array([1.0, 0.0])), [0.70711], atol=5e-6)


def test_relevance_shape_errors():
    with pytest.raises(ShapeError):
        relevance(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ShapeError):
        relevance(np.ones(3), np.ones(3))


def test_dissimilarity_identical_orthogonal_antiparallel():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    d = dissimilarity(x)
    assert d[0, 0] == 0.0
    assert d[1, 1] == 0.0
    np.testing.assert_allclose(d[0, 1], 1.0, atol=1e-15)
    np.testing.assert_allclose(d[0, 2], 2.0, atol=1e-15)


@settings(max_examples=120)
@given(seed=st.integers(0, 2**16), n=st.integers(1, 24), c=st.integers(1, 8))
def test_score_state_bounds(seed, n, c):
    rng = np.random.default_rng(seed)
    frame = FeatureMatrix(rng.standard_normal((n, c)))
    q = rng.standard_normal(c)
    q /= max(np.linalg.norm(q), 1e-12)
    state = ScoreState(frame, q)
    d = np.stack([state.dissim_row(i) for i in range(n)])
    assert np.all(np.abs(d - d.T) <= 1e-9)
    assert np.all(np.abs(np.diag(d)) <= 1e-9)
    assert d.min() >= -1e-9 and d.max() <= 2.0 + 1e-9
    assert state.s.min() >= -1.0 - 1e-9 and state.s.max() <= 1.0 + 1e-9


def test_dissim_rows_match_dense_and_on_demand():
    # Two-path consistency: explicit row recomputation equals the Gram-matrix slice.
    rng = np.random.default_rng(5)
    frame = FeatureMatrix(rng.standard_normal((12, 4)))
    q = np.zeros(4)
    state = ScoreState(frame, q)
    full = dissimilarity(state.x_hat)
    for i in range(12):
        np.testing.assert_allclose(state.dissim_row(i), full[i], atol=1e-9)
        explicit = np.clip(1.0 - state.x_hat @ state.x_hat[i], 0.0, 2.0)
        np.testing.assert_allclose(full[i], explicit, atol=1e-9)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**16), c=st.floats(min_value=1e-3, max_value=1e3))
def test_relevance_invariant_to_feature_rescale(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((6, 5))
    q = rng.standard_normal(5)
    q /= np.linalg.norm(q)
    s1 = relevance(normalize_rows(x), q)
    s2 = relevance(normalize_rows(c * x), q)
    np.testing.assert_allclose(s1, s2, atol=1e-6)


def test_descending_order_breaks_ties_low_index():
    order = _descending_order(np.array([0.5, 0.9, 0.5, 0.9]))
    assert list(order) == [1, 3, 0, 2]


def test_candidate_cap_beta_times_need():
    rng = np.random.default_rng(3)
    s = rng.standard_normal(10)
    cand = candidate_set(s, range(10), tau=0.0, need=2, cap_m=64, beta=3.0)
    assert len(cand) == 6  # min(|C|=10, M_rem=10, ceil(3*2)=6)
    expected = sorted(range(10), key=lambda i: (-s[i], i))[:6]
    assert list(cand) == expected


def test_candidate_fallback_when_threshold_starves():
    s = np.array([0.1, 0.2, 0.3])
    cand = candidate_set(s, {0, 1, 2}, tau=0.9, need=2, cap_m=64, beta=3.0)
    assert list(cand) == [2, 1, 0]


def test_candidate_no_filtering_possible():
    s = np.array([0.5, -0.5, 0.0, 0.25])
    cand = candidate_set(s, range(4), tau=-1.0, need=4)
    assert sorted(cand) == [0, 1, 2, 3]


def test_candidate_threshold_set_used_when_big_enough():
    s = np.array([0.95, 0.1, 0.92, 0.2])
    cand = candidate_set(s, range(4), tau=0.9, need=2)
    assert list(cand) == [0, 2]


def test_candidate_cap_m_floor_is_need():
    # cap_m smaller than need cannot starve the selection.
    s = np.array([0.4, 0.3, 0.2, 0.1])
    cand = candidate_set(s, range(4), tau=0.0, need=3, cap_m=1)
    assert len(cand) == 3


def test_candidate_set_validation():
    s = np.zeros(4)
    with pytest.raises(ConfigError):
        candidate_set(s, [], tau=0.0, need=1)
    with pytest.raises(ConfigError):
        candidate_set(s, [0, 1], tau=0.0, need=3)
    with pytest.raises(ShapeError):
        candidate_set(s, [0, 9], tau=0.0, need=1)


@settings(max_examples=150)
@given(
    seed=st.integers(0, 2**16),
    n=st.integers(1, 20),
    tau=st.sampled_from([-1.0, 0.0, 0.2, 0.9]),
    beta=st.sampled_from([1.0, 2.5, math.inf]),
    with_cap=st.booleans(),
)
def test_candidate_set_contract(seed, n, tau, beta, with_cap):
    rng = np.random.default_rng(seed)
    s = rng.uniform(-1, 1, size=n + 5)
    remaining = sorted(rng.choice(n + 5, size=n, replace=False).tolist())
    need = int(rng.integers(1, n + 1))
    cap_m = int(rng.integers(1, n + 6)) if with_cap else None
    cand = list(candidate_set(s, remaining, tau=tau, need=need, cap_m=cap_m, beta=beta))
    assert len(cand) >= need
    assert len(set(cand)) == len(cand)
    assert set(cand) <= set(remaining)
    # Descending relevance with ties toward the lower index.
    keys = [(-s[i], i) for i in cand]
    assert keys == sorted(keys)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**16))
def test_raising_tau_never_grows_candidate_set(seed):
    # Monotonicity away from the fallback branch: with caps unbounded and a
    # need both thresholds can cover, a higher tau yields a subset.
    rng = np.random.default_rng(seed)
    s = np.concatenate([rng.uniform(-1, 1, size=10), [0.95, 0.96]])
    low = set(candidate_set(s, range(12), tau=0.1, need=2).tolist())
    high = set(candidate_set(s, range(12), tau=0.6, need=2).tolist())
    if all(sum(s[i] >= tau for i in range(12)) >= 2 for tau in (0.1, 0.6)):
        assert high <= low


def test_tau_nonpositive_keeps_everything():
    s = np.array([-0.9, -0.5, 0.0, 0.7])
    for tau in (-1.0, -0.3, 0.0):
        cand = candidate_set(s, range(4), tau=tau, need=1)
        assert sorted(cand) == [0, 1, 2, 3]
