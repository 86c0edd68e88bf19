import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visprune import ConfigError, QuerySpec, ShapeError, build_query, no_text_query, weights_for
from visprune.query import QueryEmbedding

SCHEMES = ("uniform", "exponential", "middle-peak")


def test_uniform_weights_j4():
    np.testing.assert_allclose(weights_for("uniform", 4), [0.25] * 4, atol=1e-15)


def test_exponential_weights_gamma2_j3():
    np.testing.assert_allclose(
        weights_for("exponential", 3, gamma=2.0), [1 / 7, 2 / 7, 4 / 7], atol=1e-12
    )


def test_middle_peak_j3_hits_endpoints():
    np.testing.assert_allclose(weights_for("middle-peak", 3), [0.0, 1.0, 0.0], atol=1e-15)


def test_middle_peak_j1_and_j2_degenerate_profiles():
    np.testing.assert_array_equal(weights_for("middle-peak", 1), [1.0])
    # J=2 places both tokens at the triangle's zero endpoints; falls back to uniform.
    np.testing.assert_allclose(weights_for("middle-peak", 2), [0.5, 0.5], atol=1e-15)


def test_exponential_weights_long_prompt_stays_finite():
    w = weights_for("exponential", 5000, gamma=1.5)
    assert np.all(np.isfinite(w))
    assert abs(w.sum() - 1.0) <= 1e-9
    assert w[-1] > w[0]


def test_exponential_gamma_below_one_decays():
    w = weights_for("exponential", 4, gamma=0.5)
    assert np.all(np.diff(w) < 0)
    np.testing.assert_allclose(w, [8 / 15, 4 / 15, 2 / 15, 1 / 15], atol=1e-12)


def test_explicit_weights_normalized():
    np.testing.assert_allclose(
        weights_for("explicit", 3, explicit=[2.0, 0.0, 2.0]), [0.5, 0.0, 0.5], atol=1e-15
    )


def test_weights_for_errors():
    with pytest.raises(ConfigError):
        weights_for("uniform", 0)
    with pytest.raises(ConfigError):
        weights_for("exponential", 3, gamma=0.0)
    with pytest.raises(ConfigError):
        weights_for("explicit", 3, explicit=[1.0, 2.0])
    with pytest.raises(ConfigError):
        weights_for("explicit", 2, explicit=[0.0, 0.0])
    with pytest.raises(ConfigError):
        weights_for("none", 3)


@settings(max_examples=150)
@given(
    scheme=st.sampled_from(SCHEMES),
    j=st.integers(1, 64),
    gamma=st.floats(min_value=0.1, max_value=4.0, allow_nan=False),
)
def test_weights_always_a_distribution(scheme, j, gamma):
    w = weights_for(scheme, j, gamma=gamma)
    assert w.shape == (j,)
    assert np.all(w >= 0)
    assert abs(w.sum() - 1.0) <= 1e-9


def test_build_query_single_token():
    spec = QuerySpec(np.array([[0.0, 3.0, 4.0]]), weighting="uniform")
    q = build_query(spec)
    np.testing.assert_allclose(q.vector, [0.0, 0.6, 0.8], atol=1e-15)
    assert q.scheme_used == "uniform"
    assert not q.degenerate


def test_build_query_identical_tokens():
    spec = QuerySpec(np.array([[1.0, 0.0], [1.0, 0.0]]), weighting="uniform")
    np.testing.assert_allclose(build_query(spec).vector, [1.0, 0.0], atol=1e-15)


def test_build_query_exponential_hand_value():
    spec = QuerySpec(
        np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), weighting="exponential", gamma=2.0
    )
    q = build_query(spec)
    np.testing.assert_allclose(q.vector, np.array([5.0, 6.0]) / math.sqrt(61), atol=1e-12)
    np.testing.assert_allclose(q.vector, [0.6402, 0.7682], atol=5e-5)


def test_build_query_cancellation_is_degenerate():
    spec = QuerySpec(np.array([[1.0, 0.0], [-1.0, 0.0]]), weighting="uniform")
    q = build_query(spec)
    assert q.degenerate
    np.testing.assert_array_equal(q.vector, [0.0, 0.0])


def test_build_query_rejects_none_scheme():
    with pytest.raises(ConfigError):
        build_query(QuerySpec(None, weighting="none"))


def test_build_query_projection_alignment():
    # 2-dim text embeddings mapped into 3-dim visual space.
    proj = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    spec = QuerySpec(np.array([[0.0, 2.0]]), weighting="uniform", projection=proj)
    np.testing.assert_allclose(build_query(spec).vector, [0.0, 1.0, 0.0], atol=1e-15)
    bad = QuerySpec(np.array([[0.0, 2.0, 1.0]]), weighting="uniform", projection=proj)
    with pytest.raises(ShapeError):
        build_query(bad)


@settings(max_examples=100)
@given(
    scheme=st.sampled_from(SCHEMES),
    c=st.floats(min_value=1e-3, max_value=1e3, allow_nan=False),
    seed=st.integers(0, 2**16),
)
def test_build_query_direction_scale_invariant(scheme, c, seed):
    rng = np.random.default_rng(seed)
    emb = rng.standard_normal((4, 5))
    q1 = build_query(QuerySpec(emb, weighting=scheme))
    q2 = build_query(QuerySpec(c * emb, weighting=scheme))
    assert q1.degenerate == q2.degenerate
    np.testing.assert_allclose(q1.vector, q2.vector, atol=1e-6)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**16))
def test_uniform_query_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    emb = rng.standard_normal((6, 4))
    perm = rng.permutation(6)
    q1 = build_query(QuerySpec(emb, weighting="uniform"))
    q2 = build_query(QuerySpec(emb[perm], weighting="uniform"))
    np.testing.assert_allclose(q1.vector, q2.vector, atol=1e-6)


def test_query_embedding_norm_contract():
    with pytest.raises(ShapeError):
        QueryEmbedding(np.array([3.0, 4.0]), "precomputed")
    with pytest.raises(ShapeError):
        QueryEmbedding(np.array([1.0, 0.0]), "none", degenerate=True)
    q = no_text_query(3)
    assert q.degenerate and q.dim == 3
    np.testing.assert_array_equal(q.vector, np.zeros(3))
    with pytest.raises(ConfigError):
        no_text_query(0)
