import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_spd
from otgate import (
    ClusterModel,
    CytometrySummary,
    LabeledEvents,
    cost_matrix,
    d_nt,
    d_ot,
    empirical_cluster_distance,
    mean_kl_partition_distance,
    pairwise_distance_matrix,
    similarity_distance,
    solve_discrete_ot,
    summarize_cytometry,
    symmetric_kl,
)
from otgate.errors import (
    ArgumentError,
    DegenerateDistanceWarning,
    EmptySummaryError,
    PairwiseDistanceError,
)


def _summary(rng, k, d, spread=3.0, source_id=""):
    w = rng.uniform(0.1, 1, k)
    w /= w.sum()
    return CytometrySummary([ClusterModel(rng.normal(scale=spread, size=d), random_spd(rng, d), x)
                             for x in w], source_id)


@st.composite
def summary_pairs(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    d = draw(st.integers(1, 4))
    return _summary(rng, draw(st.integers(1, 6)), d), _summary(rng, draw(st.integers(1, 6)), d)


def _kl(m0, s0, m1, s1):
    d = m0.size
    inv1 = np.linalg.inv(s1)
    diff = m1 - m0
    return 0.5 * (np.trace(inv1 @ s0) + diff @ inv1 @ diff - d
                  + np.log(np.linalg.det(s1) / np.linalg.det(s0)))


def test_symmetric_kl_matches_direct_formula(rng):
    for d in range(1, 5):
        a = ClusterModel(rng.normal(size=d), random_spd(rng, d), 1.0)
        b = ClusterModel(rng.normal(size=d), random_spd(rng, d), 1.0)
        ref = 0.5 * (_kl(a.mean, a.cov, b.mean, b.cov) + _kl(b.mean, b.cov, a.mean, a.cov))
        assert symmetric_kl(a, b) == pytest.approx(ref, rel=1e-9)


def test_empirical_distance_matches_double_loop(rng):
    a, b = rng.normal(size=(17, 3)), rng.normal(size=(9, 3)) + 1.0
    ref = np.mean([np.sum((x - y) ** 2) for x in a for y in b])
    assert empirical_cluster_distance(a, b) == pytest.approx(ref, rel=1e-12)


def test_empirical_distance_subsample_is_deterministic(rng):
    a, b = rng.normal(size=(500, 2)), rng.normal(size=(40, 2))
    first = empirical_cluster_distance(a, b, subsample_cap=100)
    assert first == empirical_cluster_distance(a, b, subsample_cap=100)
    assert first != empirical_cluster_distance(a, b)


def test_summarize_drops_small_clusters_and_renormalizes(rng):
    x = np.vstack([rng.normal(size=(50, 2)), rng.normal(size=(30, 2)) + 5, rng.normal(size=(3, 2))])
    labels = ["A"] * 50 + ["B"] * 30 + ["C"] * 3
    s = summarize_cytometry(LabeledEvents(x, labels))
    assert s.labels == ["A", "B"]
    assert s.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert s.weights[0] == pytest.approx(50 / 80)
    np.testing.assert_allclose(s.clusters[0].mean, x[:50].mean(axis=0))
    eq = summarize_cytometry(LabeledEvents(x, labels), equal_weights=True)
    np.testing.assert_allclose(eq.weights, [0.5, 0.5])


def test_summarize_covariance_has_relative_ridge(rng):
    x = rng.normal(size=(40, 3))
    s = summarize_cytometry(LabeledEvents(x, ["A"] * 40))
    cov = np.cov(x.T)
    np.testing.assert_allclose(s.clusters[0].cov, cov + 1e-6 * np.trace(cov) / 3 * np.eye(3), rtol=1e-12)


def test_summarize_errors(rng):
    x = rng.normal(size=(4, 3))
    with pytest.raises(EmptySummaryError):
        summarize_cytometry(LabeledEvents(x, ["A"] * 4))
    with pytest.raises(ArgumentError):
        summarize_cytometry(LabeledEvents(x))
    with pytest.raises(ArgumentError):
        summarize_cytometry(LabeledEvents(x, ["A"] * 4), min_cluster_size=2)


def test_summary_validation(rng):
    with pytest.raises(ArgumentError):
        CytometrySummary([ClusterModel([0.0], [[1.0]], 0.5)])
    with pytest.raises(ArgumentError):
        ClusterModel([0.0, 1.0], [[1.0]], 1.0)
    with pytest.raises(ArgumentError):
        ClusterModel([0.0], [[-1.0]], 1.0)
    with pytest.raises(EmptySummaryError):
        CytometrySummary([])


@given(summary_pairs())
def test_similarity_distance_bounds(pair):
    a, b = pair
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDistanceWarning)
        s = similarity_distance(a, b)
    assert 0.0 <= s <= 1.0
    assert d_ot(a, b) <= d_nt(a, b) + 1e-12


@given(summary_pairs())
def test_partition_distances_symmetric(pair):
    a, b = pair
    assert d_nt(a, b) == pytest.approx(d_nt(b, a), rel=1e-12, abs=0)
    assert mean_kl_partition_distance(a, b) == pytest.approx(mean_kl_partition_distance(b, a), rel=1e-12)
    assert abs(d_ot(a, b) - d_ot(b, a)) <= 1e-9


def test_self_distance_uses_identity_coupling(rng):
    for _ in range(20):
        a = _summary(rng, int(rng.integers(2, 6)), 3, spread=20.0)
        plan = solve_discrete_ot(a.weights, a.weights, cost_matrix(a, a)).plan
        np.testing.assert_allclose(plan, np.diag(a.weights), atol=1e-15)
        assert similarity_distance(a, a) < 1e-9


def test_degenerate_naive_cost_warns():
    a = CytometrySummary([ClusterModel([0.0], [[1.0]], 1.0)])
    with pytest.warns(DegenerateDistanceWarning):
        assert similarity_distance(a, a) == 0.0


def test_pairwise_matrix_threads_do_not_change_result(rng, monkeypatch):
    db = [_summary(rng, 3, 2, source_id=f"s{i}") for i in range(6)]
    serial = pairwise_distance_matrix(db, threads=1)
    monkeypatch.setenv("OTGATE_THREADS", "4")
    threaded = pairwise_distance_matrix(db)
    np.testing.assert_array_equal(serial.entries, threaded.entries)
    assert serial.ids == [f"s{i}" for i in range(6)]
    for i in range(6):
        for j in range(6):
            if i != j:
                assert serial.entries[i, j] == similarity_distance(db[min(i, j)], db[max(i, j)])


def test_pairwise_failure_names_the_pair(rng):
    db = [_summary(rng, 2, 2, source_id="a"), _summary(rng, 2, 2, source_id="b")]
    with pytest.raises(PairwiseDistanceError) as info:
        pairwise_distance_matrix(db, cluster_metric="empirical")
    assert info.value.pair == ("a", "b")


def test_unknown_metric(rng):
    a = _summary(rng, 2, 2)
    with pytest.raises(ArgumentError):
        cost_matrix(a, a, "mahalanobis")
