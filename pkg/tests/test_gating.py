import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from oracles import assignment_min, random_spd
from otgate import (
    ClusterModel,
    CytometrySummary,
    SyntheticSpec,
    TclustParams,
    assign_to_template,
    best_template_init,
    fuzzy_relabel,
    generate_synthetic,
    hungarian_relabel,
    optimal_flow_classification,
    optimal_flow_templates,
    qda_fit,
    qda_predict,
    summarize_cytometry,
    tclust,
)
from otgate.errors import ArgumentError, ConfigurationError
from otgate.gating.classification import UNASSIGNED
from otgate.gating.relabel import linear_assignment
from otgate.gating.tclust import restrict_eigenvalues


def _summary(rng, k, d, spread=10.0, labels=True):
    w = rng.dirichlet(np.full(k, 3.0))
    return CytometrySummary([
        ClusterModel(rng.normal(scale=spread, size=d), random_spd(rng, d), x, f"L{j}" if labels else None)
        for j, x in enumerate(w)
    ])


# ---- eigenvalue restriction ------------------------------------------------------

def _restriction_objective(e, n, c, t):
    clamped = np.clip(e, t, c * t)
    return float(np.sum(n[:, None] * (np.log(clamped) + e / clamped)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from([1.0, 2.0, 10.0, 100.0]))
def test_restriction_is_optimal_over_a_fine_grid(seed, k, d, c):
    rng = np.random.default_rng(seed)
    e = np.exp(rng.uniform(-4, 4, (k, d)))
    n = rng.integers(1, 50, k).astype(float)
    out = restrict_eigenvalues(e, n, c)
    assert out.max() / out.min() <= c + 1e-9
    t = out.min()
    grid = np.exp(np.linspace(np.log(e.min() / c) - 1, np.log(e.max()) + 1, 4000))
    best_grid = min(_restriction_objective(e, n, c, g) for g in grid)
    assert _restriction_objective(e, n, c, t) <= best_grid + 1e-9 * abs(best_grid)


def test_restriction_leaves_feasible_values_alone():
    e = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(restrict_eigenvalues(e, [1, 1], 4.0), e)


# ---- tclust -------------------------------------------------------------------

def test_single_cluster_is_sample_moments(rng):
    x = rng.normal(size=(300, 3)) @ random_spd(rng, 3)
    res = tclust(x, TclustParams(k=1, alpha=0.0, n_restarts=1))
    m = res.models[0]
    np.testing.assert_allclose(m.mean, x.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(m.cov, np.cov(x.T, ddof=0), atol=1e-10)
    assert np.all(res.assignment == 1) and res.converged


def test_far_outliers_are_trimmed(rng):
    x = np.vstack([rng.normal(size=(190, 2)), rng.normal(size=(200, 2)) + [12, 0],
                   rng.uniform(-200, 200, (10, 2)) + 300])
    res = tclust(x, TclustParams(k=2, alpha=0.025, seed=1))
    assert set(np.flatnonzero(res.trimmed)) == set(range(390, 400))
    assert res.nearest.shape == (400,)


def test_noise_is_mostly_trimmed_in_four_dimensions():
    data = generate_synthetic(SyntheticSpec(groups=1, per_group=1, clusters=3, dim=4, noise=0.1,
                                            events=2000, test_per_group=0, seed=4))
    ev = data.samples[0].events
    res = tclust(ev.events, TclustParams(k=3, alpha=0.1, seed=0))
    noise = ev.labels == "noise"
    caught = np.mean(res.trimmed[noise])
    assert caught >= 0.75
    assert np.sum(res.trimmed) == 200


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.01, 0.05, 0.3]), st.integers(1, 3))
def test_tclust_invariants(seed, alpha, k):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(40, 200))
    x = rng.normal(size=(n, 2)) + rng.integers(0, 3, n)[:, None] * 6.0
    c = float(rng.choice([1.0, 3.0, 1e6]))
    res = tclust(x, TclustParams(k=k, alpha=alpha, restriction_c=c, n_restarts=2, seed=seed % 97))
    assert np.sum(res.assignment == 0) == math.ceil(Fraction(str(alpha)) * n)
    bounds = list(res.segments) + [len(res.history)]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        seg = np.array(res.history[lo:hi])
        assert np.all(np.diff(seg) >= -1e-9 * np.maximum(1.0, np.abs(seg[1:])))
    ev = np.concatenate([np.linalg.eigvalsh(m.cov) for m in res.models])
    assert ev.max() / ev.min() <= c * (1 + 1e-9)
    assert sum(m.weight for m in res.models) == pytest.approx(1.0)


def test_tclust_seeded_from_models_keeps_labels(rng):
    x = np.vstack([rng.normal(size=(100, 2)), rng.normal(size=(100, 2)) + 8])
    init = [ClusterModel([0, 0], np.eye(2), 0.5, "low"), ClusterModel([8, 8], np.eye(2), 0.5, "high")]
    res = tclust(x, init=init)
    assert [m.label for m in res.models] == ["low", "high"]
    assert np.all(res.nearest[:100] == 0) and np.all(res.nearest[100:] == 1)
    assert np.sum(res.trimmed) == 10


def test_tclust_errors(rng):
    with pytest.raises(ArgumentError):
        tclust(rng.normal(size=(6, 2)), TclustParams(k=2))
    with pytest.raises(ArgumentError):
        TclustParams(alpha=1.0)
    with pytest.raises(ArgumentError):
        TclustParams(restriction_c=0.5)
    with pytest.raises(ArgumentError):
        tclust(rng.normal(size=(50, 2)), TclustParams(k=2), init=[ClusterModel([0.0], [[1.0]], 1.0)])


def test_tclust_is_deterministic(rng):
    x = rng.normal(size=(300, 3))
    a = tclust(x, TclustParams(k=3, seed=9))
    b = tclust(x, TclustParams(k=3, seed=9))
    np.testing.assert_array_equal(a.assignment, b.assignment)
    assert a.history == b.history


# ---- QDA ------------------------------------------------------------------------

def test_qda_matches_gaussian_densities(rng):
    s = _summary(rng, 4, 3, spread=2.0)
    x = rng.normal(scale=3, size=(500, 3))
    ref = np.column_stack([np.log(c.weight) + multivariate_normal(c.mean, c.cov).logpdf(x) for c in s.clusters])
    model = qda_fit(s)
    np.testing.assert_allclose(model.scores(x) - ref, 1.5 * np.log(2 * np.pi) * np.ones_like(ref), atol=1e-9)
    np.testing.assert_array_equal(qda_predict(model, x), np.array(s.labels, dtype=object)[ref.argmax(axis=1)])


@given(st.integers(0, 2**32 - 1), st.permutations(range(4)))
def test_qda_invariant_under_class_permutation(seed, perm):
    rng = np.random.default_rng(seed)
    s = _summary(rng, 4, 2, spread=2.0)
    x = rng.normal(scale=3, size=(200, 2))
    shuffled = CytometrySummary([s.clusters[i] for i in perm])
    np.testing.assert_array_equal(qda_predict(qda_fit(s), x), qda_predict(qda_fit(shuffled), x))


def test_qda_needs_labels(rng):
    with pytest.raises(ArgumentError):
        qda_fit(_summary(rng, 2, 2, labels=False))


# ---- relabelling -------------------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 7))
def test_linear_assignment_matches_brute_force(seed, m, n):
    cost = np.random.default_rng(seed).uniform(0, 5, (m, n))
    rows, cols, total = linear_assignment(cost)
    assert total == pytest.approx(assignment_min(cost), abs=1e-9)
    assert len(rows) == min(m, n) and len(set(cols)) == len(cols)


def test_linear_assignment_integer_ties():
    cost = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    _, _, total = linear_assignment(cost)
    assert total == 1.0


def test_hungarian_relabel_rectangular(rng):
    ref = _summary(rng, 3, 2, spread=30.0)
    u = CytometrySummary([ClusterModel(c.mean + 0.1, c.cov, c.weight, None) for c in ref.clusters[::-1]])
    m = hungarian_relabel(u, ref)
    assert m.labels == ["L2", "L1", "L0"]
    extra = CytometrySummary([c.with_weight(c.weight * 0.9) for c in u.clusters]
                             + [ClusterModel([500.0, 500.0], np.eye(2), 0.1)])
    assert hungarian_relabel(extra, ref).labels == ["L2", "L1", "L0", "unmatched-4"]


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_fuzzy_score_bounds(seed, k_ref, k_u):
    rng = np.random.default_rng(seed)
    ref, u = _summary(rng, k_ref, 2), _summary(rng, k_u, 2, labels=False)
    f = fuzzy_relabel(u, ref)
    assert np.all((f.scores >= 0) & (f.scores <= 1))
    np.testing.assert_allclose(f.scores.sum(axis=0), 1.0, atol=1e-7)
    assert np.all(f.weighted_scores <= f.scores)
    assert len(f.hard_labels()) == k_u


def test_fuzzy_relabel_identity_and_split(rng):
    ref = _summary(rng, 3, 2, spread=40.0)
    f = fuzzy_relabel(ref, ref)
    np.testing.assert_array_equal(f.scores, np.eye(3))
    assert f.hard_labels() == ref.labels
    # split the first reference cluster into a big and a small piece
    big, rest = ref.clusters[0], ref.clusters[1:]
    u = CytometrySummary([big.with_weight(big.weight * 0.8), ClusterModel(big.mean + 0.5, big.cov, big.weight * 0.2)]
                         + list(rest))
    assert fuzzy_relabel(u, ref).hard_labels()[:2] == ["L0", "L0"]


# ---- classification -------------------------------------------------------------------

@pytest.fixture(scope="module")
def pipeline():
    data = generate_synthetic(SyntheticSpec(groups=2, per_group=4, clusters=3, dim=3, seed=6, events=800))
    db = [summarize_cytometry(s.events, source_id=s.id) for s in data.database]
    return data, db, optimal_flow_templates(db, k=2)


@pytest.mark.parametrize("method", ["qda-template", "qda-nearest", "label-transfer-hungarian",
                                    "label-transfer-fuzzy"])
def test_classification_methods(pipeline, method):
    data, db, fit = pipeline
    from otgate import f_measure

    for sample in data.tests:
        res = optimal_flow_classification(sample.events, fit.partition, fit.templates, db, method)
        assert f_measure(sample.events.labels, res.labels) > 0.95
        assert res.labels.shape == (sample.events.n,)


def test_classification_with_external_clustering(pipeline):
    data, db, fit = pipeline
    sample = data.tests[0]
    clusters = np.array([f"k-{l}" for l in sample.events.labels], dtype=object)
    clusters[:2] = "tiny"
    res = optimal_flow_classification(sample.events, fit.partition, fit.templates, db,
                                      "label-transfer-hungarian", clustering=clusters)
    assert np.all(res.labels[:2] == UNASSIGNED)
    assert np.mean(res.labels[2:] == sample.events.labels[2:]) > 0.99


def test_unlabeled_templates_reject_label_methods(pipeline):
    data, db, _ = pipeline
    fit = optimal_flow_templates(db, k=2, template_method="kbarycenter")
    sample = data.tests[0]
    for method in ("qda-template", "label-transfer-hungarian", "label-transfer-fuzzy"):
        with pytest.raises(ConfigurationError):
            optimal_flow_classification(sample.events, fit.partition, fit.templates, db, method)
    res = optimal_flow_classification(sample.events, fit.partition, fit.templates, db, "qda-nearest")
    assert res.reference in {s.source_id for s in db}


def test_best_template_init_picks_the_right_template(pipeline):
    data, _, fit = pipeline
    for sample in data.tests:
        result, index = best_template_init(sample.events.events, fit.templates)
        assert fit.templates[index].group == fit.partition.assignment[
            next(s.id for s in data.database if s.group == sample.group)]
        assert len(result.models) == len(fit.templates[index])


def test_assign_to_template_and_errors(pipeline):
    data, db, fit = pipeline
    assert assign_to_template(db[0], [t.as_summary() for t in fit.templates]) == fit.partition.assignment[db[0].source_id] - 1
    with pytest.raises(ArgumentError):
        assign_to_template(db[0], [])
    with pytest.raises(ArgumentError):
        optimal_flow_classification(data.tests[0].events, fit.partition, fit.templates, db, "random-forest")
