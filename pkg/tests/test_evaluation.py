import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import naive_f_measure
from otgate import LabeledEvents, cluster_prf, f_measure, learning_distance, median_f_measure, metric_report
from otgate.errors import ArgumentError
from otgate.evaluation import padded_median

labellings = st.lists(st.sampled_from("ABCDE"), min_size=1, max_size=60)


def test_cluster_prf_examples():
    assert cluster_prf({1, 2, 3}, {1, 2, 3}) == (1.0, 1.0, 1.0)
    assert cluster_prf({1, 2}, {3, 4}) == (0.0, 0.0, 0.0)
    p, r, f = cluster_prf(range(10), range(5))
    assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)


def test_cluster_prf_empty_conventions():
    assert cluster_prf(set(), {1, 2})[1] == 1.0
    assert cluster_prf(set(), {1, 2})[0] == 0.0
    assert cluster_prf({1, 2}, set())[0] == 1.0
    assert cluster_prf({1, 2}, set())[1] == 0.0
    assert cluster_prf(set(), set()) == (1.0, 1.0, 1.0)


def test_f_measure_examples():
    assert f_measure(list("AABB"), list("AABB")) == 1.0
    assert f_measure(list("AABB"), list("XXXX")) == pytest.approx(2 / 3)
    with pytest.raises(ArgumentError):
        f_measure([], [])
    with pytest.raises(ArgumentError):
        f_measure(["A"], ["A", "B"])


@given(st.integers(0, 2**32 - 1))
def test_f_measure_matches_naive_loop(seed):
    rng = np.random.default_rng(seed)
    gt = rng.choice(list("ABCD"), 50)
    pred = rng.choice(list("wxyz"), 50)
    assert f_measure(gt, pred) == pytest.approx(naive_f_measure(gt, pred), abs=1e-12)


@given(labellings, st.data())
def test_metric_bounds_and_permutation_invariance(gt, data):
    pred = data.draw(st.lists(st.sampled_from("ABCDE"), min_size=len(gt), max_size=len(gt)))
    f = f_measure(gt, pred)
    assert 0.0 <= f <= 1.0
    assert 0.0 <= median_f_measure(gt, pred) <= 1.0
    assert f_measure(gt, gt) == 1.0
    perm = dict(zip("ABCDE", data.draw(st.permutations("VWXYZ"))))
    assert f_measure(gt, [perm[p] for p in pred]) == pytest.approx(f, abs=1e-15)


def test_median_f_examples():
    assert median_f_measure(list("AABBC"), list("AABBC")) == 1.0
    assert median_f_measure(list("AABB"), list("AAXX"), gt_labels="AB", pred_labels="A") == 0.5
    with pytest.raises(ArgumentError):
        median_f_measure([], [], gt_labels=[], pred_labels=[])


def test_median_f_weakly_drops_when_a_label_disappears():
    gt = list("AAABBBCCC")
    pred = list("AAABBCCCC")
    before = median_f_measure(gt, pred)
    emptied = ["C" if p == "B" else p for p in pred]
    assert median_f_measure(gt, emptied) <= before


def test_padded_median():
    assert padded_median([0.2, 0.8]) == 0.5
    assert padded_median([1.0], n_zero=2) == 0.0
    assert padded_median([0.9, 0.7, 0.5]) == 0.7
    with pytest.raises(ArgumentError):
        padded_median([])


def test_metric_report_contents():
    report = metric_report(list("AABB"), list("AABA"))
    doc = report.to_dict()
    assert set(doc["per_label"]) == {"A", "B"}
    assert doc["per_label"]["B"]["precision"] == 1.0
    assert doc["per_label"]["B"]["recall"] == 0.5


def _separable(rng, n=400, names=("A", "B", "C")):
    centers = np.array([[0, 0], [20, 0], [0, 20]], dtype=float)
    idx = rng.integers(0, 3, n)
    return LabeledEvents(centers[idx] + rng.normal(size=(n, 2)), np.array(names, dtype=object)[idx])


def test_learning_distance_examples(rng):
    x, y = _separable(rng), _separable(rng)
    assert learning_distance(x, x) <= 0.01
    assert learning_distance(x, y) == learning_distance(y, x)
    swapped = LabeledEvents(y.events, np.array([{"A": "B", "B": "C", "C": "A"}[l] for l in y.labels]))
    assert learning_distance(x, swapped, variant="median") >= 0.99
    assert learning_distance(x, swapped) <= 0.01  # overall F matches clusters regardless of names


def test_learning_distance_accepts_other_classifiers(rng):
    from sklearn.neighbors import KNeighborsClassifier

    x, y = _separable(rng), _separable(rng)
    value = learning_distance(x, y, classifier=lambda: KNeighborsClassifier(3))
    assert 0.0 <= value <= 0.01
    with pytest.raises(ArgumentError):
        learning_distance(x, y, variant="mean")
