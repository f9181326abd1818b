"""Agreement measures between a ground-truth and a predicted labelling."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError


def cluster_prf(gt_cluster, pred_cluster):
    """Precision, recall and F of a predicted cluster against a true one.

    Clusters are sets of event indices. An empty true cluster has recall 1
    and an empty predicted cluster has precision 1; the other ratio then
    follows the formula and is 0 unless both are empty. F is 0 when
    precision and recall are both 0.
    """
    gt, pred = set(gt_cluster), set(pred_cluster)
    overlap = len(gt & pred)
    recall = overlap / len(gt) if gt else 1.0
    precision = overlap / len(pred) if pred else 1.0
    return precision, recall, _harmonic(precision, recall)


def _harmonic(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _contingency(gt, pred):
    gt = np.asarray(gt, dtype=object)
    pred = np.asarray(pred, dtype=object)
    if gt.shape != pred.shape or gt.ndim != 1:
        raise ArgumentError("label vectors must have the same length")
    if gt.size == 0:
        raise ArgumentError("label vectors are empty")
    gt_names, gt_idx = np.unique(gt.astype(str), return_inverse=True)
    pred_names, pred_idx = np.unique(pred.astype(str), return_inverse=True)
    table = np.zeros((gt_names.size, pred_names.size))
    np.add.at(table, (gt_idx, pred_idx), 1)
    return list(gt_names), list(pred_names), table


def _f_table(table):
    gt_sizes = table.sum(axis=1, keepdims=True)
    pred_sizes = table.sum(axis=0, keepdims=True)
    recall = table / gt_sizes
    precision = table / pred_sizes
    total = precision + recall
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(total > 0, 2 * precision * recall / total, 0.0)
    return precision, recall, f


def f_measure(gt, pred):
    """Size-weighted best-match F of the true clusters: sum_k |k|/M max_l F(k, l)."""
    _, _, table = _contingency(gt, pred)
    _, _, f = _f_table(table)
    sizes = table.sum(axis=1)
    return float(np.sum(sizes * f.max(axis=1)) / sizes.sum())


def padded_median(values, n_zero=0):
    """Median of ``values`` with ``n_zero`` zeros appended; an even count
    averages the two middle values."""
    data = np.concatenate([np.asarray(values, dtype=float), np.zeros(int(n_zero))])
    if data.size == 0:
        raise ArgumentError("median of an empty list")
    return float(np.median(data))


def per_label_scores(gt, pred):
    """``{label: (F, precision, recall)}`` for every label used on either side,
    comparing the clusters that carry that label on both sides."""
    gt = np.asarray(gt, dtype=object).astype(str)
    pred = np.asarray(pred, dtype=object).astype(str)
    if gt.shape != pred.shape:
        raise ArgumentError("label vectors must have the same length")
    out = {}
    for label in sorted(set(gt) | set(pred)):
        a = np.flatnonzero(gt == label)
        b = np.flatnonzero(pred == label)
        p, r, f = cluster_prf(a, b)
        out[label] = (f, p, r)
    return out


def median_f_measure(gt, pred, gt_labels=None, pred_labels=None):
    """Median over shared labels of the same-label F, padded with one zero per
    label present on only one side.

    Vocabularies default to the labels occurring in each vector.
    """
    gt = np.asarray(gt, dtype=object).astype(str)
    pred = np.asarray(pred, dtype=object).astype(str)
    if gt.shape != pred.shape:
        raise ArgumentError("label vectors must have the same length")
    vocab_gt = set(gt) if gt_labels is None else set(map(str, gt_labels))
    vocab_pred = set(pred) if pred_labels is None else set(map(str, pred_labels))
    if not vocab_gt and not vocab_pred:
        raise ArgumentError("both label vocabularies are empty")
    shared = sorted(vocab_gt & vocab_pred)
    values = [cluster_prf(np.flatnonzero(gt == l), np.flatnonzero(pred == l))[2] for l in shared]
    return padded_median(values, len(vocab_gt ^ vocab_pred))


@dataclass
class MetricReport:
    f_measure: float
    median_f: float
    per_label: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "f_measure": self.f_measure,
            "median_f": self.median_f,
            "per_label": {k: {"f": f, "precision": p, "recall": r}
                          for k, (f, p, r) in self.per_label.items()},
        }


def metric_report(gt, pred):
    return MetricReport(f_measure(gt, pred), median_f_measure(gt, pred), per_label_scores(gt, pred))


def _default_classifier():
    from .gating.qda import QDAClassifier

    return QDAClassifier()


def learning_distance(x, y, classifier=None, variant="overall"):
    """One minus the mean cross-prediction score of two labeled samples.

    A classifier trained on ``x`` predicts ``y`` and vice versa; each
    prediction is scored against the true labels with the F-measure
    (``variant="overall"``) or the median F-measure (``variant="median"``).
    ``classifier`` is a factory returning objects with ``fit`` and
    ``predict``; QDA by default.
    """
    if variant not in ("overall", "median"):
        raise ArgumentError("variant must be 'overall' or 'median'")
    if x.dim != y.dim:
        raise ArgumentError("samples have different dimensions")
    if not (x.labeled and y.labeled):
        raise ArgumentError("both samples need labels")
    make = classifier or _default_classifier
    score = f_measure if variant == "overall" else median_f_measure
    on_y = make().fit(x.events, x.labels).predict(y.events)
    on_x = make().fit(y.events, y.labels).predict(x.events)
    value = 1.0 - (score(y.labels, on_y) + score(x.labels, on_x)) / 2.0
    return min(max(value, 0.0), 1.0)
