"""Quadratic discriminant analysis from Gaussian cluster models."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, solve_triangular

from ..errors import ArgumentError
from ..summary import LabeledEvents, summarize_cytometry


@dataclass
class QDAModel:
    labels: list
    means: np.ndarray
    chol: list
    log_priors: np.ndarray

    def scores(self, events):
        """Discriminant ``log p_j - 0.5 log det S_j - 0.5 (x - m_j)' S_j^-1 (x - m_j)``."""
        x = np.atleast_2d(np.asarray(events, dtype=float))
        if x.shape[1] != self.means.shape[1]:
            raise ArgumentError(f"events have {x.shape[1]} markers, model expects {self.means.shape[1]}")
        out = np.empty((x.shape[0], len(self.labels)))
        for j, lower in enumerate(self.chol):
            z = solve_triangular(lower, (x - self.means[j]).T, lower=True)
            half_logdet = np.sum(np.log(np.diag(lower)))
            out[:, j] = self.log_priors[j] - half_logdet - 0.5 * np.einsum("ij,ij->j", z, z)
        return out


def qda_fit(summary):
    """QDA model from a labeled summary or template (anything with ``clusters``)."""
    clusters = list(summary.clusters)
    if not clusters or any(c.label is None for c in clusters):
        raise ArgumentError("QDA needs a summary whose clusters all carry labels")
    chol = []
    for c in clusters:
        try:
            lower, _ = cho_factor(c.cov, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ArgumentError(f"covariance of {c.label!r} is singular") from exc
        chol.append(np.tril(lower))
    weights = np.array([c.weight for c in clusters])
    return QDAModel([c.label for c in clusters], np.array([c.mean for c in clusters]), chol,
                    np.log(weights / weights.sum()))


def qda_predict(model, events):
    """Label of the largest discriminant per event; ties go to the first class."""
    best = np.argmax(model.scores(events), axis=1)
    return np.array(model.labels, dtype=object)[best]


class QDAClassifier:
    """``fit(events, labels)`` / ``predict(events)`` wrapper around the
    Gaussian summary of the training events."""

    def __init__(self, min_cluster_size=None):
        self.min_cluster_size = min_cluster_size
        self.model = None

    def fit(self, events, labels):
        data = LabeledEvents(events, np.asarray(labels, dtype=object))
        self.model = qda_fit(summarize_cytometry(data, self.min_cluster_size))
        return self

    def predict(self, events):
        if self.model is None:
            raise ArgumentError("classifier is not fitted")
        return qda_predict(self.model, events)
