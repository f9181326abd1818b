"""Cytometry data types and the reduction of gated events to Gaussian summaries."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, EmptySummaryError
from .transport import check_spd

WEIGHT_TOL = 1e-9
RIDGE = 1e-6


@dataclass
class LabeledEvents:
    """An ``n x d`` marker matrix with optional per-event labels."""

    events: np.ndarray
    labels: np.ndarray | None = None
    markers: list[str] | None = None

    def __post_init__(self):
        self.events = np.atleast_2d(np.asarray(self.events, dtype=float))
        n, d = self.events.shape
        if n < 1 or d < 1:
            raise ArgumentError("events must have at least one row and one column")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=object)
            if self.labels.shape != (n,):
                raise ArgumentError(f"expected {n} labels, got {self.labels.shape}")
            if any(not isinstance(x, str) or not x for x in self.labels):
                raise ArgumentError("labels must be nonempty strings")
        if self.markers is None:
            self.markers = [f"m{i + 1}" for i in range(d)]
        elif len(self.markers) != d:
            raise ArgumentError("marker names do not match the event dimension")

    @property
    def labeled(self):
        return self.labels is not None

    @property
    def n(self):
        return self.events.shape[0]

    @property
    def dim(self):
        return self.events.shape[1]


@dataclass(eq=False)
class ClusterModel:
    """One population as a Gaussian: mean, covariance, mixture weight, label.

    ``events`` optionally keeps the member events for the empirical cluster
    distance; it is never serialized.
    """

    mean: np.ndarray
    cov: np.ndarray
    weight: float = 1.0
    label: str | None = None
    events: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = check_spd(np.atleast_2d(self.cov), "cov")
        d = self.mean.size
        if self.cov.shape != (d, d):
            raise ArgumentError(f"covariance shape {self.cov.shape} does not match mean dimension {d}")
        self.weight = float(self.weight)
        if not 0.0 < self.weight <= 1.0 + WEIGHT_TOL:
            raise ArgumentError(f"cluster weight must lie in (0, 1], got {self.weight}")

    @property
    def dim(self):
        return self.mean.size

    def same_parameters(self, other):
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
            and self.weight == other.weight
            and self.label == other.label
        )

    def with_weight(self, weight):
        return ClusterModel(self.mean, self.cov, weight, self.label, self.events)


@dataclass(eq=False)
class CytometrySummary:
    """A gated cytometry reduced to a weighted list of cluster models."""

    clusters: list
    source_id: str = ""

    def __post_init__(self):
        self.clusters = list(self.clusters)
        if not self.clusters:
            raise EmptySummaryError("a summary needs at least one cluster")
        dims = {c.dim for c in self.clusters}
        if len(dims) != 1:
            raise ArgumentError(f"clusters have mixed dimensions {sorted(dims)}")
        total = sum(c.weight for c in self.clusters)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ArgumentError(f"cluster weights sum to {total:.12g}, expected 1")

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    @property
    def dim(self):
        return self.clusters[0].dim

    @property
    def weights(self):
        return np.array([c.weight for c in self.clusters])

    @property
    def labels(self):
        return [c.label for c in self.clusters]

    @property
    def labeled(self):
        return all(c.label is not None for c in self.clusters)

    def same_parameters(self, other):
        return len(self) == len(other) and all(a.same_parameters(b) for a, b in zip(self, other))

    @classmethod
    def from_models(cls, clusters, source_id="", normalize=True):
        """Build a summary, renormalizing the weights when asked."""
        clusters = list(clusters)
        if normalize and clusters:
            total = sum(c.weight for c in clusters)
            clusters = [c.with_weight(c.weight / total) for c in clusters]
        return cls(clusters, source_id)


def empirical_moments(x, ridge=RIDGE):
    """Sample mean and unbiased covariance with a relative diagonal ridge."""
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(x.shape[0] - 1, 1)
    cov = 0.5 * (cov + cov.T)
    d = cov.shape[0]
    if ridge:
        cov = cov + ridge * (np.trace(cov) / d) * np.eye(d)
    return mean, cov


def summarize_cytometry(x, min_cluster_size=None, equal_weights=False, ridge=RIDGE,
                        keep_events=False, source_id=""):
    """Reduce labeled events to one Gaussian cluster model per label.

    Labels with fewer than ``min_cluster_size`` events (default ``d + 2``)
    are dropped and the remaining weights renormalized. Weights are the
    relative retained cluster sizes, or ``1/k`` with ``equal_weights``.
    Clusters come out sorted by label.
    """
    if not isinstance(x, LabeledEvents):
        raise ArgumentError("summarize_cytometry expects LabeledEvents")
    if not x.labeled:
        raise ArgumentError("cannot summarize unlabeled events")
    d = x.dim
    if min_cluster_size is None:
        min_cluster_size = d + 2
    if min_cluster_size < d + 1:
        raise ArgumentError(f"min_cluster_size must be at least d + 1 = {d + 1}")

    names, inverse, counts = np.unique(x.labels.astype(str), return_inverse=True, return_counts=True)
    kept = [k for k in range(names.size) if counts[k] >= min_cluster_size]
    if not kept:
        raise EmptySummaryError(
            f"no label has at least {min_cluster_size} events (source {source_id or '?'})"
        )
    total = float(sum(counts[k] for k in kept))
    clusters = []
    for k in kept:
        members = x.events[inverse == k]
        mean, cov = empirical_moments(members, ridge)
        weight = 1.0 / len(kept) if equal_weights else counts[k] / total
        clusters.append(
            ClusterModel(mean, cov, weight, str(names[k]), members if keep_events else None)
        )
    return CytometrySummary(clusters, source_id)
