"""Template formation: metaclustering a database and building one prototype
summary per group of similar cytometries."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, ConfigurationError, EmptyTemplateError
from ..partition import DistanceMatrix, pairwise_distance_matrix
from ..summary import ClusterModel, CytometrySummary
from ..transport import gaussian_w2
from .barycenter import BarycenterOptions, gaussian_barycenter, k_barycenter
from .density import density_cluster
from .hierarchy import LINKAGES, auto_cut, cut_tree, hierarchical_cluster

META_METHODS = (*LINKAGES, "hdbscan")
TEMPLATE_METHODS = ("pooling", "density", "kbarycenter")


@dataclass(eq=False)
class Template:
    """Prototype summary of one metaclustering group (groups start at 1)."""

    group: int
    clusters: list
    members: list = field(default_factory=list)

    def __post_init__(self):
        self.clusters = list(self.clusters)
        if not self.clusters:
            raise EmptyTemplateError(f"template {self.group} has no clusters")
        if len({c.dim for c in self.clusters}) != 1:
            raise ArgumentError("template clusters have mixed dimensions")
        for c in self.clusters:
            if not 0.0 < c.weight <= 1.0 + 1e-9:
                raise ArgumentError(f"template weight {c.weight} outside (0, 1]")

    def __len__(self):
        return len(self.clusters)

    @property
    def dim(self):
        return self.clusters[0].dim

    @property
    def labeled(self):
        return all(c.label is not None for c in self.clusters)

    @property
    def weights(self):
        return np.array([c.weight for c in self.clusters])

    def as_summary(self):
        return CytometrySummary(self.clusters, f"template-{self.group}")


def _normalized(clusters, weights):
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if abs(total - 1.0) > 1e-12:
        weights = weights / total
    return [c.with_weight(float(w)) for c, w in zip(clusters, weights)]


def _strip(model):
    return ClusterModel(model.mean, model.cov, model.weight, None)


def _canonical_key(summary_index, summary, cluster):
    return (summary.source_id, cluster.mean.tobytes(), cluster.cov.tobytes(), cluster.weight, summary_index)


def template_pooling(group, opts=None, group_index=1):
    """One barycenter per label over the clusters sharing it.

    Barycentric weights are the member cluster weights renormalized within
    each label; template weights are the per-label mean member weight,
    renormalized. Members are put in a canonical order first, so the result
    does not depend on the order of ``group``.
    """
    group = list(group)
    if not group:
        raise ArgumentError("cannot build a template from an empty group")
    if not all(s.labeled for s in group):
        raise ConfigurationError("pooling templates need labeled clusters in every summary")
    by_label = {}
    for idx, s in enumerate(group):
        for c in s.clusters:
            by_label.setdefault(c.label, []).append((_canonical_key(idx, s, c), c))

    clusters, weights = [], []
    for label in sorted(by_label):
        members = [c for _, c in sorted(by_label[label], key=lambda kc: kc[0])]
        w = np.array([c.weight for c in members])
        bary = gaussian_barycenter(members, w / w.sum(), opts)
        clusters.append(bary)
        weights.append(float(w.mean()))
    return Template(group_index, _normalized(clusters, weights), [s.source_id for s in group])


def _pool(group):
    return [c for s in group for c in s.clusters]


def template_density(group, min_cluster_size=None, opts=None, group_index=1):
    """Density-based consensus: group the pooled clusters of all members by
    HDBSCAN on their W2 distances and take one barycenter per group.

    Clusters labeled noise are dropped. ``min_cluster_size`` defaults to half
    the number of members (at least 2). A group of one summary is its own
    template.
    """
    group = list(group)
    if not group:
        raise ArgumentError("cannot build a template from an empty group")
    ids = [s.source_id for s in group]
    if len(group) == 1:
        return Template(group_index, [_strip(c) for c in group[0].clusters], ids)
    pooled = _pool(group)
    if min_cluster_size is None:
        min_cluster_size = max(2, math.ceil(len(group) / 2))
    n = len(pooled)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = gaussian_w2(pooled[i], pooled[j])
    part = density_cluster(DistanceMatrix(dist, list(range(n))), min_cluster_size)
    if part.n_groups == 0:
        raise EmptyTemplateError("every pooled cluster was labeled noise")
    clusters, weights = [], []
    for g in range(1, part.n_groups + 1):
        members = [pooled[i] for i in part.members(g)]
        w = np.array([c.weight for c in members])
        clusters.append(_strip(gaussian_barycenter(members, w / w.sum(), opts)))
        weights.append(float(w.sum()))
    return Template(group_index, _normalized(clusters, weights), ids)


def template_kbarycenter(group, k=None, opts=None, group_index=1):
    """Trimmed k-barycenter of the pooled clusters of all members.

    ``k`` defaults to the median cluster count of the members. Template
    weights are proportional to the retained mass assigned to each
    barycenter; clusters come out ordered by their first pooled member.
    """
    group = list(group)
    if not group:
        raise ArgumentError("cannot build a template from an empty group")
    pooled = _pool(group)
    if k is None:
        k = int(round(float(np.median([len(s) for s in group]))))
    if not 1 <= k <= len(pooled):
        raise ArgumentError(f"k must be in [1, {len(pooled)}], got {k}")
    w = np.array([c.weight for c in pooled])
    lam = w / w.sum()
    result = k_barycenter(pooled, k, opts, lam)
    order = sorted(range(k), key=lambda j: int(np.flatnonzero(result.assignment == j)[0]))
    clusters = [_strip(result.barycenters[j]) for j in order]
    mass = [float(lam[result.assignment == j].sum()) for j in order]
    return Template(group_index, _normalized(clusters, mass), [s.source_id for s in group])


@dataclass
class TemplateFit:
    """Result of template extraction over a database."""

    partition: object
    templates: list
    distances: DistanceMatrix
    dendrogram: object = None

    def __iter__(self):
        return iter((self.partition, self.templates))


def form_template(members, template_method, group_index=1, template_k=None,
                  min_cluster_size=None, opts=None):
    if template_method == "pooling":
        return template_pooling(members, opts, group_index)
    if template_method == "density":
        return template_density(members, min_cluster_size, opts, group_index)
    if template_method == "kbarycenter":
        return template_kbarycenter(members, template_k, opts, group_index)
    raise ArgumentError(f"unknown template method {template_method!r}; choose from {TEMPLATE_METHODS}")


def optimal_flow_templates(db, meta_method="complete", template_method="pooling", k="auto",
                           cluster_metric="gaussian_w2", meta_min_cluster_size=2,
                           template_k=None, template_min_cluster_size=None,
                           opts=None, distances=None, threads=None):
    """Group a database of summaries by similarity distance and build one
    template per group.

    ``meta_method`` is a linkage name (the tree is cut into ``k`` groups, or
    at its widest height gap when ``k="auto"``) or ``"hdbscan"`` (``k`` is
    ignored and some entries may stay unassigned). Iterating the result
    yields ``(partition, templates)``.
    """
    db = list(db)
    if len(db) < 2:
        raise ArgumentError("template extraction needs at least two summaries")
    if template_method not in TEMPLATE_METHODS:
        raise ArgumentError(f"unknown template method {template_method!r}; choose from {TEMPLATE_METHODS}")
    ids = [s.source_id or str(i) for i, s in enumerate(db)]
    if len(set(ids)) != len(ids):
        raise ArgumentError("summary source ids must be unique")
    db = [s if s.source_id else CytometrySummary(s.clusters, i) for s, i in zip(db, ids)]
    opts = opts or BarycenterOptions()

    if distances is None:
        distances = pairwise_distance_matrix(db, "similarity", cluster_metric, threads)
    dendrogram = None
    if meta_method == "hdbscan":
        partition = density_cluster(distances, meta_min_cluster_size)
    elif meta_method in LINKAGES:
        dendrogram = hierarchical_cluster(distances, meta_method)
        n_groups = auto_cut(dendrogram) if k in (None, "auto") else int(k)
        partition = cut_tree(dendrogram, n_groups)
    else:
        raise ArgumentError(f"unknown meta method {meta_method!r}; choose from {META_METHODS}")

    by_id = dict(zip(ids, db))
    templates = []
    for g in range(1, partition.n_groups + 1):
        members = [by_id[i] for i in partition.members(g)]
        if len(members) == 1 and template_method != "pooling":
            lone = members[0]
            templates.append(Template(g, [_strip(c) for c in lone.clusters], [lone.source_id]))
            continue
        templates.append(form_template(members, template_method, g, template_k,
                                       template_min_cluster_size, opts))
    return TemplateFit(partition, templates, distances, dendrogram)
