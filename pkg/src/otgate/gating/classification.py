"""Gating a new cytometry with a template database."""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, ConfigurationError, DegenerateDistanceWarning, OTGateError
from ..partition import similarity_distance
from ..summary import ClusterModel, CytometrySummary, LabeledEvents, summarize_cytometry
from .qda import qda_fit, qda_predict
from .relabel import fuzzy_relabel, hungarian_relabel
from .tclust import TclustParams, tclust

METHODS = ("qda-template", "qda-nearest", "label-transfer-hungarian", "label-transfer-fuzzy")
UNASSIGNED = "unassigned"


def _quiet_distance(a, b, metric):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateDistanceWarning)
        return similarity_distance(a, b, metric)


def best_template_init(events, templates, params=None):
    """Run tclust once per template, seeded from its clusters.

    ``k`` of every run is the template's cluster count; ``params`` supplies
    the other settings. Returns the result with the largest objective and the
    index of its template (ties go to the lower index).
    """
    templates = list(templates)
    if not templates:
        raise ArgumentError("at least one template is needed")
    base = params or TclustParams()
    best, best_index, failures = None, None, []
    for index, template in enumerate(templates):
        run_params = TclustParams(len(template.clusters), base.alpha, base.restriction_c,
                                  base.max_iter, 1, base.seed)
        try:
            result = tclust(events, run_params, init=template.clusters)
        except OTGateError as exc:
            failures.append(f"template {index}: {exc}")
            continue
        if best is None or result.objective > best.objective:
            best, best_index = result, index
    if best is None:
        raise OTGateError("tclust failed for every template: " + "; ".join(failures))
    return best, best_index


def _summary_of(template):
    return template if isinstance(template, CytometrySummary) else template.as_summary()


def assign_to_template(u, templates, metric="gaussian_w2"):
    """Index of the template closest to ``u`` in similarity distance."""
    templates = list(templates)
    if not templates:
        raise ArgumentError("at least one template is needed")
    distances = [_quiet_distance(u, _summary_of(t), metric) for t in templates]
    return int(np.argmin(distances))


@dataclass
class ClassificationResult:
    labels: np.ndarray
    template_index: int
    group: int
    summary: CytometrySummary
    clusters: np.ndarray
    tclust: object = None
    reference: str = ""


def _require_labels(template, method, group):
    if not template.labeled:
        raise ConfigurationError(
            f"method {method!r} needs a labeled template, but template {group} "
            "has unlabeled clusters (density or k-barycenter templates carry no labels)"
        )


def optimal_flow_classification(events, partition, templates, db, method="qda-template",
                                clustering="tclust-templates", params=None,
                                cluster_metric="gaussian_w2"):
    """Label the events of a new cytometry.

    The events are clustered (tclust seeded from every template, or an
    external per-event partition passed as ``clustering``), the clustering
    is matched to its nearest template in similarity distance, and labels
    come from QDA on that template (``qda-template``), QDA on the closest
    database member of its group (``qda-nearest``), or a relabelling of the
    clusters against the template (``label-transfer-hungarian`` and
    ``label-transfer-fuzzy``).
    """
    if method not in METHODS:
        raise ArgumentError(f"unknown method {method!r}; choose from {METHODS}")
    x = events.events if isinstance(events, LabeledEvents) else np.atleast_2d(np.asarray(events, dtype=float))
    templates = list(templates)
    if not templates:
        raise ArgumentError("at least one template is needed")

    fit = None
    if isinstance(clustering, str):
        if clustering != "tclust-templates":
            raise ArgumentError(f"unknown clustering {clustering!r}")
        fit, _ = best_template_init(x, templates, params)
        cluster_of = fit.nearest
        names = [f"c{j + 1}" for j in range(len(fit.models))]
        u = CytometrySummary([ClusterModel(m.mean, m.cov, m.weight, n)
                              for m, n in zip(fit.models, names)], "query")
    else:
        ids = np.asarray([str(c) for c in clustering], dtype=object)
        if ids.shape != (x.shape[0],):
            raise ArgumentError("external clustering needs one entry per event")
        u = summarize_cytometry(LabeledEvents(x, ids), min_cluster_size=x.shape[1] + 1,
                                source_id="query")
        names = u.labels
        index = {n: j for j, n in enumerate(names)}
        cluster_of = np.array([index.get(c, -1) for c in ids])

    t_index = assign_to_template(u, templates, cluster_metric)
    template = templates[t_index]
    group = getattr(template, "group", t_index + 1)
    reference = f"template-{group}"

    if method == "qda-template":
        _require_labels(template, method, group)
        labels = qda_predict(qda_fit(template), x)
    elif method == "qda-nearest":
        if partition is None:
            raise ConfigurationError("qda-nearest needs the metaclustering partition")
        by_id = {s.source_id: s for s in db}
        members = [by_id[i] for i in partition.members(group) if i in by_id]
        if not members:
            raise ConfigurationError(f"group {group} has no database members to learn from")
        if not all(s.labeled for s in members):
            raise ConfigurationError("qda-nearest needs labeled database summaries")
        distances = [_quiet_distance(u, s, cluster_metric) for s in members]
        nearest = members[int(np.argmin(distances))]
        reference = nearest.source_id
        labels = qda_predict(qda_fit(nearest), x)
    else:
        _require_labels(template, method, group)
        ref = _summary_of(template)
        if method == "label-transfer-hungarian":
            mapped = hungarian_relabel(u, ref, cluster_metric).labels
        else:
            mapped = fuzzy_relabel(u, ref, cluster_metric).hard_labels()
        # index -1 (events of clusters too small to summarize) hits the last slot
        lookup = np.array(list(mapped) + [UNASSIGNED], dtype=object)
        labels = lookup[cluster_of]
    return ClassificationResult(np.asarray(labels, dtype=object), t_index, group, u,
                                np.asarray(cluster_of), fit, reference)
