"""Metaclustering of summaries and template formation."""

from .barycenter import (
    BarycenterOptions,
    KBarycenterResult,
    gaussian_barycenter,
    k_barycenter,
)
from .density import density_cluster
from .formation import (
    META_METHODS,
    TEMPLATE_METHODS,
    Template,
    TemplateFit,
    optimal_flow_templates,
    template_density,
    template_kbarycenter,
    template_pooling,
)
from .hierarchy import Dendrogram, MetaPartition, auto_cut, cut_tree, hierarchical_cluster

__all__ = [
    "BarycenterOptions",
    "Dendrogram",
    "KBarycenterResult",
    "META_METHODS",
    "MetaPartition",
    "TEMPLATE_METHODS",
    "Template",
    "TemplateFit",
    "auto_cut",
    "cut_tree",
    "density_cluster",
    "gaussian_barycenter",
    "hierarchical_cluster",
    "k_barycenter",
    "optimal_flow_templates",
    "template_density",
    "template_kbarycenter",
    "template_pooling",
]
