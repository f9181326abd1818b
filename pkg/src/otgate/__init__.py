"""Optimal-transport metaclustering and template-guided gating of cytometry data."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    ArgumentError,
    ConfigurationError,
    ConvergenceError,
    DegenerateDistanceWarning,
    EmptySummaryError,
    EmptyTemplateError,
    GenerationError,
    OTGateError,
    PairwiseDistanceError,
    ParseError,
    SchemaError,
)
from .evaluation import (
    MetricReport,
    cluster_prf,
    f_measure,
    learning_distance,
    median_f_measure,
    metric_report,
    padded_median,
)
from .gating import (
    FuzzyRelabelling,
    QDAClassifier,
    TclustParams,
    TclustResult,
    assign_to_template,
    best_template_init,
    fuzzy_relabel,
    hungarian_relabel,
    optimal_flow_classification,
    qda_fit,
    qda_predict,
    tclust,
)
from .partition import (
    DistanceMatrix,
    cost_matrix,
    d_nt,
    d_ot,
    empirical_cluster_distance,
    mean_kl_partition_distance,
    pairwise_distance_matrix,
    similarity_distance,
    symmetric_kl,
)
from .summary import ClusterModel, CytometrySummary, LabeledEvents, summarize_cytometry
from .synthetic import SyntheticSpec, generate_synthetic
from .templates import (
    BarycenterOptions,
    Dendrogram,
    MetaPartition,
    Template,
    cut_tree,
    density_cluster,
    gaussian_barycenter,
    hierarchical_cluster,
    k_barycenter,
    optimal_flow_templates,
    template_density,
    template_kbarycenter,
    template_pooling,
)
from .transport import (
    TransportPlan,
    gaussian_w2,
    gaussian_w2_squared,
    sinkhorn,
    solve_discrete_ot,
    spd_sqrt,
)
