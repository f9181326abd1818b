"""Template-guided gating of new cytometries."""

from .classification import (
    METHODS,
    ClassificationResult,
    assign_to_template,
    best_template_init,
    optimal_flow_classification,
)
from .qda import QDAClassifier, QDAModel, qda_fit, qda_predict
from .relabel import FuzzyRelabelling, Matching, fuzzy_relabel, hungarian_relabel, linear_assignment
from .tclust import TclustParams, TclustResult, restrict_eigenvalues, tclust

__all__ = [
    "ClassificationResult",
    "FuzzyRelabelling",
    "METHODS",
    "Matching",
    "QDAClassifier",
    "QDAModel",
    "TclustParams",
    "TclustResult",
    "assign_to_template",
    "best_template_init",
    "fuzzy_relabel",
    "hungarian_relabel",
    "linear_assignment",
    "optimal_flow_classification",
    "qda_fit",
    "qda_predict",
    "restrict_eigenvalues",
    "tclust",
]
