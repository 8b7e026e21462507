"""Concentration-inequality inference for covariance operators of functional data."""

from .classify import TrainedClassifier, classify, load_model, posterior, save_model, train
from .cluster import ClusterState, adjusted_rand_index, em_step, init_state, run_clustering
from .concentration import (
    ConfidenceSet,
    confidence_radius_covariance,
    confidence_radius_general,
    covariance_confidence_set,
)
from .csvio import ingest_curves, ingest_operator
from .experiments import ExperimentConfig, ResultRecord, run_experiment
from .fda_stats import (
    FunctionalSample,
    OperatorSample,
    RademacherDraw,
    empirical_covariance,
    rademacher_average,
    rademacher_norm_estimate,
    weak_variance_empirical,
    weak_variance_gaussian,
)
from .ktest import k_sample_test, permutation_test_two_sample, power_curve
from .operator_core import (
    CovOperator,
    Curve,
    Grid,
    interpolate,
    l2_norm,
    procrustes_distance,
    schatten_norm,
    tensor_square,
)
from .simulate import DecaySpec, random_covariance, sample_gaussian, sample_t_process

__all__ = [
    "TrainedClassifier",
    "classify",
    "load_model",
    "posterior",
    "save_model",
    "train",
    "ClusterState",
    "adjusted_rand_index",
    "em_step",
    "init_state",
    "run_clustering",
    "ConfidenceSet",
    "confidence_radius_covariance",
    "confidence_radius_general",
    "covariance_confidence_set",
    "ingest_curves",
    "ingest_operator",
    "ExperimentConfig",
    "ResultRecord",
    "run_experiment",
    "FunctionalSample",
    "OperatorSample",
    "RademacherDraw",
    "empirical_covariance",
    "rademacher_average",
    "rademacher_norm_estimate",
    "weak_variance_empirical",
    "weak_variance_gaussian",
    "k_sample_test",
    "permutation_test_two_sample",
    "power_curve",
    "CovOperator",
    "Curve",
    "Grid",
    "interpolate",
    "l2_norm",
    "procrustes_distance",
    "schatten_norm",
    "tensor_square",
    "DecaySpec",
    "random_covariance",
    "sample_gaussian",
    "sample_t_process",
]

__version__ = "0.1.0"
