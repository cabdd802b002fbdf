"""Graph-constrained Gaussian graphical models for region-wise abnormality
detection: an L1-penalized precision solver with structural zeros, subject
scoring and greedy region sorting, cross-validated model comparison, and
synthetic cohorts with planted ground truth.
"""

from .anomaly import (
    AbnormalityMap,
    ZScoreMap,
    abnormality_map,
    bonferroni_z_threshold,
    flag_abnormal,
    greedy_sort,
    mahalanobis,
    subset_distance,
    zscore_map,
)
from .core import (
    Dataset,
    EvalCurve,
    FitStats,
    FormatError,
    GaussianModel,
    GraphKind,
    Metric,
    PriorGraph,
    SolverConfig,
    SolverError,
    SortResult,
    ValidationError,
    check_precision,
    validate_dataset,
)
from .evaluation import (
    BenchmarkReport,
    CvReport,
    bic,
    default_rho_grid,
    loo_criterion,
    loocv,
    model_order,
    random_graph_benchmark,
    select_rho,
)
from .glasso import (
    SampleCovariance,
    fit_glasso,
    fit_model,
    objective,
    sample_covariance,
)
from .graphs import (
    LabelVolume,
    full_graph,
    lattice_graph,
    neighborhood_graph,
    node_only_graph,
    random_graph_like,
    read_label_volume,
    write_label_volume,
)
from .io import (
    deserialize_model,
    load_dataset,
    load_graph,
    load_model,
    read_dataset_csv,
    save_dataset,
    save_graph,
    save_model,
    serialize_model,
    write_dataset_csv,
)
from .rng import child_seeds, generator
from .stats import (
    RocResult,
    bonferroni_threshold,
    chi2_cdf,
    chi2_quantile,
    normal_cdf,
    normal_quantile,
    quantile_envelope,
    roc_auc,
    spearman,
    wilcoxon_ranksum,
)
from .synth import (
    PlantedModel,
    SynthCohort,
    inject_abnormality,
    make_default_cohort,
    make_planted_model,
    sample_cohort,
)

__version__ = "0.1.0"

__all__ = [
    "AbnormalityMap", "BenchmarkReport", "CvReport", "Dataset", "EvalCurve",
    "FitStats", "FormatError", "GaussianModel", "GraphKind", "LabelVolume",
    "Metric", "PlantedModel", "PriorGraph", "RocResult", "SampleCovariance",
    "SolverConfig", "SolverError", "SortResult", "SynthCohort",
    "ValidationError", "ZScoreMap", "abnormality_map", "bic",
    "bonferroni_threshold", "bonferroni_z_threshold", "check_precision",
    "chi2_cdf", "chi2_quantile", "child_seeds", "default_rho_grid",
    "deserialize_model", "fit_glasso", "fit_model", "flag_abnormal",
    "full_graph", "generator", "greedy_sort", "inject_abnormality",
    "lattice_graph", "load_dataset", "load_graph", "load_model",
    "loo_criterion", "loocv", "mahalanobis", "make_default_cohort",
    "make_planted_model", "model_order", "neighborhood_graph",
    "node_only_graph", "normal_cdf", "normal_quantile", "objective",
    "quantile_envelope", "random_graph_benchmark", "random_graph_like",
    "read_dataset_csv", "read_label_volume", "roc_auc", "sample_cohort",
    "sample_covariance", "save_dataset", "save_graph", "save_model",
    "select_rho", "serialize_model", "spearman", "subset_distance",
    "validate_dataset", "wilcoxon_ranksum", "write_dataset_csv",
    "write_label_volume", "zscore_map",
]
