"""Exact group-fairness analysis and KL-minimal steering for Gaussian mixtures.

The package answers three questions about a class- and group-conditioned
Gaussian data distribution:

1. Is it ideal, meaning every cost-sensitive Bayes classifier on it is
   exactly group-fair? (``check_ideal_univariate``,
   ``check_ideal_multivariate``)
2. If not, what is the KL-nearest ideal distribution under a given
   intervention family? (``affirmative_univariate``,
   ``all_subgroups_univariate``, ``mean_matching``,
   ``affirmative_multivariate``, ``ef_affirmative_targets``)
3. What do Bayes classifiers cost in error and fairness, exactly?
   (``decision_regions``, ``fairness_report``, ``pinsker_bounds``)
"""

from .classify import (
    CostMatrix,
    DecisionRegions,
    FairnessReport,
    cost_threshold,
    decision_regions,
    fairness_report,
    fairness_report_mc,
    positive_rate,
    tpr_gap_multiclass,
)
from .distributions import (
    DivergenceReport,
    FairDistribution,
    JointWeights,
    MultivariateSubgroupGaussian,
    SubgroupGaussian,
    fit_from_samples,
    gaussian_cdf,
    js_divergence,
    kl_divergence,
)
from .errors import (
    DegenerateCost,
    DegenerateStd,
    DimensionMismatch,
    EmptyCell,
    FairsteerError,
    InputValidationError,
    KeyMismatch,
    LengthMismatch,
    MissingCell,
    NegativeKL,
    NoConvergence,
    NonPositiveFeature,
    ParseError,
    QuadratureFailure,
    SearchDiverged,
    SingularCovariance,
    UnknownGroup,
    WeightRatioViolation,
    WeightsMismatch,
)
from .ideality import (
    IdealityVerdict,
    PinskerBounds,
    check_ideal_multivariate,
    check_ideal_univariate,
    pinsker_bounds,
    reweigh_kamiran,
)
from .multiclass import (
    AffineMap,
    ClassGroupMoments,
    PipelineReport,
    PlugInClassifier,
    apply_affine,
    ef_affirmative_targets,
    evaluate_pipeline,
    fit_affine,
    pick_anchor_class,
    run_pipeline,
)
from .steer_multivariate import (
    GammaMatrix,
    InnerSolution,
    affirmative_multivariate,
    inner_solution,
    lift_univariate,
)
from .scenarios import (
    SIMULATION_METHODS,
    SimulationScenario,
    builtin_scenarios,
    load_scenario,
    synthetic_biased_corpus,
)
from .specfile import (
    dist_from_dict,
    dist_to_dict,
    load_spec,
    read_labels_csv,
    read_matrix,
    read_samples_csv,
    save_spec,
    write_labels_csv,
    write_matrix,
    write_samples_csv,
)
from .steer_univariate import (
    DIAGNOSTICS_HEADER,
    InterventionResult,
    affirmative_objective,
    affirmative_steered_at,
    affirmative_univariate,
    all_subgroups_objective,
    all_subgroups_steered_at,
    all_subgroups_univariate,
    check_weight_ratio,
    mean_matching,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # distributions
    "SubgroupGaussian",
    "MultivariateSubgroupGaussian",
    "JointWeights",
    "FairDistribution",
    "DivergenceReport",
    "gaussian_cdf",
    "kl_divergence",
    "js_divergence",
    "fit_from_samples",
    # classification and reporting
    "CostMatrix",
    "DecisionRegions",
    "FairnessReport",
    "cost_threshold",
    "decision_regions",
    "positive_rate",
    "fairness_report",
    "fairness_report_mc",
    "tpr_gap_multiclass",
    # ideality
    "IdealityVerdict",
    "PinskerBounds",
    "check_ideal_univariate",
    "check_ideal_multivariate",
    "reweigh_kamiran",
    "pinsker_bounds",
    # univariate steering
    "InterventionResult",
    "DIAGNOSTICS_HEADER",
    "check_weight_ratio",
    "affirmative_univariate",
    "affirmative_steered_at",
    "affirmative_objective",
    "all_subgroups_univariate",
    "all_subgroups_steered_at",
    "all_subgroups_objective",
    "mean_matching",
    # multivariate steering
    "GammaMatrix",
    "InnerSolution",
    "lift_univariate",
    "inner_solution",
    "affirmative_multivariate",
    # multiclass pipeline
    "ClassGroupMoments",
    "AffineMap",
    "PlugInClassifier",
    "PipelineReport",
    "pick_anchor_class",
    "ef_affirmative_targets",
    "fit_affine",
    "apply_affine",
    "run_pipeline",
    "evaluate_pipeline",
    # scenarios and file formats
    "SIMULATION_METHODS",
    "SimulationScenario",
    "builtin_scenarios",
    "load_scenario",
    "synthetic_biased_corpus",
    "dist_to_dict",
    "dist_from_dict",
    "save_spec",
    "load_spec",
    "read_samples_csv",
    "write_samples_csv",
    "read_matrix",
    "write_matrix",
    "read_labels_csv",
    "write_labels_csv",
    # errors
    "FairsteerError",
    "InputValidationError",
    "DegenerateStd",
    "DegenerateCost",
    "SingularCovariance",
    "DimensionMismatch",
    "LengthMismatch",
    "EmptyCell",
    "MissingCell",
    "NonPositiveFeature",
    "NegativeKL",
    "WeightsMismatch",
    "KeyMismatch",
    "UnknownGroup",
    "QuadratureFailure",
    "WeightRatioViolation",
    "SearchDiverged",
    "NoConvergence",
    "ParseError",
]
