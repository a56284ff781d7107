"""Weighting-function point estimators and least-search-cost credible regions
for time-of-arrival source localization."""

from .errors import (
    ConfigError,
    DegenerateFieldError,
    DegeneratePosteriorError,
    DegenerateWeightError,
    GridMismatchError,
    InvalidCostError,
    InvalidLevelError,
    InvalidNoiseError,
    RegionEstError,
    RoleError,
)
from .estimators import MAP, MLE, EstimatorKind, WeightedConditionalMean, estimate, estimate_batch
from .evaluation import (
    EvalTable,
    Scenario,
    average_error,
    average_error_table,
    dominance_diagnostic,
    region_growth_experiment,
    rmse_curve,
    weighted_coverage_check,
)
from .grid import GridSpec, ScalarField, argmax, integrate, mean, normalize, posterior
from .regions import (
    CredibleRegion,
    RegionFamily,
    connected_components,
    contour_masks,
    credible_region,
    density_ratio,
    nu_volume,
    region_family,
)
from .toa import NoiseModel, Observation, Point2, TowerArray, log_likelihood, predict_ranges, sample_observation
from .weighting import (
    GaussianMixture,
    PathProximity,
    RiskInverseDistance,
    RiskRegions,
    Uniform,
    UniformCost,
    build_cost_field,
    build_weight_field,
    eval_weight,
)

__version__ = "0.1.0"
