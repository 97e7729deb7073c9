"""bresim: Monte Carlo toolkit for distribution-aware relative efficiency.

The package simulates planned-missingness studies on a bivariate latent
growth model and scores estimator quality two ways: the traditional
variance-ratio relative efficiency (RE) and Bhirkuti's Relative Efficiency
(BRE), which combines interquartile-range overlap with median relative
bias so that outlier-inflated reference variances cannot masquerade as
efficiency gains.

Typical library use::

    from bresim import compute_report
    report = compute_report(reference, comparison, theta_true=0.3)

Full pipelines run through the ``bresim`` command line (``simulate``,
``metrics``, ``report``) or through :func:`bresim.harness.run_condition`.
"""

from .config import RunConfig, build_condition_specs, load_config, parse_config_text
from .design import (
    MissingDesign,
    apply_design,
    assign_groups,
    complete_design,
    swmd6,
)
from .errors import (
    BresimError,
    ConditionDegenerate,
    ConfigError,
    DegenerateDistribution,
    EmptySample,
    InadmissibleForParam,
    InsufficientSample,
    InvalidEstimate,
    InvalidGroup,
    NonConverged,
    NotPositiveDefinite,
    RowWithoutData,
    ZeroTrueParameter,
)
from .fiml import (
    FitResult,
    ModelSpec,
    available_params,
    data_driven_start,
    extract_param,
    fit,
    pattern_loglik,
    population_theta,
    population_value,
)
from .harness import (
    ConditionResult,
    ConditionSpec,
    RepRecord,
    run_condition,
    run_grid_conditions,
    run_replication,
)
from .lgm import (
    DataMatrix,
    ModelMoments,
    PopulationParams,
    build_moments,
    default_population,
    generate_dataset,
)
from .metrics import (
    EstimateSample,
    MetricReport,
    OverlapCase,
    OverlapMode,
    Quartiles,
    bre,
    compute_report,
    iqr_overlap,
    median_relative_bias,
    quartiles,
    traditional_re,
)
from .output import emit_outputs, read_estimates_csv, read_metrics_csv

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # metrics
    "Quartiles",
    "EstimateSample",
    "MetricReport",
    "OverlapCase",
    "OverlapMode",
    "quartiles",
    "iqr_overlap",
    "median_relative_bias",
    "traditional_re",
    "bre",
    "compute_report",
    # model and data
    "PopulationParams",
    "ModelMoments",
    "DataMatrix",
    "default_population",
    "build_moments",
    "generate_dataset",
    # missingness designs
    "MissingDesign",
    "swmd6",
    "complete_design",
    "assign_groups",
    "apply_design",
    # estimation
    "ModelSpec",
    "FitResult",
    "fit",
    "pattern_loglik",
    "data_driven_start",
    "extract_param",
    "available_params",
    "population_theta",
    "population_value",
    # harness
    "ConditionSpec",
    "ConditionResult",
    "RepRecord",
    "run_replication",
    "run_condition",
    "run_grid_conditions",
    # configuration and output
    "RunConfig",
    "parse_config_text",
    "load_config",
    "build_condition_specs",
    "emit_outputs",
    "read_estimates_csv",
    "read_metrics_csv",
    # errors
    "BresimError",
    "EmptySample",
    "InvalidEstimate",
    "DegenerateDistribution",
    "InsufficientSample",
    "ZeroTrueParameter",
    "NotPositiveDefinite",
    "RowWithoutData",
    "InvalidGroup",
    "NonConverged",
    "InadmissibleForParam",
    "ConditionDegenerate",
    "ConfigError",
]
