"""Statistical power engine for panel-data treatment-effect designs.

Closed-form variances, minimum detectable effects, and required cluster
counts for difference-in-differences and (comparative) interrupted time
series estimators under staggered treatment timing, AR(1) or constant
autocorrelated errors, clustering, uneven measurement intervals, and
covariate adjustment — validated against a seeded Monte Carlo oracle.
"""

__version__ = "0.1.0"

from .design import (
    CorrStructure,
    Covariates,
    DesignKind,
    DesignSpec,
    ErrorModel,
    Estimand,
    EstimandKind,
    EstimatorSpec,
    Family,
    TimeGeometry,
    ValidatedDesign,
    time_geometry,
    validate_design,
)
from .errors import PanelPowerError
from .mc import OracleReport, SimConfig, estimate_cits, estimate_did, oracle_compare, simulate_panel
from .power import (
    PowerQuery,
    PowerResult,
    degrees_of_freedom,
    design_effect,
    factor,
    mde,
    required_clusters,
)
from .tdist import inverse_student_t, normal_quantile, student_t_cdf
from .variance import (
    VarianceBreakdown,
    apply_covariates,
    compute_variance,
    var_cits_common_slopes,
    var_cits_full,
    var_did,
)

__all__ = [
    "__version__",
    "CorrStructure",
    "Covariates",
    "DesignKind",
    "DesignSpec",
    "ErrorModel",
    "Estimand",
    "EstimandKind",
    "EstimatorSpec",
    "Family",
    "TimeGeometry",
    "ValidatedDesign",
    "time_geometry",
    "validate_design",
    "PanelPowerError",
    "OracleReport",
    "SimConfig",
    "estimate_cits",
    "estimate_did",
    "oracle_compare",
    "simulate_panel",
    "PowerQuery",
    "PowerResult",
    "degrees_of_freedom",
    "design_effect",
    "factor",
    "mde",
    "required_clusters",
    "inverse_student_t",
    "normal_quantile",
    "student_t_cdf",
    "VarianceBreakdown",
    "apply_covariates",
    "compute_variance",
    "var_cits_common_slopes",
    "var_cits_full",
    "var_did",
]
