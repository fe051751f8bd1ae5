"""Transport randomized-trial treatment effects to a target population."""

from .data import (
    AteEstimate,
    Arm,
    Method,
    Sample,
    StudyDataset,
    SubjectRecord,
    parse_csv,
    read_csv,
    serialize_csv,
    validate,
    write_csv,
)
from .diagnostics import (
    DiagnosticsReport,
    check_positivity,
    check_support,
    covariate_shift_smd,
    diagnose,
    weight_health,
)
from .estimators import (
    EligibilityModel,
    IpswDetail,
    PropensityPolicy,
    estimate_all,
    estimate_gformula,
    estimate_interaction_ols,
    estimate_ipsw,
    estimate_naive,
    fit_eligibility,
)
from .harness import ReplicationSummary, run_replications
from .numerics import RandomSource
from .simulation import SimulationConfig, calibrate_effect_scale, generate_dataset, true_cate

__version__ = "0.1.0"

__all__ = [
    "AteEstimate",
    "Arm",
    "Method",
    "Sample",
    "StudyDataset",
    "SubjectRecord",
    "parse_csv",
    "read_csv",
    "serialize_csv",
    "validate",
    "write_csv",
    "DiagnosticsReport",
    "check_positivity",
    "check_support",
    "covariate_shift_smd",
    "diagnose",
    "weight_health",
    "EligibilityModel",
    "IpswDetail",
    "PropensityPolicy",
    "estimate_all",
    "estimate_gformula",
    "estimate_interaction_ols",
    "estimate_ipsw",
    "estimate_naive",
    "fit_eligibility",
    "ReplicationSummary",
    "run_replications",
    "RandomSource",
    "SimulationConfig",
    "calibrate_effect_scale",
    "generate_dataset",
    "true_cate",
]
