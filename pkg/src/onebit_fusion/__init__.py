"""Multi-stage distributed binary detection with a one-bit-memory fusion center.

A fleet of independent binary sensors reports to a fusion center that
must declare, at every stage, whether an event is present, while keeping
its false-alarm probability under a prescribed ceiling.  The fusion
center remembers exactly one bit: its previous decision.  Two fusion
rules are provided, a per-stage-optimal solve over the sensors plus the
memory bit (exponential per-stage cost) and a stationary two-threshold
rule (linear per-stage cost) that reaches the same limiting detection
probability at the same geometric rate, together with the single-stage
constrained-test machinery, a Gaussian sensor model, and a seeded Monte
Carlo harness.
"""

from .core import (
    Alpha,
    DetectionError,
    FusionTrajectory,
    Hypothesis,
    InfeasibleError,
    OperatingPoint,
    SensorProfile,
    ValidationError,
    as_alpha,
    normalize_sensor,
    odds_ratio,
    require_productive,
)
from .fast import (
    FastFusionParams,
    RateConstants,
    convergence_rate,
    design_fast,
    export_params,
    fast_asymptote,
    fast_decide,
    fast_false_alarm_closed_form,
    fast_trajectory,
    import_params,
    sweep_q00,
)
from .oracle import (
    OracleState,
    initial_memory,
    oracle_asymptote,
    oracle_decide,
    oracle_run,
    oracle_step,
    oracle_table,
)
from .sim import (
    GaussianSensorModel,
    MonteCarloReport,
    model_from_snr,
    model_profile,
    monte_carlo,
    simulate_run,
    snr_db,
    trial_stream,
)
from .solver import (
    ENUMERATION_LIMIT,
    LOG_LR_TIE_TOL,
    OutcomeAtom,
    OutcomeTable,
    RandomizedThreshold,
    RocCurve,
    enumerate_outcomes,
    merge_ties,
    operating_point,
    roc_curve,
    roc_extension_intersection,
    solve_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "Alpha",
    "DetectionError",
    "ENUMERATION_LIMIT",
    "FastFusionParams",
    "FusionTrajectory",
    "GaussianSensorModel",
    "Hypothesis",
    "InfeasibleError",
    "LOG_LR_TIE_TOL",
    "MonteCarloReport",
    "OperatingPoint",
    "OracleState",
    "OutcomeAtom",
    "OutcomeTable",
    "RandomizedThreshold",
    "RateConstants",
    "RocCurve",
    "SensorProfile",
    "ValidationError",
    "as_alpha",
    "convergence_rate",
    "design_fast",
    "enumerate_outcomes",
    "export_params",
    "fast_asymptote",
    "fast_decide",
    "fast_false_alarm_closed_form",
    "fast_trajectory",
    "import_params",
    "initial_memory",
    "merge_ties",
    "model_from_snr",
    "model_profile",
    "monte_carlo",
    "normalize_sensor",
    "odds_ratio",
    "operating_point",
    "oracle_asymptote",
    "oracle_decide",
    "oracle_run",
    "oracle_step",
    "oracle_table",
    "require_productive",
    "roc_curve",
    "roc_extension_intersection",
    "simulate_run",
    "snr_db",
    "solve_threshold",
    "sweep_q00",
    "trial_stream",
]
