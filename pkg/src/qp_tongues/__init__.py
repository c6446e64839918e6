"""Instability zones of a quasi-periodically driven parametric oscillator."""

__version__ = "0.1.0"

from .analytic import (
    BoundaryBranch,
    Rational,
    cf_approximants,
    drive_period,
    mean_boundaries,
    mean_boundaries_array,
    mean_slowflow_matrix,
    quarter_resonance_curve,
    variance_eigen_mu0,
)
from .core import (
    EpsilonScaled,
    FixedRatio,
    MeanState,
    ModulationSpec,
    MomentsState,
    OscillatorConfig,
    SlowFlowMean,
    SlowFlowQuarter,
    SlowFlowVariance,
    VarianceState,
    forcing,
    second_frequency,
)
from .errors import (
    ConfigError,
    DegenerateSlowTime,
    EmptyTrajectory,
    InvalidDomain,
    InvalidParameter,
    NonFiniteState,
    PrecisionExhausted,
    QPTonguesError,
    SpecMismatch,
)
from .integrate import IntegrationPlan, Trajectory, fundamental_matrix, rk4_integrate
from .models import (
    ModelKind,
    QuarterParams,
    SlowFlowParams,
    make_system,
    rhs_mean,
    rhs_moments,
    rhs_slowflow_mean,
    rhs_slowflow_quarter,
    rhs_slowflow_variance,
    rhs_variance,
)
from .stability import (
    Axis,
    ClassifierPolicy,
    GridResult,
    GridSpec,
    Plane,
    StabilityVerdict,
    Verdict,
    classify,
    compare_zones,
    extract_boundary,
    point_verdict,
    sweep,
)
