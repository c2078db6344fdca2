"""Spectral simulator and verification harness for linear evolution
equations dX + AX dt = F dt + G dW with a positive self-adjoint diagonal
operator, weighted-Hölder forcing data, and exact per-mode noise sampling.
"""

from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .deterministic import (
    ForcingSpec,
    GateCheck,
    phi_kernels,
    solve_mild_deterministic,
    validate_H3,
    verify_deterministic,
)
from .holder import (
    HolderMember,
    HolderReport,
    Trajectory,
    embedding_factor,
    make_member,
    pointwise_bounds_check,
    sample_member,
    weighted_holder_norm,
)
from .mesh import GradedMesh, uniform_mesh
from .report import (
    CheckRecord,
    RefinementRow,
    Series,
    VerificationReport,
    emit_report,
    report_from_json,
)
from .spectral import (
    CosineBasis,
    SpectralOperator,
    SpectralVector,
    analyze,
    build_cable_operator,
    fractional_power_apply,
    operator_norm_semigroup,
    resolvent_apply,
    sample_grid,
    sector_bound,
    semigroup_apply,
    semigroup_constants,
    smoothing_envelope,
    synthesize,
)
from .stochastic import (
    HolderEstimate,
    MCEstimate,
    MCNorms,
    NoiseSpec,
    PathSample,
    empirical_bound_constant,
    estimate_holder_exponent,
    ito_isometry_oracle,
    make_noise,
    mc_expected_norms,
    sample_paths,
    sample_stochastic_convolution,
    validate_H4,
    verify_combined,
    verify_stochastic,
    weak_residual,
)

__version__ = "0.1.0"

__all__ = [
    "CheckRecord",
    "ConfigError",
    "CosineBasis",
    "ForcingSpec",
    "GateCheck",
    "GradedMesh",
    "HolderEstimate",
    "HolderMember",
    "HolderReport",
    "MCEstimate",
    "MCNorms",
    "NoiseSpec",
    "PathSample",
    "RefinementRow",
    "ScenarioConfig",
    "Series",
    "SpectralOperator",
    "SpectralVector",
    "Trajectory",
    "VerificationReport",
    "analyze",
    "build_cable_operator",
    "embedding_factor",
    "emit_report",
    "empirical_bound_constant",
    "estimate_holder_exponent",
    "fractional_power_apply",
    "ito_isometry_oracle",
    "load_config",
    "make_member",
    "make_noise",
    "mc_expected_norms",
    "operator_norm_semigroup",
    "parse_config",
    "phi_kernels",
    "pointwise_bounds_check",
    "report_from_json",
    "resolvent_apply",
    "sample_grid",
    "sample_member",
    "sample_paths",
    "sample_stochastic_convolution",
    "sector_bound",
    "semigroup_apply",
    "semigroup_constants",
    "smoothing_envelope",
    "solve_mild_deterministic",
    "synthesize",
    "uniform_mesh",
    "validate_H3",
    "validate_H4",
    "verify_combined",
    "verify_deterministic",
    "verify_stochastic",
    "weak_residual",
    "weighted_holder_norm",
]
