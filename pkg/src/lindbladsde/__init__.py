"""Finite-dimensional open-quantum-system simulation toolkit.

Deterministic master-equation dynamics, their stochastic unraveling with
correlated Wiener increments, a first-order operator-valued differential
algebra that checks the two agree, and completely positive one-step
channels with Choi certificates.
"""

from .channels import KrausChannel, apply_kraus, build_infinitesimal_kraus, choi_of, is_trace_preserving
from .ito import (
    DerivationResult,
    ItoContext,
    ItoPolynomial,
    derive_stochastic_evolution,
    ito_expectation,
    ito_mul,
)
from .lindblad import (
    LindbladModel,
    NumericalError,
    OdeTrajectory,
    ValidationReport,
    drift_operator,
    integrate_ode,
    lindblad_rhs,
    validate_model,
)
from .operators import (
    adjoint,
    commutator,
    eig_hermitian,
    hermitian_part,
    psd_factor,
)
from .presets import PRESET_NAMES, preset_model
from .unraveling import (
    EnsembleDiagnostics,
    EnsembleStats,
    NoiseBasis,
    Trajectory,
    diagonalize_covariance,
    run_ensemble,
    run_trajectory,
    sample_increments,
    sde_step,
    stochastic_unitary_step,
    trajectory_rng,
)

__version__ = "0.1.0"
