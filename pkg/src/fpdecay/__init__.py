"""Entropy decay analysis for degenerate linear Fokker-Planck systems.

Validates the structural conditions of a diffusion/drift pair, propagates
Gaussian mixtures and Hermite coefficient states through the exact flow,
measures relative entropies and Fisher information, fits sharp decay
envelopes of the form c (1 + t^(2n)) e^(-2 mu t), and evaluates explicit
hypercontractivity waiting times.
"""

from .entropy import (
    AdmissibilityReport,
    EntropyGenerator,
    check_admissible,
    dissipation_check,
    dominance_constants,
    e2_mixture,
    ep_is_finite_mixture,
    ep_quadrature,
    fisher_info,
    power_generator,
    psi_eval,
    psi_vs_e2_bound,
)
from .exceptions import (
    ConditionError,
    ConfigError,
    DimensionError,
    DomainError,
    EnvelopeViolationError,
    FpdecayError,
    InsufficientDataError,
    QuadratureError,
    SingularSystemError,
    StabilityError,
)
from .hyper import (
    HyperParams,
    HyperReport,
    entropic_hyper_rhs,
    fitted_params,
    hyper_rhs,
    verify_hypercontractivity,
    waiting_time_T0,
    waiting_time_t0,
    waiting_time_t0bar,
    waiting_time_t1,
    weighted_mass,
)
from .linalg import (
    EigenStructure,
    eigen_structure,
    kalman_kappa,
    kron_sum_solve,
    matrix_exp,
    mu_and_defect,
    psd_check,
    solve_lyapunov,
    sqrtm_psd,
)
from .propagation import (
    EnvelopeFit,
    GaussianMixture,
    SdeMoments,
    decay_envelope,
    equilibrium_mixture,
    evolve_mixture,
    fit_drift_decay,
    fit_w_convergence,
    gram_w,
    sde_oracle,
)
from .quadrature import QuadratureSpec
from .scenarios import DecayReport, FitResult, ScenarioConfig, fit_decay, run_scenario
from .spectral import (
    HermiteState,
    SubspaceRep,
    evolve_hermite,
    gamma_kappa_contains,
    multi_indices,
    project_gaussian,
    spectrum_deviation,
    subspace_decay_exponent,
    vm_matrix,
    vm_spectrum_reference,
)
from .system import (
    Equilibrium,
    FPSystem,
    NormalizedSystem,
    ValidationReport,
    adjoint_system,
    equilibrium,
    make_normalized,
    make_system,
    normalize,
    validate,
)

__version__ = "0.1.0"
