//! Estimation performance of energy-constrained Gaussian receivers for
//! distributed phase sensing with displaced thermal probes.
//!
//! The crate models N-mode Gaussian probe states in phase space, imprints
//! phase shifts, and evaluates the classical Fisher information of any
//! Gaussian measurement of a given seed energy E (E = 0 is heterodyne, the
//! large-E limit is homodyne). On top of the analytics it provides
//! constrained maximization of the information over measurement seeds,
//! closed forms for the isothermal symmetric case, entanglement-gain and
//! robustness figures of merit, and a Monte-Carlo harness that checks the
//! Cramer-Rao bound is actually attained by maximum-likelihood estimation
//! on sampled outcomes.

pub mod ecgm;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod optimizer;
pub mod probes;
pub mod symplectic;

pub use ecgm::{
    log_outcome_density, outcome_density, sample_outcomes, Ecgm, MeasurementParams,
};
pub use error::{Error, Result};
pub use estimator::{crb_experiment, log_likelihood, mle_estimate, McReport};
pub use fisher::{
    entanglement_entropy_of_optimal_seed, entanglement_gain, fir, fisher_matrix,
    gfi_closed_form, heterodyne_fi, linear_function_fi, qfi_phase_difference, EgMode,
    FisherReport,
};
pub use optimizer::{
    noniso_sweep, objective_two_mode, optimize_separable, optimize_two_mode,
    OptimizationResult, SeedParams,
};
pub use probes::{
    apply_channel, imprint_phases, phase_derivative_of_mean, probe_state, ChannelSpec,
    GaussianState, ProbeSpec,
};
pub use symplectic::{
    beamsplitter, is_symplectic, is_valid_covariance, phase_rotation, squeezer_covariance,
    symplectic_form, two_mode_pure_covariance, CovarianceMatrix, PhaseSpaceVector,
    SymplecticMatrix,
};
