//! Oracles and experiment harnesses used to verify the samplers.

mod contraction;
mod coupled;
mod moments;
mod quadrature;
mod stationary;
mod wasserstein;

pub use contraction::{contraction_check, contraction_worst_case, ContractionResult};
pub use coupled::{
    coupled_error_experiment, fit_loglog_slope, reference_on_path, run_on_path, CoupledConfig,
    CoupledReport, CoupledRow,
};
pub use moments::{
    exact_uld_moments, increment_covariance, ou_propagator, rmm_moment_oracle, MomentTrace,
};
pub use quadrature::{composite_gauss_legendre, gauss_legendre};
pub use stationary::{empirical_moments, stationary_error_study};
pub use wasserstein::{effective_diameter, gaussian_w2, W2Result};
