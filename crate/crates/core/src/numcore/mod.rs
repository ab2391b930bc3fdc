//! Shared numerical substrate: seeded random streams, dense linear-algebra
//! helpers, special functions and the two-sample tests behind the tables.

mod linalg;
mod rng;
mod special;
mod stats;

pub use linalg::{chol_factor, gram, is_symmetric, min_eigenvalue, SpdMatrix};
pub use rng::RngStream;
pub use special::{
    beta_sf, chi2_cdf, chi2_quantile, chi2_sf, f_sf, ln_gamma, log_binom,
};
pub use stats::{mean, sample_sd, welch_t_test, WelchTest};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}
