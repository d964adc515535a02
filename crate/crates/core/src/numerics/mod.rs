//! Derivative-free minimization and seeded random variates.

mod nelder_mead;
mod random;

pub use nelder_mead::{nelder_mead, NelderMeadConfig, NelderMeadResult};
pub use random::{covariance_factor, nearest_psd, sample, Distribution, RandomSource};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("objective is not finite at the start point")]
    NonFiniteObjective,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
