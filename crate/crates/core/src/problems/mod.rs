//! Instance builders and synthetic data.

mod contextual;
pub mod newsvendor;
mod random;
mod synthetic;

pub use contextual::{
    build_resource_allocation, build_shipment, ResourceAllocationParams, ShipmentParams,
};
pub use newsvendor::{analytical_unreliable_optimum, critical_ratio, NewsvendorParams};
pub use random::{random_instance, RandomInstance, TechnologyMode};
pub use synthetic::{Observation, SyntheticGenerator};

use thiserror::Error;

use crate::two_stage::TwoStageError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] TwoStageError),
}
