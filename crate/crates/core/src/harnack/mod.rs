//! Path energy, the four Harnack factors and their check on solved runs.

mod check;
mod energy;
mod rhs;

pub use check::{check_harnack, pair_lattice, HarnackCheck, HarnackReport, PairSampling, SpaceTimePair};
pub use energy::{path_energy, path_energy_dp};
pub use rhs::{harnack_rhs, HarnackFactor};

use thiserror::Error;

use crate::estimates::EstimateError;
use crate::geometry::GeometryError;
use crate::schemes::SchemeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnackError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
