use thiserror::Error;

use crate::auxiliary::AuxError;
use crate::estimates::EstimateError;
use crate::geometry::GeometryError;
use crate::harnack::HarnackError;
use crate::pde::PdeError;
use crate::schemes::SchemeError;

/// Any failure that stops an experiment. Check verdicts are not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("pde: {0}")]
    Pde(#[from] PdeError),
    #[error("auxiliary: {0}")]
    Aux(#[from] AuxError),
    #[error("schemes: {0}")]
    Scheme(#[from] SchemeError),
    #[error("estimates: {0}")]
    Estimate(#[from] EstimateError),
    #[error("harnack: {0}")]
    Harnack(#[from] HarnackError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
