//! Constants, the quantity `F`, the gradient-estimate bound and the pointwise checks.

mod bound;
mod check;
mod constants;
mod lemma;

pub use bound::{theorem_bound, BoundTerms};
pub(crate) use bound::{bracket, c_prime};
pub use check::{
    calibrate_c1, check_gradient_estimate, compute_f, discretization_tolerance, EstimateCheck,
    GradientCheck, JMode, StepDiagnostic, C1_MAX, C1_MIN,
};
pub use constants::{
    d_tilde, region_mask, sup_constants, AuditEntry, ConstantsBundle, Provenance,
};
pub use lemma::{lemma_evolution_check, LemmaForm, LemmaReport};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::pde::PdeError;
use crate::schemes::SchemeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("invalid constants: {0}")]
    Bundle(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no C₁ ≤ {c1_max} makes every run pass")]
    CalibrationFailed { c1_max: f64 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pde(#[from] PdeError),
}
