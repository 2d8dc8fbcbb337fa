//! Numerical laboratory for space-time gradient estimates and Harnack inequalities of
//! positive solutions to
//!
//! ```text
//! u_t = Δu + a·u·(log u)^b + q(x,t)·A(u)
//! ```
//!
//! on discretized model Riemannian manifolds with integral Ricci curvature bounds.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: structured grids for model manifolds and their Riemannian operators.
//! * [`pde`]: time integration of the equation and the log-transformed fields.
//! * [`auxiliary`]: the damping function `J` and its explicit lower bound `J̄`.
//! * [`schemes`]: the four `(α, φ)` families and their structural conditions.
//! * [`estimates`]: constants, the gradient bound, and pointwise checks.
//! * [`harnack`]: path energy, Harnack factors and their verification.
//! * [`config`], [`experiment`], [`report`]: configuration-driven runs and report output.

pub mod auxiliary;
pub mod config;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod geometry;
pub mod harnack;
pub mod pde;
pub mod report;
pub mod schemes;

pub use error::{Error, Result};
