//! Time integration of `u_t = Δu + a·u·(log u)^b + q·A(u)` and the derived fields of
//! `f = log u`.

mod fields;
mod manufactured;
mod params;
mod solver;

pub use fields::{time_derivative, SpaceTimeField};
pub use manufactured::manufactured_residual;
pub use params::{b_functions, log_power, BFunctions, Nonlinearity, PdeParams, Potential};
pub use solver::{
    solve, solve_with_boundary, Boundary, Solution, Stepper, TimeSettings, DEFAULT_CFL_SAFETY,
};

pub(crate) use params::is_nonneg_integer;

use thiserror::Error;

use crate::geometry::operators::{grad_inner_into, laplacian_into};
use crate::geometry::{GeometryError, ManifoldGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("time step {dt:.4e} exceeds the explicit stability limit {limit:.4e}")]
    Cfl { dt: f64, limit: f64 },
    #[error(
        "positivity lost at step {step} (t = {time:.6}): u = {value:.6e} at node {node}, must exceed {floor}"
    )]
    Positivity {
        step: usize,
        time: f64,
        node: usize,
        value: f64,
        floor: f64,
    },
    #[error("non-finite value at step {step}, node {node}")]
    NonFinite { step: usize, node: usize },
    #[error("implicit diffusion solve did not converge (relative residual {residual:.3e})")]
    LinearSolve { residual: f64 },
    #[error("invalid time settings: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// `f = log u` and the fields built from it, on the stored steps of a run.
#[derive(Clone, Debug)]
pub struct LogFields {
    pub f: SpaceTimeField,
    pub f_t: SpaceTimeField,
    pub lap_f: SpaceTimeField,
    pub grad_sq: SpaceTimeField,
}

pub fn log_fields(u: &SpaceTimeField, grid: &ManifoldGrid) -> Result<LogFields, PdeError> {
    u.belongs_to(grid)?;
    for (step, s) in u.steps().iter().enumerate() {
        if let Some(node) = s.iter().position(|&v| !(v > 0.0)) {
            return Err(PdeError::Positivity {
                step,
                time: u.times()[step],
                node,
                value: s[node],
                floor: 0.0,
            });
        }
    }
    let f = u.map(f64::ln);
    let f_t = time_derivative(&f)?;
    let n = grid.len();
    let mut lap = Vec::with_capacity(f.num_steps());
    let mut grad = Vec::with_capacity(f.num_steps());
    for s in f.steps() {
        let mut l = vec![0.0; n];
        let mut g = vec![0.0; n];
        laplacian_into(grid, s, &mut l);
        grad_inner_into(grid, s, s, &mut g);
        lap.push(l);
        grad.push(g);
    }
    let times = f.times().to_vec();
    Ok(LogFields {
        lap_f: SpaceTimeField::from_parts(grid.id(), times.clone(), lap),
        grad_sq: SpaceTimeField::from_parts(grid.id(), times, grad),
        f,
        f_t,
    })
}
