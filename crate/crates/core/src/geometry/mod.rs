//! Discrete model manifolds and the Riemannian calculus used on them.
//!
//! Grids are structured coordinate patches with diagonal metrics. The operators are
//! second-order divergence-form finite differences with exact metric weights.

mod curvature;
mod cutoff;
mod distance;
mod grid;
pub(crate) mod operators;

pub use curvature::{
    integral_curvature, integral_curvature_sup, ricci_minus, CurvatureValue, MIN_BALL_NODES,
};
pub use cutoff::{cutoff, cutoff_profile, Cutoff};
pub use distance::geodesic_distance;
pub use grid::{build_manifold, Axis, GridId, ManifoldGrid, ManifoldKind, ManifoldSpec, Warp};
pub use operators::{grad_inner, grad_norm_sq, laplace_beltrami};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unsupported dimension {0}; only n = 1 and n = 2 are implemented")]
    UnsupportedDimension(usize),
    #[error("axis has {found} nodes, at least {min} required")]
    TooFewNodes { found: usize, min: usize },
    #[error("warp function is non-positive ({value}) at r = {r}")]
    NonPositiveWarp { r: f64, value: f64 },
    #[error("metric is degenerate at node {node}")]
    DegenerateMetric { node: usize },
    #[error("invalid manifold description: {0}")]
    InvalidSpec(String),
    #[error("field does not belong to this grid")]
    GridMismatch,
    #[error("field has {found} values, grid has {expected} nodes")]
    LengthMismatch { found: usize, expected: usize },
    #[error("field value at node {node} is not finite")]
    NonFinite { node: usize },
    #[error("curvature exponent p = {p} must exceed n/2 = {half_n}")]
    ExponentTooSmall { p: f64, half_n: f64 },
    #[error("radius {0} must lie in (0, 1]")]
    InvalidRadius(f64),
    #[error("node {0} is out of range")]
    NodeOutOfRange(usize),
    #[error("ball of radius {radius} around node {origin} reaches the domain boundary")]
    BallExitsDomain { origin: usize, radius: f64 },
}

/// Values on the nodes of one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridId,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps values for `grid`, checking length and finiteness.
    pub fn new(grid: &ManifoldGrid, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != grid.len() {
            return Err(GeometryError::LengthMismatch {
                found: values.len(),
                expected: grid.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { node });
        }
        Ok(ScalarField {
            grid: grid.id(),
            values,
        })
    }

    pub(crate) fn new_unchecked(grid: GridId, values: Vec<f64>) -> Self {
        ScalarField { grid, values }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn belongs_to(&self, grid: &ManifoldGrid) -> Result<(), GeometryError> {
        if self.grid != grid.id() {
            return Err(GeometryError::GridMismatch);
        }
        if self.values.len() != grid.len() {
            return Err(GeometryError::LengthMismatch {
                found: self.values.len(),
                expected: grid.len(),
            });
        }
        Ok(())
    }
}
