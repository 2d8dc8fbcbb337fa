use crate::geometry::{GridId, ManifoldGrid, ScalarField};
use crate::geometry::GeometryError;

use super::PdeError;

/// Scalar values on every node at a sequence of uniformly spaced stored times.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: GridId,
    times: Vec<f64>,
    steps: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(
        grid: &ManifoldGrid,
        times: Vec<f64>,
        steps: Vec<Vec<f64>>,
    ) -> Result<Self, PdeError> {
        if times.len() != steps.len() || times.is_empty() {
            return Err(PdeError::Shape(format!(
                "{} times for {} steps",
                times.len(),
                steps.len()
            )));
        }
        for (i, s) in steps.iter().enumerate() {
            if s.len() != grid.len() {
                return Err(PdeError::Geometry(GeometryError::LengthMismatch {
                    found: s.len(),
                    expected: grid.len(),
                }));
            }
            if let Some(node) = s.iter().position(|v| !v.is_finite()) {
                return Err(PdeError::NonFinite { step: i, node });
            }
        }
        Ok(SpaceTimeField {
            grid: grid.id(),
            times,
            steps,
        })
    }

    pub(crate) fn from_parts(grid: GridId, times: Vec<f64>, steps: Vec<Vec<f64>>) -> Self {
        SpaceTimeField { grid, times, steps }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, i: usize) -> &[f64] {
        &self.steps[i]
    }

    pub fn steps(&self) -> &[Vec<f64>] {
        &self.steps
    }

    pub fn at(&self, step: usize, node: usize) -> f64 {
        self.steps[step][node]
    }

    /// Spacing between stored times (0 for a single stored step).
    pub fn stored_dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    /// Time since the first stored step.
    pub fn elapsed(&self, step: usize) -> f64 {
        self.times[step] - self.times[0]
    }

    pub fn horizon(&self) -> f64 {
        self.elapsed(self.times.len() - 1)
    }

    pub fn snapshot(&self, step: usize) -> ScalarField {
        ScalarField::new_unchecked(self.grid, self.steps[step].clone())
    }

    pub fn min(&self) -> f64 {
        self.steps.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.steps.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn belongs_to(&self, grid: &ManifoldGrid) -> Result<(), GeometryError> {
        if self.grid != grid.id() {
            return Err(GeometryError::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            times: self.times.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| s.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }
}

/// Time derivative of stored steps: centered inside, second-order one-sided at both ends.
///
/// The one-sided stencils are written in differences so that constants give exactly 0.
pub fn time_derivative(field: &SpaceTimeField) -> Result<SpaceTimeField, PdeError> {
    let m = field.num_steps();
    if m < 3 {
        return Err(PdeError::Shape(format!(
            "time derivative needs at least 3 stored steps, found {m}"
        )));
    }
    let dt = field.stored_dt();
    let s = field.steps();
    let nodes = s[0].len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let row: Vec<f64> = (0..nodes)
            .map(|k| {
                if i == 0 {
                    (4.0 * (s[1][k] - s[0][k]) - (s[2][k] - s[0][k])) / (2.0 * dt)
                } else if i == m - 1 {
                    (4.0 * (s[m - 1][k] - s[m - 2][k]) - (s[m - 1][k] - s[m - 3][k])) / (2.0 * dt)
                } else {
                    (s[i + 1][k] - s[i - 1][k]) / (2.0 * dt)
                }
            })
            .collect();
        out.push(row);
    }
    Ok(SpaceTimeField::from_parts(
        field.grid,
        field.times.clone(),
        out,
    ))
}
