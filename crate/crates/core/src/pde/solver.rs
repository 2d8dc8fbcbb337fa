use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::operators::laplacian_into;
use crate::geometry::{ManifoldGrid, ScalarField};

use super::{PdeError, PdeParams, SpaceTimeField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    /// Classical fourth-order Runge–Kutta on the full right-hand side.
    #[default]
    Rk4,
    /// Backward Euler diffusion with explicit reaction.
    Imex,
}

/// Time grid of a solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSettings {
    /// Requested step; shrunk slightly so that the duration is an exact multiple.
    pub dt: f64,
    /// Length of the run.
    pub duration: f64,
    /// Physical time of the initial data.
    pub t_start: f64,
    /// Keep every `store_every`-th step.
    pub store_every: usize,
    pub stepper: Stepper,
    pub cfl_safety: f64,
}

impl TimeSettings {
    pub fn new(dt: f64, duration: f64) -> Self {
        TimeSettings {
            dt,
            duration,
            t_start: 0.0,
            store_every: 1,
            stepper: Stepper::Rk4,
            cfl_safety: DEFAULT_CFL_SAFETY,
        }
    }

    pub fn store_every(mut self, stride: usize) -> Self {
        self.store_every = stride.max(1);
        self
    }

    pub fn starting_at(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    /// Number of steps and the step actually taken.
    pub fn resolved(&self) -> Result<(usize, f64), PdeError> {
        if !(self.dt > 0.0 && self.duration > 0.0) || !self.dt.is_finite() {
            return Err(PdeError::Config(format!(
                "dt = {} and duration = {} must be positive",
                self.dt, self.duration
            )));
        }
        let stride = self.store_every.max(1);
        let raw = (self.duration / self.dt - 1e-9).ceil().max(1.0) as usize;
        let steps = raw.div_ceil(stride) * stride;
        Ok((steps, self.duration / steps as f64))
    }

    /// Largest stable explicit step `σ·h²_min/(2n)`.
    pub fn cfl_limit(&self, grid: &ManifoldGrid) -> f64 {
        let h = grid.min_physical_spacing();
        self.cfl_safety * h * h / (2.0 * grid.dimension() as f64)
    }
}

pub const DEFAULT_CFL_SAFETY: f64 = 0.4;

/// Values on boundary nodes of non-periodic axes.
#[derive(Clone, Default)]
pub enum Boundary {
    /// Keep the initial values.
    #[default]
    Frozen,
    /// Impose `g(x, t)`.
    Prescribed(Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Frozen => f.write_str("Frozen"),
            Boundary::Prescribed(_) => f.write_str("Prescribed(..)"),
        }
    }
}

/// A solved run.
#[derive(Clone, Debug)]
pub struct Solution {
    pub u: SpaceTimeField,
    /// Smallest value over every step taken (stored or not).
    pub min: f64,
    pub max: f64,
    pub dt: f64,
    pub steps_taken: usize,
}

pub fn solve(
    grid: &ManifoldGrid,
    u0: &ScalarField,
    params: &PdeParams,
    time: &TimeSettings,
) -> Result<Solution, PdeError> {
    solve_with_boundary(grid, u0, params, time, &Boundary::Frozen)
}

pub fn solve_with_boundary(
    grid: &ManifoldGrid,
    u0: &ScalarField,
    params: &PdeParams,
    time: &TimeSettings,
    boundary: &Boundary,
) -> Result<Solution, PdeError> {
    u0.belongs_to(grid)?;
    let (n_steps, dt) = time.resolved()?;
    if time.stepper == Stepper::Rk4 {
        let limit = time.cfl_limit(grid);
        if dt > limit * (1.0 + 1e-12) {
            return Err(PdeError::Cfl { dt, limit });
        }
    }
    let floor = params.positivity_floor();
    if let Some((node, &v)) = u0.values().iter().enumerate().find(|(_, &v)| !(v > floor)) {
        return Err(PdeError::Positivity {
            step: 0,
            time: time.t_start,
            node,
            value: v,
            floor,
        });
    }

    let stepper = Integrator::new(grid, params, boundary);
    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    let mut u = u0.values().to_vec();
    let stride = time.store_every.max(1);
    let mut times = vec![time.t_start];
    let mut stored = vec![u.clone()];
    let mut lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    for step in 1..=n_steps {
        let t = time.t_start + (step - 1) as f64 * dt;
        match time.stepper {
            Stepper::Rk4 => stepper.rk4(&mut u, t, dt, &mut scratch),
            Stepper::Imex => stepper.imex(&mut u, t, dt)?,
        }
        let t_new = time.t_start + step as f64 * dt;
        for (node, &v) in u.iter().enumerate() {
            if !v.is_finite() {
                return Err(PdeError::NonFinite { step, node });
            }
            if !(v > floor) {
                return Err(PdeError::Positivity {
                    step,
                    time: t_new,
                    node,
                    value: v,
                    floor,
                });
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if step % stride == 0 {
            times.push(t_new);
            stored.push(u.clone());
        }
    }
    log::debug!("solved {n_steps} steps with dt = {dt:.3e}, u in [{lo:.6}, {hi:.6}]");
    Ok(Solution {
        u: SpaceTimeField::from_parts(grid.id(), times, stored),
        min: lo,
        max: hi,
        dt,
        steps_taken: n_steps,
    })
}

struct Integrator<'a> {
    grid: &'a ManifoldGrid,
    params: &'a PdeParams,
    boundary: &'a Boundary,
    q_shape: Vec<f64>,
    boundary_nodes: Vec<usize>,
}

impl<'a> Integrator<'a> {
    fn new(grid: &'a ManifoldGrid, params: &'a PdeParams, boundary: &'a Boundary) -> Self {
        let n = grid.len();
        Integrator {
            grid,
            params,
            boundary,
            q_shape: params.potential.sample(grid, 0.0).into_values(),
            boundary_nodes: (0..n).filter(|&k| !grid.is_interior(k)).collect(),
        }
    }

    fn rhs(&self, u: &[f64], t: f64, out: &mut [f64]) {
        laplacian_into(self.grid, u, out);
        let qt = self.params.potential.time_factor(t);
        for k in 0..u.len() {
            if self.grid.is_interior(k) {
                out[k] += self.params.reaction(u[k], self.q_shape[k] * qt);
            } else {
                out[k] = 0.0;
            }
        }
    }

    fn impose_boundary(&self, u: &mut [f64], t: f64) {
        if let Boundary::Prescribed(g) = self.boundary {
            for &k in &self.boundary_nodes {
                u[k] = g(self.grid.coordinates(k), t);
            }
        }
    }

    fn rk4(&self, u: &mut [f64], t: f64, dt: f64, scratch: &mut [Vec<f64>; 5]) {
        let [k1, k2, k3, k4, tmp] = scratch;
        let n = u.len();
        let half = t + 0.5 * dt;
        self.rhs(u, t, k1);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k1[i];
        }
        self.impose_boundary(tmp, half);
        self.rhs(tmp, half, k2);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k2[i];
        }
        self.impose_boundary(tmp, half);
        self.rhs(tmp, half, k3);
        for i in 0..n {
            tmp[i] = u[i] + dt * k3[i];
        }
        self.impose_boundary(tmp, t + dt);
        self.rhs(tmp, t + dt, k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.impose_boundary(u, t + dt);
    }

    fn imex(&self, u: &mut [f64], t: f64, dt: f64) -> Result<(), PdeError> {
        let grid = self.grid;
        let n = u.len();
        let sg = grid.sqrt_det();
        let qt = self.params.potential.time_factor(t);
        let mut next = u.to_vec();
        self.impose_boundary(&mut next, t + dt);
        // right-hand side of the √g-weighted system, with known boundary values moved over
        let mut b = vec![0.0; n];
        for k in 0..n {
            if !grid.is_interior(k) {
                continue;
            }
            b[k] = sg[k] * (u[k] + dt * self.params.reaction(u[k], self.q_shape[k] * qt));
            for (d, axis) in grid.axes().iter().enumerate() {
                let h2 = axis.spacing * axis.spacing;
                for fwd in [true, false] {
                    let m = grid.neighbor(k, d, fwd).unwrap_or(k);
                    if !grid.is_interior(m) {
                        let w = face(grid, d, k, m, fwd);
                        b[k] += dt * w / h2 * next[m];
                    }
                }
            }
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            for k in 0..n {
                if !grid.is_interior(k) {
                    out[k] = 0.0;
                    continue;
                }
                let mut acc = sg[k] * x[k];
                for (d, axis) in grid.axes().iter().enumerate() {
                    let h2 = axis.spacing * axis.spacing;
                    for fwd in [true, false] {
                        let m = grid.neighbor(k, d, fwd).unwrap_or(k);
                        let w = face(grid, d, k, m, fwd);
                        acc += dt * w / h2 * x[k];
                        if grid.is_interior(m) {
                            acc -= dt * w / h2 * x[m];
                        }
                    }
                }
                out[k] = acc;
            }
        };
        conjugate_gradient(apply, &b, &mut next, |k| grid.is_interior(k))?;
        u.copy_from_slice(&next);
        Ok(())
    }
}

fn face(grid: &ManifoldGrid, axis: usize, k: usize, m: usize, forward: bool) -> f64 {
    if forward {
        grid.face_weight(axis, k)
    } else {
        grid.face_weight(axis, m)
    }
}

fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    active: impl Fn(usize) -> bool,
) -> Result<(), PdeError> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = (0..n)
        .map(|k| if active(k) { b[k] - ax[k] } else { 0.0 })
        .collect();
    let mut p = r.clone();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    for _ in 0..(10 * n).max(100) {
        if rr.sqrt() <= 1e-13 * b_norm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            if active(k) {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = if active(k) { r[k] + beta * p[k] } else { 0.0 };
        }
        rr = rr_new;
    }
    Err(PdeError::LinearSolve {
        residual: rr.sqrt() / b_norm,
    })
}
