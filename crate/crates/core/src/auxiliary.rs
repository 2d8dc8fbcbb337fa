//! The damping function `J` and its explicit exponential lower bound `J̄`.
//!
//! `J` solves `J_t = ΔJ − 2VJ − (5/ε)|∇J|²/J` on a geodesic ball with `J = 1` initially and
//! on the ball boundary, where `V = Ric₋`. The closed form
//! `J̄(t) = 2^{−1/(β−1)} exp{−2Cκr^{−2}(1 + [2C(β−1)κ]^{n/(2p−n)}) t}`, with `β = 5/ε`,
//! bounds it from below.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::operators::{grad_inner_into, laplacian_into};
use crate::geometry::{geodesic_distance, ricci_minus, GeometryError, ManifoldGrid};
use crate::pde::{PdeError, SpaceTimeField, TimeSettings};

/// Below this value the `|∇J|²/J` term is considered singular and the solve aborts.
pub const J_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuxError {
    #[error("β = 5/ε = {0} must exceed 1")]
    BetaTooSmall(f64),
    #[error("invalid auxiliary parameters: {0}")]
    InvalidParams(String),
    #[error("J fell to {value:.3e} at step {step}, node {node}")]
    Collapse { step: usize, node: usize, value: f64 },
    #[error("J became non-finite at step {step}, node {node}")]
    NonFinite { step: usize, node: usize },
    #[error("calibration found no C ≤ {c_max} satisfying the sandwich")]
    CalibrationFailed { c_max: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pde(#[from] PdeError),
}

/// Parameters of the lower bound `J̄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JParams {
    pub radius: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub dimension: usize,
    pub p: f64,
    /// The unspecified constant `C(n,p)` in the decay rate.
    pub c: f64,
}

impl JParams {
    /// `β = 5/ε`.
    pub fn beta(&self) -> f64 {
        5.0 / self.epsilon
    }

    pub fn validate(&self) -> Result<(), AuxError> {
        let beta = self.beta();
        if !(beta > 1.0) {
            return Err(AuxError::BetaTooSmall(beta));
        }
        if !(2.0 * self.p > self.dimension as f64) {
            return Err(AuxError::InvalidParams(format!(
                "2p − n must be positive (p = {}, n = {})",
                self.p, self.dimension
            )));
        }
        if !(self.c > 0.0) {
            return Err(AuxError::InvalidParams(format!("C = {} must be positive", self.c)));
        }
        if !(self.kappa >= 0.0) {
            return Err(AuxError::InvalidParams(format!("κ = {} must be nonnegative", self.kappa)));
        }
        if !(self.radius > 0.0) {
            return Err(AuxError::InvalidParams(format!("r = {} must be positive", self.radius)));
        }
        Ok(())
    }

    /// Decay rate `2Cκr^{−2}(1 + [2C(β−1)κ]^{n/(2p−n)})`.
    pub fn rate(&self) -> f64 {
        let beta = self.beta();
        let n = self.dimension as f64;
        let inner = 2.0 * self.c * (beta - 1.0) * self.kappa;
        2.0 * self.c * self.kappa / (self.radius * self.radius)
            * (1.0 + inner.powf(n / (2.0 * self.p - n)))
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

/// `J̄_r(t)`.
pub fn jbar(t: f64, params: &JParams) -> Result<f64, AuxError> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(AuxError::InvalidParams(format!("t = {t} must be nonnegative")));
    }
    Ok(jbar_unchecked(t, params))
}

pub(crate) fn jbar_unchecked(t: f64, params: &JParams) -> f64 {
    let beta = params.beta();
    2f64.powf(-1.0 / (beta - 1.0)) * (-params.rate() * t).exp()
}

/// `dJ̄/dt = −rate·J̄`.
pub fn jbar_derivative(t: f64, params: &JParams) -> Result<f64, AuxError> {
    Ok(-params.rate() * jbar(t, params)?)
}

/// Region on which the J-system is solved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ball {
    /// Every node is free; there is no boundary condition (closed manifolds only).
    Whole,
    /// `B(origin, radius)`; nodes at distance ≥ radius and grid-boundary nodes are held at 1.
    Geodesic { origin: usize, radius: f64 },
}

/// Solved `J` with the mask of free nodes.
#[derive(Clone, Debug)]
pub struct JSolution {
    pub j: SpaceTimeField,
    pub inside: Vec<bool>,
    /// Largest value reached at any step, stored or not.
    pub max: f64,
}

impl JSolution {
    /// `min_x J(x, t)` over free nodes at each stored step.
    pub fn min_per_step(&self) -> Vec<f64> {
        self.j
            .steps()
            .iter()
            .map(|s| {
                s.iter()
                    .zip(&self.inside)
                    .filter(|(_, &m)| m)
                    .map(|(&v, _)| v)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Explicit RK4 integration of the J-system with `V = Ric₋`.
pub fn solve_j_system(
    grid: &ManifoldGrid,
    ball: Ball,
    epsilon: f64,
    time: &TimeSettings,
) -> Result<JSolution, AuxError> {
    let beta = 5.0 / epsilon;
    if !(epsilon > 0.0) {
        return Err(AuxError::InvalidParams(format!("ε = {epsilon} must be positive")));
    }
    let (n_steps, dt) = time.resolved()?;
    let limit = time.cfl_limit(grid);
    if dt > limit * (1.0 + 1e-12) {
        return Err(PdeError::Cfl { dt, limit }.into());
    }
    let n = grid.len();
    let inside: Vec<bool> = match ball {
        Ball::Whole => {
            if grid.has_boundary() {
                return Err(AuxError::InvalidParams(
                    "the whole-manifold ball needs a closed grid".into(),
                ));
            }
            vec![true; n]
        }
        Ball::Geodesic { origin, radius } => {
            let d = geodesic_distance(grid, origin)?;
            (0..n)
                .map(|k| grid.is_interior(k) && d.values()[k] < radius)
                .collect()
        }
    };
    let v = ricci_minus(grid).into_values();

    let rhs = |j: &[f64], lap: &mut Vec<f64>, grad: &mut Vec<f64>, out: &mut [f64]| {
        laplacian_into(grid, j, lap);
        grad_inner_into(grid, j, j, grad);
        for k in 0..n {
            out[k] = if inside[k] {
                lap[k] - 2.0 * v[k] * j[k] - beta * grad[k] / j[k]
            } else {
                0.0
            };
        }
    };

    let mut j = vec![1.0; n];
    let mut lap = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let stride = time.store_every.max(1);
    let mut times = vec![time.t_start];
    let mut stored = vec![j.clone()];
    let mut max = 1.0f64;

    for step in 1..=n_steps {
        rhs(&j, &mut lap, &mut grad, &mut k1);
        for i in 0..n {
            tmp[i] = j[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut lap, &mut grad, &mut k2);
        for i in 0..n {
            tmp[i] = j[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut lap, &mut grad, &mut k3);
        for i in 0..n {
            tmp[i] = j[i] + dt * k3[i];
        }
        rhs(&tmp, &mut lap, &mut grad, &mut k4);
        for i in 0..n {
            j[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for (node, &value) in j.iter().enumerate() {
            if !value.is_finite() {
                return Err(AuxError::NonFinite { step, node });
            }
            if value < J_FLOOR {
                return Err(AuxError::Collapse { step, node, value });
            }
            max = max.max(value);
        }
        if step % stride == 0 {
            times.push(time.t_start + step as f64 * dt);
            stored.push(j.clone());
        }
    }
    Ok(JSolution {
        j: SpaceTimeField::from_parts(grid.id(), times, stored),
        inside,
        max,
    })
}

/// Outcome of comparing a solved `J` with `J̄` and with 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    /// `max_t (J̄(t) − min_x J(x,t))`; the lower bound holds when this is ≤ 0.
    pub lower_violation: f64,
    pub lower_step: usize,
    /// `max (J − 1)` over all steps.
    pub upper_violation: f64,
    pub jbar_at_horizon: f64,
    pub passed: bool,
}

pub fn j_sandwich_check(
    solution: &JSolution,
    params: &JParams,
    upper_tolerance: f64,
) -> Result<SandwichReport, AuxError> {
    params.validate()?;
    let mins = solution.min_per_step();
    let mut lower_violation = f64::NEG_INFINITY;
    let mut lower_step = 0;
    for (i, &m) in mins.iter().enumerate() {
        let gap = jbar_unchecked(solution.j.elapsed(i), params) - m;
        if gap > lower_violation {
            lower_violation = gap;
            lower_step = i;
        }
    }
    let upper_violation = solution.max - 1.0;
    Ok(SandwichReport {
        lower_violation,
        lower_step,
        upper_violation,
        jbar_at_horizon: jbar_unchecked(solution.j.horizon(), params),
        passed: lower_violation <= 0.0 && upper_violation <= upper_tolerance,
    })
}

/// Smallest `C` (to bisection precision) for which `J̄ ≤ min J` at every stored step.
///
/// `J̄` is non-increasing in `C`, so the passing set is an interval `[C*, ∞)`.
pub fn calibrate_c(
    solution: &JSolution,
    params: &JParams,
    c_min: f64,
    c_max: f64,
) -> Result<f64, AuxError> {
    let passes = |c: f64| -> Result<bool, AuxError> {
        Ok(j_sandwich_check(solution, &params.with_c(c), f64::INFINITY)?.lower_violation <= 0.0)
    };
    if passes(c_min)? {
        return Ok(c_min);
    }
    if !passes(c_max)? {
        return Err(AuxError::CalibrationFailed { c_max });
    }
    let (mut lo, mut hi) = (c_min, c_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldSpec};
    use proptest::prelude::*;

    fn params(epsilon: f64, kappa: f64) -> JParams {
        JParams {
            radius: 1.0,
            kappa,
            epsilon,
            dimension: 2,
            p: 2.0,
            c: 1.0,
        }
    }

    #[test]
    fn jbar_closed_form_values() {
        let p = params(1.0, 0.01);
        assert!((jbar(0.0, &p).unwrap() - 0.840_896_415_253_714_6).abs() < 1e-15);
        let expected = 2f64.powf(-0.25) * (-0.0216f64).exp();
        assert!((jbar(1.0, &p).unwrap() - expected).abs() < 1e-15);
        let flat = params(1.0, 0.0);
        assert_eq!(jbar(7.0, &flat).unwrap(), jbar(0.0, &flat).unwrap());
    }

    #[test]
    fn beta_must_exceed_one() {
        assert!(matches!(jbar(0.0, &params(5.0, 0.1)), Err(AuxError::BetaTooSmall(_))));
        assert!(matches!(jbar(0.0, &params(6.0, 0.1)), Err(AuxError::BetaTooSmall(_))));
    }

    proptest! {
        #[test]
        fn jbar_is_monotone(t in 0.0f64..5.0, dt in 0.0f64..1.0, k in 0.0f64..2.0, dk in 0.0f64..1.0, eps in 0.05f64..4.0) {
            let p = params(eps, k);
            let a = jbar(t, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a > 0.0 || p.rate() * t > 700.0);
            prop_assert!(jbar(t + dt, &p).unwrap() <= a);
            prop_assert!(jbar(t, &params(eps, k + dk)).unwrap() <= a);
        }
    }

    #[test]
    fn flat_torus_keeps_j_identically_one() {
        let g = build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![16, 16],
            lengths: vec![1.0, 1.0],
        })
        .unwrap();
        let time = TimeSettings::new(2e-4, 0.1);
        let s = solve_j_system(&g, Ball::Whole, 0.5, &time).unwrap();
        assert!(s.j.steps().iter().flatten().all(|&v| (v - 1.0).abs() < 1e-12));
        let r = j_sandwich_check(&s, &params(0.5, 0.0), 1e-12).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn hyperbolic_j_decreases_and_stays_below_one() {
        let g = build_manifold(&ManifoldSpec::HyperbolicPatch {
            nodes: [33, 33],
            extent: 0.5,
        })
        .unwrap();
        let o = g.node([16, 16]);
        let h = g.min_physical_spacing();
        let time = TimeSettings::new(0.1 * h * h, 0.3);
        let s = solve_j_system(&g, Ball::Geodesic { origin: o, radius: 0.8 }, 1.0, &time).unwrap();
        assert!(s.max <= 1.0 + 1e-10);
        for i in 1..s.j.num_steps() {
            assert!(s.j.at(i, o) < s.j.at(i - 1, o));
        }
    }
}
