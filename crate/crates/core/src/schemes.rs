//! The four `(α, φ)` families and the structural conditions (A1)–(A6).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("{kind:?} scheme needs ε in {range}, got ε = {epsilon}")]
    EpsilonOutOfRange {
        kind: SchemeKind,
        epsilon: f64,
        range: String,
    },
    #[error("invalid scheme parameter: {0}")]
    Invalid(String),
    #[error("{kind:?} scheme is not defined at t = {t}")]
    TimeOutOfDomain { kind: SchemeKind, t: f64 },
    #[error("J̄ = {0} must lie in (0, 1]")]
    JbarOutOfRange(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    LiYau,
    Hamilton,
    LiXu,
    LinearLiXu,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::LiYau,
        SchemeKind::Hamilton,
        SchemeKind::LiXu,
        SchemeKind::LinearLiXu,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::LiYau => "li-yau",
            SchemeKind::Hamilton => "hamilton",
            SchemeKind::LiXu => "li-xu",
            SchemeKind::LinearLiXu => "linear-li-xu",
        }
    }
}

/// One `(α, φ)` pair with its parameters.
///
/// For the Li-Yau kind `delta` is the constant value of `α`; `rate` is unused there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub delta: f64,
    pub rate: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub dimension: usize,
}

/// `α, α′, φ, φ′` at one time, with `J̄` frozen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaPhi {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub phi: f64,
    pub phi_prime: f64,
}

impl SchemeSpec {
    pub fn n(&self) -> f64 {
        self.dimension as f64
    }

    /// Upper end of the admissible ε interval and whether it is attained.
    pub fn epsilon_bound(&self) -> (f64, bool) {
        let n = self.n();
        let d = self.delta;
        match self.kind {
            SchemeKind::LiYau | SchemeKind::Hamilton | SchemeKind::LinearLiXu => {
                let dm = (d - 1.0) * (d - 1.0);
                (2.0 * dm / (dm + n * d * d), true)
            }
            SchemeKind::LiXu => (d / (d - 1.0), false),
        }
    }

    /// Range check on the parameters, done before any condition is evaluated.
    pub fn validate(&self) -> Result<(), SchemeError> {
        if self.dimension == 0 {
            return Err(SchemeError::Invalid("dimension must be positive".into()));
        }
        if !(self.delta > 0.0) {
            return Err(SchemeError::Invalid(format!("δ = {} must be positive", self.delta)));
        }
        if self.kind != SchemeKind::LiYau && !(self.rate > 0.0) {
            return Err(SchemeError::Invalid(format!(
                "scheme rate κ_s = {} must be positive",
                self.rate
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(SchemeError::Invalid(format!("λ = {} must be positive", self.lambda)));
        }
        let (hi, closed) = self.epsilon_bound();
        let ok = self.epsilon > 0.0 && if closed { self.epsilon <= hi } else { self.epsilon < hi };
        if !ok {
            return Err(SchemeError::EpsilonOutOfRange {
                kind: self.kind,
                epsilon: self.epsilon,
                range: format!("(0, {hi:.6}{}", if closed { "]" } else { ")" }),
            });
        }
        Ok(())
    }

    /// `α(t)` alone, which needs no `J̄`.
    pub fn alpha(&self, t: f64) -> Result<f64, SchemeError> {
        Ok(self.alpha_phi(t, 1.0)?.alpha)
    }

    pub fn alpha_phi(&self, t: f64, jbar: f64) -> Result<AlphaPhi, SchemeError> {
        alpha_phi(self, t, jbar)
    }
}

/// `α − δ = cosh x − x/sinh x` for the Li-Xu kind.
fn lixu_excess(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        2.0 * x2 / 3.0 + x2 * x2 / 45.0
    } else {
        (x.sinh() * x.cosh() - x) / x.sinh()
    }
}

/// `d(α − δ)/dx = sinh x + (x cosh x − sinh x)/sinh² x`.
fn lixu_excess_prime(x: f64) -> f64 {
    if x < 1e-3 {
        let x3 = x * x * x;
        let s = x.sinh();
        s + (x3 / 3.0 + x3 * x * x / 30.0) / (s * s)
    } else {
        let s = x.sinh();
        s + (x * x.cosh() - s) / (s * s)
    }
}

pub fn alpha_phi(spec: &SchemeSpec, t: f64, jbar: f64) -> Result<AlphaPhi, SchemeError> {
    if !(jbar > 0.0 && jbar <= 1.0 + 1e-15) {
        return Err(SchemeError::JbarOutOfRange(jbar));
    }
    let n = spec.n();
    let e = 2.0 - spec.epsilon;
    let d = spec.delta;
    let k = spec.rate;
    Ok(match spec.kind {
        SchemeKind::LiYau => AlphaPhi {
            alpha: d,
            alpha_prime: 0.0,
            phi: n / (e * d * jbar),
            phi_prime: 0.0,
        },
        SchemeKind::Hamilton => {
            let g = (k * t).exp();
            AlphaPhi {
                alpha: d * g,
                alpha_prime: d * k * g,
                phi: d * k * n * g / (2.0 * e * jbar),
                phi_prime: d * k * k * n * g / (2.0 * e * jbar),
            }
        }
        SchemeKind::LiXu => {
            if !(t > 0.0) {
                return Err(SchemeError::TimeOutOfDomain { kind: spec.kind, t });
            }
            let x = k * t;
            let s = x.sinh();
            AlphaPhi {
                alpha: d + lixu_excess(x),
                alpha_prime: k * lixu_excess_prime(x),
                phi: n * k * (d + x.cosh() / s) / (e * jbar),
                phi_prime: -n * k * k / (s * s * e * jbar),
            }
        }
        SchemeKind::LinearLiXu => AlphaPhi {
            alpha: d + k * t,
            alpha_prime: k,
            phi: n * k / (2.0 * e * jbar),
            phi_prime: 0.0,
        },
    })
}

/// One row of a condition report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    /// Smallest margin over the window; the condition holds where the margin is ≥ 0.
    pub worst_margin: f64,
    pub worst_time: f64,
    /// Rounding allowance (relative to the terms compared) granted to equality cases.
    pub tolerance: f64,
    pub passed: bool,
    /// Informational rows do not count toward the overall verdict.
    pub informational: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kind: SchemeKind,
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().filter(|e| !e.informational).all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Relative rounding allowance on condition margins.
pub const CONDITION_RTOL: f64 = 1e-12;

struct Tracker {
    name: &'static str,
    informational: bool,
    worst: f64,
    worst_t: f64,
    tolerance: f64,
    passed: bool,
}

impl Tracker {
    fn new(name: &'static str, informational: bool) -> Self {
        Tracker {
            name,
            informational,
            worst: f64::INFINITY,
            worst_t: f64::NAN,
            tolerance: 0.0,
            passed: true,
        }
    }

    /// Records `lhs − rhs ≥ 0` at time `t`.
    fn record(&mut self, t: f64, lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        let tol = CONDITION_RTOL * lhs.abs().max(rhs.abs());
        if margin < -tol {
            self.passed = false;
        }
        if margin < self.worst || self.worst_t.is_nan() {
            self.worst = margin;
            self.worst_t = t;
            self.tolerance = tol;
        }
    }

    fn finish(self) -> ConditionEntry {
        ConditionEntry {
            name: self.name.to_string(),
            worst_margin: self.worst,
            worst_time: self.worst_t,
            tolerance: self.tolerance,
            passed: self.passed,
            informational: self.informational,
        }
    }
}

/// Evaluates (A1)–(A6) at every time in `times`.
///
/// `jbar` gives `J̄(t)`. `jbar_rate` is `−J̄′/J̄`, used for the chain-rule variant of (A4)
/// in which `φ′` includes the time dependence of `J̄`. The variant and the inequality
/// opposite inequality direction for (A2) are reported as informational rows.
pub fn validate_conditions(
    spec: &SchemeSpec,
    times: &[f64],
    jbar: impl Fn(f64) -> f64,
    jbar_rate: f64,
) -> Result<ConditionReport, SchemeError> {
    spec.validate()?;
    let n = spec.n();
    let e = 2.0 - spec.epsilon;
    let mut a1 = Tracker::new("A1", false);
    let mut a2 = Tracker::new("A2", false);
    let mut a2_proof = Tracker::new("A2-proof-variant", true);
    let mut a3 = Tracker::new("A3", false);
    let mut a4 = Tracker::new("A4", false);
    let mut a4_chain = Tracker::new("A4-chain-rule", true);
    let mut a5 = Tracker::new("A5", false);
    let mut a6 = Tracker::new("A6", false);

    for &t in times {
        let jb = jbar(t);
        let ap = alpha_phi(spec, t, jb)?;
        let (al, alp, ph, php) = (ap.alpha, ap.alpha_prime, ap.phi, ap.phi_prime);
        a1.record(t, al, 1.0);
        let lhs = 2.0 * e * ph / n;
        a2.record(t, lhs, (lhs - alp) / al);
        a2_proof.record(t, (lhs * jb - alp) / al, lhs);
        a3.record(t, 2.0 * e * ph * jb / n, alp);
        let sq = e * ph * ph * jb / n;
        a4.record(t, al * php + sq, 0.0);
        // φ ∝ 1/J̄, so the total derivative adds φ·(−J̄′/J̄)
        a4_chain.record(t, al * (php + ph * jbar_rate) + sq, 0.0);
        let ratio = al / (al - 1.0);
        if ratio > 0.0 {
            a5.record(t, spec.lambda, ratio);
        } else {
            a5.record(t, 0.0, 1.0);
        }
        a6.record(t, 2.0 / (1.0 + n * spec.lambda * spec.lambda), spec.epsilon);
    }
    Ok(ConditionReport {
        kind: spec.kind,
        entries: [a1, a2, a2_proof, a3, a4, a4_chain, a5, a6]
            .into_iter()
            .map(Tracker::finish)
            .collect(),
    })
}

/// `count` evenly spaced times on `[t0, t1]`.
pub fn sample_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![t0];
    }
    (0..count)
        .map(|i| t0 + (t1 - t0) * i as f64 / (count - 1) as f64)
        .collect()
}
