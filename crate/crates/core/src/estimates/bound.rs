use serde::Serialize;

use crate::schemes::SchemeSpec;

use super::{ConstantsBundle, EstimateError};

/// The pieces of the gradient-estimate bound at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    pub alpha: f64,
    pub phi: f64,
    /// `nα²/((2−ε)J̄)`.
    pub k: f64,
    /// `k/(2t)`.
    pub leading: f64,
    /// `k·[C₁²k/(2(α−1)) + b·D̃₁·|a| + θ₁λ₂ + C₁]`.
    pub bracket: f64,
    /// First fraction of `C₂`.
    pub c2_first: f64,
    pub c2: f64,
    /// `sqrt(k·C₂)`.
    pub sqrt_term: f64,
    pub total: f64,
}

/// `num/den`, with a zero numerator contributing 0 whatever the denominator.
fn guarded(num: f64, den: f64, what: &str) -> Result<f64, EstimateError> {
    if num == 0.0 {
        Ok(0.0)
    } else if den == 0.0 {
        Err(EstimateError::Unsupported(format!(
            "{what}: nonzero numerator {num:.4e} over a zero denominator"
        )))
    } else {
        Ok(num / den)
    }
}

/// `k·[C₁²k/(2(α_low−1)) + b·D̃₁·|a| + θ₁λ₂ + C₁]`.
pub(crate) fn bracket(c: &ConstantsBundle, k: f64, alpha_low: f64) -> f64 {
    k * (c.c1 * c.c1 * k / (2.0 * (alpha_low - 1.0))
        + c.b * c.d1_tilde * c.a.abs()
        + c.theta1 * c.lambda2
        + c.c1)
}

/// `C₂` and its primed variants, returned as (first fraction, total).
///
/// `alpha` multiplies every term; `alpha_gap` is the value inside `(J̄ − α)²`, which the
/// Harnack displays evaluate at the earlier time.
pub(crate) fn c_prime(
    c: &ConstantsBundle,
    n: f64,
    eps: f64,
    jbar: f64,
    alpha: f64,
    alpha_gap: f64,
    phi: f64,
) -> Result<(f64, f64), EstimateError> {
    let a = c.a.abs();
    let b = c.b;
    let num = a * (alpha - 1.0) * b * c.d1_tilde
        + 5.0 * (alpha - 1.0) * c.theta1 * c.lambda2
        + a * alpha * b * (b - 1.0) * c.d2_tilde
        + 3.0 * (alpha - 1.0) * c.theta1 * c.lambda3;
    let gap = (2.0 - eps) * jbar * (jbar - alpha_gap).powi(2) / (n * alpha * alpha) - eps;
    let first = if num == 0.0 {
        0.0
    } else if gap <= 0.0 {
        return Err(EstimateError::Precondition(format!(
            "(2−ε)J̄(J̄−α)²/(nα²) − ε = {gap:.4e} ≤ 0; ε = {eps} is outside the range that \
             keeps the constant finite"
        )));
    } else {
        num * num / (4.0 * gap)
    };
    let d1 = c.theta1 * c.lambda2;
    let d2 = c.theta1 * c.lambda3;
    let total = first
        + guarded(c.lambda1 * c.theta2, 2.0 * d1, "λ₁θ₂/(2θ₁λ₂)")?
        + a * b * c.d1_tilde * alpha * phi
        + alpha * c.lambda1 * c.theta3
        + d1 * alpha * phi
        + guarded(alpha * c.lambda2 * c.theta2, 2.0 * d2, "αλ₂θ₂/(2θ₁λ₃)")?;
    if !(total >= 0.0) {
        return Err(EstimateError::Unsupported(format!("C₂ = {total:.4e} is negative")));
    }
    Ok((first, total))
}

fn with_time(e: EstimateError, t: f64) -> EstimateError {
    match e {
        EstimateError::Precondition(m) => EstimateError::Precondition(format!("{m} (t = {t})")),
        EstimateError::Unsupported(m) => EstimateError::Unsupported(format!("{m} (t = {t})")),
        other => other,
    }
}

/// Right-hand side of the gradient estimate at time `t > 0`.
///
/// `jbar` is the value of `J̄` used at `t`: the closed form in formula mode or the measured
/// minimum of `J` in exact-J mode. `α` and `φ` are evaluated at `t` with this `J̄`.
pub fn theorem_bound(
    t: f64,
    bundle: &ConstantsBundle,
    spec: &SchemeSpec,
    jbar: f64,
) -> Result<BoundTerms, EstimateError> {
    if !(t > 0.0) {
        return Err(EstimateError::Precondition(format!("t = {t} must be positive")));
    }
    let ap = spec.alpha_phi(t, jbar)?;
    let (alpha, phi) = (ap.alpha, ap.phi);
    if !(alpha > 1.0) {
        return Err(EstimateError::Precondition(format!(
            "α(t) = {alpha} at t = {t} must exceed 1"
        )));
    }
    let n = spec.n();
    let eps = spec.epsilon;
    let k = n * alpha * alpha / ((2.0 - eps) * jbar);
    let leading = k / (2.0 * t);
    let bracket = bracket(bundle, k, alpha);
    let (c2_first, c2) = c_prime(bundle, n, eps, jbar, alpha, alpha, phi)
        .map_err(|e| with_time(e, t))?;
    let sqrt_term = (k * c2).sqrt();
    Ok(BoundTerms {
        alpha,
        phi,
        k,
        leading,
        bracket,
        c2_first,
        c2,
        sqrt_term,
        total: leading + bracket + sqrt_term,
    })
}
