use serde::Serialize;

use crate::estimates::{bracket, c_prime, ConstantsBundle};
use crate::schemes::{SchemeKind, SchemeSpec};

use super::HarnackError;

/// The Harnack factor in log form with its constituents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarnackFactor {
    /// Exponent of `s₂/s₁`.
    pub power: f64,
    /// Multiplier of `𝒥`.
    pub energy_coefficient: f64,
    /// `C₄`, `C₅`, `C₆` or `C₇`.
    pub c_main: f64,
    /// `C₂`, `C′₅`, `C′₆` or `C′₇`.
    pub c_prime: f64,
    /// Everything multiplying `(s₂ − s₁)`.
    pub drift: f64,
    /// The `(s₂² − s₁²)` term; nonzero only for the linear Li-Xu kind.
    pub quadratic: f64,
    pub log_rhs: f64,
}

impl HarnackFactor {
    pub fn rhs(&self) -> f64 {
        self.log_rhs.exp()
    }
}

/// The multiplicative factor of the Harnack inequality for `spec.kind`.
///
/// `J̄(T)` is `bundle.jbar_horizon`. The `α` placements follow the four displays: the power,
/// the energy term and the numerators use the later time `s₂`, while `(α − 1)` and
/// `(J̄ − α)²` use `s₁`. The `φ` inside the primed constant is its supremum over `[s₁, s₂]`.
pub fn harnack_rhs(
    s1: f64,
    s2: f64,
    energy: f64,
    bundle: &ConstantsBundle,
    spec: &SchemeSpec,
) -> Result<HarnackFactor, HarnackError> {
    if !(s1 > 0.0 && s2 > s1) {
        return Err(HarnackError::Domain(format!("need 0 < s₁ < s₂, got s₁ = {s1}, s₂ = {s2}")));
    }
    if !(energy >= 0.0) {
        return Err(HarnackError::Domain(format!("𝒥 = {energy} must be nonnegative")));
    }
    bundle.validate()?;
    let jt = bundle.jbar_horizon;
    let n = spec.n();
    let eps = spec.epsilon;
    let e = 2.0 - eps;
    let d = spec.delta;
    let ks = spec.rate;
    let a1 = spec.alpha_phi(s1, jt)?;
    let a2 = spec.alpha_phi(s2, jt)?;
    let (hi, lo) = (a2.alpha, a1.alpha);
    if !(lo > 1.0) {
        return Err(HarnackError::Precondition(format!("α(s₁) = {lo} must exceed 1")));
    }
    let phi = a1.phi.max(a2.phi);
    let k = n * hi * hi / (e * jt);
    let (_, cp) = c_prime(bundle, n, eps, jt, hi, lo, phi)?;
    let c_main = bracket(bundle, k, lo) + (k * cp).sqrt();
    let c = bundle;
    let abs_a = c.a.abs();
    let lt = c.lambda1 * c.theta1;
    let (drift, quadratic) = match spec.kind {
        SchemeKind::LiYau => (c_main + abs_a * hi * c.d0 + hi * lt + n / (e * jt), 0.0),
        SchemeKind::Hamilton => {
            let g2 = (2.0 * ks * s2).exp();
            (
                c_main + abs_a * hi * c.d0 + hi * lt + d * d * ks * n * g2 / (2.0 * e * jt),
                0.0,
            )
        }
        SchemeKind::LiXu => {
            let coth = 1.0 / (ks * s1).tanh();
            (
                c_main + abs_a * hi * c.d0 + hi * lt + hi * n * ks * (d + coth) / (e * jt),
                0.0,
            )
        }
        SchemeKind::LinearLiXu => (
            c_main + abs_a * d * c.d0 + d * lt + n * ks * d / (e * jt),
            0.5 * ks * (abs_a * c.d0 + lt + n * ks / (e * jt)),
        ),
    };
    let power = k / 2.0;
    let energy_coefficient = hi / (4.0 * jt);
    let log_rhs = power * (s2 / s1).ln()
        + energy_coefficient * energy
        + drift * (s2 - s1)
        + quadratic * (s2 * s2 - s1 * s1);
    Ok(HarnackFactor {
        power,
        energy_coefficient,
        c_main,
        c_prime: cp,
        drift,
        quadratic,
        log_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(kind: SchemeKind, delta: f64, rate: f64, eps: f64) -> SchemeSpec {
        SchemeSpec {
            kind,
            delta,
            rate,
            epsilon: eps,
            lambda: 10.0,
            dimension: 1,
        }
    }

    #[test]
    fn li_yau_hand_value() {
        let b = ConstantsBundle::heat(1.0, 1.0, 1.0);
        let f = harnack_rhs(0.5, 1.0, 0.5, &b, &spec(SchemeKind::LiYau, 2.0, 0.0, 0.5)).unwrap();
        assert!((f.power - 4.0 / 3.0).abs() < 1e-12);
        assert!((f.c_main - 56.0 / 9.0).abs() < 1e-12);
        let expect = 2f64.powf(4.0 / 3.0)
            * (0.5f64 * (2.0 / 4.0) + (56.0 / 9.0 + 1.0 / 1.5) * 0.5).exp();
        assert!((f.rhs() - expect).abs() < 1e-12 * expect);
    }

    /// Direct transcription of the Hamilton display with all reaction constants present.
    fn hamilton_reference(s1: f64, s2: f64, en: f64, c: &ConstantsBundle, sp: &SchemeSpec) -> f64 {
        let (n, eps, d, k) = (1.0, sp.epsilon, sp.delta, sp.rate);
        let jt = c.jbar_horizon;
        let de2 = d * (k * s2).exp();
        let de1 = d * (k * s1).exp();
        let phi = d * k * n * (k * s2).exp() / (2.0 * (2.0 - eps) * jt);
        let a = c.a.abs();
        let num = a * (de2 - 1.0) * c.b * c.d1_tilde
            + 5.0 * (de2 - 1.0) * c.theta1 * c.lambda2
            + a * de2 * c.b * (c.b - 1.0) * c.d2_tilde
            + 3.0 * (de2 - 1.0) * c.theta1 * c.lambda3;
        let den = 4.0 * ((2.0 - eps) * jt / (n * de2 * de2) * (jt - de1).powi(2) - eps);
        let c5p = num * num / den
            + c.lambda1 * c.theta2 / (2.0 * c.theta1 * c.lambda2)
            + a * c.b * c.d1_tilde * de2 * phi
            + de2 * c.lambda1 * c.theta3
            + c.theta1 * c.lambda2 * de2 * phi
            + de2 * c.lambda2 * c.theta2 / (2.0 * c.theta1 * c.lambda3);
        let kk = n * d * d * (2.0 * k * s2).exp() / ((2.0 - eps) * jt);
        let c5 = kk
            * (c.c1 * c.c1 * kk / (2.0 * (de1 - 1.0))
                + c.b * c.d1_tilde * a
                + c.theta1 * c.lambda2
                + c.c1)
            + (kk * c5p).sqrt();
        (kk / 2.0) * (s2 / s1).ln()
            + de2 / (4.0 * jt) * en
            + (c5 + a * de2 * c.d0 + de2 * c.lambda1 * c.theta1
                + d * d * k * n * (2.0 * k * s2).exp() / (2.0 * (2.0 - eps) * jt))
                * (s2 - s1)
    }

    #[test]
    fn hamilton_matches_transcription() {
        let mut b = ConstantsBundle::heat(1.5, 1.0, 0.9);
        b.a = 0.4;
        b.b = 2.0;
        b.lambda1 = 1.0;
        b.lambda2 = 1.2;
        b.lambda3 = 0.8;
        b.theta1 = 0.3;
        b.theta2 = 0.2;
        b.theta3 = 0.1;
        b.d1_tilde = 0.5;
        b.d2_tilde = 0.25;
        b.d0 = 0.7;
        let sp = spec(SchemeKind::Hamilton, 5.0, 0.3, 0.05);
        let f = harnack_rhs(0.2, 0.6, 0.3, &b, &sp).unwrap();
        let r = hamilton_reference(0.2, 0.6, 0.3, &b, &sp);
        assert!((f.log_rhs - r).abs() < 1e-10 * r.abs());
    }

    #[test]
    fn near_coincident_times_give_factor_near_one() {
        let b = ConstantsBundle::heat(1.0, 1.0, 1.0);
        for kind in SchemeKind::ALL {
            let sp = match kind {
                SchemeKind::LiYau => spec(kind, 2.0, 0.0, 0.1),
                SchemeKind::LiXu => spec(kind, 1.05, 1.0, 0.002),
                _ => spec(kind, 2.0, 0.1, 0.1),
            };
            let f = harnack_rhs(1.0, 1.0 + 1e-9, 0.0, &b, &sp).unwrap();
            assert!(f.rhs() >= 1.0 && f.rhs() < 1.0 + 1e-6, "{kind:?}");
        }
    }

    #[test]
    fn linear_quadratic_term_structure() {
        let b = ConstantsBundle::heat(1.0, 1.0, 1.0);
        let f = harnack_rhs(0.2, 0.8, 0.1, &b, &spec(SchemeKind::LinearLiXu, 2.0, 0.5, 0.1))
            .unwrap();
        assert!((f.quadratic - 0.25 * 0.5 / 1.9).abs() < 1e-12);
        let f = harnack_rhs(0.2, 0.8, 0.1, &b, &spec(SchemeKind::LiYau, 2.0, 0.0, 0.1)).unwrap();
        assert_eq!(f.quadratic, 0.0);
    }

    #[test]
    fn alpha_below_one_at_s1_is_rejected() {
        let b = ConstantsBundle::heat(1.0, 1.0, 1.0);
        let sp = spec(SchemeKind::Hamilton, 0.9, 0.1, 0.001);
        assert!(matches!(
            harnack_rhs(0.1, 0.2, 0.0, &b, &sp),
            Err(HarnackError::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn monotone_in_energy_span_and_constants(
            s1 in 0.05f64..1.0, ratio in 1.1f64..3.0, en in 0.0f64..5.0, de in 0.01f64..1.0,
            bump in 0.01f64..1.0, which in 0usize..5,
        ) {
            let mut b = ConstantsBundle::heat(1.0, 1.0, 0.9);
            b.lambda1 = 0.5; b.lambda2 = 0.5; b.lambda3 = 0.5; b.theta1 = 0.2;
            b.a = 0.2; b.b = 2.0; b.d1_tilde = 0.3; b.d2_tilde = 0.3; b.d0 = 0.3;
            for kind in SchemeKind::ALL {
                let sp = match kind {
                    SchemeKind::LiYau => spec(kind, 4.0, 0.0, 0.05),
                    SchemeKind::LiXu => spec(kind, 4.0, 0.5, 0.05),
                    _ => spec(kind, 4.0, 0.1, 0.05),
                };
                let s2 = s1 * ratio;
                let base = harnack_rhs(s1, s2, en, &b, &sp).unwrap().log_rhs;
                prop_assert!(harnack_rhs(s1, s2, en + de, &b, &sp).unwrap().log_rhs > base);
                // longer span at the same ratio
                let wide = harnack_rhs(s1 * 1.01, s2 * 1.01, en, &b, &sp).unwrap().log_rhs;
                if kind == SchemeKind::LiYau {
                    prop_assert!(wide > base);
                }
                let mut up = b.clone();
                match which {
                    0 => up.c1 += bump,
                    1 => up.a += bump,
                    2 => up.lambda1 += bump,
                    3 => up.theta1 += bump,
                    _ => up.d0 += bump,
                }
                prop_assert!(harnack_rhs(s1, s2, en, &up, &sp).unwrap().log_rhs > base);
            }
        }
    }
}
