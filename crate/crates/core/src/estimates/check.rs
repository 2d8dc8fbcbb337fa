use serde::{Serialize, Serializer};

use crate::auxiliary::{jbar, JParams, JSolution};
use crate::geometry::ManifoldGrid;
use crate::pde::{log_power, LogFields, PdeParams};
use crate::schemes::SchemeSpec;

use super::{theorem_bound, ConstantsBundle, EstimateError};

/// Default bisection interval for `C₁`.
pub const C1_MIN: f64 = 1e-6;
pub const C1_MAX: f64 = 1e3;

/// Which `J` enters `F` and the bound.
#[derive(Clone, Copy, Debug)]
pub enum JMode<'a> {
    /// `J ≡ 1`, the undamped quantity.
    Unit,
    /// The solved `J` pointwise, with `J̄(t) := min_x J(x, t)`.
    Exact(&'a JSolution),
    /// `J ≡ J̄(t)` from the closed form.
    Formula(JParams),
}

impl Serialize for JMode<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl JMode<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            JMode::Unit => "unit",
            JMode::Exact(_) => "exact",
            JMode::Formula(_) => "formula",
        }
    }

    /// Per-step `J̄` used by `φ` and the bound.
    pub(crate) fn jbar_per_step(&self, fields: &LogFields) -> Result<Vec<f64>, EstimateError> {
        let m = fields.f.num_steps();
        match self {
            JMode::Unit => Ok(vec![1.0; m]),
            JMode::Exact(sol) => {
                if sol.j.num_steps() != m || sol.j.grid_id() != fields.f.grid_id() {
                    return Err(EstimateError::Shape(format!(
                        "J has {} stored steps, u has {m}",
                        sol.j.num_steps()
                    )));
                }
                Ok(sol.min_per_step().into_iter().map(|v| v.min(1.0)).collect())
            }
            JMode::Formula(p) => (0..m)
                .map(|i| jbar(fields.f.elapsed(i), p).map_err(|e| EstimateError::Domain(e.to_string())))
                .collect(),
        }
    }

    pub(crate) fn at(&self, step: usize, node: usize, jbar: f64) -> f64 {
        match self {
            JMode::Exact(sol) => sol.j.at(step, node),
            _ => jbar,
        }
    }
}

/// The summands of `F` at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct FTerms {
    pub j_grad: f64,
    pub alpha_ft: f64,
    pub reaction: f64,
    pub potential: f64,
    pub alpha_phi: f64,
}

impl FTerms {
    pub fn value(&self) -> f64 {
        self.j_grad - self.alpha_ft + self.reaction + self.potential - self.alpha_phi
    }

    pub fn max_abs(&self) -> f64 {
        [self.j_grad, self.alpha_ft, self.reaction, self.potential, self.alpha_phi]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn f_terms_at_step(
    grid: &ManifoldGrid,
    fields: &LogFields,
    j: &JMode,
    jbar: f64,
    spec: &SchemeSpec,
    params: &PdeParams,
    step: usize,
) -> Result<Vec<FTerms>, EstimateError> {
    fields.f.belongs_to(grid)?;
    if step >= fields.f.num_steps() {
        return Err(EstimateError::Shape(format!(
            "step {step} out of {} stored steps",
            fields.f.num_steps()
        )));
    }
    let t = fields.f.elapsed(step);
    let ap = spec.alpha_phi(t, jbar)?;
    let alpha = ap.alpha;
    let q_on = !params.potential.is_zero() && !params.nonlinearity.is_zero();
    let q = q_on.then(|| params.potential.sample(grid, fields.f.times()[step]).into_values());
    Ok((0..grid.len())
        .map(|k| {
            let f = fields.f.at(step, k);
            let reaction = if params.a != 0.0 {
                params.a * alpha * log_power(f, params.b)
            } else {
                0.0
            };
            let potential = match &q {
                Some(q) => {
                    let u = f.exp();
                    alpha * q[k] * params.nonlinearity.value(u) / u
                }
                None => 0.0,
            };
            FTerms {
                j_grad: j.at(step, k, jbar) * fields.grad_sq.at(step, k),
                alpha_ft: alpha * fields.f_t.at(step, k),
                reaction,
                potential,
                alpha_phi: alpha * ap.phi,
            }
        })
        .collect())
}

/// `F = J|∇f|² − αf_t + aαf^b + αqB − αφ` at one stored step.
pub fn compute_f(
    grid: &ManifoldGrid,
    fields: &LogFields,
    j: &JMode,
    spec: &SchemeSpec,
    params: &PdeParams,
    step: usize,
) -> Result<Vec<f64>, EstimateError> {
    let jbars = j.jbar_per_step(fields)?;
    let jb = *jbars.get(step).ok_or_else(|| {
        EstimateError::Shape(format!("step {step} out of {} stored steps", jbars.len()))
    })?;
    Ok(f_terms_at_step(grid, fields, j, jb, spec, params, step)?
        .iter()
        .map(FTerms::value)
        .collect())
}

/// `10·(h² + Δt²)·scale`.
pub fn discretization_tolerance(grid: &ManifoldGrid, dt: f64, scale: f64) -> f64 {
    let h = grid.max_physical_spacing();
    10.0 * (h * h + dt * dt) * scale
}

/// Inputs of one gradient-estimate check.
#[derive(Clone, Copy, Debug)]
pub struct EstimateCheck<'a> {
    pub grid: &'a ManifoldGrid,
    pub fields: &'a LogFields,
    pub j: JMode<'a>,
    pub spec: SchemeSpec,
    pub params: &'a PdeParams,
    pub bundle: &'a ConstantsBundle,
    /// Nodes of `B(O, 1/2)`.
    pub region: &'a [bool],
    /// Start of the window; steps with elapsed time below this are skipped.
    pub t0: f64,
    pub tol_rel: f64,
    /// Multiplies the bound; 1 except in harness self-tests.
    pub bound_scale: f64,
}

/// One time row of a gradient check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDiagnostic {
    pub step: usize,
    pub t: f64,
    pub max_f: f64,
    pub argmax_node: usize,
    pub bound: f64,
    pub jbar: f64,
    /// `bound − max_f`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCheck {
    pub passed: bool,
    /// Largest `F − Bound − tol_rel·|Bound|` over region × window.
    pub worst_excess: f64,
    pub worst_node: usize,
    pub worst_step: usize,
    pub worst_time: f64,
    pub tol_abs: f64,
    pub scale: f64,
    pub rows: Vec<StepDiagnostic>,
}

/// Everything about a run that does not depend on `C₁`.
struct FSummary {
    rows: Vec<(usize, f64, f64, usize, f64)>, // step, t, max F, argmax, J̄
    tol_abs: f64,
    scale: f64,
}

fn summarise(c: &EstimateCheck) -> Result<FSummary, EstimateError> {
    let jbars = c.j.jbar_per_step(c.fields)?;
    let m = c.fields.f.num_steps();
    let mut rows = Vec::new();
    let mut scale = 0.0f64;
    for step in 1..m {
        let t = c.fields.f.elapsed(step);
        if t < c.t0 * (1.0 - 1e-12) {
            continue;
        }
        let terms = f_terms_at_step(c.grid, c.fields, &c.j, jbars[step], &c.spec, c.params, step)?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, term) in terms.iter().enumerate().filter(|(k, _)| c.region[*k]) {
            let v = term.value();
            scale = scale.max(term.max_abs());
            if v > best.0 {
                best = (v, k);
            }
        }
        if best.0 == f64::NEG_INFINITY {
            return Err(EstimateError::Shape("the check region is empty".into()));
        }
        rows.push((step, t, best.0, best.1, jbars[step]));
    }
    if rows.is_empty() {
        return Err(EstimateError::Shape(format!(
            "no stored step lies in the window t ≥ {}",
            c.t0
        )));
    }
    let tol_abs = discretization_tolerance(c.grid, c.fields.f.stored_dt(), scale);
    Ok(FSummary { rows, tol_abs, scale })
}

fn evaluate(
    c: &EstimateCheck,
    s: &FSummary,
    bundle: &ConstantsBundle,
) -> Result<GradientCheck, EstimateError> {
    let mut out = GradientCheck {
        passed: true,
        worst_excess: f64::NEG_INFINITY,
        worst_node: 0,
        worst_step: 0,
        worst_time: 0.0,
        tol_abs: s.tol_abs,
        scale: s.scale,
        rows: Vec::with_capacity(s.rows.len()),
    };
    for &(step, t, max_f, node, jb) in &s.rows {
        let bound = c.bound_scale * theorem_bound(t, bundle, &c.spec, jb)?.total;
        let excess = max_f - bound - c.tol_rel * bound.abs();
        if excess > out.worst_excess {
            out.worst_excess = excess;
            out.worst_node = node;
            out.worst_step = step;
            out.worst_time = t;
        }
        out.rows.push(StepDiagnostic {
            step,
            t,
            max_f,
            argmax_node: node,
            bound,
            jbar: jb,
            margin: bound - max_f,
        });
    }
    out.passed = out.worst_excess <= s.tol_abs;
    Ok(out)
}

/// `max(F − Bound)` over region × window against the discretization tolerance.
pub fn check_gradient_estimate(c: &EstimateCheck) -> Result<GradientCheck, EstimateError> {
    let s = summarise(c)?;
    evaluate(c, &s, c.bundle)
}

/// Smallest `C₁ ∈ [c_min, c_max]` (to bisection precision) making every run pass.
pub fn calibrate_c1(runs: &[EstimateCheck], c_min: f64, c_max: f64) -> Result<f64, EstimateError> {
    let summaries = runs.iter().map(summarise).collect::<Result<Vec<_>, _>>()?;
    let passes = |c1: f64| -> Result<bool, EstimateError> {
        for (run, s) in runs.iter().zip(&summaries) {
            let mut b = run.bundle.clone();
            b.c1 = c1;
            if !evaluate(run, s, &b)?.passed {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if passes(c_min)? {
        return Ok(c_min);
    }
    if !passes(c_max)? {
        return Err(EstimateError::CalibrationFailed { c1_max: c_max });
    }
    let (mut lo, mut hi) = (c_min, c_max);
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldSpec};
    use crate::pde::{log_fields, solve, TimeSettings};
    use crate::schemes::SchemeKind;
    use std::f64::consts::PI;

    fn circle(n: usize) -> ManifoldGrid {
        build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![n],
            lengths: vec![2.0 * PI],
        })
        .unwrap()
    }

    fn liyau(alpha: f64, eps: f64) -> SchemeSpec {
        SchemeSpec {
            kind: SchemeKind::LiYau,
            delta: alpha,
            rate: 0.0,
            epsilon: eps,
            lambda: 10.0,
            dimension: 1,
        }
    }

    fn heat_run(n: usize, u0: impl Fn([f64; 2]) -> f64) -> (ManifoldGrid, LogFields) {
        let g = circle(n);
        let h = 2.0 * PI / n as f64;
        let sol = solve(
            &g,
            &g.field_from_fn(u0),
            &PdeParams::heat(),
            &TimeSettings::new(0.2 * h * h, 1.0).store_every(10),
        )
        .unwrap();
        let lf = log_fields(&sol.u, &g).unwrap();
        (g, lf)
    }

    #[test]
    fn constant_solution_gives_minus_alpha_phi() {
        let (g, lf) = heat_run(32, |_| 3.0);
        let spec = liyau(2.0, 0.1);
        let f = compute_f(&g, &lf, &JMode::Unit, &spec, &PdeParams::heat(), 3).unwrap();
        let phi = 1.0 / (1.9 * 2.0);
        assert!(f.iter().all(|&v| (v + 2.0 * phi).abs() < 1e-12));
    }

    #[test]
    fn classical_quantity_and_phi_linearity() {
        let (g, lf) = heat_run(64, |x| 2.0 + x[0].cos());
        let p = PdeParams::heat();
        let spec = liyau(1.0, 0.1);
        let terms = f_terms_at_step(&g, &lf, &JMode::Unit, 1.0, &spec, &p, 10).unwrap();
        for (k, t) in terms.iter().enumerate() {
            let classical = lf.grad_sq.at(10, k) - lf.f_t.at(10, k);
            assert!((t.value() + t.alpha_phi - classical).abs() < 1e-12);
        }
        // halving J̄ doubles φ and lowers F by exactly αφ
        let half = f_terms_at_step(&g, &lf, &JMode::Formula(JParams {
            radius: 1.0,
            kappa: 0.0,
            epsilon: 0.1,
            dimension: 1,
            p: 1.0,
            c: 1.0,
        }), 0.5, &spec, &p, 10)
        .unwrap();
        for (a, b) in terms.iter().zip(&half) {
            assert!((b.alpha_phi - 2.0 * a.alpha_phi).abs() < 1e-12);
        }
    }

    fn check<'a>(
        g: &'a ManifoldGrid,
        lf: &'a LogFields,
        p: &'a PdeParams,
        bundle: &'a ConstantsBundle,
        region: &'a [bool],
        scale: f64,
    ) -> EstimateCheck<'a> {
        EstimateCheck {
            grid: g,
            fields: lf,
            j: JMode::Unit,
            spec: liyau(2.0, 0.1),
            params: p,
            bundle,
            region,
            t0: 2.0 * lf.f.stored_dt(),
            tol_rel: 0.0,
            bound_scale: scale,
        }
    }

    #[test]
    fn heat_run_passes_and_corrupted_bound_fails() {
        let (g, lf) = heat_run(64, |x| 2.0 + x[0].cos());
        let p = PdeParams::heat();
        let bundle = ConstantsBundle::heat(1.0, 1.0, 1.0);
        let region = vec![true; g.len()];
        let ok = check_gradient_estimate(&check(&g, &lf, &p, &bundle, &region, 1.0)).unwrap();
        assert!(ok.passed && ok.worst_excess < 0.0);
        assert!(ok.rows.iter().all(|r| r.margin > 0.0));
        // a narrow peak pushes F close to the 1/t term
        let (g, lf) = heat_run(128, |x| 1e-3 + (-(x[0] - PI).powi(2) / 0.02).exp());
        let region = vec![true; g.len()];
        let ok = check_gradient_estimate(&check(&g, &lf, &p, &bundle, &region, 1.0)).unwrap();
        let bad = check_gradient_estimate(&check(&g, &lf, &p, &bundle, &region, 1e-3)).unwrap();
        assert!(ok.passed);
        assert!(!bad.passed);
    }

    #[test]
    fn calibration_properties() {
        let p = PdeParams::heat();
        let bundle = ConstantsBundle::heat(1.0, 1.0, 1.0);
        let (g1, lf1) = heat_run(64, |_| 2.0);
        let r1 = vec![true; g1.len()];
        let flat = check(&g1, &lf1, &p, &bundle, &r1, 1.0);
        assert_eq!(calibrate_c1(&[flat], C1_MIN, C1_MAX).unwrap(), C1_MIN);

        let (g2, lf2) = heat_run(128, |x| 1e-3 + (-(x[0] - PI).powi(2) / 0.02).exp());
        let r2 = vec![true; g2.len()];
        let mut peak = check(&g2, &lf2, &p, &bundle, &r2, 1.0);
        // bound scaled down so that calibration has to work
        peak.bound_scale = 0.5;
        let both = calibrate_c1(&[flat, peak], C1_MIN, C1_MAX).unwrap();
        let one = calibrate_c1(&[peak], C1_MIN, C1_MAX).unwrap();
        assert!(both > C1_MIN);
        assert!(one <= both);
        let mut b = bundle.clone();
        b.c1 = both;
        let mut at = peak;
        at.bundle = &b;
        assert!(check_gradient_estimate(&at).unwrap().passed);
        assert!(matches!(
            calibrate_c1(&[peak], C1_MIN, both * 0.5),
            Err(EstimateError::CalibrationFailed { .. })
        ));
    }
}
