use serde::{Deserialize, Serialize};

use crate::geometry::operators::{grad_inner_into, laplacian_into};
use crate::geometry::ManifoldGrid;
use crate::pde::{b_functions, log_power, LogFields, PdeParams};
use crate::schemes::SchemeSpec;

use super::check::{f_terms_at_step, FTerms, JMode};
use super::{discretization_tolerance, EstimateError};

/// Which right-hand side the evolution inequality is checked against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaForm {
    /// The evolution inequality plus `[2(2−ε)φJ/n − α′]F/α`; valid at every node.
    #[default]
    WithFTerm,
    /// The short inequality without that term, checked only where `F ≥ 0`.
    Displayed,
}

/// Discrete `(Δ − ∂_t)F − RHS` on the checked nodes of the checked steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub form: LemmaForm,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// One row per checked step; `NaN` on nodes that are not checked.
    pub residual: Vec<Vec<f64>>,
    pub min_residual: f64,
    pub argmin_node: usize,
    pub argmin_step: usize,
    pub tolerance: f64,
    pub scale: f64,
    /// `max(0, −min_residual)`.
    pub negative_excursion: f64,
    pub passed: bool,
}

/// Pointwise check of the evolution inequality for `F`.
///
/// A node is checked when it and all its neighbours lie in `region` and are interior, so
/// that every difference stencil reads valid values. Steps are the stored ones strictly
/// inside the run (centred `F_t`) and after the first.
pub fn lemma_evolution_check(
    grid: &ManifoldGrid,
    fields: &LogFields,
    j: &JMode,
    spec: &SchemeSpec,
    params: &PdeParams,
    region: &[bool],
    form: LemmaForm,
) -> Result<LemmaReport, EstimateError> {
    fields.f.belongs_to(grid)?;
    let m = fields.f.num_steps();
    if m < 4 {
        return Err(EstimateError::Shape(format!(
            "the evolution check needs at least 4 stored steps, found {m}"
        )));
    }
    let n_nodes = grid.len();
    let dim = grid.dimension();
    let ok = |k: usize| region[k] && grid.is_interior(k);
    let checked: Vec<bool> = (0..n_nodes)
        .map(|k| {
            ok(k)
                && (0..dim).all(|ax| {
                    [true, false]
                        .iter()
                        .all(|&fw| grid.neighbor(k, ax, fw).is_some_and(ok))
                })
        })
        .collect();

    let jbars = j.jbar_per_step(fields)?;
    let f_at = |step: usize| -> Result<Vec<FTerms>, EstimateError> {
        f_terms_at_step(grid, fields, j, jbars[step], spec, params, step)
    };
    let dt = fields.f.stored_dt();
    let n = spec.n();
    let eps = spec.epsilon;
    let e = 2.0 - eps;
    let a = params.a;
    let b = params.b;
    let q_on = !params.potential.is_zero() && !params.nonlinearity.is_zero();

    let mut lap_big_f = vec![0.0; n_nodes];
    let mut grad_f_big_f = vec![0.0; n_nodes];
    let mut lap_fb = vec![0.0; n_nodes];
    let mut grad_f_qb = vec![0.0; n_nodes];
    let mut lap_q = vec![0.0; n_nodes];
    let mut lap_b = vec![0.0; n_nodes];
    let mut grad_q_b = vec![0.0; n_nodes];

    let mut prev = f_at(1)?;
    let mut cur = f_at(2)?;
    let mut report = LemmaReport {
        form,
        steps: Vec::new(),
        times: Vec::new(),
        residual: Vec::new(),
        min_residual: f64::INFINITY,
        argmin_node: 0,
        argmin_step: 0,
        tolerance: 0.0,
        scale: 0.0,
        negative_excursion: 0.0,
        passed: true,
    };
    let mut scale = 0.0f64;
    for step in 2..m - 1 {
        let next = f_at(step + 1)?;
        let t = fields.f.elapsed(step);
        let ap = spec.alpha_phi(t, jbars[step])?;
        let alpha = ap.alpha;
        let big_f: Vec<f64> = cur.iter().map(FTerms::value).collect();
        let f = fields.f.step(step);
        laplacian_into(grid, &big_f, &mut lap_big_f);
        grad_inner_into(grid, f, &big_f, &mut grad_f_big_f);
        if a != 0.0 {
            let fb: Vec<f64> = f.iter().map(|&v| log_power(v, b)).collect();
            laplacian_into(grid, &fb, &mut lap_fb);
        }
        let mut b_vals = Vec::new();
        let mut q = Vec::new();
        if q_on {
            q = params.potential.sample(grid, fields.f.times()[step]).into_values();
            b_vals = f.iter().map(|&v| b_functions(v.exp(), params).b).collect();
            let qb: Vec<f64> = q.iter().zip(&b_vals).map(|(x, y)| x * y).collect();
            grad_inner_into(grid, f, &qb, &mut grad_f_qb);
            laplacian_into(grid, &q, &mut lap_q);
            laplacian_into(grid, &b_vals, &mut lap_b);
            grad_inner_into(grid, &q, &b_vals, &mut grad_q_b);
        }

        let mut row = vec![f64::NAN; n_nodes];
        for k in (0..n_nodes).filter(|&k| checked[k]) {
            let bf = big_f[k];
            if form == LemmaForm::Displayed && bf < 0.0 {
                continue;
            }
            let jv = j.at(step, k, jbars[step]);
            let g2 = fields.grad_sq.at(step, k);
            let f_t_big = (next[k].value() - prev[k].value()) / (2.0 * dt);
            let lhs = lap_big_f[k] - f_t_big;
            let c = e * jv / (n * alpha * alpha);
            let mut terms = vec![
                c * bf * bf,
                2.0 * c * (alpha - jv) * bf * g2,
                c * (jv - alpha).powi(2) * g2 * g2,
                -2.0 * grad_f_big_f[k],
                -eps * jv * g2 * g2,
            ];
            if a != 0.0 {
                terms.push(2.0 * a * (alpha - jv) * b * log_power(f[k], b - 1.0) * g2);
                terms.push(a * alpha * lap_fb[k]);
            }
            if q_on {
                terms.push(2.0 * (alpha - jv) * grad_f_qb[k]);
                terms.push(alpha * b_vals[k] * lap_q[k]);
                terms.push(alpha * q[k] * lap_b[k]);
                terms.push(2.0 * alpha * grad_q_b[k]);
            }
            if form == LemmaForm::WithFTerm {
                terms.push((2.0 * e * ap.phi * jv / n - ap.alpha_prime) * bf / alpha);
            }
            let rhs: f64 = terms.iter().sum();
            scale = terms
                .iter()
                .chain([lap_big_f[k], f_t_big].iter())
                .fold(scale, |s, v| s.max(v.abs()));
            let r = lhs - rhs;
            row[k] = r;
            if r < report.min_residual {
                report.min_residual = r;
                report.argmin_node = k;
                report.argmin_step = step;
            }
        }
        report.steps.push(step);
        report.times.push(t);
        report.residual.push(row);
        prev = std::mem::replace(&mut cur, next);
    }
    report.scale = scale;
    report.tolerance = discretization_tolerance(grid, dt, scale);
    if report.min_residual.is_finite() {
        report.negative_excursion = (-report.min_residual).max(0.0);
        report.passed = report.min_residual >= -report.tolerance;
    }
    Ok(report)
}
