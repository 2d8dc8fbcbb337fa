//! The end-to-end pipeline: manifold, solve, `J`, conditions, constants, checks.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::auxiliary::{self, jbar, j_sandwich_check, solve_j_system, Ball, JParams, JSolution};
use crate::config::{CheckKind, ExperimentConfig, InitialData, JModeConfig};
use crate::error::{Error, Result};
use crate::estimates::{
    self, check_gradient_estimate, compute_f, lemma_evolution_check, region_mask, sup_constants,
    theorem_bound, AuditEntry, ConstantsBundle, EstimateCheck, JMode, Provenance, C1_MIN,
};
use crate::geometry::{
    build_manifold, geodesic_distance, integral_curvature_sup, ManifoldGrid, ManifoldKind,
    ScalarField,
};
use crate::harnack::{check_harnack, HarnackCheck};
use crate::pde::{log_fields, solve, LogFields, Solution, TimeSettings};
use crate::schemes::{sample_times, validate_conditions, SchemeSpec};

/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

/// A solved run with everything the checks share.
#[derive(Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub grid: ManifoldGrid,
    pub spec: SchemeSpec,
    pub time: TimeSettings,
    pub solution: Solution,
    pub fields: LogFields,
    pub origin: usize,
    /// Geodesic distance from the origin.
    pub distance: Vec<f64>,
    /// `B(O, region.radius)`.
    pub region: Vec<bool>,
    pub t0: f64,
    /// Stored steps with `t ≥ t₀`.
    pub window: RangeInclusive<usize>,
    /// Present in exact mode, for the sandwich check and for calibrating `C`.
    pub j_solution: Option<JSolution>,
    pub kappa: f64,
    kappa_provenance: Provenance,
}

fn needs_j_solution(cfg: &ExperimentConfig) -> bool {
    cfg.j.mode == JModeConfig::Exact
        || cfg.constants.calibrate_c
        || cfg.checks.enabled.contains(&CheckKind::Sandwich)
}

fn needs_kappa(cfg: &ExperimentConfig) -> bool {
    cfg.j.mode == JModeConfig::Formula
        || cfg.constants.calibrate_c
        || cfg.checks.enabled.contains(&CheckKind::Sandwich)
}

fn initial_field(cfg: &ExperimentConfig, grid: &ManifoldGrid, origin: &[f64]) -> Result<ScalarField> {
    Ok(match &cfg.initial {
        InitialData::Constant { value } => grid.constant_field(*value),
        InitialData::Cosine {
            mean,
            amplitude,
            wavenumber,
            axis,
        } => {
            if *axis >= grid.dimension() {
                return Err(Error::Config(format!("cosine axis {axis} out of range")));
            }
            grid.field_from_fn(|x| mean + amplitude * (wavenumber * x[*axis]).cos())
        }
        InitialData::HeatKernel { center, tau, floor } => {
            let c = center.clone().unwrap_or_else(|| origin.to_vec());
            let n = grid.dimension() as f64;
            let norm = (4.0 * std::f64::consts::PI * tau).powf(-n / 2.0);
            let d2: Vec<f64> = if grid.kind() == ManifoldKind::FlatTorus {
                (0..grid.len())
                    .map(|k| {
                        let x = grid.coordinates(k);
                        grid.axes()
                            .iter()
                            .enumerate()
                            .map(|(i, a)| a.displacement(c[i], x[i]).powi(2))
                            .sum()
                    })
                    .collect()
            } else {
                let d = geodesic_distance(grid, grid.nearest_node(&c)?)?;
                d.values().iter().map(|v| v * v).collect()
            };
            grid.field(d2.iter().map(|&s| floor + norm * (-s / (4.0 * tau)).exp()).collect())?
        }
    })
}

/// Manifold, solves and region; no check is run.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let spec = config.scheme_spec();
    let grid = build_manifold(&config.manifold)?;

    let origin_x: Vec<f64> = match &config.region.origin {
        Some(o) => o.clone(),
        None => grid.axes().iter().map(|a| a.coordinate(a.nodes / 2)).collect(),
    };
    let origin = grid.nearest_node(&origin_x)?;
    let distance = geodesic_distance(&grid, origin)?.into_values();
    let region = region_mask(&grid, &distance, config.region.radius);

    let tc = &config.time;
    let probe = TimeSettings::new(1.0, tc.horizon);
    let dt = tc.dt.unwrap_or(tc.cfl_fraction * probe.cfl_limit(&grid));
    let time = TimeSettings::new(dt, tc.horizon)
        .store_every(tc.store_every)
        .starting_at(tc.t_start)
        .with_stepper(tc.stepper);

    let u0 = initial_field(config, &grid, &origin_x)?;
    let solution = solve(&grid, &u0, &config.pde, &time)?;
    let fields = log_fields(&solution.u, &grid)?;

    let stored_dt = solution.u.stored_dt();
    let t0 = tc.t0.unwrap_or(2.0 * stored_dt);
    let m = solution.u.num_steps();
    let first = (1..m)
        .find(|&i| solution.u.elapsed(i) >= t0 * (1.0 - 1e-12))
        .ok_or_else(|| Error::Config(format!("no stored step lies at or after t₀ = {t0}")))?;
    let window = first..=m - 1;

    let (kappa, kappa_provenance) = match config.constants.kappa {
        Some(k) => (k, Provenance::Override),
        None if needs_kappa(config) => {
            let r = config.j.radius.min(1.0);
            let v = integral_curvature_sup(&grid, config.j.p, r, config.j.stride)?;
            (v.value, Provenance::Measured)
        }
        None => (0.0, Provenance::NotNeeded),
    };

    let j_solution = if needs_j_solution(config) {
        let ball = if config.j.whole {
            Ball::Whole
        } else {
            Ball::Geodesic {
                origin,
                radius: config.j.radius,
            }
        };
        Some(solve_j_system(&grid, ball, spec.epsilon, &time)?)
    } else {
        None
    };

    Ok(Prepared {
        config: config.clone(),
        grid,
        spec,
        time,
        solution,
        fields,
        origin,
        distance,
        region,
        t0,
        window,
        j_solution,
        kappa,
        kappa_provenance,
    })
}

impl Prepared {
    pub fn j_params(&self, c: f64) -> JParams {
        JParams {
            radius: self.config.j.radius,
            kappa: self.kappa,
            epsilon: self.spec.epsilon,
            dimension: self.grid.dimension(),
            p: self.config.j.p,
            c,
        }
    }

    pub fn j_mode(&self, c: f64) -> Result<JMode<'_>> {
        Ok(match self.config.j.mode {
            JModeConfig::Unit => JMode::Unit,
            JModeConfig::Formula => JMode::Formula(self.j_params(c)),
            JModeConfig::Exact => JMode::Exact(
                self.j_solution
                    .as_ref()
                    .expect("exact mode always solves the J-system"),
            ),
        })
    }

    /// Smallest `C` with `J̄ ≤ min J` on every stored step.
    pub fn calibrate_c(&self) -> Result<f64> {
        let sol = self.j_solution.as_ref().ok_or_else(|| {
            Error::Config("calibrating C needs the solved J-system".into())
        })?;
        Ok(auxiliary::calibrate_c(
            sol,
            &self.j_params(1.0),
            C1_MIN,
            self.config.constants.c_max,
        )?)
    }

    fn resolve_c(&self) -> Result<(f64, Provenance)> {
        let cc = &self.config.constants;
        if let Some(c) = cc.c {
            return Ok((c, Provenance::Override));
        }
        if cc.calibrate_c {
            return Ok((self.calibrate_c()?, Provenance::Measured));
        }
        let needed = self.config.j.mode == JModeConfig::Formula
            || self.config.checks.enabled.contains(&CheckKind::Sandwich);
        if needed {
            return Err(Error::Config(
                "the closed-form J̄ needs constants.c or constants.calibrate_c".into(),
            ));
        }
        Ok((1.0, Provenance::NotNeeded))
    }

    /// Measured suprema plus `κ`, `C`, `T`, `J̄(T)` and the given `C₁`.
    pub fn bundle_with(&self, c: (f64, Provenance), c1: (f64, Provenance)) -> Result<ConstantsBundle> {
        let mut b = sup_constants(
            &self.solution.u,
            &self.grid,
            &self.config.pde,
            &self.region,
            self.window.clone(),
        )?;
        b.set("kappa", self.kappa, self.kappa_provenance);
        b.set("c", c.0, c.1);
        b.set("c1", c1.0, c1.1);
        b.set("horizon", self.solution.u.horizon(), Provenance::Formula);
        let m = self.solution.u.num_steps();
        let (jt, prov) = match self.j_mode(c.0)? {
            JMode::Unit => (1.0, Provenance::Formula),
            JMode::Exact(sol) => (sol.min_per_step()[m - 1].min(1.0), Provenance::Measured),
            JMode::Formula(p) => (
                jbar(self.solution.u.horizon(), &p).map_err(Error::Aux)?,
                Provenance::Formula,
            ),
        };
        b.set("jbar_horizon", jt, prov);
        b.validate()?;
        Ok(b)
    }

    pub fn estimate_check<'a>(
        &'a self,
        j: JMode<'a>,
        bundle: &'a ConstantsBundle,
    ) -> EstimateCheck<'a> {
        EstimateCheck {
            grid: &self.grid,
            fields: &self.fields,
            j,
            spec: self.spec,
            params: &self.config.pde,
            bundle,
            region: &self.region,
            t0: self.t0,
            tol_rel: self.config.tolerances.gradient_rel,
            bound_scale: 1.0,
        }
    }

    /// Smallest `C₁` in `[C1_MIN, constants.c1_max]` for which the gradient check passes.
    pub fn calibrate_c1(&self) -> Result<f64> {
        let c = self.resolve_c()?;
        let provisional = self.bundle_with(c, (1.0, Provenance::Override))?;
        let check = self.estimate_check(self.j_mode(c.0)?, &provisional);
        Ok(estimates::calibrate_c1(
            &[check],
            C1_MIN,
            self.config.constants.c1_max,
        )?)
    }

    /// The bundle with `C` and `C₁` resolved from the configuration.
    pub fn bundle(&self) -> Result<ConstantsBundle> {
        let c = self.resolve_c()?;
        let cc = &self.config.constants;
        let c1 = if cc.calibrate_c1 {
            (self.calibrate_c1()?, Provenance::Measured)
        } else {
            (cc.c1.unwrap_or(1.0), Provenance::Override)
        };
        self.bundle_with(c, c1)
    }

    fn lemma_region(&self) -> Vec<bool> {
        match (&self.config.j.mode, &self.j_solution) {
            (JModeConfig::Exact, Some(sol)) => self
                .region
                .iter()
                .zip(&sol.inside)
                .map(|(&r, &i)| r && i)
                .collect(),
            _ => self.region.clone(),
        }
    }

    fn location(&self, node: usize, step: Option<usize>) -> Location {
        Location {
            node,
            index: self.grid.multi_index(node),
            coordinates: self.grid.coordinates(node),
            step,
            time: step.map(|s| self.solution.u.elapsed(s)),
        }
    }
}

/// Where a check was closest to failing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub node: usize,
    pub index: [usize; 2],
    pub coordinates: [f64; 2],
    pub step: Option<usize>,
    pub time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Positive when satisfied; `None` when the check has no scalar margin.
    pub worst_margin: Option<f64>,
    pub location: Option<Location>,
    /// Time of the worst margin when there is no spatial location.
    pub worst_time: Option<f64>,
    pub tolerance: f64,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub kind: ManifoldKind,
    pub nodes: usize,
    pub h_max: f64,
    pub dt: f64,
    pub stored_dt: f64,
    pub stored_steps: usize,
    pub t0: f64,
    pub horizon: f64,
    pub origin: Location,
    pub region_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub name: String,
    pub config: ExperimentConfig,
    pub grid: GridSummary,
    pub scheme: SchemeSpec,
    pub j_mode: JModeConfig,
    pub checks: Vec<CheckEntry>,
    pub constants: ConstantsBundle,
    pub audit: Vec<AuditEntry>,
    pub all_passed: bool,
}

/// One line of `diagnostics.csv`; `NaN` where a quantity is undefined (e.g. `t = 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub max_f: f64,
    pub bound: f64,
    pub margin: f64,
    pub jbar: f64,
    pub min_j: f64,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: VerificationReport,
    pub diagnostics: Vec<DiagnosticRow>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn diagnostics(p: &Prepared, j: &JMode, bundle: &ConstantsBundle) -> Result<Vec<DiagnosticRow>> {
    let jbars = j.jbar_per_step(&p.fields)?;
    let mins = p.j_solution.as_ref().map(JSolution::min_per_step);
    let mut rows = Vec::with_capacity(jbars.len());
    for (step, &jb) in jbars.iter().enumerate() {
        let t = p.solution.u.elapsed(step);
        let max_f = if t > 0.0 {
            compute_f(&p.grid, &p.fields, j, &p.spec, &p.config.pde, step)
                .map(|f| {
                    f.iter()
                        .zip(&p.region)
                        .filter(|(_, &r)| r)
                        .fold(f64::NEG_INFINITY, |m, (&v, _)| m.max(v))
                })
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let bound = theorem_bound(t, bundle, &p.spec, jb)
            .map(|b| b.total)
            .unwrap_or(f64::NAN);
        rows.push(DiagnosticRow {
            t,
            max_f,
            bound,
            margin: bound - max_f,
            jbar: jb,
            min_j: mins.as_ref().map_or(jb, |m| m[step]),
        });
    }
    Ok(rows)
}

fn run_check(p: &Prepared, kind: CheckKind, j: &JMode, bundle: &ConstantsBundle) -> Result<CheckEntry> {
    let name = kind.name().to_string();
    Ok(match kind {
        CheckKind::Conditions => {
            let times = sample_times(
                p.t0,
                p.solution.u.horizon(),
                p.config.tolerances.condition_samples,
            );
            let (report, rate) = match j {
                JMode::Unit => (validate_conditions(&p.spec, &times, |_| 1.0, 0.0)?, 0.0),
                JMode::Formula(jp) => (
                    validate_conditions(
                        &p.spec,
                        &times,
                        |t| jbar(t, jp).unwrap_or(f64::NAN),
                        jp.rate(),
                    )?,
                    jp.rate(),
                ),
                JMode::Exact(sol) => {
                    let mins: Vec<f64> = sol.min_per_step().into_iter().map(|v| v.min(1.0)).collect();
                    let u = &p.solution.u;
                    let interp = |t: f64| {
                        let s = (t / u.stored_dt()).clamp(0.0, (mins.len() - 1) as f64);
                        let i = (s.floor() as usize).min(mins.len() - 2);
                        let w = s - i as f64;
                        (1.0 - w) * mins[i] + w * mins[i + 1]
                    };
                    (validate_conditions(&p.spec, &times, interp, 0.0)?, 0.0)
                }
            };
            let worst = report
                .entries
                .iter()
                .filter(|e| !e.informational)
                .min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin))
                .expect("condition report has entries");
            CheckEntry {
                name,
                passed: report.all_passed(),
                worst_margin: finite(worst.worst_margin),
                location: None,
                worst_time: finite(worst.worst_time),
                tolerance: worst.tolerance,
                details: json!({ "worst_condition": worst.name, "jbar_rate": rate, "report": report }),
            }
        }
        CheckKind::Sandwich => {
            let sol = p.j_solution.as_ref().expect("sandwich check solves the J-system");
            let tol = p.config.tolerances.sandwich_upper;
            let r = j_sandwich_check(sol, &p.j_params(bundle.c), tol)?;
            let margin = (-r.lower_violation).min(tol - r.upper_violation);
            CheckEntry {
                name,
                passed: r.passed,
                worst_margin: finite(margin),
                location: None,
                worst_time: Some(sol.j.elapsed(r.lower_step)),
                tolerance: tol,
                details: json!({ "c": bundle.c, "report": r }),
            }
        }
        CheckKind::Gradient => {
            let g = check_gradient_estimate(&p.estimate_check(*j, bundle))?;
            let worst = g.rows.iter().find(|r| r.step == g.worst_step);
            CheckEntry {
                name,
                passed: g.passed,
                worst_margin: finite(-g.worst_excess),
                location: Some(p.location(g.worst_node, Some(g.worst_step))),
                worst_time: Some(g.worst_time),
                tolerance: g.tol_abs,
                details: json!({
                    "scale": g.scale,
                    "c1": bundle.c1,
                    "max_f_at_worst": worst.map(|r| r.max_f),
                    "bound_at_worst": worst.map(|r| r.bound),
                    "steps_checked": g.rows.len(),
                }),
            }
        }
        CheckKind::Lemma => {
            let region = p.lemma_region();
            let r = lemma_evolution_check(
                &p.grid,
                &p.fields,
                j,
                &p.spec,
                &p.config.pde,
                &region,
                p.config.checks.lemma_form,
            )?;
            CheckEntry {
                name,
                passed: r.passed,
                worst_margin: finite(r.min_residual),
                location: Some(p.location(r.argmin_node, Some(r.argmin_step))),
                worst_time: Some(p.solution.u.elapsed(r.argmin_step)),
                tolerance: r.tolerance,
                details: json!({
                    "form": r.form,
                    "scale": r.scale,
                    "negative_excursion": r.negative_excursion,
                    "steps_checked": r.steps.len(),
                }),
            }
        }
        CheckKind::Harnack => {
            let mut sampling = p.config.checks.harnack;
            sampling.seed = p.config.seed;
            let r = check_harnack(&HarnackCheck {
                grid: &p.grid,
                u: &p.solution.u,
                spec: p.spec,
                bundle,
                region: &p.region,
                t0: p.t0,
                sampling,
                invert: false,
            })?;
            CheckEntry {
                name,
                passed: r.passed,
                worst_margin: finite(-r.worst_excess),
                location: Some(p.location(r.worst_pair.y1, None)),
                worst_time: Some(r.worst_pair.s1),
                tolerance: r.tolerance,
                details: json!({
                    "pair": r.worst_pair,
                    "y2": p.location(r.worst_pair.y2, None),
                    "factor": r.worst_factor,
                    "energy": r.worst_energy,
                    "pairs_checked": r.pairs_checked,
                }),
            }
        }
    })
}

/// Runs every enabled check on a prepared run.
pub fn run_prepared(p: &Prepared) -> Result<Experiment> {
    let bundle = p.bundle()?;
    let j = p.j_mode(bundle.c)?;
    let checks = p
        .config
        .checks
        .enabled
        .iter()
        .map(|&k| run_check(p, k, &j, &bundle))
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = diagnostics(p, &j, &bundle)?;
    let u = &p.solution.u;
    let report = VerificationReport {
        schema_version: SCHEMA_VERSION,
        name: p.config.name.clone(),
        config: p.config.clone(),
        grid: GridSummary {
            kind: p.grid.kind(),
            nodes: p.grid.len(),
            h_max: p.grid.max_physical_spacing(),
            dt: p.solution.dt,
            stored_dt: u.stored_dt(),
            stored_steps: u.num_steps(),
            t0: p.t0,
            horizon: u.horizon(),
            origin: p.location(p.origin, None),
            region_nodes: p.region.iter().filter(|&&r| r).count(),
        },
        scheme: p.spec,
        j_mode: p.config.j.mode,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
        audit: bundle.audit(),
        constants: bundle,
    };
    Ok(Experiment {
        report,
        diagnostics,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    run_prepared(&prepare(config)?)
}
