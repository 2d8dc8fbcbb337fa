use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::operators::{grad_inner_into, laplacian_into};
use crate::geometry::ManifoldGrid;
use crate::pde::{b_functions, is_nonneg_integer, log_power, PdeParams, SpaceTimeField};

use super::EstimateError;

/// Where a constant came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Grid maximum over the solved run.
    Measured,
    /// Closed-form evaluation.
    Formula,
    /// Supplied by configuration or calibration.
    Override,
    /// Undefined for this run and multiplied by zero wherever it appears.
    NotNeeded,
}

/// Every scalar the bound and the Harnack factors depend on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub a: f64,
    pub b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d0_tilde: f64,
    pub d1_tilde: f64,
    pub d2_tilde: f64,
    /// The Harnack displays' `D₀`, taken equal to `D̃₀`.
    pub d0: f64,
    pub kappa: f64,
    pub c: f64,
    pub c1: f64,
    pub horizon: f64,
    pub jbar_horizon: f64,
    pub provenance: BTreeMap<String, Provenance>,
}

/// One line of the constants audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

impl ConstantsBundle {
    /// A bundle for the plain heat equation with the given curvature-side constants.
    pub fn heat(c1: f64, horizon: f64, jbar_horizon: f64) -> Self {
        let mut b = ConstantsBundle {
            a: 0.0,
            b: 1.0,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
            d1: 1.0,
            d2: 1.0,
            d0_tilde: 0.0,
            d1_tilde: 0.0,
            d2_tilde: 0.0,
            d0: 0.0,
            kappa: 0.0,
            c: 1.0,
            c1,
            horizon,
            jbar_horizon,
            provenance: BTreeMap::new(),
        };
        for name in Self::NAMES {
            b.provenance.insert(name.to_string(), Provenance::Override);
        }
        b
    }

    pub const NAMES: [&'static str; 19] = [
        "a", "b", "lambda1", "lambda2", "lambda3", "theta1", "theta2", "theta3", "d1", "d2",
        "d0_tilde", "d1_tilde", "d2_tilde", "d0", "kappa", "c", "c1", "horizon", "jbar_horizon",
    ];

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "a" => self.a,
            "b" => self.b,
            "lambda1" => self.lambda1,
            "lambda2" => self.lambda2,
            "lambda3" => self.lambda3,
            "theta1" => self.theta1,
            "theta2" => self.theta2,
            "theta3" => self.theta3,
            "d1" => self.d1,
            "d2" => self.d2,
            "d0_tilde" => self.d0_tilde,
            "d1_tilde" => self.d1_tilde,
            "d2_tilde" => self.d2_tilde,
            "d0" => self.d0,
            "kappa" => self.kappa,
            "c" => self.c,
            "c1" => self.c1,
            "horizon" => self.horizon,
            "jbar_horizon" => self.jbar_horizon,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64, provenance: Provenance) {
        let slot = match name {
            "a" => &mut self.a,
            "b" => &mut self.b,
            "lambda1" => &mut self.lambda1,
            "lambda2" => &mut self.lambda2,
            "lambda3" => &mut self.lambda3,
            "theta1" => &mut self.theta1,
            "theta2" => &mut self.theta2,
            "theta3" => &mut self.theta3,
            "d1" => &mut self.d1,
            "d2" => &mut self.d2,
            "d0_tilde" => &mut self.d0_tilde,
            "d1_tilde" => &mut self.d1_tilde,
            "d2_tilde" => &mut self.d2_tilde,
            "d0" => &mut self.d0,
            "kappa" => &mut self.kappa,
            "c" => &mut self.c,
            "c1" => &mut self.c1,
            "horizon" => &mut self.horizon,
            "jbar_horizon" => &mut self.jbar_horizon,
            _ => return,
        };
        *slot = value;
        self.provenance.insert(name.to_string(), provenance);
    }

    pub fn audit(&self) -> Vec<AuditEntry> {
        Self::NAMES
            .iter()
            .map(|&name| AuditEntry {
                name: name.to_string(),
                value: self.get(name).unwrap_or(f64::NAN),
                provenance: self
                    .provenance
                    .get(name)
                    .copied()
                    .unwrap_or(Provenance::Override),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let nonneg = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("d0_tilde", self.d0_tilde),
            ("d1_tilde", self.d1_tilde),
            ("d2_tilde", self.d2_tilde),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(EstimateError::Bundle(format!("{name} = {v} must be nonnegative")));
        }
        if !(self.d2 >= self.d1 && self.d1 > 0.0) {
            return Err(EstimateError::Bundle(format!(
                "need D₂ ≥ D₁ > 0, got D₁ = {}, D₂ = {}",
                self.d1, self.d2
            )));
        }
        if !(self.jbar_horizon > 0.0 && self.jbar_horizon <= 1.0) {
            return Err(EstimateError::Bundle(format!(
                "J̄(T) = {} must lie in (0, 1]",
                self.jbar_horizon
            )));
        }
        Ok(())
    }
}

/// `D̃_i = max{|(log D₁)^{b−i}|, |(log D₂)^{b−i}|}`.
///
/// Returns `None` where the power is undefined: a non-integer exponent on a non-positive
/// logarithm, or a negative exponent on a zero logarithm.
pub fn d_tilde(d1: f64, d2: f64, b: f64, i: usize) -> Option<f64> {
    let e = b - i as f64;
    let one = |d: f64| -> Option<f64> {
        let l = d.ln();
        let integer = e.fract() == 0.0;
        if !integer && l <= 0.0 {
            return None;
        }
        let v = if integer && e >= 0.0 {
            log_power(l, e)
        } else if integer {
            l.powi(e as i32)
        } else {
            l.powf(e)
        };
        v.is_finite().then_some(v.abs())
    };
    Some(one(d1)?.max(one(d2)?))
}

/// Nodes within `radius` of the origin (using a precomputed distance field), interior only.
pub fn region_mask(grid: &ManifoldGrid, distance: &[f64], radius: f64) -> Vec<bool> {
    (0..grid.len())
        .map(|k| grid.is_interior(k) && distance[k] <= radius)
        .collect()
}

/// Measures `λᵢ, θᵢ, D₁, D₂, D̃ᵢ` over `region × steps`.
///
/// The curvature-side entries (`κ, C, C₁, T, J̄(T)`) are filled with the given values and
/// marked as overrides; callers replace them as they are computed.
pub fn sup_constants(
    u: &SpaceTimeField,
    grid: &ManifoldGrid,
    params: &PdeParams,
    region: &[bool],
    steps: std::ops::RangeInclusive<usize>,
) -> Result<ConstantsBundle, EstimateError> {
    u.belongs_to(grid)?;
    let n = grid.len();
    let mut lam = [0.0f64; 3];
    let mut th = [0.0f64; 3];
    let mut d1 = f64::INFINITY;
    let mut d2 = f64::NEG_INFINITY;
    let mut lap_q = vec![0.0; n];
    let mut grad_q = vec![0.0; n];
    let q_active = !params.potential.is_zero();
    let a_active = !params.nonlinearity.is_zero();
    for i in steps {
        let t = u.times()[i];
        if q_active {
            let q = params.potential.sample(grid, t).into_values();
            laplacian_into(grid, &q, &mut lap_q);
            grad_inner_into(grid, &q, &q, &mut grad_q);
            for k in (0..n).filter(|&k| region[k]) {
                th[0] = th[0].max(q[k].abs());
                th[1] = th[1].max(grad_q[k].max(0.0).sqrt());
                th[2] = th[2].max(lap_q[k].abs());
            }
        }
        for k in (0..n).filter(|&k| region[k]) {
            let v = u.at(i, k);
            d1 = d1.min(v);
            d2 = d2.max(v);
            if a_active {
                let bf = b_functions(v, params);
                lam[0] = lam[0].max(bf.b.abs());
                lam[1] = lam[1].max(bf.b_f.abs());
                lam[2] = lam[2].max(bf.b_ff.abs());
            }
        }
    }
    if !d1.is_finite() {
        return Err(EstimateError::Bundle("the measurement region is empty".into()));
    }

    let mut bundle = ConstantsBundle::heat(1.0, 0.0, 1.0);
    bundle.set("a", params.a, Provenance::Override);
    bundle.set("b", params.b, Provenance::Override);
    for (i, name) in ["lambda1", "lambda2", "lambda3"].iter().enumerate() {
        bundle.set(name, lam[i], Provenance::Measured);
    }
    for (i, name) in ["theta1", "theta2", "theta3"].iter().enumerate() {
        bundle.set(name, th[i], Provenance::Measured);
    }
    bundle.set("d1", d1, Provenance::Measured);
    bundle.set("d2", d2, Provenance::Measured);

    // the D̃ᵢ enter only through |a|·b·D̃₁, |a|·b(b−1)·D̃₂ and |a|·D₀
    let b = params.b;
    let needed = [
        params.a != 0.0,
        params.a != 0.0 && b != 0.0,
        params.a != 0.0 && b * (b - 1.0) != 0.0,
    ];
    let names = ["d0_tilde", "d1_tilde", "d2_tilde"];
    for i in 0..3 {
        match d_tilde(d1, d2, b, i) {
            Some(v) => bundle.set(names[i], v, Provenance::Measured),
            None if !needed[i] => bundle.set(names[i], 0.0, Provenance::NotNeeded),
            None => {
                return Err(EstimateError::Domain(format!(
                    "(log D)^{} is undefined for D in [{d1}, {d2}]",
                    b - i as f64
                )))
            }
        }
    }
    let d0 = bundle.d0_tilde;
    let d0_prov = bundle.provenance["d0_tilde"];
    bundle.set("d0", d0, d0_prov);
    if params.a != 0.0 && !is_nonneg_integer(b) && d1.ln() <= 0.0 {
        return Err(EstimateError::Domain(format!(
            "non-integer b = {b} needs D₁ > 1, measured D₁ = {d1}"
        )));
    }
    Ok(bundle)
}
