use serde::{Deserialize, Serialize};

use crate::geometry::{ManifoldGrid, ScalarField};

/// The nonlinearity `A(u)` with its first two derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity {
    Zero,
    /// `A(u) = u`
    Linear,
    /// `A(u) = u²`
    Square,
    /// `A(u) = u·log u`
    ULogU,
    /// `A(u) = u^m`
    Power { exponent: f64 },
}

impl Nonlinearity {
    /// `(A(u), A′(u), A″(u))`
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match *self {
            Nonlinearity::Zero => (0.0, 0.0, 0.0),
            Nonlinearity::Linear => (u, 1.0, 0.0),
            Nonlinearity::Square => (u * u, 2.0 * u, 2.0),
            Nonlinearity::ULogU => {
                let l = u.ln();
                (u * l, l + 1.0, 1.0 / u)
            }
            Nonlinearity::Power { exponent: m } => (
                u.powf(m),
                m * u.powf(m - 1.0),
                m * (m - 1.0) * u.powf(m - 2.0),
            ),
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }
}

/// Potential `q(x,t)` from a small catalog.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude·cos(wavenumber·x_axis)·exp(−decay·t)`
    Separable {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        decay: f64,
        #[serde(default)]
        axis: usize,
    },
}

impl Potential {
    pub fn value(&self, x: [f64; 2], t: f64) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value,
            Potential::Separable {
                amplitude,
                wavenumber,
                decay,
                axis,
            } => amplitude * (wavenumber * x[axis.min(1)]).cos() * (-decay * t).exp(),
        }
    }

    /// `q(x,t) = q(x,0)·time_factor(t)` for every catalog entry.
    pub fn time_factor(&self, t: f64) -> f64 {
        match *self {
            Potential::Separable { decay, .. } => (-decay * t).exp(),
            _ => 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Potential::Zero => true,
            Potential::Constant { value } => value == 0.0,
            Potential::Separable { amplitude, .. } => amplitude == 0.0,
        }
    }

    pub fn sample(&self, grid: &ManifoldGrid, t: f64) -> ScalarField {
        grid.field_from_fn(|x| self.value(x, t))
    }
}

/// Coefficients of `u_t = Δu + a·u·(log u)^b + q·A(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeParams {
    #[serde(default)]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
    #[serde(default = "default_potential")]
    pub potential: Potential,
}

fn default_b() -> f64 {
    1.0
}

fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Zero
}

fn default_potential() -> Potential {
    Potential::Zero
}

impl Default for PdeParams {
    fn default() -> Self {
        PdeParams::heat()
    }
}

impl PdeParams {
    /// The plain heat equation.
    pub fn heat() -> Self {
        PdeParams {
            a: 0.0,
            b: 1.0,
            nonlinearity: Nonlinearity::Zero,
            potential: Potential::Zero,
        }
    }

    /// True when `b` is a nonnegative integer, so `f^b` is defined for every real `f`.
    pub fn integer_exponent(&self) -> bool {
        is_nonneg_integer(self.b)
    }

    /// Lower bound the solution must stay above: 0, or 1 when `(log u)^b` needs `log u > 0`.
    pub fn positivity_floor(&self) -> f64 {
        if self.a != 0.0 && !self.integer_exponent() {
            1.0
        } else {
            0.0
        }
    }

    /// Reaction part `a·u·(log u)^b + q·A(u)`.
    pub fn reaction(&self, u: f64, q: f64) -> f64 {
        let mut r = 0.0;
        if self.a != 0.0 {
            r += self.a * u * log_power(u.ln(), self.b);
        }
        if q != 0.0 {
            r += q * self.nonlinearity.value(u);
        }
        r
    }
}

pub(crate) fn is_nonneg_integer(b: f64) -> bool {
    b >= 0.0 && b.fract() == 0.0 && b <= i32::MAX as f64
}

/// `f^b`, by repeated multiplication when `b` is a nonnegative integer.
pub fn log_power(f: f64, b: f64) -> f64 {
    if is_nonneg_integer(b) {
        f.powi(b as i32)
    } else {
        f.powf(b)
    }
}

/// `B = A/u`, `B_f = A′ − A/u`, `B_ff = uA″ − A′ + A/u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BFunctions {
    pub b: f64,
    pub b_f: f64,
    pub b_ff: f64,
}

pub fn b_functions(u: f64, params: &PdeParams) -> BFunctions {
    let (a0, a1, a2) = params.nonlinearity.eval(u);
    BFunctions {
        b: a0 / u,
        b_f: a1 - a0 / u,
        b_ff: u * a2 - a1 + a0 / u,
    }
}
