use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::estimates::{discretization_tolerance, ConstantsBundle};
use crate::geometry::{geodesic_distance, ManifoldGrid};
use crate::pde::SpaceTimeField;
use crate::schemes::SchemeSpec;

use super::energy::energy_from_distance;
use super::{harnack_rhs, HarnackError, HarnackFactor};

/// Two space-time points with `s₁ < s₂`; nodes are grid indices, times are elapsed times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePair {
    pub y1: usize,
    pub s1: f64,
    pub y2: usize,
    pub s2: f64,
}

/// How the pair lattice is built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairSampling {
    pub nodes: usize,
    pub times: usize,
    /// Keep at most this many lattice pairs, chosen with `seed`.
    pub max_pairs: Option<usize>,
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling {
            nodes: 8,
            times: 4,
            max_pairs: None,
            seed: 0,
        }
    }
}

/// Inputs of one Harnack check.
#[derive(Clone, Copy, Debug)]
pub struct HarnackCheck<'a> {
    pub grid: &'a ManifoldGrid,
    pub u: &'a SpaceTimeField,
    pub spec: SchemeSpec,
    pub bundle: &'a ConstantsBundle,
    /// Nodes of `B(O, 1/2)`.
    pub region: &'a [bool],
    /// Earliest admissible `s₁`.
    pub t0: f64,
    pub sampling: PairSampling,
    /// Replaces the factor by its reciprocal; harness self-test only.
    pub invert: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackReport {
    pub passed: bool,
    /// Largest `u(y₁,s₁)/(u(y₂,s₂)·RHS) − 1`.
    pub worst_excess: f64,
    pub worst_pair: SpaceTimePair,
    pub worst_factor: HarnackFactor,
    pub worst_energy: f64,
    pub pairs_checked: usize,
    pub tolerance: f64,
}

fn spread(items: &[usize], count: usize) -> Vec<usize> {
    if items.len() <= count {
        return items.to_vec();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|i| items[(i * (items.len() - 1) + (count - 1) / 2) / (count - 1).max(1)])
        .collect();
    out.dedup();
    out
}

/// Lattice nodes and steps used by the check.
pub fn pair_lattice(
    c: &HarnackCheck,
) -> Result<(Vec<usize>, Vec<usize>, Vec<SpaceTimePair>), HarnackError> {
    let region: Vec<usize> = (0..c.grid.len()).filter(|&k| c.region[k]).collect();
    let nodes = spread(&region, c.sampling.nodes);
    let admissible: Vec<usize> = (0..c.u.num_steps())
        .filter(|&i| {
            let t = c.u.elapsed(i);
            t > 0.0 && t >= c.t0 * (1.0 - 1e-12)
        })
        .collect();
    let steps = spread(&admissible, c.sampling.times);
    if nodes.is_empty() || steps.len() < 2 {
        return Err(HarnackError::Domain(format!(
            "pair lattice needs region nodes and two admissible times, found {} and {}",
            nodes.len(),
            steps.len()
        )));
    }
    let mut pairs = Vec::new();
    for (a, &i1) in steps.iter().enumerate() {
        for &i2 in &steps[a + 1..] {
            for &y1 in &nodes {
                for &y2 in &nodes {
                    pairs.push(SpaceTimePair {
                        y1,
                        s1: c.u.elapsed(i1),
                        y2,
                        s2: c.u.elapsed(i2),
                    });
                }
            }
        }
    }
    if let Some(cap) = c.sampling.max_pairs {
        if cap < pairs.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(c.sampling.seed);
            let mut keep = sample(&mut rng, pairs.len(), cap).into_vec();
            keep.sort_unstable();
            pairs = keep.into_iter().map(|i| pairs[i]).collect();
        }
    }
    Ok((nodes, steps, pairs))
}

/// `max u(y₁,s₁)/(u(y₂,s₂)·RHS) − 1` over the pair lattice.
pub fn check_harnack(c: &HarnackCheck) -> Result<HarnackReport, HarnackError> {
    c.u.belongs_to(c.grid)?;
    let (nodes, _, pairs) = pair_lattice(c)?;
    let dist: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&y| geodesic_distance(c.grid, y).map(|d| d.into_values()))
        .collect::<Result<_, _>>()?;
    let step_of = |s: f64| {
        (0..c.u.num_steps())
            .find(|&i| c.u.elapsed(i) == s)
            .expect("lattice times are stored times")
    };
    let mut worst: Option<(f64, SpaceTimePair, HarnackFactor, f64)> = None;
    for p in &pairs {
        let row = nodes.iter().position(|&y| y == p.y1).expect("lattice node");
        let energy = energy_from_distance(dist[row][p.y2], p.s1, p.s2);
        let factor = harnack_rhs(p.s1, p.s2, energy, c.bundle, &c.spec)?;
        let log_rhs = if c.invert { -factor.log_rhs } else { factor.log_rhs };
        let lu1 = c.u.at(step_of(p.s1), p.y1).ln();
        let lu2 = c.u.at(step_of(p.s2), p.y2).ln();
        let excess = (lu1 - lu2 - log_rhs).exp() - 1.0;
        if worst.as_ref().is_none_or(|w| excess > w.0) {
            worst = Some((excess, *p, factor, energy));
        }
    }
    let (worst_excess, worst_pair, worst_factor, worst_energy) =
        worst.expect("lattice is nonempty");
    let tolerance = discretization_tolerance(c.grid, c.u.stored_dt(), 1.0);
    Ok(HarnackReport {
        passed: worst_excess <= tolerance,
        worst_excess,
        worst_pair,
        worst_factor,
        worst_energy,
        pairs_checked: pairs.len(),
        tolerance,
    })
}
