use crate::geometry::{geodesic_distance, ManifoldGrid};

use super::HarnackError;

/// `𝒥 = d(y₁, y₂)²/(s₂ − s₁)`, the energy of the constant-speed geodesic.
pub fn path_energy(
    grid: &ManifoldGrid,
    y1: usize,
    y2: usize,
    s1: f64,
    s2: f64,
) -> Result<f64, HarnackError> {
    if !(s2 > s1) {
        return Err(HarnackError::Domain(format!("need s₁ < s₂, got {s1} ≥ {s2}")));
    }
    if y1 == y2 {
        return Ok(0.0);
    }
    let d = geodesic_distance(grid, y1)?.values()[y2];
    Ok(energy_from_distance(d, s1, s2))
}

pub(crate) fn energy_from_distance(d: f64, s1: f64, s2: f64) -> f64 {
    d * d / (s2 - s1)
}

/// Length of the coordinate segment `a → b` with the metric frozen at its midpoint.
fn segment_length(grid: &ManifoldGrid, a: usize, b: usize) -> f64 {
    let xa = grid.coordinates(a);
    let xb = grid.coordinates(b);
    let mut mid = [0.0; 2];
    let mut dx = [0.0; 2];
    for (d, axis) in grid.axes().iter().enumerate() {
        dx[d] = axis.displacement(xa[d], xb[d]);
        mid[d] = xa[d] + 0.5 * dx[d];
    }
    let g = grid.metric_at(mid);
    (0..grid.dimension()).map(|d| g[d] * dx[d] * dx[d]).sum::<f64>().sqrt()
}

/// Direct minimisation of the discrete energy over nodal paths.
///
/// The path visits one node per time slice; between slices it may jump to any node within
/// `window` index steps along every axis, at cost `ℓ²/Δs` with `ℓ` the midpoint-metric
/// segment length. This makes no use of the distance field and serves as its check.
pub fn path_energy_dp(
    grid: &ManifoldGrid,
    y1: usize,
    y2: usize,
    s1: f64,
    s2: f64,
    slices: usize,
    window: usize,
) -> Result<f64, HarnackError> {
    if !(s2 > s1) {
        return Err(HarnackError::Domain(format!("need s₁ < s₂, got {s1} ≥ {s2}")));
    }
    if slices == 0 || window == 0 {
        return Err(HarnackError::Domain("slices and window must be positive".into()));
    }
    let n = grid.len();
    let dim = grid.dimension();
    let ds = (s2 - s1) / slices as f64;
    let w = window as i64;
    let mut offsets = Vec::new();
    for i in -w..=w {
        if dim == 1 {
            offsets.push([i, 0]);
        } else {
            for j in -w..=w {
                offsets.push([i, j]);
            }
        }
    }
    let moves: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|k| {
            let idx = grid.multi_index(k);
            offsets
                .iter()
                .filter_map(|off| {
                    let mut to = [0usize; 2];
                    for d in 0..dim {
                        let axis = grid.axes()[d];
                        let raw = idx[d] as i64 + off[d];
                        to[d] = if axis.periodic {
                            raw.rem_euclid(axis.nodes as i64) as usize
                        } else if raw < 0 || raw >= axis.nodes as i64 {
                            return None;
                        } else {
                            raw as usize
                        };
                    }
                    let m = grid.node(to);
                    let l = segment_length(grid, k, m);
                    Some((m, l * l / ds))
                })
                .collect()
        })
        .collect();
    let mut cost = vec![f64::INFINITY; n];
    cost[y1] = 0.0;
    let mut next = vec![f64::INFINITY; n];
    for _ in 0..slices {
        next.iter_mut().for_each(|v| *v = f64::INFINITY);
        for k in (0..n).filter(|&k| cost[k].is_finite()) {
            for &(m, c) in &moves[k] {
                let v = cost[k] + c;
                if v < next[m] {
                    next[m] = v;
                }
            }
        }
        std::mem::swap(&mut cost, &mut next);
    }
    if !cost[y2].is_finite() {
        return Err(HarnackError::Domain(format!(
            "{slices} slices of at most {window} steps cannot reach node {y2}"
        )));
    }
    Ok(cost[y2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldSpec};
    use std::f64::consts::PI;

    fn circle() -> ManifoldGrid {
        build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![64],
            lengths: vec![2.0 * PI],
        })
        .unwrap()
    }

    #[test]
    fn closed_form_values_and_scaling() {
        let g = circle();
        assert_eq!(path_energy(&g, 5, 5, 0.1, 0.4).unwrap(), 0.0);
        let h = 2.0 * PI / 64.0;
        // nodes 10 apart: d = 10h, wrapping goes the short way
        let e = path_energy(&g, 3, 13, 0.0, 2.0).unwrap();
        assert!((e - (10.0 * h).powi(2) / 2.0).abs() < 1e-9);
        let e2 = path_energy(&g, 3, 13, 0.0, 4.0).unwrap();
        assert!((e2 - e / 2.0).abs() < 1e-12);
        let wrap = path_energy(&g, 60, 2, 0.0, 1.0).unwrap();
        assert!((wrap - (6.0 * h).powi(2)).abs() < 1e-9);
        assert!(matches!(path_energy(&g, 1, 2, 1.0, 1.0), Err(HarnackError::Domain(_))));
    }

    #[test]
    fn unit_distance_over_two_time_units() {
        let g = build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![100],
            lengths: vec![10.0],
        })
        .unwrap();
        let e = path_energy(&g, 0, 10, 1.0, 3.0).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        let dp = path_energy_dp(&g, 0, 10, 1.0, 3.0, 10, 3).unwrap();
        assert!((dp - e).abs() < 0.02 * e);
    }
}
