use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GeometryError, ManifoldGrid, ScalarField};

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    node: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties broken by node index for determinism
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Geodesic distance to `origin` by fast marching on the eikonal equation `|∇d|_g = 1`.
///
/// Uses second-order upwind differences where two accepted nodes are available along an
/// axis. Nodes within two cells of the origin are seeded with the frozen-metric distance.
pub fn geodesic_distance(grid: &ManifoldGrid, origin: usize) -> Result<ScalarField, GeometryError> {
    if origin >= grid.len() {
        return Err(GeometryError::NodeOutOfRange(origin));
    }
    let n = grid.len();
    let dim = grid.dimension();
    let mut dist = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut heap = BinaryHeap::new();

    let g0 = grid.metric(origin);
    let o_idx = grid.multi_index(origin);
    let seed_radius: i64 = 2;
    let mut offsets = vec![[0i64; 2]];
    if dim == 1 {
        offsets = (-seed_radius..=seed_radius).map(|i| [i, 0]).collect();
    } else {
        offsets.clear();
        for i in -seed_radius..=seed_radius {
            for j in -seed_radius..=seed_radius {
                offsets.push([i, j]);
            }
        }
    }
    for off in offsets {
        let mut idx = [0usize; 2];
        let mut ok = true;
        let mut d2 = 0.0;
        for d in 0..dim {
            let axis = grid.axes()[d];
            let raw = o_idx[d] as i64 + off[d];
            let wrapped = if axis.periodic {
                raw.rem_euclid(axis.nodes as i64)
            } else if raw < 0 || raw >= axis.nodes as i64 {
                ok = false;
                break;
            } else {
                raw
            };
            idx[d] = wrapped as usize;
            let step = off[d] as f64 * axis.spacing;
            d2 += g0[d] * step * step;
        }
        if !ok {
            continue;
        }
        let k = grid.node(idx);
        if d2.sqrt() < dist[k] {
            dist[k] = d2.sqrt();
            accepted[k] = true;
        }
    }
    // the seeded patch is accepted; its neighbors enter the narrow band
    for k in 0..n {
        if accepted[k] {
            push_neighbors(grid, k, &mut dist, &accepted, &mut heap);
        }
    }

    while let Some(Candidate { dist: dk, node }) = heap.pop() {
        if accepted[node] || dk > dist[node] {
            continue;
        }
        accepted[node] = true;
        push_neighbors(grid, node, &mut dist, &accepted, &mut heap);
    }
    Ok(ScalarField::new_unchecked(grid.id(), dist))
}

fn push_neighbors(
    grid: &ManifoldGrid,
    node: usize,
    dist: &mut [f64],
    accepted: &[bool],
    heap: &mut BinaryHeap<Candidate>,
) {
    for d in 0..grid.dimension() {
        for fwd in [true, false] {
            if let Some(m) = grid.neighbor(node, d, fwd) {
                if accepted[m] {
                    continue;
                }
                let candidate = update(grid, m, dist, accepted);
                if candidate < dist[m] {
                    dist[m] = candidate;
                    heap.push(Candidate {
                        dist: candidate,
                        node: m,
                    });
                }
            }
        }
    }
}

/// Upwind eikonal update at node `k` from its accepted neighbors.
fn update(grid: &ManifoldGrid, k: usize, dist: &[f64], accepted: &[bool]) -> f64 {
    let g = grid.metric(k);
    // per-axis linear form (α d − β)/s
    let mut terms: Vec<(f64, f64, f64)> = Vec::with_capacity(2);
    for (d, axis) in grid.axes().iter().enumerate() {
        let s = axis.spacing * g[d].sqrt();
        let mut best: Option<(f64, f64)> = None;
        for fwd in [true, false] {
            let Some(m1) = grid.neighbor(k, d, fwd) else {
                continue;
            };
            if !accepted[m1] {
                continue;
            }
            let a1 = dist[m1];
            let mut form = (1.0, a1);
            if let Some(m2) = grid.neighbor(m1, d, fwd) {
                if accepted[m2] && dist[m2] <= a1 {
                    form = (1.5, 2.0 * a1 - 0.5 * dist[m2]);
                }
            }
            // prefer the smaller upwind value
            let value = form.1 / form.0;
            if best.is_none_or(|(al, be)| value < be / al) {
                best = Some(form);
            }
        }
        if let Some((alpha, beta)) = best {
            terms.push((alpha, beta, s));
        }
    }
    terms.sort_by(|x, y| (x.1 / x.0).total_cmp(&(y.1 / y.0)));

    let one_axis = |t: &(f64, f64, f64)| (t.1 + t.2) / t.0;
    let mut result = one_axis(&terms[0]);
    if terms.len() == 2 {
        let (a1, b1, s1) = terms[0];
        let (a2, b2, s2) = terms[1];
        // Σ (α_i d − β_i)² / s_i² = 1
        let qa = a1 * a1 / (s1 * s1) + a2 * a2 / (s2 * s2);
        let qb = -2.0 * (a1 * b1 / (s1 * s1) + a2 * b2 / (s2 * s2));
        let qc = b1 * b1 / (s1 * s1) + b2 * b2 / (s2 * s2) - 1.0;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let d = (-qb + disc.sqrt()) / (2.0 * qa);
            if d >= b2 / a2 {
                result = result.min(d);
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldSpec};
    use std::f64::consts::PI;

    fn great_circle(a: [f64; 2], b: [f64; 2]) -> f64 {
        let c = a[0].cos() * b[0].cos() + a[0].sin() * b[0].sin() * (a[1] - b[1]).cos();
        c.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn circle_antipode() {
        let g = build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![64],
            lengths: vec![2.0 * PI],
        })
        .unwrap();
        let d = geodesic_distance(&g, 0).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert!((d.values()[32] - PI).abs() < 0.02 * PI);
    }

    #[test]
    fn flat_torus_diagonal() {
        let g = build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![64, 64],
            lengths: vec![2.0, 2.0],
        })
        .unwrap();
        let o = g.node([32, 32]);
        let d = geodesic_distance(&g, o).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            let x = g.coordinates(k);
            let exact = ((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)).sqrt();
            if exact > 0.1 && exact < 0.9 {
                worst = worst.max((d.values()[k] - exact).abs() / exact);
            }
        }
        assert!(worst < 0.02, "relative error {worst}");
    }

    #[test]
    fn sphere_distances_match_great_circles() {
        let g = build_manifold(&ManifoldSpec::RoundSphere {
            nodes: [65, 128],
            colatitude_cutoff: 0.1,
        })
        .unwrap();
        // near-pole row to equator along a meridian
        let top = g.node([0, 0]);
        let d = geodesic_distance(&g, top).unwrap();
        let eq = g.node([32, 0]);
        let expected = PI / 2.0 - 0.1;
        assert!((d.values()[eq] - expected).abs() < 0.03 * expected);

        let o = g.node([32, 40]);
        let d = geodesic_distance(&g, o).unwrap();
        let xo = g.coordinates(o);
        for k in (0..g.len()).step_by(37) {
            let exact = great_circle(xo, g.coordinates(k));
            if exact > 0.2 && exact < 1.2 {
                assert!((d.values()[k] - exact).abs() < 0.03 * exact);
            }
        }
    }
}
