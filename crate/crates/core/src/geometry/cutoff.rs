use super::operators::{grad_inner_into, laplacian_into};
use super::{geodesic_distance, GeometryError, ManifoldGrid, ScalarField};

/// Radial cutoff `ψ = η(d(·,O)/r)` with its measured constant.
#[derive(Clone, Debug)]
pub struct Cutoff {
    pub psi: ScalarField,
    /// `sup r²·(|∇ψ|² + |Δψ|)` over interior nodes.
    pub empirical_constant: f64,
}

/// Quintic C² profile: 1 on `s ≤ 1/2`, 0 on `s ≥ 1`, monotone in between.
pub fn cutoff_profile(s: f64) -> f64 {
    let t = (2.0 * s - 1.0).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

pub fn cutoff(grid: &ManifoldGrid, origin: usize, r: f64) -> Result<Cutoff, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::InvalidRadius(r));
    }
    let dist = geodesic_distance(grid, origin)?;
    let d = dist.values();
    if (0..grid.len()).any(|k| !grid.is_interior(k) && d[k] < r) {
        return Err(GeometryError::BallExitsDomain { origin, radius: r });
    }
    let psi: Vec<f64> = d.iter().map(|&dk| cutoff_profile(dk / r)).collect();
    let mut lap = vec![0.0; grid.len()];
    let mut grad = vec![0.0; grid.len()];
    laplacian_into(grid, &psi, &mut lap);
    grad_inner_into(grid, &psi, &psi, &mut grad);
    let empirical_constant = grid
        .interior_nodes()
        .map(|k| r * r * (grad[k] + lap[k].abs()))
        .fold(0.0, f64::max);
    Ok(Cutoff {
        psi: ScalarField::new_unchecked(grid.id(), psi),
        empirical_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_manifold, ManifoldSpec};

    #[test]
    fn profile_endpoints_and_monotonicity() {
        assert_eq!(cutoff_profile(0.0), 1.0);
        assert_eq!(cutoff_profile(0.5), 1.0);
        assert_eq!(cutoff_profile(1.0), 0.0);
        assert_eq!(cutoff_profile(3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = cutoff_profile(i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    fn flat(n: usize) -> ManifoldGrid {
        build_manifold(&ManifoldSpec::FlatTorus {
            nodes: vec![n, n],
            lengths: vec![2.0, 2.0],
        })
        .unwrap()
    }

    #[test]
    fn support_and_plateau() {
        let g = flat(64);
        let o = g.node([32, 32]);
        let r = 0.6;
        let c = cutoff(&g, o, r).unwrap();
        let d = geodesic_distance(&g, o).unwrap();
        assert_eq!(c.psi.values()[o], 1.0);
        for k in 0..g.len() {
            let v = c.psi.values()[k];
            assert!((0.0..=1.0).contains(&v));
            if d.values()[k] > r {
                assert_eq!(v, 0.0);
            }
            if d.values()[k] <= r / 2.0 {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn empirical_constant_is_stable_under_refinement() {
        let ga = flat(64);
        let gb = flat(128);
        let ca = cutoff(&ga, ga.node([32, 32]), 0.8).unwrap().empirical_constant;
        let cb = cutoff(&gb, gb.node([64, 64]), 0.8).unwrap().empirical_constant;
        assert!(ca.is_finite() && cb.is_finite());
        assert!((ca - cb).abs() < 0.1 * cb, "{ca} vs {cb}");
    }

    #[test]
    fn ball_leaving_patch_is_an_error() {
        let g = build_manifold(&ManifoldSpec::HyperbolicPatch {
            nodes: [33, 33],
            extent: 0.3,
        })
        .unwrap();
        let o = g.node([16, 16]);
        assert!(matches!(
            cutoff(&g, o, 1.0),
            Err(GeometryError::BallExitsDomain { .. })
        ));
    }
}
