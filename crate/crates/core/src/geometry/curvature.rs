use super::{geodesic_distance, GeometryError, ManifoldGrid, ScalarField};

/// Minimum number of nodes a geodesic ball needs before its average is trusted.
pub const MIN_BALL_NODES: usize = 10;

/// `Ric₋ = max{0, −ρ}` at every node.
pub fn ricci_minus(grid: &ManifoldGrid) -> ScalarField {
    let values = grid.ricci_min_eig().iter().map(|&r| (-r).max(0.0)).collect();
    ScalarField::new_unchecked(grid.id(), values)
}

/// Result of an integral curvature evaluation on one ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureValue {
    pub value: f64,
    pub center: usize,
    pub ball_nodes: usize,
    /// Fewer than [`MIN_BALL_NODES`] nodes fell inside the ball.
    pub under_resolved: bool,
    /// The ball reached a boundary node of a non-periodic axis.
    pub truncated: bool,
}

fn check_args(grid: &ManifoldGrid, p: f64, r: f64) -> Result<(), GeometryError> {
    let half_n = grid.dimension() as f64 / 2.0;
    if !(p > half_n) {
        return Err(GeometryError::ExponentTooSmall { p, half_n });
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(GeometryError::InvalidRadius(r));
    }
    Ok(())
}

/// `k(x,p,r) = r²·(⨍_{B(x,r)} Ric₋^p dμ)^{1/p}` with a √g-weighted Riemann sum over the ball.
pub fn integral_curvature(
    grid: &ManifoldGrid,
    center: usize,
    p: f64,
    r: f64,
) -> Result<CurvatureValue, GeometryError> {
    check_args(grid, p, r)?;
    let dist = geodesic_distance(grid, center)?;
    let ric = ricci_minus(grid);
    Ok(ball_average(grid, center, &dist, &ric, p, r))
}

fn ball_average(
    grid: &ManifoldGrid,
    center: usize,
    dist: &ScalarField,
    ric: &ScalarField,
    p: f64,
    r: f64,
) -> CurvatureValue {
    let sg = grid.sqrt_det();
    let mut vol = 0.0;
    let mut acc = 0.0;
    let mut count = 0;
    let mut truncated = false;
    for (k, &d) in dist.values().iter().enumerate() {
        if d <= r {
            vol += sg[k];
            acc += sg[k] * ric.values()[k].powf(p);
            count += 1;
            truncated |= !grid.is_interior(k);
        }
    }
    let mean = if vol > 0.0 { acc / vol } else { 0.0 };
    CurvatureValue {
        value: r * r * mean.powf(1.0 / p),
        center,
        ball_nodes: count,
        under_resolved: count < MIN_BALL_NODES,
        truncated,
    }
}

/// `k(p,r)` as the maximum of `k(x,p,r)` over centers on every `stride`-th node per axis.
pub fn integral_curvature_sup(
    grid: &ManifoldGrid,
    p: f64,
    r: f64,
    stride: usize,
) -> Result<CurvatureValue, GeometryError> {
    check_args(grid, p, r)?;
    let stride = stride.max(1);
    let ric = ricci_minus(grid);
    let flat = ric.values().iter().all(|&v| v == 0.0);
    let mut best: Option<CurvatureValue> = None;
    let mut any_under = false;
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        if idx[0] % stride != 0 || (grid.dimension() == 2 && idx[1] % stride != 0) {
            continue;
        }
        let dist = geodesic_distance(grid, k)?;
        let value = ball_average(grid, k, &dist, &ric, p, r);
        any_under |= value.under_resolved;
        if best.is_none_or(|b| value.value > b.value) {
            best = Some(value);
        }
        // every ball of a Ric₋ ≡ 0 grid gives 0
        if flat {
            break;
        }
    }
    let mut best = best.ok_or(GeometryError::NodeOutOfRange(0))?;
    best.under_resolved |= any_under;
    Ok(best)
}
