use super::{GeometryError, ManifoldGrid, ScalarField};

/// Laplace–Beltrami operator `(1/√g) ∂_i(√g g^{ii} ∂_i u)` in divergence form.
///
/// Boundary nodes of non-periodic axes are set to 0; callers use the interior mask.
pub fn laplace_beltrami(
    field: &ScalarField,
    grid: &ManifoldGrid,
) -> Result<ScalarField, GeometryError> {
    field.belongs_to(grid)?;
    let mut out = vec![0.0; grid.len()];
    laplacian_into(grid, field.values(), &mut out);
    Ok(ScalarField::new_unchecked(grid.id(), out))
}

/// Pointwise `g^{ij} ∂_i A ∂_j B` with centered differences; 0 on boundary nodes.
pub fn grad_inner(
    a: &ScalarField,
    b: &ScalarField,
    grid: &ManifoldGrid,
) -> Result<ScalarField, GeometryError> {
    a.belongs_to(grid)?;
    b.belongs_to(grid)?;
    let mut out = vec![0.0; grid.len()];
    grad_inner_into(grid, a.values(), b.values(), &mut out);
    Ok(ScalarField::new_unchecked(grid.id(), out))
}

/// `|∇f|²`, the same as `grad_inner(f, f)`.
pub fn grad_norm_sq(f: &ScalarField, grid: &ManifoldGrid) -> Result<ScalarField, GeometryError> {
    grad_inner(f, f, grid)
}

pub(crate) fn laplacian_into(grid: &ManifoldGrid, u: &[f64], out: &mut [f64]) {
    let sqrt_det = grid.sqrt_det();
    for (k, o) in out.iter_mut().enumerate() {
        if !grid.is_interior(k) {
            *o = 0.0;
            continue;
        }
        let mut acc = 0.0;
        for (d, axis) in grid.axes().iter().enumerate() {
            // interior nodes always have both neighbors
            let fwd = grid.neighbor(k, d, true).unwrap_or(k);
            let bwd = grid.neighbor(k, d, false).unwrap_or(k);
            let w_fwd = grid.face_weight(d, k);
            let w_bwd = grid.face_weight(d, bwd);
            acc += (w_fwd * (u[fwd] - u[k]) - w_bwd * (u[k] - u[bwd])) / (axis.spacing * axis.spacing);
        }
        *o = acc / sqrt_det[k];
    }
}

pub(crate) fn grad_inner_into(grid: &ManifoldGrid, a: &[f64], b: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        if !grid.is_interior(k) {
            *o = 0.0;
            continue;
        }
        let g = grid.metric(k);
        let mut acc = 0.0;
        for (d, axis) in grid.axes().iter().enumerate() {
            let fwd = grid.neighbor(k, d, true).unwrap_or(k);
            let bwd = grid.neighbor(k, d, false).unwrap_or(k);
            let inv = 1.0 / (2.0 * axis.spacing);
            acc += (a[fwd] - a[bwd]) * inv * (b[fwd] - b[bwd]) * inv / g[d];
        }
        *o = acc;
    }
}
