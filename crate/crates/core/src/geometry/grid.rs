use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{GeometryError, ScalarField};

static NEXT_GRID_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a constructed grid. Fields carry it so that operators can reject mismatches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridId(u64);

impl GridId {
    fn fresh() -> Self {
        GridId(NEXT_GRID_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// Warp function `w(r) = mean + amplitude·cos(r)` of a warped torus `dr² + w(r)² dθ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Warp {
    pub mean: f64,
    pub amplitude: f64,
}

impl Default for Warp {
    fn default() -> Self {
        Warp {
            mean: 2.0,
            amplitude: 1.0,
        }
    }
}

impl Warp {
    pub fn value(&self, r: f64) -> f64 {
        self.mean + self.amplitude * r.cos()
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        -self.amplitude * r.cos()
    }
}

fn default_cap() -> f64 {
    0.1
}

/// Description of a model manifold, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManifoldSpec {
    /// Flat torus `∏ [0, L_i)` with all axes periodic.
    FlatTorus { nodes: Vec<usize>, lengths: Vec<f64> },
    /// Unit sphere in colatitude/longitude coordinates with polar caps removed.
    RoundSphere {
        nodes: [usize; 2],
        #[serde(default = "default_cap")]
        colatitude_cutoff: f64,
    },
    /// Square `[-extent, extent]²` of the Poincaré disk (curvature −1).
    HyperbolicPatch { nodes: [usize; 2], extent: f64 },
    /// Torus `[0, 2π)²` with metric `dr² + w(r)² dθ²`.
    WarpedTorus {
        nodes: [usize; 2],
        #[serde(default)]
        warp: Warp,
    },
}

impl ManifoldSpec {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            ManifoldSpec::FlatTorus { .. } => ManifoldKind::FlatTorus,
            ManifoldSpec::RoundSphere { .. } => ManifoldKind::RoundSphere,
            ManifoldSpec::HyperbolicPatch { .. } => ManifoldKind::HyperbolicPatch,
            ManifoldSpec::WarpedTorus { .. } => ManifoldKind::WarpedTorus,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ManifoldSpec::FlatTorus { nodes, .. } => nodes.len(),
            _ => 2,
        }
    }

    /// Uniform refinement by an integer factor. Periodic axes scale `N → sN`, closed axes
    /// `N → s(N−1)+1`, so that every spacing shrinks by exactly `s`.
    pub fn refined(&self, factor: usize) -> ManifoldSpec {
        let periodic = |n: usize| n * factor;
        let closed = |n: usize| (n - 1) * factor + 1;
        match self.clone() {
            ManifoldSpec::FlatTorus { nodes, lengths } => ManifoldSpec::FlatTorus {
                nodes: nodes.into_iter().map(periodic).collect(),
                lengths,
            },
            ManifoldSpec::RoundSphere {
                nodes,
                colatitude_cutoff,
            } => ManifoldSpec::RoundSphere {
                nodes: [closed(nodes[0]), periodic(nodes[1])],
                colatitude_cutoff,
            },
            ManifoldSpec::HyperbolicPatch { nodes, extent } => ManifoldSpec::HyperbolicPatch {
                nodes: [closed(nodes[0]), closed(nodes[1])],
                extent,
            },
            ManifoldSpec::WarpedTorus { nodes, warp } => ManifoldSpec::WarpedTorus {
                nodes: [periodic(nodes[0]), periodic(nodes[1])],
                warp,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    FlatTorus,
    RoundSphere,
    HyperbolicPatch,
    WarpedTorus,
}

/// One coordinate axis of a structured grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub nodes: usize,
    pub spacing: f64,
    pub start: f64,
    pub periodic: bool,
}

impl Axis {
    fn periodic(nodes: usize, length: f64) -> Axis {
        Axis {
            nodes,
            spacing: length / nodes as f64,
            start: 0.0,
            periodic: true,
        }
    }

    fn closed(nodes: usize, start: f64, end: f64) -> Axis {
        Axis {
            nodes,
            spacing: (end - start) / (nodes - 1) as f64,
            start,
            periodic: false,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn length(&self) -> f64 {
        if self.periodic {
            self.spacing * self.nodes as f64
        } else {
            self.spacing * (self.nodes - 1) as f64
        }
    }

    /// Neighbor index `i ± 1`, wrapping on periodic axes.
    pub fn step(&self, i: usize, forward: bool) -> Option<usize> {
        match (forward, self.periodic) {
            (true, _) if i + 1 < self.nodes => Some(i + 1),
            (true, true) => Some(0),
            (false, _) if i > 0 => Some(i - 1),
            (false, true) => Some(self.nodes - 1),
            _ => None,
        }
    }

    /// Signed coordinate displacement `b − a`, taking the minimal image on periodic axes.
    pub fn displacement(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if self.periodic {
            let len = self.length();
            d - len * (d / len).round()
        } else {
            d
        }
    }

    /// Nearest node to a coordinate value.
    pub fn nearest(&self, x: f64) -> usize {
        let raw = ((x - self.start) / self.spacing).round();
        if self.periodic {
            (raw as i64).rem_euclid(self.nodes as i64) as usize
        } else {
            raw.clamp(0.0, (self.nodes - 1) as f64) as usize
        }
    }
}

/// A discrete model manifold on a structured coordinate grid.
///
/// All supported kinds use orthogonal coordinates, so the metric is stored by its diagonal
/// components `g_11, g_22` (`g_12 ≡ 0`). Nodes are ordered with axis 0 as the slow index.
#[derive(Clone, Debug)]
pub struct ManifoldGrid {
    id: GridId,
    spec: ManifoldSpec,
    axes: Vec<Axis>,
    metric: Vec<[f64; 2]>,
    sqrt_det: Vec<f64>,
    ricci_min: Vec<f64>,
    warp_samples: Option<Vec<f64>>,
    // √g·g^{ii} at the face between a node and its forward neighbor along axis i.
    face_weights: Vec<Vec<f64>>,
    interior: Vec<bool>,
    // neighbor table [axis][backward, forward]; usize::MAX where none exists
    neighbors: Vec<[[usize; 2]; 2]>,
}

impl ManifoldGrid {
    pub fn new(spec: &ManifoldSpec) -> Result<ManifoldGrid, GeometryError> {
        build_manifold(spec)
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn kind(&self) -> ManifoldKind {
        self.spec.kind()
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self, node: usize) -> [f64; 2] {
        self.metric[node]
    }

    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    /// Smallest eigenvalue of the Ricci tensor at each node.
    pub fn ricci_min_eig(&self) -> &[f64] {
        &self.ricci_min
    }

    /// Samples of the warp function along axis 0 (warped torus only).
    pub fn warp_samples(&self) -> Option<&[f64]> {
        self.warp_samples.as_deref()
    }

    pub(crate) fn face_weight(&self, axis: usize, node: usize) -> f64 {
        self.face_weights[axis][node]
    }

    /// True unless the node lies on the boundary of a non-periodic axis.
    pub fn is_interior(&self, node: usize) -> bool {
        self.interior[node]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.interior[k])
    }

    pub fn has_boundary(&self) -> bool {
        self.axes.iter().any(|a| !a.periodic)
    }

    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        if self.axes.len() == 1 {
            [node, 0]
        } else {
            let n1 = self.axes[1].nodes;
            [node / n1, node % n1]
        }
    }

    pub fn node(&self, idx: [usize; 2]) -> usize {
        if self.axes.len() == 1 {
            idx[0]
        } else {
            idx[0] * self.axes[1].nodes + idx[1]
        }
    }

    pub fn coordinates(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 2];
        for (d, axis) in self.axes.iter().enumerate() {
            x[d] = axis.coordinate(idx[d]);
        }
        x
    }

    /// Node nearest to a coordinate point.
    pub fn nearest_node(&self, x: &[f64]) -> Result<usize, GeometryError> {
        if x.len() != self.dimension() {
            return Err(GeometryError::InvalidSpec(format!(
                "point has {} coordinates, grid dimension is {}",
                x.len(),
                self.dimension()
            )));
        }
        let mut idx = [0usize; 2];
        for (d, axis) in self.axes.iter().enumerate() {
            idx[d] = axis.nearest(x[d]);
        }
        Ok(self.node(idx))
    }

    /// Neighbor of `node` one step along `axis`, if it exists.
    pub fn neighbor(&self, node: usize, axis: usize, forward: bool) -> Option<usize> {
        let m = self.neighbors[node][axis][forward as usize];
        (m != usize::MAX).then_some(m)
    }

    /// Diagonal metric evaluated analytically at an arbitrary coordinate point.
    pub fn metric_at(&self, x: [f64; 2]) -> [f64; 2] {
        match &self.spec {
            ManifoldSpec::FlatTorus { .. } => [1.0, 1.0],
            ManifoldSpec::RoundSphere { .. } => {
                let s = x[0].sin();
                [1.0, s * s]
            }
            ManifoldSpec::HyperbolicPatch { .. } => {
                let lam = 2.0 / (1.0 - x[0] * x[0] - x[1] * x[1]);
                [lam * lam, lam * lam]
            }
            ManifoldSpec::WarpedTorus { warp, .. } => {
                let w = warp.value(x[0]);
                [1.0, w * w]
            }
        }
    }

    /// Smallest physical spacing `h_i·√g_ii` over all nodes and axes.
    pub fn min_physical_spacing(&self) -> f64 {
        let mut h = f64::INFINITY;
        for k in 0..self.len() {
            for (d, axis) in self.axes.iter().enumerate() {
                h = h.min(axis.spacing * self.metric[k][d].sqrt());
            }
        }
        h
    }

    /// Largest physical spacing `h_i·√g_ii` over interior nodes and axes.
    pub fn max_physical_spacing(&self) -> f64 {
        let mut h: f64 = 0.0;
        for k in self.interior_nodes() {
            for (d, axis) in self.axes.iter().enumerate() {
                h = h.max(axis.spacing * self.metric[k][d].sqrt());
            }
        }
        h
    }

    /// Coordinate cell volume `∏ h_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    pub fn field_from_fn(&self, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let values = (0..self.len()).map(|k| f(self.coordinates(k))).collect();
        ScalarField::new_unchecked(self.id, values)
    }

    pub fn constant_field(&self, c: f64) -> ScalarField {
        ScalarField::new_unchecked(self.id, vec![c; self.len()])
    }

    pub fn field(&self, values: Vec<f64>) -> Result<ScalarField, GeometryError> {
        ScalarField::new(self, values)
    }
}

/// Builds the grid, metric, volume density and Ricci data for a manifold description.
pub fn build_manifold(spec: &ManifoldSpec) -> Result<ManifoldGrid, GeometryError> {
    const MIN_NODES: usize = 8;
    let check_nodes = |nodes: &[usize]| -> Result<(), GeometryError> {
        match nodes.iter().find(|&&n| n < MIN_NODES) {
            Some(&n) => Err(GeometryError::TooFewNodes {
                found: n,
                min: MIN_NODES,
            }),
            None => Ok(()),
        }
    };

    let (axes, warp) = match spec {
        ManifoldSpec::FlatTorus { nodes, lengths } => {
            if nodes.is_empty() || nodes.len() > 2 {
                return Err(GeometryError::UnsupportedDimension(nodes.len()));
            }
            if lengths.len() != nodes.len() {
                return Err(GeometryError::InvalidSpec(format!(
                    "flat torus has {} node counts but {} lengths",
                    nodes.len(),
                    lengths.len()
                )));
            }
            if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                return Err(GeometryError::InvalidSpec(
                    "flat torus lengths must be positive".into(),
                ));
            }
            check_nodes(nodes)?;
            let axes = nodes
                .iter()
                .zip(lengths)
                .map(|(&n, &l)| Axis::periodic(n, l))
                .collect::<Vec<_>>();
            (axes, None)
        }
        ManifoldSpec::RoundSphere {
            nodes,
            colatitude_cutoff,
        } => {
            check_nodes(nodes)?;
            let cap = *colatitude_cutoff;
            if !(cap > 0.0 && cap < PI / 2.0 - 0.1) {
                return Err(GeometryError::InvalidSpec(format!(
                    "colatitude cutoff {cap} must lie in (0, π/2 − 0.1)"
                )));
            }
            (
                vec![
                    Axis::closed(nodes[0], cap, PI - cap),
                    Axis::periodic(nodes[1], 2.0 * PI),
                ],
                None,
            )
        }
        ManifoldSpec::HyperbolicPatch { nodes, extent } => {
            check_nodes(nodes)?;
            // corner must stay away from the ideal boundary |z| = 1
            if !(*extent > 0.0 && extent * std::f64::consts::SQRT_2 <= 0.95) {
                return Err(GeometryError::InvalidSpec(format!(
                    "hyperbolic extent {extent} must satisfy 0 < √2·extent ≤ 0.95"
                )));
            }
            (
                vec![
                    Axis::closed(nodes[0], -extent, *extent),
                    Axis::closed(nodes[1], -extent, *extent),
                ],
                None,
            )
        }
        ManifoldSpec::WarpedTorus { nodes, warp } => {
            check_nodes(nodes)?;
            (
                vec![
                    Axis::periodic(nodes[0], 2.0 * PI),
                    Axis::periodic(nodes[1], 2.0 * PI),
                ],
                Some(*warp),
            )
        }
    };

    let warp_samples = match warp {
        Some(w) => {
            let samples: Vec<f64> = (0..axes[0].nodes)
                .map(|i| w.value(axes[0].coordinate(i)))
                .collect();
            if let Some((i, &v)) = samples.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
                return Err(GeometryError::NonPositiveWarp {
                    r: axes[0].coordinate(i),
                    value: v,
                });
            }
            // samples only see grid points; the analytic minimum must be positive too
            if w.mean - w.amplitude.abs() <= 0.0 {
                return Err(GeometryError::NonPositiveWarp {
                    r: PI,
                    value: w.mean - w.amplitude.abs(),
                });
            }
            Some(samples)
        }
        None => None,
    };

    let mut grid = ManifoldGrid {
        id: GridId::fresh(),
        spec: spec.clone(),
        axes,
        metric: Vec::new(),
        sqrt_det: Vec::new(),
        ricci_min: Vec::new(),
        warp_samples,
        face_weights: Vec::new(),
        interior: Vec::new(),
        neighbors: Vec::new(),
    };
    let n = grid.len();
    let dim = grid.dimension();

    let mut metric = Vec::with_capacity(n);
    let mut sqrt_det = Vec::with_capacity(n);
    let mut ricci = Vec::with_capacity(n);
    let mut interior = Vec::with_capacity(n);
    for k in 0..n {
        let x = grid.coordinates(k);
        let mut g = grid.metric_at(x);
        if dim == 1 {
            g[1] = 1.0;
        }
        if !(g[0] > 0.0 && g[1] > 0.0) {
            return Err(GeometryError::DegenerateMetric { node: k });
        }
        metric.push(g);
        sqrt_det.push(if dim == 1 { g[0].sqrt() } else { (g[0] * g[1]).sqrt() });
        ricci.push(match spec {
            ManifoldSpec::FlatTorus { .. } => 0.0,
            ManifoldSpec::RoundSphere { .. } => (dim - 1) as f64,
            ManifoldSpec::HyperbolicPatch { .. } => -((dim - 1) as f64),
            ManifoldSpec::WarpedTorus { warp, .. } => {
                -warp.second_derivative(x[0]) / warp.value(x[0])
            }
        });
        let idx = grid.multi_index(k);
        interior.push(
            grid.axes
                .iter()
                .enumerate()
                .all(|(d, a)| a.periodic || (idx[d] > 0 && idx[d] + 1 < a.nodes)),
        );
    }

    let mut face_weights = Vec::with_capacity(dim);
    for d in 0..dim {
        let h = grid.axes[d].spacing;
        let mut w = Vec::with_capacity(n);
        for k in 0..n {
            let mut x = grid.coordinates(k);
            x[d] += 0.5 * h;
            let g = grid.metric_at(x);
            let sg = if dim == 1 { g[0].sqrt() } else { (g[0] * g[1]).sqrt() };
            w.push(sg / g[d]);
        }
        face_weights.push(w);
    }

    let neighbors = (0..n)
        .map(|k| {
            let idx = grid.multi_index(k);
            let mut table = [[usize::MAX; 2]; 2];
            for (d, axis) in grid.axes.iter().enumerate() {
                for fwd in [false, true] {
                    if let Some(j) = axis.step(idx[d], fwd) {
                        let mut m = idx;
                        m[d] = j;
                        table[d][fwd as usize] = grid.node(m);
                    }
                }
            }
            table
        })
        .collect();

    grid.neighbors = neighbors;
    grid.metric = metric;
    grid.sqrt_det = sqrt_det;
    grid.ricci_min = ricci;
    grid.face_weights = face_weights;
    grid.interior = interior;
    Ok(grid)
}
