//! Piecewise-linear interpolation of equilibria over the `(beta, psidot)` plane.

use serde::{Deserialize, Serialize};

use super::{EquilibriumPoint, EsmError};

/// Which turning directions a manifold covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurningSense {
    CounterClockwise,
    Clockwise,
    Both,
}

impl TurningSense {
    pub fn as_str(&self) -> &'static str {
        match self {
            TurningSense::CounterClockwise => "counter_clockwise",
            TurningSense::Clockwise => "clockwise",
            TurningSense::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "counter_clockwise" => Some(TurningSense::CounterClockwise),
            "clockwise" => Some(TurningSense::Clockwise),
            "both" => Some(TurningSense::Both),
            _ => None,
        }
    }

    fn of_points(points: &[EquilibriumPoint]) -> Self {
        let left = points.iter().any(|p| p.dyn_state.psidot > 0.0);
        let right = points.iter().any(|p| p.dyn_state.psidot < 0.0);
        match (left, right) {
            (true, false) => TurningSense::CounterClockwise,
            (false, true) => TurningSense::Clockwise,
            _ => TurningSense::Both,
        }
    }
}

/// Domain filters applied while building a manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildOptions {
    /// Smallest admissible curvature radius (m).
    pub r_c_min: f64,
    /// Samples with `beta * psidot > 0` survive only while `|beta|` is below this.
    pub same_sign_beta_margin: f64,
    /// Largest steering spread (rad) among the vertices of one triangle.
    pub max_delta_gap: f64,
    /// Largest slip spread among the vertices of one triangle.
    pub max_lambda_gap: f64,
    /// Largest relative disagreement, inside one triangle, between the
    /// interpolated `v / psidot` and the interpolated vertex radius.
    pub radius_consistency: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            r_c_min: 10.0,
            same_sign_beta_margin: 0.05,
            max_delta_gap: 3.5f64.to_radians(),
            max_lambda_gap: 0.07,
            radius_consistency: 0.04,
        }
    }
}

impl BuildOptions {
    /// Whether a single sample lies in the admissible domain.
    pub fn admits(&self, p: &EquilibriumPoint) -> bool {
        let d = &p.dyn_state;
        p.r_c.abs() >= self.r_c_min
            && d.psidot != 0.0
            && !(d.beta * d.psidot > 0.0 && d.beta.abs() >= self.same_sign_beta_margin)
    }
}

/// Interpolated inputs and speed at a `(beta, psidot)` query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldQuery {
    pub v: f64,
    pub delta: f64,
    pub lambda: f64,
}

/// Uniform bucket grid over the bounding box of the triangles.
#[derive(Debug, Clone)]
struct BucketIndex {
    min: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl BucketIndex {
    fn build(samples: &[EquilibriumPoint], triangles: &[[usize; 3]]) -> Self {
        let xy = |i: usize| (samples[i].dyn_state.beta, samples[i].dyn_state.psidot);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for t in triangles {
            for &i in t {
                let (x, y) = xy(i);
                lo = [lo[0].min(x), lo[1].min(y)];
                hi = [hi[0].max(x), hi[1].max(y)];
            }
        }
        let side = (triangles.len() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(1e-12),
            ((hi[1] - lo[1]) / side as f64).max(1e-12),
        ];
        let mut index = BucketIndex {
            min: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for (k, t) in triangles.iter().enumerate() {
            let (mut tl, mut th) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &i in t {
                let (x, y) = xy(i);
                tl = [tl[0].min(x), tl[1].min(y)];
                th = [th[0].max(x), th[1].max(y)];
            }
            let (c0, r0) = index.cell_of(tl[0], tl[1]);
            let (c1, r1) = index.cell_of(th[0], th[1]);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    index.buckets[r * dims[0] + c].push(k as u32);
                }
            }
        }
        index
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let c = ((x - self.min[0]) / self.cell[0]).floor();
        let r = ((y - self.min[1]) / self.cell[1]).floor();
        (
            (c.max(0.0) as usize).min(self.dims[0] - 1),
            (r.max(0.0) as usize).min(self.dims[1] - 1),
        )
    }

    fn candidates(&self, x: f64, y: f64) -> &[u32] {
        let (c, r) = self.cell_of(x, y);
        &self.buckets[r * self.dims[0] + c]
    }
}

/// Triangulated equilibrium set with linear interpolants of `v`, `delta`
/// and `lambda` over `(beta, psidot)`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Manifold {
    samples: Vec<EquilibriumPoint>,
    triangles: Vec<[usize; 3]>,
    params_hash: String,
    turning: TurningSense,
    r_c_min: f64,
    index: BucketIndex,
}

impl PartialEq for Manifold {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
            && self.triangles == other.triangles
            && self.params_hash == other.params_hash
            && self.turning == other.turning
            && self.r_c_min.to_bits() == other.r_c_min.to_bits()
    }
}

const BARY_TOL: f64 = 1e-12;

fn barycentric(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> [f64; 3] {
    let det = (b.1 - c.1) * (a.0 - c.0) + (c.0 - b.0) * (a.1 - c.1);
    let w0 = ((b.1 - c.1) * (p.0 - c.0) + (c.0 - b.0) * (p.1 - c.1)) / det;
    let w1 = ((c.1 - a.1) * (p.0 - c.0) + (a.0 - c.0) * (p.1 - c.1)) / det;
    [w0, w1, 1.0 - w0 - w1]
}

impl Manifold {
    /// Assembles a manifold from already filtered parts. Used by the builder
    /// and by the file loader.
    pub(crate) fn from_parts(
        samples: Vec<EquilibriumPoint>,
        triangles: Vec<[usize; 3]>,
        params_hash: String,
        turning: TurningSense,
        r_c_min: f64,
    ) -> Result<Self, EsmError> {
        if triangles.is_empty() {
            return Err(EsmError::InsufficientPoints(samples.len()));
        }
        let index = BucketIndex::build(&samples, &triangles);
        Ok(Manifold {
            samples,
            triangles,
            params_hash,
            turning,
            r_c_min,
            index,
        })
    }

    pub fn samples(&self) -> &[EquilibriumPoint] {
        &self.samples
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn params_hash(&self) -> &str {
        &self.params_hash
    }

    pub fn turning(&self) -> TurningSense {
        self.turning
    }

    pub fn r_c_min(&self) -> f64 {
        self.r_c_min
    }

    fn xy(&self, i: usize) -> (f64, f64) {
        let d = &self.samples[i].dyn_state;
        (d.beta, d.psidot)
    }

    /// Containing triangle and barycentric weights of a point, if in domain.
    pub fn locate(&self, beta: f64, psidot: f64) -> Option<(usize, [f64; 3])> {
        if !(beta.is_finite() && psidot.is_finite()) {
            return None;
        }
        for &k in self.index.candidates(beta, psidot) {
            let t = self.triangles[k as usize];
            let w = barycentric((beta, psidot), self.xy(t[0]), self.xy(t[1]), self.xy(t[2]));
            if w.iter().all(|&wi| wi >= -BARY_TOL) {
                return Some((k as usize, w));
            }
        }
        None
    }

    pub fn contains(&self, beta: f64, psidot: f64) -> bool {
        self.locate(beta, psidot).is_some()
    }

    /// Interpolated `(v, delta, lambda)` at `(beta, psidot)`.
    ///
    /// A query that coincides with a stored vertex returns that vertex's
    /// values exactly.
    pub fn query(&self, beta: f64, psidot: f64) -> Result<ManifoldQuery, EsmError> {
        let (k, w) = self
            .locate(beta, psidot)
            .ok_or(EsmError::OutOfDomain { beta, psidot })?;
        let t = self.triangles[k];
        for &i in &t {
            if self.xy(i) == (beta, psidot) {
                let p = &self.samples[i];
                return Ok(ManifoldQuery {
                    v: p.dyn_state.v,
                    delta: p.input.delta,
                    lambda: p.input.lambda,
                });
            }
        }
        let mix = |f: &dyn Fn(&EquilibriumPoint) -> f64| {
            w[0] * f(&self.samples[t[0]]) + w[1] * f(&self.samples[t[1]]) + w[2] * f(&self.samples[t[2]])
        };
        Ok(ManifoldQuery {
            v: mix(&|p| p.dyn_state.v),
            delta: mix(&|p| p.input.delta),
            lambda: mix(&|p| p.input.lambda),
        })
    }

    /// Bounding box `((beta_min, beta_max), (psidot_min, psidot_max))` of the domain.
    pub fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY);
        let mut r = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.samples {
            b = (b.0.min(s.dyn_state.beta), b.1.max(s.dyn_state.beta));
            r = (r.0.min(s.dyn_state.psidot), r.1.max(s.dyn_state.psidot));
        }
        (b, r)
    }

    /// Smallest and largest `|R_c|` over the samples.
    pub fn r_c_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
            (lo.min(s.r_c.abs()), hi.max(s.r_c.abs()))
        })
    }

    /// Total area of the triangulated domain.
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|&t| self.triangle_area(t)).sum()
    }

    pub(crate) fn triangle_area(&self, t: [usize; 3]) -> f64 {
        let (a, b, c) = (self.xy(t[0]), self.xy(t[1]), self.xy(t[2]));
        0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
    }
}

/// Largest relative gap between `v / psidot` and the linearly interpolated
/// radius over a barycentric lattice of the triangle.
fn radius_disagreement(pts: &[&EquilibriumPoint; 3]) -> f64 {
    const N: usize = 10;
    let mut worst = 0.0f64;
    for a in 0..=N {
        for b in 0..=N - a {
            let w = [a as f64, b as f64, (N - a - b) as f64].map(|x| x / N as f64);
            let mix = |f: &dyn Fn(&EquilibriumPoint) -> f64| (0..3).map(|i| w[i] * f(pts[i])).sum::<f64>();
            let radius = mix(&|p| p.dyn_state.v) / mix(&|p| p.dyn_state.psidot);
            worst = worst.max((radius / mix(&|p| p.r_c) - 1.0).abs());
        }
    }
    worst
}

/// Triangulates the admissible samples over `(beta, psidot)`.
///
/// Triangles are kept only when all three vertices turn the same way and
/// are neighbors in input space, so no triangle bridges a fold of the
/// equilibrium surface or the straight-line gap between turning senses.
/// Triangles where the interpolated speed and yaw rate imply a radius far
/// from the interpolated vertex radius are dropped as well.
/// Because `psidot` is a coordinate of the plane and every vertex has
/// `|v / psidot| >= r_c_min`, the interpolated radius also respects the
/// bound everywhere inside the domain.
pub fn build_manifold(
    points: &[EquilibriumPoint],
    opts: &BuildOptions,
    params_hash: &str,
) -> Result<Manifold, EsmError> {
    let kept: Vec<EquilibriumPoint> = points.iter().copied().filter(|p| opts.admits(p)).collect();
    if kept.len() < 3 {
        return Err(EsmError::InsufficientPoints(kept.len()));
    }
    let coords: Vec<delaunator::Point> = kept
        .iter()
        .map(|p| delaunator::Point {
            x: p.dyn_state.beta,
            y: p.dyn_state.psidot,
        })
        .collect();
    let tri = delaunator::triangulate(&coords);

    let mut triangles = Vec::new();
    for t in tri.triangles.chunks_exact(3) {
        let v = [t[0], t[1], t[2]];
        let pts = v.map(|i| &kept[i]);
        let sign = pts[0].dyn_state.psidot.signum();
        if pts.iter().any(|p| p.dyn_state.psidot.signum() != sign) {
            continue;
        }
        let spread = |f: &dyn Fn(&EquilibriumPoint) -> f64| {
            let vals = pts.map(f);
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - vals.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        if spread(&|p| p.input.delta) > opts.max_delta_gap + 1e-12
            || spread(&|p| p.input.lambda) > opts.max_lambda_gap + 1e-12
        {
            continue;
        }
        let (a, b, c) = (coords[v[0]].clone(), coords[v[1]].clone(), coords[v[2]].clone());
        let cross = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let scale = (b.x - a.x).hypot(b.y - a.y) * (c.x - a.x).hypot(c.y - a.y);
        if cross.abs() <= 1e-9 * scale {
            continue;
        }
        if radius_disagreement(&pts) > opts.radius_consistency {
            continue;
        }
        triangles.push(v);
    }

    // drop samples no triangle references, renumbering the rest
    let mut remap = vec![usize::MAX; kept.len()];
    let mut samples = Vec::new();
    for t in &mut triangles {
        for i in t.iter_mut() {
            if remap[*i] == usize::MAX {
                remap[*i] = samples.len();
                samples.push(kept[*i]);
            }
            *i = remap[*i];
        }
    }
    let turning = TurningSense::of_points(&samples);
    Manifold::from_parts(samples, triangles, params_hash.to_string(), turning, opts.r_c_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esm::Stability;
    use crate::vehicle::{ControlInput, DynamicState};

    fn point(beta: f64, psidot: f64, v: f64, delta: f64, lambda: f64) -> EquilibriumPoint {
        EquilibriumPoint {
            dyn_state: DynamicState::new(v, beta, psidot),
            input: ControlInput::new(delta, lambda),
            r_c: v / psidot,
            stability: Stability::Stable,
        }
    }

    // a small lattice of synthetic left-turn samples with inputs affine in the plane
    fn lattice() -> Vec<EquilibriumPoint> {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let beta = -0.1 * i as f64;
                let psidot = 0.4 + 0.02 * j as f64;
                pts.push(point(beta, psidot, 12.0 + beta, 0.01 * j as f64, 0.02 * i as f64));
            }
        }
        pts
    }

    #[test]
    fn stored_nodes_are_reproduced_exactly() {
        let pts = lattice();
        let m = build_manifold(&pts, &BuildOptions::default(), "h").unwrap();
        for p in m.samples() {
            let q = m.query(p.dyn_state.beta, p.dyn_state.psidot).unwrap();
            assert_eq!(q.v, p.dyn_state.v);
            assert_eq!(q.delta, p.input.delta);
            assert_eq!(q.lambda, p.input.lambda);
        }
        assert_eq!(m.samples().len(), 25);
        assert_eq!(m.turning(), TurningSense::CounterClockwise);
    }

    #[test]
    fn barycenter_returns_vertex_mean() {
        let m = build_manifold(&lattice(), &BuildOptions::default(), "h").unwrap();
        for &t in m.triangles() {
            let s = t.map(|i| m.samples()[i]);
            let beta = s.iter().map(|p| p.dyn_state.beta).sum::<f64>() / 3.0;
            let psidot = s.iter().map(|p| p.dyn_state.psidot).sum::<f64>() / 3.0;
            let q = m.query(beta, psidot).unwrap();
            let mean_v = s.iter().map(|p| p.dyn_state.v).sum::<f64>() / 3.0;
            let mean_d = s.iter().map(|p| p.input.delta).sum::<f64>() / 3.0;
            assert!((q.v - mean_v).abs() < 1e-12);
            assert!((q.delta - mean_d).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_hull_is_out_of_domain() {
        let m = build_manifold(&lattice(), &BuildOptions::default(), "h").unwrap();
        assert!(matches!(m.query(0.5, 0.3), Err(EsmError::OutOfDomain { .. })));
        assert!(matches!(m.query(-0.2, 5.0), Err(EsmError::OutOfDomain { .. })));
        assert!(m.query(f64::NAN, 0.3).is_err());
    }

    #[test]
    fn small_radius_and_same_sign_samples_are_filtered() {
        let mut pts = lattice();
        pts.push(point(-0.2, 2.0, 12.0, 0.0, 0.0)); // R = 6 m
        pts.push(point(0.2, 0.42, 12.0, 0.0, 0.0)); // beta psidot > 0 beyond the margin
        let m = build_manifold(&pts, &BuildOptions::default(), "h").unwrap();
        assert_eq!(m.samples().len(), 25);
    }

    #[test]
    fn collinear_points_are_insufficient() {
        let pts: Vec<_> = (0..5).map(|i| point(0.0, 0.2 + 0.1 * i as f64, 12.0, 0.0, 0.0)).collect();
        assert!(matches!(
            build_manifold(&pts, &BuildOptions::default(), "h"),
            Err(EsmError::InsufficientPoints(_))
        ));
        assert!(matches!(
            build_manifold(&pts[..2], &BuildOptions::default(), "h"),
            Err(EsmError::InsufficientPoints(2))
        ));
    }

    #[test]
    fn triangles_never_bridge_turning_senses() {
        let mut pts = lattice();
        pts.extend(lattice().iter().map(|p| p.mirrored()));
        let m = build_manifold(&pts, &BuildOptions::default(), "h").unwrap();
        assert_eq!(m.turning(), TurningSense::Both);
        assert!(!m.contains(0.0, 0.0));
        for t in m.triangles() {
            let s: Vec<f64> = t.iter().map(|&i| m.samples()[i].dyn_state.psidot.signum()).collect();
            assert!(s.iter().all(|&x| x == s[0]));
        }
    }
}
