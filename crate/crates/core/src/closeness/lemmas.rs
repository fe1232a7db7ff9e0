use super::deltas::restricted_pencil_sup;
use super::{random_smooth, ClosenessError, Result};
use crate::fem::{element_matrices, norms, EigenSolution, OperatorPair};
use crate::geometry::{orient, projection_intervals, Axis, PerforatedDomain, Point};
use crate::linalg::EnvelopeCholesky;
use crate::mesh::{CircleTrace, CrackedMesh, Mesh, PointLocator};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn need_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(ClosenessError::InvalidParameter("at least one sample is required".into()));
    }
    Ok(())
}

fn k_factor(op: &OperatorPair) -> Result<EnvelopeCholesky> {
    Ok(EnvelopeCholesky::factor(&op.m.add_scaled(&op.s, 1.0))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLemmaResult {
    pub min_margin: f64,
    /// Minimum of `margin / (‖A z‖² + ‖z‖²)`.
    pub min_relative_margin: f64,
    pub samples: usize,
}

/// `‖(A+I)z‖² − (‖Az‖² + ‖z‖²)/16` in the lumped inner product, for the
/// constant vector and `samples − 1` random vectors.
pub fn verify_lemma_delta(op: &OperatorPair, samples: usize, seed: u64) -> Result<DeltaLemmaResult> {
    need_samples(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ml = &op.m_lumped;
    let lumped = |v: &[f64]| v.iter().zip(ml).map(|(x, d)| d * x * x).sum::<f64>();
    let (mut min_margin, mut min_rel) = (f64::INFINITY, f64::INFINITY);
    for s in 0..samples {
        let z: Vec<f64> = if s == 0 { vec![1.0; op.n] } else { (0..op.n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let az: Vec<f64> = op.s.mul_vec(&z).iter().zip(ml).map(|(x, d)| x / d).collect();
        let sum: Vec<f64> = az.iter().zip(&z).map(|(a, b)| a + b).collect();
        let scale = lumped(&az) + lumped(&z);
        let margin = lumped(&sum) - scale / 16.0;
        min_margin = min_margin.min(margin);
        min_rel = min_rel.min(margin / scale);
    }
    Ok(DeltaLemmaResult { min_margin, min_relative_margin: min_rel, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLemmaResult {
    /// Sharp `sup ∮|v|² / ‖v‖₁²` over the discrete space.
    pub best_constant: f64,
    pub max_sampled_ratio: f64,
    /// Ratio for `v ≡ 1`.
    pub constant_ratio: f64,
}

/// Circle trace against the `H¹` norm. The ring indices of `trace` must be
/// valid in the space of `op`.
pub fn verify_trace_lemma(op: &OperatorPair, trace: &CircleTrace, samples: usize, seed: u64) -> Result<TraceLemmaResult> {
    need_samples(samples)?;
    let k = k_factor(op)?;
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&trace.arc_weights));
    let best_constant = restricted_pencil_sup(&w, &trace.arc_nodes, &k)?;
    let h1 = |v: &[f64]| op.m.quad_form(v) + op.s.quad_form(v);
    let ones = vec![1.0; op.n];
    let constant_ratio = trace.integrate_squared(&ones) / h1(&ones);
    // Potentials sourced on the ring plus nodal noise.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_sampled_ratio = constant_ratio;
    for _ in 0..samples {
        let mut rhs = vec![0.0; op.n];
        for (&v, wt) in trace.arc_nodes.iter().zip(&trace.arc_weights) {
            rhs[v] = wt * rng.random_range(-1.0..1.0);
        }
        let mut v = k.solve(&rhs);
        let amp = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let noise = rng.random_range(0.0..0.1) * amp;
        v.iter_mut().for_each(|x| *x += noise * rng.random_range(-1.0..1.0));
        max_sampled_ratio = max_sampled_ratio.max(trace.integrate_squared(&v) / h1(&v));
    }
    Ok(TraceLemmaResult { best_constant, max_sampled_ratio, constant_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveLemmaResult {
    /// Largest `|u(x₀,y₀)|² / (∫_l |∂u|² + ∫_l |u|²)`.
    pub best_constant: f64,
    /// Largest `|u(x₀,y₀)|²` divided by `(2/dist)∫_l|u|² + 2 diam ∫_l|∂u|²`; at most 1.
    pub max_bound_ratio: f64,
    pub points: usize,
    pub functions: usize,
}

/// Sub-intervals of an axis-parallel line, each inside one triangle.
struct LinePieces {
    axis: Axis,
    offset: f64,
    pieces: Vec<(usize, f64, f64)>,
}

impl LinePieces {
    /// `axis = X` means the vertical line `x = offset`.
    fn new(axis: Axis, offset: f64, positions: &[Point], triangles: &[[usize; 3]], locator: &PointLocator) -> Self {
        let at = |s: f64| match axis {
            Axis::X => Point::new(offset, s),
            Axis::Y => Point::new(s, offset),
        };
        let vertical = matches!(axis, Axis::X);
        let across = |p: Point| if vertical { p.x } else { p.y };
        let along = |p: Point| if vertical { p.y } else { p.x };
        let mut cuts = Vec::new();
        for tri in triangles {
            for k in 0..3 {
                let (p, q) = (positions[tri[k]], positions[tri[(k + 1) % 3]]);
                let (dp, dq) = (across(p) - offset, across(q) - offset);
                if dp == 0.0 {
                    cuts.push(along(p));
                }
                if dp * dq < 0.0 {
                    let t = dp / (dp - dq);
                    cuts.push(along(p) + t * (along(q) - along(p)));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);
        let pieces = cuts
            .windows(2)
            .filter(|w| w[1] - w[0] > 1e-13)
            .filter_map(|w| locator.locate(at(0.5 * (w[0] + w[1]))).map(|(t, _)| (t, w[0], w[1])))
            .collect();
        Self { axis, offset, pieces }
    }

    /// `(∫ u², ∫ |∂u|²)` along the line.
    fn integrals(&self, u: &[f64], positions: &[Point], locator: &PointLocator) -> (f64, f64) {
        let (mut l2, mut d2) = (0.0, 0.0);
        for &(t, s0, s1) in &self.pieces {
            let (gx, gy) = locator.gradient(u, t);
            let tri = locator.triangle(t);
            let a = positions[tri[0]];
            let value = |s: f64| {
                let p = match self.axis {
                    Axis::X => Point::new(self.offset, s),
                    Axis::Y => Point::new(s, self.offset),
                };
                u[tri[0]] + gx * (p.x - a.x) + gy * (p.y - a.y)
            };
            let (u0, u1) = (value(s0), value(s1));
            let g = match self.axis {
                Axis::X => gy,
                Axis::Y => gx,
            };
            let len = s1 - s0;
            l2 += len * (u0 * u0 + u0 * u1 + u1 * u1) / 3.0;
            d2 += len * g * g;
        }
        (l2, d2)
    }
}

/// Pointwise values against line integrals along a line that avoids the crack.
///
/// Nodes are drawn from the interior of `Ω_K`; the vertical line is used
/// when it misses the crack, otherwise the horizontal one. The constant
/// function is always among the samples.
pub fn verify_curve_lemma(cracked: &CrackedMesh, pd: &PerforatedDomain, samples: usize, seed: u64) -> Result<CurveLemmaResult> {
    need_samples(samples)?;
    let star = pd.check_property_star();
    if !star.holds {
        let at = star.witness.map(|p| format!(" (witness {p})")).unwrap_or_default();
        return Err(ClosenessError::HypothesisUnmet(format!("property* fails for this crack{at}")));
    }
    let positions = cracked.vertices();
    let locator = PointLocator::new(positions.clone(), cracked.triangles.clone());
    let px = projection_intervals(&pd.crack, Axis::X);
    let py = projection_intervals(&pd.crack, Axis::Y);
    let boundary: std::collections::BTreeSet<usize> = cracked.base.boundary_edges.iter().flatten().copied().collect();
    let candidates: Vec<usize> = (0..cracked.base.n_vertices())
        .filter(|v| !boundary.contains(v) && !pd.crack.contains(positions[*v]))
        .collect();
    if candidates.is_empty() {
        return Err(ClosenessError::InvalidParameter("mesh has no interior nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_points = samples.min(40);
    let mut lines = Vec::new();
    for _ in 0..n_points {
        let v = candidates[rng.random_range(0..candidates.len())];
        let p = positions[v];
        let line = if !px.contains(p.x) {
            LinePieces::new(Axis::X, p.x, &positions, &cracked.triangles, &locator)
        } else if !py.contains(p.y) {
            LinePieces::new(Axis::Y, p.y, &positions, &cracked.triangles, &locator)
        } else {
            continue;
        };
        lines.push((v, pd.domain.distance_to_boundary(p), line));
    }
    let diam = pd.domain.diameter();
    let dup: Vec<bool> = (0..cracked.n_vertices()).map(|v| v >= cracked.base.n_vertices()).collect();
    let (mut best, mut worst_bound) = (0.0f64, 0.0f64);
    for s in 0..samples {
        let u = if s == 0 { vec![1.0; positions.len()] } else { random_smooth(&positions, &dup, &mut rng) };
        for (v, dist, line) in &lines {
            let (l2, d2) = line.integrals(&u, &positions, &locator);
            let val = u[*v] * u[*v];
            best = best.max(val / (l2 + d2));
            worst_bound = worst_bound.max(val / (2.0 / dist * l2 + 2.0 * diam * d2));
        }
    }
    Ok(CurveLemmaResult { best_constant: best, max_bound_ratio: worst_bound, points: lines.len(), functions: samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalphaResult {
    /// `∫_{B_ε̂} |∇g|² / (ε̂^{4/3} ‖g‖₂²)` per eigenfunction.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Sum of element energies over triangles with centroid in the open disk.
fn ball_energy(mesh: &Mesh, u: &[f64], center: Point, radius: f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let c = Point::new((pts[0].x + pts[1].x + pts[2].x) / 3.0, (pts[0].y + pts[1].y + pts[2].y) / 3.0);
        if c.dist(center) < radius {
            let (ke, _, _) = element_matrices(pts);
            for i in 0..3 {
                for j in 0..3 {
                    total += u[tri[i]] * ke[i][j] * u[tri[j]];
                }
            }
        }
    }
    total
}

/// Local energy near the crack of the first `count` eigenfunctions of `op`
/// (on the uncracked `mesh`), scaled by `ε̂^{4/3}` and the graph norm.
pub fn verify_galpha(op: &OperatorPair, mesh: &Mesh, pd: &PerforatedDomain, eigen: &EigenSolution, count: usize) -> Result<GalphaResult> {
    let rho = pd.extension_radius;
    let scale = rho.powf(4.0 / 3.0);
    let mut ratios = Vec::new();
    for k in 0..count.min(eigen.values.len()) {
        let g = eigen.vector(k);
        let num = ball_energy(mesh, &g, pd.ball.center, rho);
        let h2 = norms(op, &g)?.h2;
        ratios.push(num / (scale * h2 * h2));
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(GalphaResult { ratios, max_ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxLemmaResult {
    pub radii: Vec<f64>,
    pub tau_found: Vec<bool>,
    /// Per sample, `min_τ ∫|∂_φ g̃(τ,φ)|² dφ / ‖g‖₁²`.
    pub best_ratios: Vec<f64>,
    pub worst_ratio: f64,
}

impl AuxLemmaResult {
    pub fn all_found(&self) -> bool {
        self.tau_found.iter().all(|&b| b)
    }
}

/// Angular derivative on circles of radius `τ ∈ (ε, 2ε)` against `4‖g‖₁²`
/// for random functions of the cracked space, with `‖·‖₁` over `Ω_K`.
pub fn verify_aux_lemma(op_cracked: &OperatorPair, cracked: &CrackedMesh, pd: &PerforatedDomain, samples: usize, seed: u64) -> Result<AuxLemmaResult> {
    need_samples(samples)?;
    let eps = pd.epsilon();
    let positions = cracked.vertices();
    let locator = PointLocator::new(positions.clone(), cracked.triangles.clone());
    let radii: Vec<f64> = (0..32).map(|j| eps * (1.0 + (j as f64 + 0.5) / 32.0)).collect();
    let h = cracked.base.h_fine.min(cracked.base.h).max(1e-12);
    // Midpoint angular rule; triangle per quadrature point cached.
    let mut rules: Vec<Vec<(usize, f64, f64)>> = Vec::new();
    for &tau in &radii {
        let n = ((16.0 * PI * tau / h).ceil() as usize).max(256);
        let mut rule = Vec::with_capacity(n);
        for q in 0..n {
            let phi = 2.0 * PI * (q as f64 + 0.5) / n as f64;
            let p = Point::new(pd.ball.center.x + tau * phi.cos(), pd.ball.center.y + tau * phi.sin());
            let (t, _) = locator.locate(p).ok_or_else(|| ClosenessError::DomainEscape { radius: tau, room: pd.domain.distance_to_boundary(pd.ball.center) })?;
            rule.push((t, phi, 2.0 * PI / n as f64));
        }
        rules.push(rule);
    }
    let dup: Vec<bool> = (0..cracked.n_vertices()).map(|v| v >= cracked.base.n_vertices()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tau_found, mut best_ratios) = (Vec::new(), Vec::new());
    for _ in 0..samples {
        let g = random_smooth(&positions, &dup, &mut rng);
        let h1 = op_cracked.m.quad_form(&g) + op_cracked.s.quad_form(&g);
        let best = radii
            .iter()
            .zip(&rules)
            .map(|(&tau, rule)| {
                rule.iter()
                    .map(|&(t, phi, w)| {
                        let (gx, gy) = locator.gradient(&g, t);
                        let d = tau * (-phi.sin() * gx + phi.cos() * gy);
                        w * d * d
                    })
                    .sum::<f64>()
                    / h1
            })
            .fold(f64::INFINITY, f64::min);
        tau_found.push(best <= 4.0);
        best_ratios.push(best);
    }
    let worst_ratio = best_ratios.iter().copied().fold(0.0, f64::max);
    Ok(AuxLemmaResult { radii, tau_found, best_ratios, worst_ratio })
}

/// Integrals of a P1 function over the part of the mesh inside a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskIntegrals {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub area: f64,
}

fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Exact on triangles inside the disk; cut triangles are split into 256
/// congruent pieces kept by centroid.
pub fn disk_integrals(vertices: &[Point], triangles: &[[usize; 3]], u: &[f64], center: Point, radius: f64) -> DiskIntegrals {
    const M: usize = 16;
    let mut out = DiskIntegrals { l2_sq: 0.0, grad_sq: 0.0, area: 0.0 };
    let p1_sq = |a: f64, b: f64, c: f64| (a * a + b * b + c * c + a * b + b * c + c * a) / 6.0;
    for tri in triangles {
        let pts = tri.map(|v| vertices[v]);
        let vals = tri.map(|v| u[v]);
        let area = 0.5 * orient(pts[0], pts[1], pts[2]);
        let inside = pts.iter().filter(|p| p.dist(center) <= radius).count();
        let contains_center = (0..3).all(|k| orient(pts[k], pts[(k + 1) % 3], center) >= 0.0);
        let nearest = if contains_center { 0.0 } else { (0..3).map(|k| point_segment_dist(center, pts[k], pts[(k + 1) % 3])).fold(f64::INFINITY, f64::min) };
        if inside < 3 && nearest >= radius {
            continue;
        }
        let det = 2.0 * area;
        let gx = ((vals[1] - vals[0]) * (pts[2].y - pts[0].y) - (vals[2] - vals[0]) * (pts[1].y - pts[0].y)) / det;
        let gy = ((vals[2] - vals[0]) * (pts[1].x - pts[0].x) - (vals[1] - vals[0]) * (pts[2].x - pts[0].x)) / det;
        let g2 = gx * gx + gy * gy;
        if inside == 3 {
            out.l2_sq += area * p1_sq(vals[0], vals[1], vals[2]);
            out.grad_sq += area * g2;
            out.area += area;
            continue;
        }
        let at = |i: usize, j: usize| {
            let (l1, l2) = (i as f64 / M as f64, j as f64 / M as f64);
            let l0 = 1.0 - l1 - l2;
            let p = Point::new(l0 * pts[0].x + l1 * pts[1].x + l2 * pts[2].x, l0 * pts[0].y + l1 * pts[1].y + l2 * pts[2].y);
            (p, l0 * vals[0] + l1 * vals[1] + l2 * vals[2])
        };
        let sub_area = area / (M * M) as f64;
        let mut add = |a: (Point, f64), b: (Point, f64), c: (Point, f64)| {
            let centroid = Point::new((a.0.x + b.0.x + c.0.x) / 3.0, (a.0.y + b.0.y + c.0.y) / 3.0);
            if centroid.dist(center) < radius {
                out.l2_sq += sub_area * p1_sq(a.1, b.1, c.1);
                out.grad_sq += sub_area * g2;
                out.area += sub_area;
            }
        };
        for i in 0..M {
            for j in 0..M - i {
                add(at(i, j), at(i + 1, j), at(i, j + 1));
                if i + j + 2 <= M {
                    add(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchenkoResult {
    /// Smallest `C(2)` making the inequality hold for every sample.
    pub best_c2: f64,
    pub alpha0: f64,
    /// Radius `ε̂^{1−α₀}` of the disk `G = Π`.
    pub g_radius: f64,
}

/// Solves the local `L²` inequality with `Q = B_ε̂` and `G = Π` the disk of
/// radius `ε̂^{1−α₀}`, `α₀ = 2/3 − ln 2 / (3 ln ε̂)`, for its constant.
pub fn verify_marchenko(mesh: &Mesh, pd: &PerforatedDomain, samples: usize, seed: u64) -> Result<MarchenkoResult> {
    need_samples(samples)?;
    let rho = pd.extension_radius;
    if !(rho < 1.0) {
        return Err(ClosenessError::InvalidParameter(format!("extension radius {rho} must be below 1")));
    }
    let alpha0 = 2.0 / 3.0 - (2f64.ln()) / (3.0 * rho.ln());
    let g_radius = rho.powf(1.0 - alpha0);
    let room = pd.domain.distance_to_boundary(pd.ball.center);
    if g_radius > room {
        return Err(ClosenessError::DomainEscape { radius: g_radius, room });
    }
    let c = pd.ball.center;
    let (mu_q, mu_g) = (PI * rho * rho, PI * g_radius * g_radius);
    let d3 = (2.0 * g_radius).powi(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dup = vec![false; mesh.n_vertices()];
    let mut best = 0.0f64;
    for s in 0..samples {
        let v: Vec<f64> = if s % 2 == 0 {
            let w = rng.random_range(0.5 * rho..2.0 * g_radius);
            let off = Point::new(rng.random_range(-rho..rho), rng.random_range(-rho..rho));
            mesh.vertices.iter().map(|p| (-(p.sub(c).sub(off).norm() / w).powi(2)).exp()).collect()
        } else {
            random_smooth(&mesh.vertices, &dup, &mut rng)
        };
        let q = disk_integrals(&mesh.vertices, &mesh.triangles, &v, c, rho);
        let g = disk_integrals(&mesh.vertices, &mesh.triangles, &v, c, g_radius);
        let excess = q.l2_sq - 2.0 * mu_q / mu_g * g.l2_sq;
        if excess > 0.0 && g.grad_sq > 0.0 {
            best = best.max(excess * mu_g / (d3 * mu_q.sqrt() * g.grad_sq));
        }
    }
    Ok(MarchenkoResult { best_c2: best, alpha0, g_radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closeness::tests::{slit_instance, Instance};
    use crate::fem::{assemble, solve_eigen};
    use crate::geometry::{Ball, Crack, Domain};
    use crate::mesh::{insert_crack, triangulate_uniform};

    fn square_op(h: f64) -> (Mesh, OperatorPair) {
        let mesh = triangulate_uniform(&Domain::unit_square(), h).unwrap();
        let op = assemble(&CrackedMesh::uncracked(mesh.clone())).unwrap();
        (mesh, op)
    }

    #[test]
    fn delta_lemma_margins() {
        let (_, op) = square_op(0.1);
        let r = verify_lemma_delta(&op, 200, 7).unwrap();
        assert!(r.min_relative_margin >= -1e-10);
        // Constant vector: margin is (15/16)‖z‖².
        let c = verify_lemma_delta(&op, 1, 0).unwrap();
        let area: f64 = op.m_lumped.iter().sum();
        assert!((c.min_margin - 15.0 / 16.0 * area).abs() < 1e-12);
    }

    #[test]
    fn delta_lemma_scalar_form() {
        for k in 0..200 {
            let lam = k as f64 * 0.5;
            assert!((lam + 1.0).powi(2) >= (lam * lam + 1.0) / 16.0);
        }
        assert!(verify_lemma_delta(&square_op(0.25).1, 0, 0).is_err());
    }

    #[test]
    fn trace_lemma_on_slit() {
        let Instance { cracked, maps, .. } = slit_instance(0.1);
        let opk = assemble(&cracked).unwrap();
        let trace = maps.trace.unwrap();
        let r = verify_trace_lemma(&opk, &trace, 20, 3).unwrap();
        let expected = 2.0 * PI * trace.radius;
        assert!((r.constant_ratio - expected).abs() < 1e-10, "{} vs {expected}", r.constant_ratio);
        assert!(r.max_sampled_ratio <= r.best_constant * (1.0 + 1e-9));
        assert!(r.best_constant.is_finite() && r.best_constant > 0.0);
    }

    #[test]
    fn curve_lemma_constant_and_linear() {
        let mesh = triangulate_uniform(&Domain::unit_square(), 0.1).unwrap();
        let pd = PerforatedDomain::new(Domain::unit_square(), Crack::empty(), Ball::new(Point::ORIGIN, 0.1).unwrap()).unwrap();
        let cracked = CrackedMesh::uncracked(mesh);
        let r = verify_curve_lemma(&cracked, &pd, 1, 1).unwrap();
        // Full chords have length 1.
        assert!((r.best_constant - 1.0).abs() < 1e-12);
        let positions = cracked.vertices();
        let locator = PointLocator::new(positions.clone(), cracked.triangles.clone());
        let line = LinePieces::new(Axis::X, 0.2, &positions, &cracked.triangles, &locator);
        let u: Vec<f64> = positions.iter().map(|p| p.y).collect();
        let (l2, d2) = line.integrals(&u, &positions, &locator);
        assert!((l2 - 1.0 / 12.0).abs() < 1e-12 && (d2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_lemma_bound_holds_on_slit() {
        let Instance { cracked, pd, .. } = slit_instance(0.1);
        let r = verify_curve_lemma(&cracked, &pd, 30, 11).unwrap();
        assert!(r.max_bound_ratio <= 1.0 + 1e-9, "{}", r.max_bound_ratio);
        assert!(r.best_constant.is_finite());
    }

    #[test]
    fn curve_lemma_needs_property_star() {
        let eps = 0.1;
        let h = eps / 4.0;
        let pts = vec![
            Point::new(-0.5 * eps, -0.5 * eps),
            Point::new(0.5 * eps, -0.5 * eps),
            Point::new(0.5 * eps, 0.5 * eps),
            Point::new(-0.5 * eps, 0.5 * eps),
        ];
        let crack = Crack::new(pts).unwrap();
        let pd = PerforatedDomain::new(Domain::unit_square(), crack, Ball::new(Point::ORIGIN, eps).unwrap()).unwrap();
        let mesh = crate::mesh::triangulate(&pd.domain, Some(&pd), crate::mesh::MeshSizing::uniform(h)).unwrap();
        let cracked = insert_crack(&mesh, &pd.crack).unwrap();
        assert!(matches!(verify_curve_lemma(&cracked, &pd, 5, 0), Err(ClosenessError::HypothesisUnmet(_))));
    }

    #[test]
    fn galpha_constant_is_zero_and_ratios_finite() {
        let Instance { mesh, pd, .. } = slit_instance(0.1);
        let op = assemble(&CrackedMesh::uncracked(mesh.clone())).unwrap();
        let eig = solve_eigen(&op, 5, 1e-8).unwrap();
        let r = verify_galpha(&op, &mesh, &pd, &eig, 5).unwrap();
        assert_eq!(r.ratios.len(), 5);
        assert!(r.ratios[0] < 1e-10);
        assert!(r.ratios.iter().all(|x| x.is_finite()));
        let ones = vec![1.0; mesh.n_vertices()];
        assert!(ball_energy(&mesh, &ones, Point::ORIGIN, 0.15).abs() < 1e-12);
    }

    #[test]
    fn galpha_first_mode_matches_analytic() {
        // -sin(πx) on the centred square: ∫_B π² cos²(πx) ≈ π³ρ² for small ρ.
        let Instance { mesh, pd, .. } = slit_instance(0.1);
        let u: Vec<f64> = mesh.vertices.iter().map(|p| -(PI * p.x).sin()).collect();
        let rho = pd.extension_radius;
        let e = ball_energy(&mesh, &u, Point::ORIGIN, rho);
        let exact = PI * PI * (PI * rho * rho / 2.0 + PI * rho * bessel_j1(2.0 * PI * rho) / (2.0 * PI));
        assert!((e - exact).abs() < 0.02 * exact, "{e} vs {exact}");
    }

    fn bessel_j1(x: f64) -> f64 {
        // Power series; x is small here.
        let mut term = x / 2.0;
        let mut sum = term;
        for k in 1..30 {
            term *= -(x * x / 4.0) / (k as f64 * (k + 1) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn aux_lemma_constant_and_linear() {
        let Instance { cracked, pd, .. } = slit_instance(0.1);
        let opk = assemble(&cracked).unwrap();
        let r = verify_aux_lemma(&opk, &cracked, &pd, 20, 5).unwrap();
        assert!(r.all_found());
        assert_eq!(r.radii.len(), 32);
        assert!(r.radii.iter().all(|&t| t > 0.1 && t < 0.2));
        // g = x: ∫|∂_φ g̃|² = πτ².
        let positions = cracked.vertices();
        let locator = PointLocator::new(positions.clone(), cracked.triangles.clone());
        let g: Vec<f64> = positions.iter().map(|p| p.x).collect();
        let tau = 0.15;
        let n = 2000;
        let mut total = 0.0;
        for q in 0..n {
            let phi = 2.0 * PI * (q as f64 + 0.5) / n as f64;
            let (t, _) = locator.locate(Point::new(tau * phi.cos(), tau * phi.sin())).unwrap();
            let (gx, gy) = locator.gradient(&g, t);
            let d = tau * (-phi.sin() * gx + phi.cos() * gy);
            total += 2.0 * PI / n as f64 * d * d;
        }
        assert!((total - PI * tau * tau).abs() < 1e-10);
    }

    #[test]
    fn disk_integrals_of_linear_function() {
        let (mesh, _) = square_op(0.02);
        let r = 0.3;
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p.x).collect();
        let d = disk_integrals(&mesh.vertices, &mesh.triangles, &u, Point::ORIGIN, r);
        assert!((d.l2_sq - PI * r.powi(4) / 4.0).abs() < 1e-3 * PI * r.powi(4) / 4.0);
        assert!((d.grad_sq - PI * r * r).abs() < 1e-3 * PI * r * r);
        assert!((d.area - PI * r * r).abs() < 1e-3 * PI * r * r);
    }

    #[test]
    fn marchenko_constant_and_escape() {
        let eps = 0.025;
        let crack = Crack::segment(Point::new(0.0, -0.5 * eps), Point::new(0.0, 0.5 * eps)).unwrap();
        let pd = PerforatedDomain::new(Domain::unit_square(), crack, Ball::new(Point::ORIGIN, eps).unwrap()).unwrap();
        let (mesh, _) = square_op(0.02);
        let r = verify_marchenko(&mesh, &pd, 6, 2).unwrap();
        assert!(r.g_radius < 0.5 && r.best_c2.is_finite() && r.best_c2 >= 0.0);
        assert!((r.alpha0 - (2.0 / 3.0 - 2f64.ln() / (3.0 * 0.0375f64.ln()))).abs() < 1e-15);
        let big = slit_instance(0.2);
        assert!(matches!(verify_marchenko(&big.mesh, &big.pd, 2, 0), Err(ClosenessError::DomainEscape { .. })));
    }
}
