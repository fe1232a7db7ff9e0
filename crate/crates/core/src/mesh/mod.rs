//! Conforming triangulations of `Ω`, crack insertion by node duplication,
//! conforming circle traces, and JSON mesh exchange.

mod crack;
mod io;
mod locate;
mod trace;
mod triangulate;

pub use crack::{insert_crack, CrackedMesh};
pub use io::{MeshFile, MeshFileError};
pub use locate::PointLocator;
pub use trace::{circle_trace, CircleTrace};
pub use triangulate::{triangulate, triangulate_uniform, MeshSizing};

use crate::geometry::{orient, Domain, Point};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh size too large: {0}")]
    TooCoarse(String),
    #[error("degenerate sliver: {0}")]
    Sliver(String),
    #[error("crack segment {segment} is not a union of mesh edges: {reason}")]
    CrackNotAligned { segment: usize, reason: String },
    #[error("crack touches the outer boundary at vertex {0}")]
    CrackTouchesBoundary(usize),
    #[error("cracked domain is disconnected into {0} components")]
    Disconnected(usize),
    #[error("no conforming node ring of radius {radius} around {center}: {reason}")]
    MissingRing { center: Point, radius: f64, reason: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("triangulation backend failed: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Node ring inserted on the circle of the extension ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub center: Point,
    pub radius: f64,
    /// Vertex indices ordered by increasing angle.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
    /// Global mesh size.
    pub h: f64,
    /// Mesh size inside the refinement zone around the crack (equals `h` when unrefined).
    pub h_fine: f64,
    pub ring: Option<Ring>,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge → number of incident triangles, ordered by key.
pub(crate) fn edge_counts(triangles: &[[usize; 3]]) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            *counts.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    counts
}

pub(crate) fn boundary_edges_of(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    // Keep the orientation of the owning triangle so boundary edges run counterclockwise.
    let counts = edge_counts(triangles);
    let mut edges = Vec::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if counts[&edge_key(a, b)] == 1 {
                edges.push([a, b]);
            }
        }
    }
    edges.sort();
    edges
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        edge_counts(&self.triangles).into_keys().collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.triangles.iter().any(|t| t.contains(&a) && t.contains(&b))
    }

    /// `V − E + T`; equals 1 for a triangulated simply connected domain.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.edges().len() as i64 + self.n_triangles() as i64
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| triangle_min_angle(self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
            .to_degrees()
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_triangles()).map(|t| triangle_diameter(self.triangle_points(t))).fold(0.0, f64::max)
    }

    /// Positive areas, edge-manifold, vertices in the closure of `domain`.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.n_vertices()) {
                return Err(MeshError::Invalid(format!("triangle {t} references a missing vertex")));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(MeshError::Invalid(format!("triangle {t} has non-positive area")));
            }
        }
        if let Some((e, c)) = edge_counts(&self.triangles).into_iter().find(|&(_, c)| c > 2) {
            return Err(MeshError::Invalid(format!("edge {e:?} is shared by {c} triangles")));
        }
        let tol = 1e-9 * domain.diameter();
        if let Some(v) = self.vertices.iter().position(|&p| domain.distance_to_boundary(p) < -tol) {
            return Err(MeshError::Invalid(format!("vertex {v} lies outside the domain")));
        }
        Ok(())
    }
}

pub(crate) fn triangle_min_angle([a, b, c]: [Point; 3]) -> f64 {
    let la = b.dist(c);
    let lb = a.dist(c);
    let lc = a.dist(b);
    let angle = |opp: f64, s1: f64, s2: f64| ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0).acos();
    angle(la, lb, lc).min(angle(lb, la, lc)).min(angle(lc, la, lb))
}

pub(crate) fn triangle_diameter([a, b, c]: [Point; 3]) -> f64 {
    a.dist(b).max(b.dist(c)).max(a.dist(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ball, Crack, PerforatedDomain};

    fn slit_domain(eps: f64) -> PerforatedDomain {
        let crack = Crack::segment(Point::new(0.0, -0.5 * eps), Point::new(0.0, 0.5 * eps)).unwrap();
        PerforatedDomain::new(Domain::unit_square(), crack, Ball::new(Point::ORIGIN, eps).unwrap()).unwrap()
    }

    fn slit_mesh(eps: f64) -> Mesh {
        let pd = slit_domain(eps);
        triangulate(&pd.domain, Some(&pd), MeshSizing::for_epsilon(0.02, eps, 0.125)).unwrap()
    }

    #[test]
    fn structured_square_counts() {
        let m = triangulate_uniform(&Domain::unit_square(), 0.25).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles()), (25, 32));
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_edges.len(), 16);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        m.validate(&Domain::unit_square()).unwrap();
    }

    #[test]
    fn disk_mesh_area_and_quality() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate_uniform(&d, 0.1).unwrap();
        m.validate(&d).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert!((m.total_area() - std::f64::consts::PI).abs() < 0.1 * 0.1 * 4.0);
        assert!(m.min_angle_deg() >= 20.0);
        assert!(m.max_diameter() <= 0.2);
    }

    #[test]
    fn slit_mesh_conforms() {
        for eps in [0.2, 0.05] {
            let pd = slit_domain(eps);
            let m = slit_mesh(eps);
            m.validate(&pd.domain).unwrap();
            assert_eq!(m.euler_characteristic(), 1);
            assert!((m.total_area() - 1.0).abs() < 1e-10);
            let ring = m.ring.as_ref().unwrap();
            let expected = ((2.0 * std::f64::consts::PI * pd.extension_radius / m.h_fine).ceil() as usize).max(32);
            assert_eq!(ring.nodes.len(), expected);
            let trace = circle_trace(&m, ring.center, ring.radius).unwrap();
            assert_eq!(trace.arc_nodes, ring.nodes);
            let cracked = insert_crack(&m, &pd.crack).unwrap();
            assert_eq!(cracked.components(), 1);
            let n_sub = (eps / m.h_fine).ceil() as usize;
            assert_eq!(cracked.crack_pairs.len(), n_sub - 1);
            assert_eq!(cracked.n_vertices(), m.n_vertices() + n_sub - 1);
        }
    }

    #[test]
    fn slit_sub_edges_are_mesh_edges() {
        let eps = 0.1;
        let pd = slit_domain(eps);
        let m = triangulate(&pd.domain, Some(&pd), MeshSizing::uniform(0.025)).unwrap();
        let on_slit: Vec<usize> = (0..m.n_vertices()).filter(|&v| pd.crack.contains(m.vertices[v])).collect();
        assert_eq!(on_slit.len(), 5);
        let mut sorted = on_slit.clone();
        sorted.sort_by(|&a, &b| m.vertices[a].y.total_cmp(&m.vertices[b].y));
        for w in sorted.windows(2) {
            assert!(m.has_edge(w[0], w[1]));
        }
        let cracked = insert_crack(&m, &pd.crack).unwrap();
        assert_eq!(cracked.crack_pairs.len(), 3);
    }

    #[test]
    fn too_coarse_refused() {
        let pd = slit_domain(0.1);
        assert!(matches!(triangulate(&pd.domain, Some(&pd), MeshSizing::uniform(0.1)), Err(MeshError::TooCoarse(_))));
    }

    #[test]
    fn meshing_is_deterministic() {
        assert_eq!(slit_mesh(0.1), slit_mesh(0.1));
    }

    #[test]
    fn empty_crack_is_identity() {
        let m = triangulate_uniform(&Domain::unit_square(), 0.25).unwrap();
        let c = insert_crack(&m, &Crack::empty()).unwrap();
        assert!(c.crack_pairs.is_empty());
        assert_eq!(c.triangles, m.triangles);
    }

    #[test]
    fn unaligned_and_boundary_cracks_rejected() {
        let m = triangulate_uniform(&Domain::unit_square(), 0.25).unwrap();
        let off = Crack::segment(Point::new(0.1, -0.25), Point::new(0.1, 0.25)).unwrap();
        assert!(matches!(insert_crack(&m, &off), Err(MeshError::CrackNotAligned { .. })));
        let touching = Crack::segment(Point::new(0.0, 0.0), Point::new(0.0, 0.5)).unwrap();
        assert!(matches!(insert_crack(&m, &touching), Err(MeshError::CrackTouchesBoundary(_))));
    }

    #[test]
    fn structured_slit_duplicates_interior_nodes() {
        // Slit covered by 4 edges of an h = 1/8 grid: 5 nodes, 3 interior.
        let m = triangulate_uniform(&Domain::unit_square(), 0.125).unwrap();
        let slit = Crack::segment(Point::new(0.0, -0.25), Point::new(0.0, 0.25)).unwrap();
        let c = insert_crack(&m, &slit).unwrap();
        assert_eq!(c.crack_pairs.len(), 3);
        assert_eq!(c.n_vertices(), m.n_vertices() + 3);
        assert_eq!(c.components(), 1);
        for &(o, d) in &c.crack_pairs {
            let left = c.triangles.iter().filter(|t| t.contains(&o)).all(|t| {
                let [a, b, cc] = t.map(|v| c.vertex(v));
                (a.x + b.x + cc.x) / 3.0 < 0.0
            });
            let right = c.triangles.iter().filter(|t| t.contains(&d)).all(|t| {
                let [a, b, cc] = t.map(|v| c.vertex(v));
                (a.x + b.x + cc.x) / 3.0 > 0.0
            });
            assert!(left && right);
        }
    }

    #[test]
    fn closed_loop_disconnects() {
        let m = triangulate_uniform(&Domain::unit_square(), 0.125).unwrap();
        let q = 0.25;
        let pts = vec![Point::new(-q, -q), Point::new(q, -q), Point::new(q, q), Point::new(-q, q), Point::new(-q, -q)];
        let loop_crack = Crack::new(pts).unwrap();
        assert_eq!(insert_crack(&m, &loop_crack), Err(MeshError::Disconnected(2)));
    }

    #[test]
    fn uniform_ring_weights() {
        let n = 40;
        let r = 0.3;
        let vertices: Vec<Point> = std::iter::once(Point::ORIGIN)
            .chain((0..n).map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point::new(r * t.cos(), r * t.sin())
            }))
            .collect();
        let triangles: Vec<[usize; 3]> = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
        let boundary_edges = boundary_edges_of(&triangles);
        let mesh = Mesh { vertices, triangles, boundary_edges, h: 0.05, h_fine: 0.05, ring: None };
        let tr = circle_trace(&mesh, Point::ORIGIN, r).unwrap();
        let w = 2.0 * std::f64::consts::PI * r / n as f64;
        assert!(tr.arc_weights.iter().all(|x| (x - w).abs() < 1e-14));
        let ones = vec![1.0; n + 1];
        let total = tr.integrate_squared(&ones);
        assert!((total - 2.0 * std::f64::consts::PI * r).abs() < 1e-12 * total);
        let xs: Vec<f64> = mesh.vertices.iter().map(|p| p.x).collect();
        assert!((tr.integrate_squared(&xs) - std::f64::consts::PI * r.powi(3)).abs() < 1e-12);
        assert!(circle_trace(&mesh, Point::ORIGIN, 0.2).is_err());
    }

    #[test]
    fn mesh_file_round_trip() {
        let m = triangulate_uniform(&Domain::unit_square(), 0.125).unwrap();
        let slit = Crack::segment(Point::new(0.0, -0.25), Point::new(0.0, 0.25)).unwrap();
        let c = insert_crack(&m, &slit).unwrap();
        let file = MeshFile::from_cracked(&c);
        let text = serde_json::to_string(&file).unwrap();
        for key in ["vertices", "triangles", "crack_pairs", "boundary_edges", "h"] {
            assert!(text.contains(&format!("\"{key}\"")));
        }
        let back: MeshFile = serde_json::from_str(&text).unwrap();
        let c2 = back.to_cracked().unwrap();
        assert_eq!(c2.triangles, c.triangles);
        assert_eq!(c2.base.triangles, c.base.triangles);
        assert_eq!(c2.crack_pairs, c.crack_pairs);
    }

    #[test]
    fn locator_reproduces_linear_functions() {
        let m = slit_mesh(0.1);
        let loc = PointLocator::new(m.vertices.clone(), m.triangles.clone());
        let u: Vec<f64> = m.vertices.iter().map(|p| 2.0 * p.x - p.y + 0.5).collect();
        for p in [Point::new(0.013, 0.2), Point::new(-0.37, -0.41), Point::new(0.49, 0.0)] {
            let val = loc.evaluate(&u, p).unwrap();
            assert!((val - (2.0 * p.x - p.y + 0.5)).abs() < 1e-12);
            let (t, _) = loc.locate(p).unwrap();
            let g = loc.gradient(&u, t);
            assert!((g.0 - 2.0).abs() < 1e-10 && (g.1 + 1.0).abs() < 1e-10);
        }
        assert!(loc.locate(Point::new(0.7, 0.0)).is_none());
    }
}
