use super::{boundary_edges_of, triangle_diameter, triangle_min_angle, Mesh, MeshError, Result, Ring};
use crate::geometry::{orient, Domain, PerforatedDomain, Point};
use spade::handles::FixedVertexHandle;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

const MIN_ANGLE_DEG: f64 = 20.0;
const REFINE_ANGLE_DEG: f64 = 25.0;
/// Seeds closer than this fraction of the local size to a constraint are dropped.
const SEED_CLEARANCE: f64 = 0.6;

/// Global size `h0` and the size `h_fine` used inside `B_{2ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSizing {
    pub h0: f64,
    pub h_fine: f64,
}

impl MeshSizing {
    pub fn uniform(h: f64) -> Self {
        Self { h0: h, h_fine: h }
    }

    /// `h_fine = min(h0, ratio·ε)`.
    pub fn for_epsilon(h0: f64, epsilon: f64, crack_h_ratio: f64) -> Self {
        Self { h0, h_fine: h0.min(epsilon * crack_h_ratio) }
    }
}

pub fn triangulate_uniform(domain: &Domain, h: f64) -> Result<Mesh> {
    triangulate(domain, None, MeshSizing::uniform(h))
}

/// Conforming triangulation of `domain`. With `features`, every crack segment
/// is a union of mesh edges and the circle of radius `ε̂` carries a node ring
/// of `max(32, ⌈2πε̂/h_fine⌉)` nodes joined by mesh edges.
pub fn triangulate(domain: &Domain, features: Option<&PerforatedDomain>, sizing: MeshSizing) -> Result<Mesh> {
    let MeshSizing { h0, h_fine } = sizing;
    if !(h0 > 0.0 && h0.is_finite() && h_fine > 0.0 && h_fine <= h0) {
        return Err(MeshError::TooCoarse(format!("need 0 < h_fine <= h0, got h0 = {h0}, h_fine = {h_fine}")));
    }
    domain.validate().map_err(|e| MeshError::Invalid(e.to_string()))?;
    if let Some(pd) = features {
        pd.validate().map_err(|e| MeshError::Invalid(e.to_string()))?;
        let eps = pd.epsilon();
        if h_fine > eps / 4.0 {
            return Err(MeshError::TooCoarse(format!("h = {h_fine} exceeds ε/4 = {}", eps / 4.0)));
        }
    }
    match (domain, features) {
        (Domain::Rectangle { width, height }, None) => Ok(structured_rectangle(*width, *height, h0)),
        _ => unstructured(domain, features, h0, h_fine),
    }
}

/// Grid with `⌈W/h⌉ × ⌈H/h⌉` cells, each split along its rising diagonal.
fn structured_rectangle(width: f64, height: f64, h: f64) -> Mesh {
    let nx = (width / h).ceil().max(1.0) as usize;
    let ny = (height / h).ceil().max(1.0) as usize;
    let (dx, dy) = (width / nx as f64, height / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(-0.5 * width + i as f64 * dx, -0.5 * height + j as f64 * dy));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let boundary_edges = boundary_edges_of(&triangles);
    Mesh { vertices, triangles, boundary_edges, h: dx.hypot(dy), h_fine: dx.hypot(dy), ring: None }
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

fn insert(cdt: &mut Cdt, p: Point) -> Result<FixedVertexHandle> {
    cdt.insert(Point2::new(p.x, p.y)).map_err(|e| MeshError::Backend(format!("{e:?} at {p}")))
}

fn constrain(cdt: &mut Cdt, a: FixedVertexHandle, b: FixedVertexHandle) -> Result<()> {
    if a == b || cdt.exists_constraint(a, b) {
        return Ok(());
    }
    if !cdt.can_add_constraint(a, b) {
        return Err(MeshError::Backend("constraint edges intersect".into()));
    }
    cdt.add_constraint(a, b);
    Ok(())
}

fn boundary_points(domain: &Domain, h: f64) -> Vec<Point> {
    match *domain {
        Domain::Rectangle { width, height } => {
            let nx = (width / h).ceil().max(1.0) as usize;
            let ny = (height / h).ceil().max(1.0) as usize;
            let (x0, y0) = (-0.5 * width, -0.5 * height);
            let mut pts = Vec::new();
            for i in 0..nx {
                pts.push(Point::new(x0 + width * i as f64 / nx as f64, y0));
            }
            for j in 0..ny {
                pts.push(Point::new(-x0, y0 + height * j as f64 / ny as f64));
            }
            for i in 0..nx {
                pts.push(Point::new(-x0 - width * i as f64 / nx as f64, -y0));
            }
            for j in 0..ny {
                pts.push(Point::new(x0, -y0 - height * j as f64 / ny as f64));
            }
            pts
        }
        Domain::Disk { radius } => {
            let n = ((2.0 * std::f64::consts::PI * radius / h).ceil() as usize).max(16);
            (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    Point::new(radius * t.cos(), radius * t.sin())
                })
                .collect()
        }
    }
}

/// Background seeds at spacing `h` strictly inside the domain.
fn background_seeds(domain: &Domain, h: f64) -> Vec<Point> {
    match *domain {
        Domain::Rectangle { width, height } => {
            let nx = (width / h).ceil().max(1.0) as usize;
            let ny = (height / h).ceil().max(1.0) as usize;
            let mut pts = Vec::new();
            for j in 1..ny {
                for i in 1..nx {
                    pts.push(Point::new(
                        -0.5 * width + width * i as f64 / nx as f64,
                        -0.5 * height + height * j as f64 / ny as f64,
                    ));
                }
            }
            pts
        }
        Domain::Disk { radius } => hex_lattice(Point::ORIGIN, radius - SEED_CLEARANCE * h, h),
    }
}

/// Hexagonal lattice points of spacing `h` in the open disk of radius `r` about `c`.
fn hex_lattice(c: Point, r: f64, h: f64) -> Vec<Point> {
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (r / dy).floor() as i64;
    let mut pts = Vec::new();
    for j in -rows..=rows {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        let cols = (r / h).ceil() as i64 + 1;
        for i in -cols..=cols {
            let p = Point::new(c.x + i as f64 * h + shift, c.y + j as f64 * dy);
            if p.dist(c) < r {
                pts.push(p);
            }
        }
    }
    pts
}

fn unstructured(domain: &Domain, features: Option<&PerforatedDomain>, h0: f64, h_fine: f64) -> Result<Mesh> {
    let mut cdt = Cdt::new();
    for p in boundary_points(domain, h0) {
        insert(&mut cdt, p)?;
    }

    let mut ring = None;
    let mut fine_zone = None;
    if let Some(pd) = features {
        let c = pd.ball.center;
        let eps_hat = pd.extension_radius;
        let n_ring = ((2.0 * std::f64::consts::PI * eps_hat / h_fine).ceil() as usize).max(32);
        let mut ring_handles = Vec::with_capacity(n_ring);
        for k in 0..n_ring {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_ring as f64;
            ring_handles.push(insert(&mut cdt, Point::new(c.x + eps_hat * t.cos(), c.y + eps_hat * t.sin()))?);
        }
        for k in 0..n_ring {
            constrain(&mut cdt, ring_handles[k], ring_handles[(k + 1) % n_ring])?;
        }
        for seg in pd.crack.segments() {
            let n = (seg.length() / h_fine).ceil().max(1.0) as usize;
            let mut prev = insert(&mut cdt, seg.a)?;
            for k in 1..=n {
                let p = if k == n {
                    seg.b
                } else {
                    let t = k as f64 / n as f64;
                    Point::new(seg.a.x + t * (seg.b.x - seg.a.x), seg.a.y + t * (seg.b.y - seg.a.y))
                };
                let next = insert(&mut cdt, p)?;
                constrain(&mut cdt, prev, next)?;
                prev = next;
            }
        }
        // Seeds reach past B_{2ε} so the size bound holds up to its edge.
        let r_fine = 2.0 * pd.epsilon() + 2.0 * h_fine;
        let clearance = SEED_CLEARANCE * h_fine;
        for p in hex_lattice(c, r_fine, h_fine) {
            if (p.dist(c) - eps_hat).abs() >= clearance && pd.crack.distance_to(p) >= clearance {
                insert(&mut cdt, p)?;
            }
        }
        ring = Some((c, eps_hat, ring_handles));
        fine_zone = Some((c, r_fine));
    }

    for p in background_seeds(domain, h0) {
        let keep_out = fine_zone.is_some_and(|(c, r)| p.dist(c) < r + h0);
        if !keep_out && domain.distance_to_boundary(p) >= SEED_CLEARANCE * h0 {
            insert(&mut cdt, p)?;
        }
    }

    let n_initial = cdt.num_vertices();
    let result = cdt.refine(
        RefinementParameters::new()
            .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
            .with_max_allowed_area(0.4 * h0 * h0)
            .keep_constraint_edges()
            .with_max_additional_vertices(20 * n_initial + 1000),
    );
    if !result.refinement_complete {
        return Err(MeshError::Sliver("refinement ran out of additional vertices".into()));
    }

    let vertices: Vec<Point> = cdt.vertices().map(|v| Point::new(v.position().x, v.position().y)).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices().map(|v| v.fix().index());
        if orient(vertices[a], vertices[b], vertices[c]) > 0.0 {
            triangles.push([a, b, c]);
        } else {
            triangles.push([a, c, b]);
        }
    }
    let boundary_edges = boundary_edges_of(&triangles);
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        h: h0,
        h_fine,
        ring: ring.map(|(center, radius, handles)| {
            let mut nodes: Vec<usize> = handles.iter().map(|h| h.index()).collect();
            let angle = |v: usize| {
                let d = mesh_point(&cdt, v).sub(center);
                d.y.atan2(d.x).rem_euclid(2.0 * std::f64::consts::PI)
            };
            nodes.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
            Ring { center, radius, nodes }
        }),
    };
    check_quality(&mesh, features)?;
    Ok(mesh)
}

fn mesh_point(cdt: &Cdt, v: usize) -> Point {
    let p = cdt.vertex(FixedVertexHandle::from_index(v)).position();
    Point::new(p.x, p.y)
}

fn check_quality(mesh: &Mesh, features: Option<&PerforatedDomain>) -> Result<()> {
    for t in 0..mesh.n_triangles() {
        let pts = mesh.triangle_points(t);
        let angle = triangle_min_angle(pts).to_degrees();
        if angle < MIN_ANGLE_DEG {
            let c = centroid(pts);
            return Err(MeshError::Sliver(format!("triangle {t} near {c} has minimum angle {angle:.2}°")));
        }
        let local_h = match features {
            Some(pd) if centroid(pts).dist(pd.ball.center) < 2.0 * pd.epsilon() => mesh.h_fine,
            _ => mesh.h,
        };
        let diam = triangle_diameter(pts);
        if diam > 2.0 * local_h {
            let c = centroid(pts);
            return Err(MeshError::Sliver(format!("triangle {t} near {c} has diameter {diam} > 2h = {}", 2.0 * local_h)));
        }
    }
    Ok(())
}

fn centroid([a, b, c]: [Point; 3]) -> Point {
    Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
}
