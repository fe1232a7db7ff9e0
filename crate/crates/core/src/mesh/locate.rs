use crate::geometry::{orient, Point};

/// Bucket grid over triangles for point location and P1 evaluation.
#[derive(Debug, Clone)]
pub struct PointLocator {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Self {
        let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
        for p in &vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n_cells = (triangles.len() as f64).sqrt().ceil().max(1.0);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / n_cells).max(1e-300);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in triangles.iter().enumerate() {
            let pts = tri.map(|v| vertices[v]);
            let (x0, x1) = (pts.iter().map(|p| p.x).fold(f64::MAX, f64::min), pts.iter().map(|p| p.x).fold(f64::MIN, f64::max));
            let (y0, y1) = (pts.iter().map(|p| p.y).fold(f64::MAX, f64::min), pts.iter().map(|p| p.y).fold(f64::MIN, f64::max));
            let (i0, i1) = (((x0 - lo.x) / cell) as usize, (((x1 - lo.x) / cell) as usize).min(nx - 1));
            let (j0, j1) = (((y0 - lo.y) / cell) as usize, (((y1 - lo.y) / cell) as usize).min(ny - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self { vertices, triangles, origin: lo, cell, nx, ny, buckets }
    }

    /// Containing triangle and barycentric weights; ties go to the lowest triangle index.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let i = ((p.x - self.origin.x) / self.cell).floor();
        let j = ((p.y - self.origin.y) / self.cell).floor();
        if i < 0.0 || j < 0.0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let tol = -1e-12;
        for &t in &self.buckets[j as usize * self.nx + i as usize] {
            let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
            let area = orient(a, b, c);
            let l0 = orient(p, b, c) / area;
            let l1 = orient(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    /// P1 interpolant of nodal values `u` at `p`.
    pub fn evaluate(&self, u: &[f64], p: Point) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.triangles[t];
            l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]]
        })
    }

    /// Constant gradient of the P1 interpolant on triangle `t`.
    pub fn gradient(&self, u: &[f64], t: usize) -> (f64, f64) {
        let tri = self.triangles[t];
        let [a, b, c] = tri.map(|v| self.vertices[v]);
        let det = orient(a, b, c);
        let (ua, ub, uc) = (u[tri[0]], u[tri[1]], u[tri[2]]);
        let gx = ((ub - ua) * (c.y - a.y) - (uc - ua) * (b.y - a.y)) / det;
        let gy = ((uc - ua) * (b.x - a.x) - (ub - ua) * (c.x - a.x)) / det;
        (gx, gy)
    }
}
