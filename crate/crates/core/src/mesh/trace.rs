use super::{Mesh, MeshError, Result};
use crate::geometry::Point;
use std::f64::consts::PI;

/// Nodes on a circle joined by mesh edges, with trapezoidal arc-length weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleTrace {
    pub center: Point,
    pub radius: f64,
    /// Base vertex indices ordered by increasing angle in `[0, 2π)`.
    pub arc_nodes: Vec<usize>,
    pub angles: Vec<f64>,
    pub arc_weights: Vec<f64>,
}

impl CircleTrace {
    /// `∮ |u|² dμ` by the trapezoidal rule on the ring values.
    pub fn integrate_squared(&self, u: &[f64]) -> f64 {
        self.arc_nodes.iter().zip(&self.arc_weights).map(|(&v, w)| w * u[v] * u[v]).sum()
    }

    /// Linear interpolation of ring values `values[k]` (aligned with `arc_nodes`) at angle `phi`.
    pub fn interpolate(&self, values: &[f64], phi: f64) -> f64 {
        let n = self.angles.len();
        let phi = phi.rem_euclid(2.0 * PI);
        let k = self.angles.partition_point(|&a| a <= phi);
        let (i0, i1) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
        let (a0, mut a1) = (self.angles[i0], self.angles[i1]);
        if a1 <= a0 {
            a1 += 2.0 * PI;
        }
        let mut p = phi;
        if p < a0 {
            p += 2.0 * PI;
        }
        let t = (p - a0) / (a1 - a0);
        (1.0 - t) * values[i0] + t * values[i1]
    }

    /// Bracketing ring positions and linear weights at angle `phi`.
    pub fn bracket(&self, phi: f64) -> [(usize, f64); 2] {
        let n = self.angles.len();
        let phi = phi.rem_euclid(2.0 * PI);
        let k = self.angles.partition_point(|&a| a <= phi);
        let (i0, i1) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
        let (a0, mut a1) = (self.angles[i0], self.angles[i1]);
        if a1 <= a0 {
            a1 += 2.0 * PI;
        }
        let p = if phi < a0 { phi + 2.0 * PI } else { phi };
        let t = (p - a0) / (a1 - a0);
        [(i0, 1.0 - t), (i1, t)]
    }
}

/// Collects the mesh nodes lying on the circle `|x − center| = radius`.
pub fn circle_trace(mesh: &Mesh, center: Point, radius: f64) -> Result<CircleTrace> {
    let missing = |reason: String| MeshError::MissingRing { center, radius, reason: format!("{reason}; re-mesh with this ring as a constraint") };
    let tol = 1e-10 * radius.max(1e-300);
    let mut nodes: Vec<(f64, usize)> = mesh
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, p)| (p.dist(center) - radius).abs() <= tol)
        .map(|(v, p)| {
            let d = p.sub(center);
            (d.y.atan2(d.x).rem_euclid(2.0 * PI), v)
        })
        .collect();
    if nodes.len() < 3 {
        return Err(missing(format!("only {} nodes on the circle", nodes.len())));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = nodes.len();
    for k in 0..n {
        let (a, b) = (nodes[k].1, nodes[(k + 1) % n].1);
        if !mesh.has_edge(a, b) {
            return Err(missing(format!("ring nodes {a} and {b} are not joined by a mesh edge")));
        }
    }
    let angles: Vec<f64> = nodes.iter().map(|x| x.0).collect();
    let gap = |k: usize| {
        let d = angles[(k + 1) % n] - angles[k];
        if k + 1 == n {
            d + 2.0 * PI
        } else {
            d
        }
    };
    let arc_weights = (0..n).map(|k| 0.5 * radius * (gap(k) + gap((k + n - 1) % n))).collect();
    Ok(CircleTrace { center, radius, arc_nodes: nodes.iter().map(|x| x.1).collect(), angles, arc_weights })
}
