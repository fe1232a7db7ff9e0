use super::{ClosenessError, Result};
use crate::geometry::PerforatedDomain;
use crate::linalg::CsrMatrix;
use crate::mesh::{circle_trace, CircleTrace, CrackedMesh, Mesh};

/// Identification operators between the uncracked space `V` (dimension `n`)
/// and the cracked space `V'` (dimension `n'`).
///
/// Both Hilbert spaces are realised on `V'` with the cracked mass matrix, so
/// `J` and `J'` are the identity there. The form domains differ: `J1 = E`
/// copies every `V` coefficient onto all of its copies in `V'`, and `J1p`
/// extends a `V'` function across the crack by the radial profile `r/ε̂`
/// applied to its trace on the circle of radius `ε̂`.
#[derive(Debug, Clone)]
pub struct IdentificationMaps {
    /// `n' × n'`.
    pub j: CsrMatrix,
    /// `n' × n'`.
    pub jp: CsrMatrix,
    /// Copy map `E`, `n' × n`, exactly one unit entry per row.
    pub j1: CsrMatrix,
    /// Extension, `n × n'`.
    pub j1p: CsrMatrix,
    pub epsilon: f64,
    pub epsilon_hat: f64,
    pub h: f64,
    /// Ring trace at radius `ε̂`; absent for an empty crack.
    pub trace: Option<CircleTrace>,
}

impl IdentificationMaps {
    pub fn n(&self) -> usize {
        self.j1.ncols()
    }

    pub fn n_cracked(&self) -> usize {
        self.j1.nrows()
    }
}

/// Copy map `E`: row `v` of `V'` picks the base vertex carrying `v`.
pub fn copy_map(cracked: &CrackedMesh) -> CsrMatrix {
    let t: Vec<(usize, usize, f64)> = (0..cracked.n_vertices()).map(|v| (v, cracked.original_index(v), 1.0)).collect();
    CsrMatrix::from_triplets(cracked.n_vertices(), cracked.base.n_vertices(), &t)
}

/// Extension matrix: identity on base nodes at distance `≥ ε̂` from the ball
/// centre, `(r/ε̂)` times the angular interpolation of ring values inside.
pub fn extension_map(base: &Mesh, n_cracked: usize, trace: &CircleTrace) -> CsrMatrix {
    let rho = trace.radius;
    let mut t = Vec::new();
    for (v, p) in base.vertices.iter().enumerate() {
        let d = p.sub(trace.center);
        let r = d.norm();
        if r >= rho * (1.0 - 1e-12) {
            t.push((v, v, 1.0));
        } else if r > 0.0 {
            for (k, w) in trace.bracket(d.y.atan2(d.x)) {
                if w != 0.0 {
                    t.push((v, trace.arc_nodes[k], w * r / rho));
                }
            }
        }
    }
    CsrMatrix::from_triplets(base.n_vertices(), n_cracked, &t)
}

/// Builds the four maps for a cracked mesh derived from `mesh`.
///
/// An empty crack needs no ring: every map is the identity.
pub fn build_maps(mesh: &Mesh, cracked: &CrackedMesh, pd: &PerforatedDomain) -> Result<IdentificationMaps> {
    if cracked.base.vertices != mesh.vertices || cracked.base.triangles.len() != mesh.triangles.len() {
        return Err(ClosenessError::MeshMismatch(format!(
            "cracked mesh has {} base vertices and {} triangles, uncracked mesh has {} and {}",
            cracked.base.n_vertices(),
            cracked.base.n_triangles(),
            mesh.n_vertices(),
            mesh.n_triangles()
        )));
    }
    let (n, np) = (mesh.n_vertices(), cracked.n_vertices());
    let identity = CsrMatrix::identity(np);
    let common = |j1p: CsrMatrix, trace: Option<CircleTrace>| IdentificationMaps {
        j: identity.clone(),
        jp: identity.clone(),
        j1: copy_map(cracked),
        j1p,
        epsilon: pd.epsilon(),
        epsilon_hat: pd.extension_radius,
        h: mesh.h_fine,
        trace,
    };
    if cracked.crack_pairs.is_empty() && pd.crack.is_empty() {
        return Ok(common(CsrMatrix::identity(n), None));
    }
    let trace = circle_trace(mesh, pd.ball.center, pd.extension_radius)?;
    let j1p = extension_map(mesh, np, &trace);
    Ok(common(j1p, Some(trace)))
}
