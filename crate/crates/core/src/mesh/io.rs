use super::{boundary_edges_of, CrackedMesh, Mesh};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshFileError {
    #[error("mesh file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("mesh file content: {0}")]
    Content(String),
}

/// On-disk mesh: vertices include duplicates, triangles use post-duplication indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub crack_pairs: Vec<[usize; 2]>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub h: f64,
}

impl MeshFile {
    pub fn from_cracked(mesh: &CrackedMesh) -> Self {
        Self {
            vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
            triangles: mesh.triangles.clone(),
            crack_pairs: mesh.crack_pairs.iter().map(|&(o, d)| [o, d]).collect(),
            boundary_edges: mesh.base.boundary_edges.clone(),
            h: mesh.base.h,
        }
    }

    pub fn from_mesh(mesh: &Mesh) -> Self {
        Self::from_cracked(&CrackedMesh::uncracked(mesh.clone()))
    }

    /// Rebuilds the cracked mesh; the base triangles map duplicates back to originals.
    pub fn to_cracked(&self) -> Result<CrackedMesh, MeshFileError> {
        let n_total = self.vertices.len();
        let n_base = n_total
            .checked_sub(self.crack_pairs.len())
            .ok_or_else(|| MeshFileError::Content("more crack pairs than vertices".into()))?;
        let mut original: Vec<usize> = (0..n_total).collect();
        for (k, &[o, d]) in self.crack_pairs.iter().enumerate() {
            if d != n_base + k || o >= n_base {
                return Err(MeshFileError::Content(format!("crack pair {k} = [{o}, {d}] is out of order")));
            }
            original[d] = o;
        }
        if let Some(t) = self.triangles.iter().position(|t| t.iter().any(|&v| v >= n_total)) {
            return Err(MeshFileError::Content(format!("triangle {t} references a missing vertex")));
        }
        let base_triangles: Vec<[usize; 3]> = self.triangles.iter().map(|t| t.map(|v| original[v])).collect();
        let boundary_edges = if self.boundary_edges.is_empty() { boundary_edges_of(&base_triangles) } else { self.boundary_edges.clone() };
        let base = Mesh {
            vertices: self.vertices[..n_base].iter().map(|&[x, y]| Point::new(x, y)).collect(),
            triangles: base_triangles,
            boundary_edges,
            h: self.h,
            h_fine: self.h,
            ring: None,
        };
        Ok(CrackedMesh {
            base,
            crack_pairs: self.crack_pairs.iter().map(|&[o, d]| (o, d)).collect(),
            triangles: self.triangles.clone(),
            crack_nodes: self.crack_pairs.iter().map(|&[o, _]| o).collect(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), MeshFileError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, MeshFileError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
