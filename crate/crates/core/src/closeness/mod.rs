//! Identification maps between the uncracked and cracked finite element
//! spaces, sharp discrete closeness constants, and numerical checks of the
//! auxiliary inequalities used to bound them.

mod deltas;
mod lemmas;
mod maps;

pub use deltas::{estimate_deltas, pencil_sup, restricted_pencil_sup, ClosenessReport, LemmaConstants, MapNorms};
pub use lemmas::{
    disk_integrals, verify_aux_lemma, verify_curve_lemma, verify_galpha, verify_lemma_delta, verify_marchenko, verify_trace_lemma,
    AuxLemmaResult, CurveLemmaResult, DeltaLemmaResult, DiskIntegrals, GalphaResult, MarchenkoResult, TraceLemmaResult,
};
pub use maps::{build_maps, copy_map, extension_map, IdentificationMaps};

use crate::fem::FemError;
use crate::geometry::Point;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use rand::RngExt;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClosenessError {
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("hypotheses unmet: {0}")]
    HypothesisUnmet(String),
    #[error("disk of radius {radius} around the crack centre leaves the domain (distance to boundary {room})")]
    DomainEscape { radius: f64, room: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, ClosenessError>;

/// Random smooth nodal function: a few plane waves plus, on duplicate nodes,
/// a constant offset that makes the function jump across the crack.
pub(crate) fn random_smooth<R: RngExt>(positions: &[Point], duplicate: &[bool], rng: &mut R) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0 * PI..3.0 * PI),
                rng.random_range(-3.0 * PI..3.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let jump = rng.random_range(-1.0..1.0);
    positions
        .iter()
        .zip(duplicate)
        .map(|(p, &dup)| {
            let s: f64 = waves.iter().map(|&(a, kx, ky, ph)| a * (kx * p.x + ky * p.y + ph).cos()).sum();
            if dup {
                s + jump
            } else {
                s
            }
        })
        .collect()
}
