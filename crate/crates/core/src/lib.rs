//! Neumann Laplacian spectra on planar domains with cracks, and numerical
//! checks of the quasi-unitary closeness between cracked and uncracked
//! problems.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod fem;
pub mod spectral;
pub mod closeness;
pub mod harness;
