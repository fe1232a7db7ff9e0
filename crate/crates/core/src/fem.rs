//! P1 stiffness and mass assembly with natural (Neumann) boundary conditions,
//! the discrete norms `‖·‖₀, ‖·‖₁, ‖·‖₂`, and the eigen-solver front end.

use crate::geometry::{orient, Point};
use crate::linalg::{self, dense_generalized, shift_invert_block_lanczos, CsrMatrix, LanczosOptions, LinalgError};
use crate::mesh::CrackedMesh;
use nalgebra::DMatrix;
use thiserror::Error;

const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    Degenerate { triangle: usize, area: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, FemError>;

/// Stiffness `S`, consistent mass `M` and lumped mass (row sums of `M`).
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub s: CsrMatrix,
    pub m: CsrMatrix,
    pub m_lumped: Vec<f64>,
    pub n: usize,
}

/// Element stiffness `A ∇λᵢ·∇λⱼ` and mass `A(1+δᵢⱼ)/12` of a counterclockwise triangle.
pub fn element_matrices([a, b, c]: [Point; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let det = orient(a, b, c);
    let area = 0.5 * det;
    let g = [
        ((b.y - c.y) / det, (c.x - b.x) / det),
        ((c.y - a.y) / det, (a.x - c.x) / det),
        ((a.y - b.y) / det, (b.x - a.x) / det),
    ];
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = area * (g[i].0 * g[j].0 + g[i].1 * g[j].1);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me, area)
}

pub fn assemble(mesh: &CrackedMesh) -> Result<OperatorPair> {
    assemble_triangles(&mesh.vertices(), &mesh.triangles)
}

/// Triangle-ordered assembly; entries are summed in a fixed order.
pub fn assemble_triangles(vertices: &[Point], triangles: &[[usize; 3]]) -> Result<OperatorPair> {
    let n = vertices.len();
    let mut st = Vec::with_capacity(9 * triangles.len());
    let mut mt = Vec::with_capacity(9 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let (ke, me, area) = element_matrices(tri.map(|v| vertices[v]));
        if !(area >= DEGENERATE_AREA) {
            return Err(FemError::Degenerate { triangle: t, area });
        }
        for i in 0..3 {
            for j in 0..3 {
                st.push((tri[i], tri[j], ke[i][j]));
                mt.push((tri[i], tri[j], me[i][j]));
            }
        }
    }
    let s = CsrMatrix::from_triplets(n, n, &st);
    let m = CsrMatrix::from_triplets(n, n, &mt);
    let m_lumped = m.row_sums();
    if let Some(v) = m_lumped.iter().position(|&x| !(x > 0.0)) {
        return Err(FemError::DimensionMismatch(format!("vertex {v} belongs to no triangle")));
    }
    Ok(OperatorPair { s, m, m_lumped, n })
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
}

impl EigenSolution {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Dense generalized solver at or below this dimension.
    pub dense_threshold: usize,
    pub lanczos: LanczosOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { dense_threshold: 2000, lanczos: LanczosOptions::default() }
    }
}

pub fn solve_eigen(op: &OperatorPair, k: usize, tol: f64) -> Result<EigenSolution> {
    solve_eigen_with(op, k, tol, SolverOptions::default())
}

/// The `k` lowest eigenpairs of `S v = λ M v`. Eigenvalues are clamped at 0
/// and each vector's largest-magnitude entry is made positive.
pub fn solve_eigen_with(op: &OperatorPair, k: usize, tol: f64, opts: SolverOptions) -> Result<EigenSolution> {
    if k == 0 || k > op.n {
        return Err(FemError::DimensionMismatch(format!("requested {k} eigenpairs of a {}-dimensional problem", op.n)));
    }
    if !(tol > 0.0) {
        return Err(FemError::DimensionMismatch(format!("tolerance must be positive, got {tol}")));
    }
    let pairs = if op.n <= opts.dense_threshold {
        let all = dense_generalized(&op.s.to_dense(), &op.m.to_dense())?;
        linalg::Eigenpairs { values: all.values[..k].to_vec(), vectors: all.vectors.columns(0, k).into_owned() }
    } else {
        shift_invert_block_lanczos(&op.s, &op.m, k, tol, opts.lanczos)?
    };
    let mut vectors = pairs.vectors;
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for c in 0..k {
        let mut v: Vec<f64> = vectors.column(c).iter().copied().collect();
        let norm = op.m.quad_form(&v).sqrt();
        let imax = (0..v.len()).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let scale = v[imax].signum() / norm;
        v.iter_mut().for_each(|x| *x *= scale);
        let lam = pairs.values[c].max(0.0);
        let sv = op.s.mul_vec(&v);
        let mv = op.m.mul_vec(&v);
        residuals.push(sv.iter().zip(&mv).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt());
        values.push(lam);
        vectors.column_mut(c).copy_from_slice(&v);
    }
    Ok(EigenSolution { values, vectors, residuals })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

fn check_dim(op: &OperatorPair, u: &[f64]) -> Result<()> {
    if u.len() != op.n {
        return Err(FemError::DimensionMismatch(format!("vector of length {} for an operator of size {}", u.len(), op.n)));
    }
    Ok(())
}

/// `A_h u = M_lumped⁻¹ S u`.
pub fn discrete_laplacian_apply(op: &OperatorPair, u: &[f64]) -> Result<Vec<f64>> {
    check_dim(op, u)?;
    Ok(op.s.mul_vec(u).iter().zip(&op.m_lumped).map(|(x, d)| x / d).collect())
}

/// `‖u‖₀² = uᵀMu`, `‖u‖₁² = uᵀ(M+S)u`, `‖u‖₂² = wᵀMw` with `w = A_h u + u`.
pub fn norms(op: &OperatorPair, u: &[f64]) -> Result<Norms> {
    let au = discrete_laplacian_apply(op, u)?;
    let w: Vec<f64> = au.iter().zip(u).map(|(a, b)| a + b).collect();
    let l2sq = op.m.quad_form(u);
    Ok(Norms { l2: l2sq.sqrt(), h1: (l2sq + op.s.quad_form(u)).max(0.0).sqrt(), h2: op.m.quad_form(&w).sqrt() })
}
