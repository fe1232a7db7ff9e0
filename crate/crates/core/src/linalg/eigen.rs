//! Generalized symmetric eigenproblems `S v = λ M v` with `M` SPD.

use super::cholesky::EnvelopeCholesky;
use super::sparse::{dot, CsrMatrix};
use super::LinalgError;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatRef, Par, Side};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenpairs sorted by ascending eigenvalue; `vectors` holds one column per pair.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn not_spd() -> LinalgError {
    LinalgError::NotPositiveDefinite { pivot: 0, value: f64::NAN }
}

/// Symmetric eigen-decomposition with ascending eigenvalues.
pub fn symmetric_eigen_sorted(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = to_faer(&a).self_adjoint_eigen(Side::Lower).expect("symmetric eigensolver converges");
    (eig.S().column_vector().iter().copied().collect(), from_faer(eig.U()))
}

/// `L⁻¹ A L⁻ᵀ` for `B = L Lᵀ`, symmetrised.
fn reduce(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Mat<f64>, Mat<f64>), LinalgError> {
    let l = to_faer(b).llt(Side::Lower).map_err(|_| not_spd())?.L().to_owned();
    let mut c = to_faer(a);
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let mut c = c.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let sym = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    Ok((sym, l))
}

/// Largest eigenvalue of the pencil `A x = λ B x` for symmetric `A` and SPD `B`.
pub fn pencil_max_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let (c, _) = reduce(a, b)?;
    let vals = c.self_adjoint_eigenvalues(Side::Lower).map_err(|_| LinalgError::NoConvergence("dense symmetric eigensolver".into()))?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `λ_max(Lᵀ A L)` for `Y = L Lᵀ`, i.e. the top of the pencil `(A, Y⁻¹)`
/// without forming the inverse.
pub fn congruence_max_eigenvalue(a: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let l = to_faer(y).llt(Side::Lower).map_err(|_| not_spd())?.L().to_owned();
    let c = l.transpose() * to_faer(a) * &l;
    let sym = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let vals = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|_| LinalgError::NoConvergence("dense symmetric eigensolver".into()))?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// All eigenpairs of the dense pencil via `M = L Lᵀ` and `L⁻¹ S L⁻ᵀ`.
pub fn dense_generalized(s: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Eigenpairs, LinalgError> {
    let (c, l) = reduce(s, m)?;
    let eig = c.self_adjoint_eigen(Side::Lower).map_err(|_| LinalgError::NoConvergence("dense symmetric eigensolver".into()))?;
    let mut y = eig.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), y.as_mut(), Par::Seq);
    Ok(Eigenpairs { values: eig.S().column_vector().iter().copied().collect(), vectors: from_faer(y.as_ref()) })
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Shift `σ` of the operator `(S + σ M)⁻¹ M`; must make `S + σM` SPD.
    pub shift: f64,
    pub max_dim: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { block_size: 4, shift: 1.0, max_dim: 0, seed: 0x5eed }
    }
}

/// Residual test shared by both solvers: `‖Sv − λMv‖ ≤ tol·‖Mv‖·max(1, λ)`.
pub fn residual_ok(residual: f64, mv_norm: f64, lambda: f64, tol: f64) -> bool {
    residual <= tol * mv_norm * lambda.abs().max(1.0)
}

/// The `k` lowest eigenpairs of `S v = λ M v` by block Krylov iteration on the
/// shift-inverted operator `(S + σM)⁻¹ M` with full M-reorthogonalization and
/// Rayleigh–Ritz extraction on the pencil itself. Blocks of size ≥ 2 find both
/// members of the doubled eigenvalues produced by symmetric domains.
pub fn shift_invert_block_lanczos(
    s: &CsrMatrix,
    m: &CsrMatrix,
    k: usize,
    tol: f64,
    opts: LanczosOptions,
) -> Result<Eigenpairs, LinalgError> {
    let n = s.nrows();
    if k == 0 || k > n {
        return Err(LinalgError::DimensionMismatch(format!("requested {k} eigenpairs of a {n}-dimensional problem")));
    }
    let shifted = s.add_scaled(m, opts.shift);
    let chol = EnvelopeCholesky::factor(&shifted)?;
    let b = opts.block_size.max(1).min(n);
    let max_dim = if opts.max_dim == 0 { (12 * k + 120).min(n) } else { opts.max_dim.min(n) };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Basis Q (M-orthonormal), with M Q and S Q kept alongside.
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    let mut sq: Vec<Vec<f64>> = Vec::new();
    // Lower triangle of the projected stiffness Qᵀ S Q, grown row by row.
    let mut h_rows: Vec<Vec<f64>> = Vec::new();

    let mut block: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut last_check = 0usize;
    loop {
        let mut added = 0;
        for mut v in block.drain(..) {
            if q.len() >= max_dim {
                break;
            }
            let before = m.quad_form(&v).sqrt();
            for _ in 0..2 {
                for (qi, mqi) in q.iter().zip(&mq) {
                    let c = dot(mqi, &v);
                    v.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
                }
            }
            let mv = m.mul_vec(&v);
            let nrm = dot(&mv, &v).sqrt();
            if !(nrm > 1e-10 * before) || nrm == 0.0 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            let mv: Vec<f64> = mv.into_iter().map(|x| x / nrm).collect();
            let sv = s.mul_vec(&v);
            let row: Vec<f64> = q
                .iter()
                .zip(&sq)
                .map(|(qj, sqj)| 0.5 * (dot(&v, sqj) + dot(qj, &sv)))
                .chain(std::iter::once(dot(&v, &sv)))
                .collect();
            h_rows.push(row);
            sq.push(sv);
            q.push(v);
            mq.push(mv);
            added += 1;
        }
        let dim = q.len();
        let exhausted = added == 0 || dim >= max_dim;
        let stride = b.max(dim / 6);
        if dim >= k && (dim - last_check >= stride || exhausted || dim == n) {
            last_check = dim;
            let (pairs, converged) = rayleigh_ritz(&h_rows, &q, &mq, &sq, k, tol);
            if converged || dim == n {
                return Ok(pairs);
            }
            if exhausted {
                return Err(LinalgError::NoConvergence(format!(
                    "{k} eigenpairs not converged in a {dim}-dimensional Krylov space"
                )));
            }
        } else if exhausted {
            if dim < k {
                // Krylov space became invariant before reaching k vectors; restart with fresh directions.
                block = (0..b).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                continue;
            }
            return Err(LinalgError::NoConvergence(format!("Krylov space stalled at dimension {dim}")));
        }
        let start = dim - added;
        block = q[start..].iter().map(|v| chol.solve(&m.mul_vec(v))).collect();
        if block.is_empty() {
            block = (0..b).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        }
    }
}

fn rayleigh_ritz(
    h_rows: &[Vec<f64>],
    q: &[Vec<f64>],
    mq: &[Vec<f64>],
    sq: &[Vec<f64>],
    k: usize,
    tol: f64,
) -> (Eigenpairs, bool) {
    let dim = q.len();
    let n = q[0].len();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, row) in h_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let (theta, z) = symmetric_eigen_sorted(h);
    let mut vectors = DMatrix::zeros(n, k);
    let mut converged = true;
    for c in 0..k {
        let mut v = vec![0.0; n];
        let mut mv = vec![0.0; n];
        let mut sv = vec![0.0; n];
        for i in 0..dim {
            let zi = z[(i, c)];
            for r in 0..n {
                v[r] += zi * q[i][r];
                mv[r] += zi * mq[i][r];
                sv[r] += zi * sq[i][r];
            }
        }
        let lam = theta[c];
        let res: f64 = sv.iter().zip(&mv).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        let mv_norm = dot(&mv, &mv).sqrt();
        if !residual_ok(res, mv_norm, lam, tol) {
            converged = false;
        }
        vectors.set_column(c, &DVector::from_vec(v));
    }
    (Eigenpairs { values: theta[..k].to_vec(), vectors }, converged)
}
