use super::maps::IdentificationMaps;
use super::Result;
use crate::fem::OperatorPair;
use crate::linalg::{congruence_max_eigenvalue, CsrMatrix, EnvelopeCholesky};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Measured constants of the auxiliary inequalities. Unset entries were not
/// measured for this instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    #[serde(rename = "C_trace")]
    pub c_trace: Option<f64>,
    #[serde(rename = "C_galpha_ratio")]
    pub c_galpha_ratio: Option<f64>,
    pub tau_found: Option<bool>,
    #[serde(rename = "marchenko_C")]
    pub marchenko_c: Option<f64>,
    pub delta_lemma_margin: Option<f64>,
}

/// Operator norms of the identification maps between their `L²` spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapNorms {
    pub j: f64,
    pub jp: f64,
    /// `‖J1 f‖ / ‖f‖` in the mass norms of `V'` and `V`.
    pub j1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub epsilon: f64,
    pub epsilon_hat: f64,
    pub h: f64,
    /// Sharp constants of conditions (1) to (7). Entry 4 is the excess of
    /// `max(‖J‖, ‖J'‖)` over 2, zero when the condition holds.
    pub delta: [f64; 7],
    pub order_k: u32,
    pub lemma_constants: LemmaConstants,
    pub map_norms: MapNorms,
}

/// `sup xᵀAx / xᵀKx` for symmetric `A`, with `K = LLᵀ` factored.
///
/// Only the support `C` of `A` enters: minimising `xᵀKx` over the free
/// coordinates leaves the Schur complement `((K⁻¹)_CC)⁻¹`, so the supremum is
/// `max(0, λ_max(A_CC, ((K⁻¹)_CC)⁻¹))` whenever `C` is a proper subset.
pub fn pencil_sup(a: &CsrMatrix, k: &EnvelopeCholesky) -> Result<f64> {
    let support = a.nonzero_rows(0.0);
    if support.is_empty() {
        return Ok(0.0);
    }
    let a_cc = a.submatrix(&support, &support);
    restricted_pencil_sup(&a_cc, &support, k)
}

/// As [`pencil_sup`] for a dense block `A_CC` already restricted to `support`.
pub fn restricted_pencil_sup(a_cc: &DMatrix<f64>, support: &[usize], k: &EnvelopeCholesky) -> Result<f64> {
    if support.is_empty() {
        return Ok(0.0);
    }
    let y = k.inverse_block(support);
    let top = congruence_max_eigenvalue(a_cc, &((&y + y.transpose()) * 0.5))?;
    Ok(if support.len() < k.dim() { top.max(0.0) } else { top })
}

/// `sup |fᵀBu|² / (fᵀG f · uᵀK u)` where `apply_ginv_block(R)` returns
/// `(G⁻¹)_RR` for the row support `R` of `B`.
fn bilinear_sup_sq(b: &CsrMatrix, apply_ginv_block: impl Fn(&[usize]) -> DMatrix<f64>, k: &EnvelopeCholesky) -> Result<f64> {
    let rows = b.nonzero_rows(0.0);
    let cols = b.nonzero_cols(0.0);
    if rows.is_empty() {
        return Ok(0.0);
    }
    let b_rc = b.submatrix(&rows, &cols);
    let ginv = apply_ginv_block(&rows);
    let a = b_rc.transpose() * ginv * &b_rc;
    restricted_pencil_sup(&a, &cols, k)
}

/// Sharp `sup ‖D x‖_W / ‖x‖_K` for a sparse difference operator `D`.
fn difference_norm(d: &CsrMatrix, w: &CsrMatrix, k: &EnvelopeCholesky) -> Result<f64> {
    let d = d.pruned(0.0);
    if d.nnz() == 0 {
        return Ok(0.0);
    }
    let a = d.transpose().matmul(&w.matmul(&d));
    Ok(pencil_sup(&a, k)?.sqrt())
}

/// `‖T‖` between mass norms: `sqrt(1 + λ_max(TᵀW T − M, M))`. Entries of
/// the excess at assembly roundoff relative to `M` are dropped.
fn map_norm(t: &CsrMatrix, w: &CsrMatrix, m: &CsrMatrix, m_chol: &EnvelopeCholesky) -> Result<f64> {
    let mmax = m.triplets().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
    let excess = t.transpose().matmul(&w.matmul(t)).add_scaled(m, -1.0).pruned(1e-13 * mmax);
    if excess.nnz() == 0 {
        return Ok(1.0);
    }
    let support = excess.nonzero_rows(0.0);
    let top = restricted_pencil_sup(&excess.submatrix(&support, &support), &support, m_chol)?;
    Ok((1.0 + top).max(0.0).sqrt())
}

fn sum(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
    a.add_scaled(b, 1.0)
}

/// Measures the seven closeness constants of the pair `(op, op_cracked)`.
///
/// `op` lives on `V` with mass `M`; `op_cracked` on `V'` with mass `M'`.
pub fn estimate_deltas(maps: &IdentificationMaps, op: &OperatorPair, op_cracked: &OperatorPair) -> Result<ClosenessReport> {
    let (n, np) = (maps.n(), maps.n_cracked());
    if op.n != n || op_cracked.n != np || maps.j1p.nrows() != n || maps.j1p.ncols() != np {
        return Err(super::ClosenessError::MeshMismatch(format!(
            "maps are {n} -> {np} but operators have sizes {} and {}",
            op.n, op_cracked.n
        )));
    }
    let k = EnvelopeCholesky::factor(&sum(&op.m, &op.s))?;
    let kp = EnvelopeCholesky::factor(&sum(&op_cracked.m, &op_cracked.s))?;
    let mp_chol = EnvelopeCholesky::factor(&op_cracked.m)?;
    let m_chol = EnvelopeCholesky::factor(&op.m)?;
    let mp = &op_cracked.m;
    let e = &maps.j1;
    let id_p = CsrMatrix::identity(np);

    // (1) f ∈ V sits in H' as E f.
    let d1 = maps.j.matmul(e).add_scaled(e, -1.0);
    let delta1 = difference_norm(&d1, mp, &k)?;

    // (2) Jᵀ M' − M' J', as a form on H × H'.
    let d2 = maps.j.transpose().matmul(mp).add_scaled(&mp.matmul(&maps.jp), -1.0).pruned(0.0);
    let delta2 = bilinear_sup_sq(&d2, |r| mp_chol.inverse_block(r), &mp_chol)?.sqrt();

    // (3) u − J J' u on V'.
    let d3 = id_p.add_scaled(&maps.j.matmul(&maps.jp), -1.0);
    let delta3 = difference_norm(&d3, mp, &kp)?;

    let norms = MapNorms { j: map_norm(&maps.j, mp, mp, &mp_chol)?, jp: map_norm(&maps.jp, mp, mp, &mp_chol)?, j1: map_norm(e, mp, &op.m, &m_chol)? };
    let delta4 = (norms.j.max(norms.jp) - 2.0).max(0.0);

    // (5) f − J' J f for f ∈ V.
    let d5 = e.add_scaled(&maps.jp.matmul(&maps.j).matmul(e), -1.0);
    let delta5 = difference_norm(&d5, mp, &k)?;

    // (6) J' u − J1' u for u ∈ V'.
    let d6 = maps.jp.add_scaled(&e.matmul(&maps.j1p), -1.0);
    let delta6 = difference_norm(&d6, mp, &kp)?;

    // (7) a(f, J1' u) − a'(J1 f, u) against ‖f‖₂ ‖u‖₁.
    let b = op.s.matmul(&maps.j1p).add_scaled(&e.transpose().matmul(&op_cracked.s), -1.0);
    let bmax = b.triplets().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
    let b = b.pruned(1e-13 * bmax);
    let delta7 = if b.nnz() == 0 { 0.0 } else { delta7_from(&b, op, &kp)?.sqrt() };

    Ok(ClosenessReport {
        epsilon: maps.epsilon,
        epsilon_hat: maps.epsilon_hat,
        h: maps.h,
        delta: [delta1, delta2, delta3, delta4, delta5, delta6, delta7],
        order_k: 2,
        lemma_constants: LemmaConstants::default(),
        map_norms: norms,
    })
}

/// `‖f‖₂² = fᵀ G₂ f` with `G₂ = (S+Ml) Ml⁻¹ M Ml⁻¹ (S+Ml)`, so
/// `G₂⁻¹ = (S+Ml)⁻¹ Ml M⁻¹ Ml (S+Ml)⁻¹`.
fn delta7_from(b: &CsrMatrix, op: &OperatorPair, kp: &EnvelopeCholesky) -> Result<f64> {
    let shifted = op.s.add_scaled(&CsrMatrix::from_diagonal(&op.m_lumped), 1.0);
    let sl = EnvelopeCholesky::factor(&shifted)?;
    let mc = EnvelopeCholesky::factor(&op.m)?;
    let ml = &op.m_lumped;
    let ginv_block = |rows: &[usize]| {
        let mut out = DMatrix::zeros(rows.len(), rows.len());
        let mut e = vec![0.0; op.n];
        for (c, &j) in rows.iter().enumerate() {
            e[j] = 1.0;
            let mut x = sl.solve(&e);
            e[j] = 0.0;
            x.iter_mut().zip(ml).for_each(|(v, d)| *v *= d);
            let mut z = mc.solve(&x);
            z.iter_mut().zip(ml).for_each(|(v, d)| *v *= d);
            let w = sl.solve(&z);
            for (r, &i) in rows.iter().enumerate() {
                out[(r, c)] = w[i];
            }
        }
        (&out + out.transpose()) * 0.5
    };
    bilinear_sup_sq(b, ginv_block, kp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closeness::tests::{empty_instance, slit_instance, Instance};
    use crate::linalg::pencil_max_eigenvalue;
    use crate::fem::assemble;
    use crate::mesh::CrackedMesh;

    fn report(inst: &Instance) -> ClosenessReport {
        let op = assemble(&CrackedMesh::uncracked(inst.mesh.clone())).unwrap();
        let opk = assemble(&inst.cracked).unwrap();
        estimate_deltas(&inst.maps, &op, &opk).unwrap()
    }

    #[test]
    fn pencil_sup_matches_dense() {
        // K tridiagonal SPD, A supported on two coordinates.
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, &t);
        let a = CsrMatrix::from_triplets(n, n, &[(3, 3, 2.0), (3, 7, 0.5), (7, 3, 0.5), (7, 7, 1.0)]);
        let dense = pencil_max_eigenvalue(&a.to_dense(), &k.to_dense()).unwrap();
        let sparse = pencil_sup(&a, &EnvelopeCholesky::factor(&k).unwrap()).unwrap();
        assert!((dense - sparse).abs() < 1e-12 * dense.abs().max(1.0));
    }

    #[test]
    fn empty_crack_has_zero_deltas() {
        let r = report(&empty_instance());
        assert!(r.delta.iter().all(|&d| d <= 1e-10), "{:?}", r.delta);
        assert!((r.map_norms.j - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slit_deltas_have_expected_pattern() {
        let r = report(&slit_instance(0.1));
        for i in [0, 2, 4] {
            assert!(r.delta[i] <= 1e-10);
        }
        assert!(r.delta[1] <= 1e-12);
        assert_eq!(r.delta[3], 0.0);
        assert!(r.delta[5] > 0.0 && r.delta[6] > 0.0);
        assert!((r.map_norms.j1 - 1.0).abs() < 1e-10, "{}", r.map_norms.j1);
        assert!(r.map_norms.j <= 1.0 + 1e-12);
        assert_eq!(r.order_k, 2);
    }

    #[test]
    fn report_serializes_with_fixed_keys() {
        let r = report(&empty_instance());
        let v = serde_json::to_value(&r).unwrap();
        for key in ["epsilon", "epsilon_hat", "h", "delta", "order_k", "lemma_constants"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["delta"].as_array().unwrap().len(), 7);
        assert!(v["lemma_constants"].get("C_trace").is_some());
    }
}
