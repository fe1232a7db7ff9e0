use super::config::{CrackFamily, StudyConfig};
use super::{fmt_f64, sibling, write_json, HarnessError};
use crate::closeness::{build_maps, estimate_deltas, ClosenessReport};
use crate::fem::{assemble, solve_eigen_with, EigenSolution, OperatorPair, SolverOptions};
use crate::geometry::{Ball, PerforatedDomain};
use crate::mesh::{insert_crack, triangulate, CrackedMesh, Mesh, MeshFile, MeshSizing};
use crate::spectral::{common_gap_cut, dbar, fit_rate, multiplicity_match, truncate, RateFit, Spectrum};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

type Result<T> = std::result::Result<T, HarnessError>;

/// Meshes and operators of one `ε` of a study.
#[derive(Debug, Clone)]
pub struct Instance {
    pub epsilon: f64,
    pub pd: PerforatedDomain,
    pub mesh: Mesh,
    pub cracked: CrackedMesh,
    pub op: OperatorPair,
    pub op_cracked: OperatorPair,
}

pub fn build_instance(cfg: &StudyConfig, eps: f64) -> Result<Instance> {
    let ball = Ball::new(cfg.crack.center(), eps)?;
    let pd = PerforatedDomain::new(cfg.domain, cfg.crack.crack(eps), ball).map_err(|e| HarnessError::Config(format!("study.epsilons: {e}")))?;
    let sizing = MeshSizing::for_epsilon(cfg.mesh.h0, eps, cfg.mesh.crack_h_ratio);
    let mesh = triangulate(&cfg.domain, Some(&pd), sizing)?;
    let cracked = insert_crack(&mesh, &pd.crack)?;
    let op = assemble(&CrackedMesh::uncracked(mesh.clone()))?;
    let op_cracked = assemble(&cracked)?;
    Ok(Instance { epsilon: eps, pd, mesh, cracked, op, op_cracked })
}

fn solver_options(cfg: &StudyConfig) -> SolverOptions {
    SolverOptions { dense_threshold: cfg.solver.dense_threshold, ..SolverOptions::default() }
}

/// Smallest eigenpairs, growing `k` until the largest computed value exceeds
/// `lambda` or the whole spectrum is computed.
pub fn solve_to_lambda(op: &OperatorPair, k: usize, tol: f64, opts: SolverOptions, lambda: f64) -> Result<EigenSolution> {
    let mut k = k.min(op.n);
    loop {
        let sol = solve_eigen_with(op, k, tol, opts)?;
        if k >= op.n || sol.values.last().is_some_and(|&v| v > lambda) {
            return Ok(sol);
        }
        k = (k + k / 2).max(k + 4).min(op.n);
    }
}

/// Truncated comparison of two computed spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralComparison {
    pub lambda_cut: f64,
    pub dbar_truncated: f64,
    /// Reference clusters below the cut whose multiplicity was checked.
    pub mult_clusters: usize,
    pub mult_ok: bool,
}

/// Truncates both spectra at a common gap below `lambda`, measures `d̄`, and
/// checks that every reference cluster below the cut keeps its multiplicity.
pub fn compare_spectra(reference: &[f64], perturbed: &[f64], lambda: f64) -> Result<SpectralComparison> {
    let a = Spectrum::with_cluster_tol(reference, 1e-2)?;
    let b = Spectrum::new(perturbed)?;
    let cut = common_gap_cut(&a, &b, lambda).cut;
    let (ta, tb) = (truncate(&a, cut), truncate(&b, cut));
    let dbar_truncated = dbar(&ta, &tb)?;
    let clusters = ta.clusters();
    let mut mult_ok = true;
    for (i, c) in clusters.iter().enumerate() {
        let below = if i > 0 { c.value - clusters[i - 1].value } else { f64::INFINITY };
        let above = clusters.get(i + 1).map_or(cut - c.value, |n| n.value - c.value);
        let eta = 0.5f64.min(0.5 * below.min(above));
        mult_ok &= multiplicity_match(&ta, &tb, c.value, c.multiplicity, eta)?.satisfied;
    }
    Ok(SpectralComparison { lambda_cut: cut, dbar_truncated, mult_clusters: clusters.len(), mult_ok })
}

pub const SPECTRUM_HEADER: &str = "epsilon,h,dofs_omega,dofs_cracked,index,lambda_omega,lambda_cracked";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub epsilon: f64,
    pub h: f64,
    pub dofs_omega: usize,
    pub dofs_cracked: usize,
    pub index: usize,
    pub lambda_omega: f64,
    pub lambda_cracked: f64,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?))
}

fn write_line(w: &mut impl Write, path: &Path, line: &str) -> Result<()> {
    writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

/// First `solver.k` eigenvalues of both operators for every `ε`.
pub fn run_spectrum(cfg: &StudyConfig, out: &Path) -> Result<Vec<SpectrumRow>> {
    let mut w = create(out)?;
    write_line(&mut w, out, SPECTRUM_HEADER)?;
    let mut rows = Vec::new();
    for &eps in &cfg.study.epsilons {
        let inst = build_instance(cfg, eps)?;
        let a = solve_eigen_with(&inst.op, cfg.solver.k, cfg.solver.tol, solver_options(cfg))?;
        let b = solve_eigen_with(&inst.op_cracked, cfg.solver.k, cfg.solver.tol, solver_options(cfg))?;
        for (i, (&la, &lb)) in a.values.iter().zip(&b.values).enumerate() {
            let row = SpectrumRow {
                epsilon: eps,
                h: inst.mesh.h_fine,
                dofs_omega: inst.op.n,
                dofs_cracked: inst.op_cracked.n,
                index: i + 1,
                lambda_omega: la,
                lambda_cracked: lb,
            };
            let line = [fmt_f64(row.epsilon), fmt_f64(row.h), row.dofs_omega.to_string(), row.dofs_cracked.to_string(), row.index.to_string(), fmt_f64(la), fmt_f64(lb)]
                .join(",");
            write_line(&mut w, out, &line)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

pub const STUDY_HEADER: &str = "epsilon,h,dofs_omega,dofs_cracked,k,lambda_cut,dbar_truncated,delta1,delta2,delta3,delta4,delta5,delta6,delta7,norm_j,norm_jp,mult_clusters,mult_ok,wall_time_s";
pub const EIGEN_HEADER: &str = "epsilon,index,lambda_omega,lambda_cracked,abs_gap";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub h: f64,
    pub dofs_omega: usize,
    pub dofs_cracked: usize,
    pub k: usize,
    pub lambda_cut: f64,
    pub dbar_truncated: f64,
    pub delta: [f64; 7],
    pub norm_j: f64,
    pub norm_jp: f64,
    pub mult_clusters: usize,
    pub mult_ok: bool,
    pub wall_time_s: f64,
    pub eigen_omega: Vec<f64>,
    pub eigen_cracked: Vec<f64>,
}

impl StudyRow {
    fn csv(&self) -> String {
        let mut f = vec![fmt_f64(self.epsilon), fmt_f64(self.h), self.dofs_omega.to_string(), self.dofs_cracked.to_string(), self.k.to_string()];
        f.push(fmt_f64(self.lambda_cut));
        f.push(fmt_f64(self.dbar_truncated));
        f.extend(self.delta.iter().map(|&d| fmt_f64(d)));
        f.extend([fmt_f64(self.norm_j), fmt_f64(self.norm_jp), self.mult_clusters.to_string(), self.mult_ok.to_string(), fmt_f64(self.wall_time_s)]);
        f.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFits {
    pub dbar: Option<RateFit>,
    pub delta6: Option<RateFit>,
    pub delta7: Option<RateFit>,
}

/// Log-log rates of `d̄`, `δ₆`, `δ₇` against `ε`; `None` with fewer than
/// three positive points.
pub fn fit_study(rows: &[StudyRow]) -> StudyFits {
    let fit = |get: &dyn Fn(&StudyRow) -> f64| fit_rate(&rows.iter().map(|r| (r.epsilon, get(r))).collect::<Vec<_>>()).ok();
    StudyFits { dbar: fit(&|r| r.dbar_truncated), delta6: fit(&|r| r.delta[5]), delta7: fit(&|r| r.delta[6]) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSummary {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub fits: StudyFits,
    pub reports: Vec<ClosenessReport>,
}

/// One study row; eigenvalues are computed up to `Λ` on both meshes.
pub fn study_row(cfg: &StudyConfig, inst: &Instance) -> Result<(StudyRow, ClosenessReport)> {
    let start = Instant::now();
    let lambda = cfg.study.lambda;
    let a = solve_to_lambda(&inst.op, cfg.solver.k, cfg.solver.tol, solver_options(cfg), lambda)?;
    let b = solve_to_lambda(&inst.op_cracked, a.values.len(), cfg.solver.tol, solver_options(cfg), lambda)?;
    let cmp = compare_spectra(&a.values, &b.values, lambda)?;
    let maps = build_maps(&inst.mesh, &inst.cracked, &inst.pd)?;
    let report = estimate_deltas(&maps, &inst.op, &inst.op_cracked)?;
    let row = StudyRow {
        epsilon: inst.epsilon,
        h: inst.mesh.h_fine,
        dofs_omega: inst.op.n,
        dofs_cracked: inst.op_cracked.n,
        k: a.values.len().min(b.values.len()),
        lambda_cut: cmp.lambda_cut,
        dbar_truncated: cmp.dbar_truncated,
        delta: report.delta,
        norm_j: report.map_norms.j,
        norm_jp: report.map_norms.jp,
        mult_clusters: cmp.mult_clusters,
        mult_ok: cmp.mult_ok,
        wall_time_s: start.elapsed().as_secs_f64(),
        eigen_omega: a.values,
        eigen_cracked: b.values,
    };
    Ok((row, report))
}

/// The ε-sweep. Writes `out` (one row per ε, flushed as it goes), the
/// per-eigenvalue table `<stem>_eigenvalues.csv` and `<stem>.json`.
pub fn run_converge(cfg: &StudyConfig, out: &Path) -> Result<ConvergeSummary> {
    if cfg.crack.family == CrackFamily::None {
        eprintln!("warning: empty crack family; all distances vanish and no rate can be fitted");
    }
    let eig_path = sibling(out, "_eigenvalues.csv");
    let mut w = create(out)?;
    let mut we = create(&eig_path)?;
    write_line(&mut w, out, STUDY_HEADER)?;
    write_line(&mut we, &eig_path, EIGEN_HEADER)?;
    let (mut rows, mut reports) = (Vec::new(), Vec::new());
    for &eps in &cfg.study.epsilons {
        let inst = build_instance(cfg, eps)?;
        let (row, report) = study_row(cfg, &inst)?;
        eprintln!(
            "eps = {eps}: dofs {}/{}, dbar = {:.4e}, delta6 = {:.4e}, delta7 = {:.4e} ({:.1} s)",
            row.dofs_omega, row.dofs_cracked, row.dbar_truncated, row.delta[5], row.delta[6], row.wall_time_s
        );
        write_line(&mut w, out, &row.csv())?;
        for i in 0..row.k {
            let (a, b) = (row.eigen_omega[i], row.eigen_cracked[i]);
            let line = [fmt_f64(eps), (i + 1).to_string(), fmt_f64(a), fmt_f64(b), fmt_f64((a - b).abs())].join(",");
            write_line(&mut we, &eig_path, &line)?;
        }
        rows.push(row);
        reports.push(report);
    }
    let fits = fit_study(&rows);
    let summary = ConvergeSummary { config: cfg.clone(), rows, fits, reports };
    write_json(&sibling(out, ".json"), &summary)?;
    Ok(summary)
}

/// Writes the cracked mesh of the first `ε`.
pub fn export_mesh(cfg: &StudyConfig, out: &Path) -> Result<Instance> {
    let inst = build_instance(cfg, cfg.study.epsilons[0])?;
    MeshFile::from_cracked(&inst.cracked).write(out)?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eps: f64, d: f64) -> StudyRow {
        StudyRow {
            epsilon: eps,
            h: 0.0,
            dofs_omega: 0,
            dofs_cracked: 0,
            k: 0,
            lambda_cut: 0.0,
            dbar_truncated: d,
            delta: [0.0, 0.0, 0.0, 0.0, 0.0, d, d],
            norm_j: 1.0,
            norm_jp: 1.0,
            mult_clusters: 0,
            mult_ok: true,
            wall_time_s: 0.0,
            eigen_omega: vec![],
            eigen_cracked: vec![],
        }
    }

    #[test]
    fn synthetic_rates_fit_exactly() {
        let rows: Vec<StudyRow> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e: &f64| row(e, 3.0 * e.sqrt())).collect();
        let fits = fit_study(&rows);
        for f in [fits.dbar, fits.delta6, fits.delta7] {
            let f = f.unwrap();
            assert!((f.exponent - 0.5).abs() < 1e-12 && (f.prefactor - 3.0).abs() < 1e-10);
        }
        assert!(fit_study(&rows[..2]).dbar.is_none());
    }

    #[test]
    fn study_row_csv_matches_header() {
        assert_eq!(row(0.1, 0.5).csv().split(',').count(), STUDY_HEADER.split(',').count());
        assert!(row(0.1, 0.5).csv().starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn identical_spectra_compare_to_zero() {
        let v = [0.0, 9.8, 9.81, 19.7, 39.4, 39.5, 49.3, 49.4, 78.9, 88.8, 88.9, 98.7, 98.8, 110.0];
        let c = compare_spectra(&v, &v, 100.0).unwrap();
        assert_eq!(c.dbar_truncated, 0.0);
        assert!(c.mult_ok);
        assert!(c.lambda_cut > 50.0 && c.lambda_cut <= 100.0);
    }

    #[test]
    fn lost_multiplicity_is_flagged() {
        let a = [0.0, 9.8, 9.81, 19.7, 60.0];
        let b = [0.0, 9.8, 12.0, 19.7, 60.0];
        assert!(!compare_spectra(&a, &b, 40.0).unwrap().mult_ok);
    }

    #[test]
    fn growth_reaches_lambda() {
        let cfg = StudyConfig { mesh: super::super::MeshSpec { h0: 0.1, crack_h_ratio: 0.25 }, ..StudyConfig::default() };
        let inst = build_instance(&cfg, 0.2).unwrap();
        let sol = solve_to_lambda(&inst.op, 2, 1e-8, SolverOptions::default(), 50.0).unwrap();
        assert!(*sol.values.last().unwrap() > 50.0);
    }
}
