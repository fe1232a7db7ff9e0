//! Command-line orchestration: configuration, per-ε pipelines, sweep
//! studies and report files.

pub mod config;
mod lemmas;
mod study;

pub use config::{parse_epsilons, CrackFamily, CrackSpec, MeshSpec, Overrides, SolverSpec, StudyConfig, StudySpec};
pub use lemmas::{lemma_checks, lemmas_for, run_closeness, run_verify_lemmas, EpsilonLemmas, LemmaCheck, LemmaReport, Outcome};
pub use study::{
    build_instance, compare_spectra, export_mesh, fit_study, run_converge, run_spectrum, solve_to_lambda, ConvergeSummary, Instance,
    SpectrumRow, StudyFits, StudyRow, EIGEN_HEADER, SPECTRUM_HEADER, STUDY_HEADER,
};

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    /// 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {
        $(impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                HarnessError::Runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    crate::mesh::MeshError,
    crate::fem::FemError,
    crate::closeness::ClosenessError,
    crate::spectral::SpectralError,
    crate::geometry::GeometryError,
    crate::mesh::MeshFileError
);

/// Fixed-width scientific notation carrying 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `base` with its extension replaced by `suffix`, e.g. `out.csv` to `out_eigenvalues.csv`.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    base.with_file_name(format!("{stem}{suffix}"))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}
