//! Spectral distance and closeness rates over a shrinking slit.
//!
//! Usage: `cargo run --release --example slit_convergence -- [out.csv]`

use neumann_crack::harness::{run_converge, StudyConfig};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "slit_convergence.csv".into()));
    let mut cfg = StudyConfig::default();
    cfg.mesh.h0 = 0.04;
    cfg.study.epsilons = vec![0.2, 0.1, 0.05];
    let summary = run_converge(&cfg, &out)?;
    for row in &summary.rows {
        println!("ε = {:5}  dbar = {:.3e}  δ6 = {:.3e}  δ7 = {:.3e}", row.epsilon, row.dbar_truncated, row.delta[5], row.delta[6]);
    }
    for (name, fit) in [("dbar", &summary.fits.dbar), ("δ6", &summary.fits.delta6), ("δ7", &summary.fits.delta7)] {
        if let Some(f) = fit {
            println!("{name}: ε^{:.3}  (r² = {:.4})", f.exponent, f.r_squared);
        }
    }
    Ok(())
}
