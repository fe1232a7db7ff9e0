//! Runs every inequality verifier over the default sweep and prints the verdicts.

use neumann_crack::harness::{run_verify_lemmas, StudyConfig};

fn main() {
    let out = std::env::temp_dir().join("lemma_checks.json");
    let cfg = StudyConfig::default();
    match run_verify_lemmas(&cfg, &out) {
        Ok(_) => println!("all checks passed"),
        Err(e) => println!("{e}"),
    }
    if let Ok(text) = std::fs::read_to_string(&out) {
        let report: serde_json::Value = serde_json::from_str(&text).expect("report is JSON");
        for c in report["checks"].as_array().into_iter().flatten() {
            println!("{:<12} {:5} {}", c["lemma"].as_str().unwrap_or(""), c["passed"], c["detail"].as_str().unwrap_or(""));
        }
    }
}
