//! The seven closeness constants for a centred slit at several sizes.

use neumann_crack::closeness::{build_maps, estimate_deltas};
use neumann_crack::harness::{build_instance, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = StudyConfig::default();
    cfg.mesh.h0 = 0.05;
    for eps in [0.2, 0.1, 0.05] {
        let inst = build_instance(&cfg, eps)?;
        let maps = build_maps(&inst.mesh, &inst.cracked, &inst.pd)?;
        let r = estimate_deltas(&maps, &inst.op, &inst.op_cracked)?;
        let d: Vec<String> = r.delta.iter().map(|x| format!("{x:.3e}")).collect();
        println!("ε = {eps:5}  ε̂ = {:.3}  δ = [{}]  ‖J‖ = {:.3}", r.epsilon_hat, d.join(", "), r.map_norms.j);
    }
    Ok(())
}
