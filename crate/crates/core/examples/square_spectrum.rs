//! Neumann eigenvalues of the unit square against the exact values (m² + n²)π².

use neumann_crack::fem::{assemble, solve_eigen};
use neumann_crack::geometry::Domain;
use neumann_crack::mesh::{triangulate_uniform, CrackedMesh};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut exact: Vec<f64> = (0..5).flat_map(|m| (0..5).map(move |n| ((m * m + n * n) as f64) * PI * PI)).collect();
    exact.sort_by(f64::total_cmp);
    for h in [0.1, 0.05, 0.025] {
        let mesh = triangulate_uniform(&Domain::unit_square(), h)?;
        let op = assemble(&CrackedMesh::uncracked(mesh))?;
        let eig = solve_eigen(&op, 6, 1e-10)?;
        println!("h = {h}  ({} dofs)", op.n);
        for (i, (l, e)) in eig.values.iter().zip(&exact).enumerate() {
            println!("  λ{i} = {l:12.6}  exact {e:12.6}  rel.err {:.2e}", if *e > 0.0 { (l - e).abs() / e } else { l.abs() });
        }
    }
    Ok(())
}
