//! First nonzero Neumann eigenvalue of the unit disk, j'₁,₁² ≈ 3.3900.

use neumann_crack::fem::{assemble, solve_eigen};
use neumann_crack::geometry::Domain;
use neumann_crack::mesh::{triangulate_uniform, CrackedMesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exact = 1.841_183_781_340_659_f64.powi(2);
    for h in [0.1, 0.05, 0.02] {
        let mesh = triangulate_uniform(&Domain::disk(1.0)?, h)?;
        let op = assemble(&CrackedMesh::uncracked(mesh))?;
        let eig = solve_eigen(&op, 4, 1e-10)?;
        println!("h = {h:5}  dofs {:6}  λ1 = {:.6}  λ2 = {:.6}  exact {exact:.6}", op.n, eig.values[1], eig.values[2]);
    }
    Ok(())
}
