//! Uniform meshes, refinement, and the P1 mass and stiffness stencils.
//!
//! ```text
//! cargo run --example mesh_fem
//! ```

use sparse_heat::{FemSpace, TriMesh};

fn main() -> sparse_heat::Result<()> {
    let coarse = TriMesh::build_uniform(4)?;
    let fine = coarse.refine();
    println!(
        "4x4 mesh: {} nodes, {} cells, h = {:.4}; refined: {} nodes, {} cells",
        coarse.num_nodes(),
        coarse.num_cells(),
        coarse.h(),
        fine.num_nodes(),
        fine.num_cells()
    );

    let space = FemSpace::new(TriMesh::build_uniform(8)?);
    let center = 4 * 9 + 4;
    let s = 1.0 / 8.0;
    println!("row of the center node on the 8x8 mesh (s = 1/8):");
    let (cols, vals) = space.mass().matrix().row(center);
    for (&col, &m) in cols.iter().zip(vals) {
        let a = space.stiffness().matrix().get(center, col);
        println!("  node {col:3}: mass {:.6} = {:.4} s^2, stiffness {a:+.3}", m, m / (s * s));
    }

    // integral of sin(pi x) sin(pi y) is 4 / pi^2
    let v = space.l2_project(|p| (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin())?;
    let ones = space.l2_project(|_| 1.0)?;
    let integral = space.l2_inner(&v, &ones)?;
    println!(
        "integral of the projected sine mode {:.6} (exact {:.6})",
        integral,
        4.0 / std::f64::consts::PI.powi(2)
    );
    println!("value at the center {:.6}", space.eval(&v, [0.5, 0.5])?);
    Ok(())
}
