//! The discrete adjoint: `<q, S* g> = (S q, g)` for measures `q` and final
//! time data `g`, for both time discretizations.
//!
//! ```text
//! cargo run --example adjoint_identity
//! ```

use sparse_heat::experiments::{build_model, selftest};
use sparse_heat::{Atom, DgOrder, DiscreteMeasure};

fn main() -> sparse_heat::Result<()> {
    let q = DiscreteMeasure::new(vec![Atom::new([0.3, 0.4], 2.0), Atom::new([0.71, 0.52], -1.5)]);
    for order in [DgOrder::Dg0, DgOrder::Dg1] {
        let model = build_model(16, 10, order, 0.1)?;
        let space = model.space();
        let g = space.l2_project(|p| p[0] * (1.0 - p[0]) * p[1])?;
        let z = model.adjoint_dirac(&g)?;
        let lhs: f64 = q
            .atoms()
            .iter()
            .map(|a| Ok(a.beta * space.eval(&z, a.x)?))
            .sum::<sparse_heat::Result<f64>>()?;
        let rhs = space.l2_inner(&model.forward_dirac(&q)?, &g)?;
        println!("{order:?}: <q, S*g> = {lhs:.15e}, (Sq, g) = {rhs:.15e}, difference {:.1e}", (lhs - rhs).abs());
    }

    let check = selftest::adjoint_identity(7)?;
    println!(
        "randomized check over 120 cases: max relative error {:.2e} (tolerance {:.0e})",
        check.max_error, check.tolerance
    );
    Ok(())
}
