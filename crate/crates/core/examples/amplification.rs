//! Per-step amplification factors of dG(0) and dG(1) for `u' + lambda u = 0`
//! compared with `exp(-s)`, and the eigenmode check on a small mesh.
//!
//! ```text
//! cargo run --example amplification
//! ```

use sparse_heat::experiments::selftest;
use sparse_heat::timestepping::{pade_step_oracle, subdiagonal_pade};
use sparse_heat::DgOrder;

fn main() -> sparse_heat::Result<()> {
    println!("{:>8} {:>14} {:>14} {:>14}", "s", "exp(-s)", "dG(0)", "dG(1)");
    for s in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0] {
        let r0 = pade_step_oracle(s, 1.0, DgOrder::Dg0)?;
        let r1 = pade_step_oracle(s, 1.0, DgOrder::Dg1)?;
        assert!((r1 - subdiagonal_pade(s, DgOrder::Dg1)).abs() < 1e-14);
        println!("{s:8.2} {:14.6e} {r0:14.6e} {r1:14.6e}", (-s).exp());
    }

    println!("\nlocal error against exp(-s):");
    for s in [0.1, 0.05, 0.025] {
        let e0 = (pade_step_oracle(s, 1.0, DgOrder::Dg0)? - (-s).exp()).abs();
        let e1 = (pade_step_oracle(s, 1.0, DgOrder::Dg1)? - (-s).exp()).abs();
        println!("  s = {s:5.3}: dG(0) {e0:.3e}, dG(1) {e1:.3e}");
    }

    let check = selftest::eigenmode_amplification()?;
    println!(
        "\ndiscrete eigenfunctions on the 4x4 mesh: max deviation {:.2e} (tolerance {:.0e})",
        check.max_error, check.tolerance
    );
    Ok(())
}
