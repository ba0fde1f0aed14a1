//! Built-in consistency checks run by the `selftest` command.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::fem::NodalField;
use crate::measures::{Atom, DiscreteMeasure};
use crate::timestepping::{pade_step_oracle, DgOrder};
use crate::Result;

use super::build_model;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// `|<q, S* g> - (S q, g)| / (|q| |g|)` over random measures and data.
pub fn adjoint_identity(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in [4, 8] {
        for m in [1, 4, 16] {
            for order in [DgOrder::Dg0, DgOrder::Dg1] {
                let model = build_model(n, m, order, 0.1)?;
                let space = model.space();
                for _ in 0..10 {
                    let atoms = rng.gen_range(1..=4);
                    let q = DiscreteMeasure::new(
                        (0..atoms)
                            .map(|_| Atom::new([rng.gen(), rng.gen()], rng.gen_range(-5.0..5.0)))
                            .collect(),
                    );
                    let g = space.scatter(
                        &(0..space.interior().len()).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>(),
                    );
                    let z = model.adjoint_dirac(&g)?;
                    let lhs: f64 = q
                        .atoms()
                        .iter()
                        .map(|a| space.eval(&z, a.x).map(|v| a.beta * v))
                        .collect::<Result<Vec<_>>>()?
                        .iter()
                        .sum();
                    let rhs = space.l2_inner(&model.forward_dirac(&q)?, &g)?;
                    let scale = q.tv_norm() * space.l2_norm(&g)?;
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
        }
    }
    Ok(CheckResult {
        name: "adjoint identity",
        max_error: worst,
        tolerance: 1e-10,
    })
}

/// Final states of discrete eigenfunctions against powers of the scalar
/// amplification factor, relative to the size of the eigenfunction. (Some
/// dG(1) factors are close to zero, so the error is not divided by them.)
pub fn eigenmode_amplification() -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let probe = build_model(4, 1, DgOrder::Dg0, 0.1)?;
    let space = probe.space();
    let interior = space.interior();
    let dense = |m: &crate::fem::sparse::CsrMatrix| {
        let r = m.restrict(interior);
        let d = interior.len();
        DMatrix::from_fn(d, d, |i, j| r.get(i, j))
    };
    let mass = dense(space.mass().matrix());
    let stiff = dense(space.stiffness().matrix());
    let l = mass.clone().cholesky().expect("mass matrix is SPD").l();
    let l_inv = l.clone().try_inverse().expect("triangular factor is invertible");
    let reduced = &l_inv * &stiff * l_inv.transpose();
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    let vectors = l_inv.transpose() * &eig.eigenvectors;

    for order in [DgOrder::Dg0, DgOrder::Dg1] {
        for m in [1, 2, 4] {
            let model = build_model(4, m, order, 0.1)?;
            let k = model.grid().step();
            for (e, &lambda) in eig.eigenvalues.iter().enumerate() {
                let v = space.scatter(&vectors.column(e).iter().copied().collect::<Vec<_>>());
                let out = model.forward_field(&v)?;
                let factor = pade_step_oracle(lambda.max(0.0), k, order)?.powi(m as i32);
                let expected: NodalField = v.scaled(factor);
                let diff = out.axpy(-1.0, &expected).max_abs();
                worst = worst.max(diff / v.max_abs());
            }
        }
    }
    Ok(CheckResult {
        name: "eigenmode amplification",
        max_error: worst,
        tolerance: 1e-10,
    })
}

pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    Ok(vec![adjoint_identity(seed)?, eigenmode_amplification()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass() {
        for r in run_all(5).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }
}
