//! The finite-dimensional subproblem
//!
//! ```text
//! minimize  1/2 b^T G b - c^T b + alpha |b|_1
//! ```
//!
//! with a positive semidefinite Gram matrix `G`. The primary solver is a
//! semismooth Newton method on the soft-thresholding fixed-point equation
//! (equivalently a primal-dual active set iteration), globalized by
//! backtracking on the objective. If it stalls, an accelerated proximal
//! gradient method with adaptive restart takes over.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemMethod {
    SemismoothNewton,
    ProximalGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub method: SubproblemMethod,
}

pub fn objective(gram: &DMatrix<f64>, c: &DVector<f64>, alpha: f64, beta: &DVector<f64>) -> f64 {
    0.5 * beta.dot(&(gram * beta)) - c.dot(beta) + alpha * beta.lp_norm(1)
}

/// Largest violation of the first-order conditions at `beta`.
pub fn optimality_residual(gram: &DMatrix<f64>, c: &DVector<f64>, alpha: f64, beta: &DVector<f64>) -> f64 {
    let g = gram * beta - c;
    beta.iter()
        .zip(g.iter())
        .map(|(&b, &gi)| {
            if b == 0.0 {
                (gi.abs() - alpha).max(0.0)
            } else {
                (gi + alpha * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Solves the subproblem from the warm start `warm` to first-order accuracy
/// `tol`, i.e. `|G_i b - c_i| <= alpha + tol` where `b_i = 0` and
/// `|G_i b - c_i + alpha sign(b_i)| <= tol` elsewhere.
pub fn solve_l1_least_squares(
    gram: &DMatrix<f64>,
    c: &DVector<f64>,
    alpha: f64,
    warm: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<SubproblemSolution> {
    let dim = c.len();
    if gram.nrows() != dim || gram.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: gram.nrows(),
        });
    }
    if warm.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: warm.len(),
        });
    }
    let start = DVector::from_column_slice(warm);
    let (beta, ssn_iters, converged) = semismooth_newton(gram, c, alpha, start.clone(), tol, max_iterations);
    if converged {
        return Ok(SubproblemSolution {
            beta: beta.as_slice().to_vec(),
            iterations: ssn_iters,
            method: SubproblemMethod::SemismoothNewton,
        });
    }
    // restart from whichever point is better
    let better = if objective(gram, c, alpha, &beta) <= objective(gram, c, alpha, &start) {
        beta
    } else {
        start
    };
    let (beta, apg_iters, converged) = proximal_gradient(gram, c, alpha, better, tol, max_iterations);
    let iterations = ssn_iters + apg_iters;
    if converged {
        Ok(SubproblemSolution {
            beta: beta.as_slice().to_vec(),
            iterations,
            method: SubproblemMethod::ProximalGradient,
        })
    } else {
        Err(Error::SolverFailure {
            message: format!(
                "subproblem residual {:e} above tolerance {tol:e}",
                optimality_residual(gram, c, alpha, &beta)
            ),
            iterations,
            best: beta.as_slice().to_vec(),
        })
    }
}

fn semismooth_newton(
    gram: &DMatrix<f64>,
    c: &DVector<f64>,
    alpha: f64,
    mut beta: DVector<f64>,
    tol: f64,
    max_iterations: usize,
) -> (DVector<f64>, usize, bool) {
    let dim = c.len();
    let diag_max = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(*v));
    if diag_max <= 0.0 {
        // G = 0: the minimizer is zero whenever |c| <= alpha
        let zero = DVector::zeros(dim);
        let ok = optimality_residual(gram, c, alpha, &zero) <= tol;
        return (zero, 0, ok);
    }
    let gamma = 1.0 / diag_max;
    let mut f = objective(gram, c, alpha, &beta);
    for it in 0..max_iterations {
        if optimality_residual(gram, c, alpha, &beta) <= tol {
            return (beta, it, true);
        }
        let g = gram * &beta - c;
        let p = &beta - gamma * &g;
        let active: Vec<usize> = (0..dim).filter(|&i| p[i].abs() > gamma * alpha).collect();
        let mut target = DVector::zeros(dim);
        if !active.is_empty() {
            let sub = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
            let rhs = DVector::from_iterator(
                active.len(),
                active.iter().map(|&i| c[i] - alpha * p[i].signum()),
            );
            let Some(x) = sub.lu().solve(&rhs) else {
                return (beta, it, false);
            };
            if x.iter().any(|v| !v.is_finite()) {
                return (beta, it, false);
            }
            for (a, &i) in active.iter().enumerate() {
                target[i] = x[a];
            }
        }
        let direction = &target - &beta;
        let mut t = 1.0;
        loop {
            let trial = &beta + t * &direction;
            let ft = objective(gram, c, alpha, &trial);
            if ft <= f + 1e-15 * f.abs().max(1.0) {
                beta = if t == 1.0 { target.clone() } else { trial };
                f = ft;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return (beta, it + 1, false);
            }
        }
    }
    let ok = optimality_residual(gram, c, alpha, &beta) <= tol;
    (beta, max_iterations, ok)
}

/// Power iteration estimate of the largest eigenvalue of a PSD matrix.
fn largest_eigenvalue(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

fn proximal_gradient(
    gram: &DMatrix<f64>,
    c: &DVector<f64>,
    alpha: f64,
    start: DVector<f64>,
    tol: f64,
    max_iterations: usize,
) -> (DVector<f64>, usize, bool) {
    let lipschitz = 1.01 * largest_eigenvalue(gram);
    if lipschitz <= 0.0 {
        let zero = DVector::zeros(c.len());
        let ok = optimality_residual(gram, c, alpha, &zero) <= tol;
        return (zero, 0, ok);
    }
    let step = 1.0 / lipschitz;
    let mut x = start;
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut best = x.clone();
    let mut best_f = objective(gram, c, alpha, &x);
    let budget = max_iterations.max(1) * 200;
    for it in 0..budget {
        let g = gram * &y - c;
        let next = (&y - step * g).map(|v| soft_threshold(v, step * alpha));
        let f_next = objective(gram, c, alpha, &next);
        if f_next < best_f {
            best_f = f_next;
            best = next.clone();
        }
        if optimality_residual(gram, c, alpha, &next) <= tol {
            return (next, it + 1, true);
        }
        // gradient-based adaptive restart
        let restart = (&y - &next).dot(&(&next - &x)) > 0.0;
        let momentum_next = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
        };
        y = if restart {
            next.clone()
        } else {
            &next + ((momentum - 1.0) / momentum_next) * (&next - &x)
        };
        x = next;
        momentum = momentum_next;
    }
    (best, budget, false)
}
