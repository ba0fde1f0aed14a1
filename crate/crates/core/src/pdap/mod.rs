//! Primal-dual active point solver for
//!
//! ```text
//! minimize  j(q) = 1/2 |S q - u_d|^2 + alpha |q|_TV
//! ```
//!
//! over measures supported on interior mesh nodes.
//!
//! Each outer iteration computes the adjoint `z = S^*(S q_n - u_d)`, adds the
//! interior node maximizing `|z|` to the support, and re-optimizes all
//! coefficients on the enlarged support. The primal-dual gap `Phi` bounds
//! the suboptimality `j(q_n) - min j` and drives the stopping rule.

pub mod subproblem;

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fem::{check_len, NodalField};
use crate::measures::{project_to_nodes, Atom, DiscreteMeasure};
use crate::timestepping::HeatModel;
use crate::{Error, Result};

pub use subproblem::{solve_l1_least_squares, SubproblemMethod, SubproblemSolution};

/// Solver settings.
///
/// The outer loop stops once `Phi(q_n) <= tol * M0`, i.e. once
/// `max |z_n| <= alpha + tol` for post-subproblem iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdapConfig {
    /// Regularization weight. Not read from config files, where `alpha` is a
    /// top-level key.
    #[serde(skip)]
    pub alpha: f64,
    pub tol: f64,
    pub max_outer_iterations: usize,
    pub subproblem_tol: f64,
    pub subproblem_max_iterations: usize,
    pub prune_threshold: f64,
}

impl Default for PdapConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            tol: 1e-8,
            max_outer_iterations: 500,
            subproblem_tol: 1e-11,
            subproblem_max_iterations: 200,
            prune_threshold: 1e-12,
        }
    }
}

impl PdapConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tol > 0.0) || !(self.subproblem_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.prune_threshold < 0.0 {
            return Err(Error::InvalidArgument("prune threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub phi: f64,
    pub objective: f64,
    pub support_size: usize,
    /// Node inserted in this iteration; `None` on the terminal record.
    pub new_node: Option<usize>,
    pub subproblem_iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    /// CSV `n,phi,objective,support_size,new_node,subproblem_iters`; an empty
    /// `new_node` cell marks the terminal record.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,phi,objective,support_size,new_node,subproblem_iters")?;
        for r in &self.records {
            let node = r.new_node.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{},{}",
                r.n, r.phi, r.objective, r.support_size, node, r.subproblem_iterations
            )?;
        }
        Ok(())
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective + slack)
    }
}

/// Iterate of the active point method.
#[derive(Debug, Clone)]
pub struct PdapState {
    /// Active node indices, in insertion order.
    pub active_set: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `S delta_{x_i}` for each active node.
    pub columns: Vec<NodalField>,
    pub objective: f64,
    pub gap: f64,
    pub iteration: usize,
    /// Gap scale `j(q_0) / alpha`.
    pub m0: f64,
}

impl PdapState {
    pub fn measure(&self, model: &HeatModel) -> DiscreteMeasure {
        let nodes = model.space().mesh().nodes();
        DiscreteMeasure::new(
            self.active_set
                .iter()
                .zip(&self.coefficients)
                .map(|(&i, &b)| Atom::new(nodes[i], b))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct PdapOutcome {
    pub measure: DiscreteMeasure,
    pub state: PdapState,
    /// Adjoint `z_0^+` of the returned iterate.
    pub adjoint: NodalField,
    pub log: IterationLog,
    pub converged: bool,
}

/// `j(q) = 1/2 |S q - u_d|^2 + alpha |q|`.
pub fn objective(model: &HeatModel, u_d: &NodalField, q: &DiscreteMeasure, alpha: f64) -> Result<f64> {
    let residual = model.forward_dirac(q)?.axpy(-1.0, u_d);
    let misfit = model.space().l2_norm(&residual)?;
    Ok(0.5 * misfit * misfit + alpha * q.tv_norm())
}

/// `z_0^+ = S^*(S q - u_d)`.
pub fn adjoint_state(model: &HeatModel, u_d: &NodalField, q: &DiscreteMeasure) -> Result<NodalField> {
    let residual = model.forward_dirac(q)?.axpy(-1.0, u_d);
    model.adjoint_dirac(&residual)
}

/// Interior node maximizing `|z|`, lowest index on ties.
pub fn select_candidate(z: &NodalField, interior: &[usize]) -> usize {
    let mut best = interior[0];
    let mut best_val = z.values[best].abs();
    for &i in &interior[1..] {
        let v = z.values[i].abs();
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// General primal-dual gap
///
/// `Phi(q) = max_{|dq| <= M0} <z, q - dq> + alpha |q| - alpha |dq|`
///
/// for `q = sum beta_i delta_{x_i}` at the given nodes. The inner maximum is
/// attained at `dq = 0` or at `dq = -M0 sign(z(x)) delta_x` for `x` maximizing
/// `|z|` over the nodes.
pub fn primal_dual_gap(z: &NodalField, nodes: &[usize], coefficients: &[f64], alpha: f64, m0: f64, interior: &[usize]) -> f64 {
    let pairing: f64 = nodes.iter().zip(coefficients).map(|(&i, &b)| b * z.values[i]).sum();
    let tv: f64 = coefficients.iter().map(|b| b.abs()).sum();
    let zmax = interior.iter().fold(0.0f64, |m, &i| m.max(z.values[i].abs()));
    pairing + alpha * tv + m0 * (zmax - alpha).max(0.0)
}

/// `M0 (max |z| - alpha)`, valid for iterates produced by the subproblem.
pub fn primal_dual_gap_identity(z: &NodalField, alpha: f64, m0: f64, interior: &[usize]) -> f64 {
    let zmax = interior.iter().fold(0.0f64, |m, &i| m.max(z.values[i].abs()));
    m0 * (zmax - alpha)
}

/// Gram matrix and data vector of the subproblem for the given columns.
pub fn subproblem_data(model: &HeatModel, columns: &[NodalField], u_d: &NodalField) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let space = model.space();
    let k = columns.len();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = space.l2_inner(&columns[i], &columns[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let c = DVector::from_iterator(
        k,
        columns.iter().map(|col| space.l2_inner(col, u_d)).collect::<Result<Vec<_>>>()?,
    );
    Ok((gram, c))
}

/// Solves the coefficient subproblem for fixed columns.
pub fn solve_subproblem(
    model: &HeatModel,
    columns: &[NodalField],
    u_d: &NodalField,
    alpha: f64,
    warm: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<SubproblemSolution> {
    let (gram, c) = subproblem_data(model, columns, u_d)?;
    solve_l1_least_squares(&gram, &c, alpha, warm, tol, max_iterations)
}

/// `S delta_{x_node}` for an interior node.
pub fn node_column(model: &HeatModel, node: usize) -> Result<NodalField> {
    let space = model.space();
    let pos = space
        .interior_position(node)
        .ok_or_else(|| Error::InvalidArgument(format!("node {node} is not interior")))?;
    let mut load = vec![0.0; space.interior().len()];
    load[pos] = 1.0;
    Ok(space.scatter(&model.propagate_load(&load)))
}

/// Runs the active point method from `q0` (projected onto interior nodes).
pub fn run(model: &HeatModel, u_d: &NodalField, config: &PdapConfig, q0: &DiscreteMeasure) -> Result<PdapOutcome> {
    config.validate()?;
    let space = model.space();
    check_len(space.num_nodes(), u_d.len())?;
    let interior = space.interior();
    if interior.is_empty() {
        return Err(Error::InvalidArgument("mesh has no interior nodes".into()));
    }
    let alpha = config.alpha;

    // initial support
    let q0 = project_to_nodes(space.mesh(), q0)?;
    let node_of: HashMap<(u64, u64), usize> = interior
        .iter()
        .map(|&i| {
            let p = space.mesh().nodes()[i];
            ((p[0].to_bits(), p[1].to_bits()), i)
        })
        .collect();
    let mut active = Vec::new();
    let mut beta = Vec::new();
    for a in q0.atoms() {
        active.push(node_of[&(a.x[0].to_bits(), a.x[1].to_bits())]);
        beta.push(a.beta);
    }
    let mut columns = active
        .iter()
        .map(|&i| node_column(model, i))
        .collect::<Result<Vec<_>>>()?;
    let (mut gram, mut c) = subproblem_data(model, &columns, u_d)?;

    let evaluate = |columns: &[NodalField], beta: &[f64]| -> Result<(f64, NodalField)> {
        let mut residual = u_d.scaled(-1.0);
        for (col, &b) in columns.iter().zip(beta) {
            residual = residual.axpy(b, col);
        }
        let misfit = space.l2_norm(&residual)?;
        let tv: f64 = beta.iter().map(|b| b.abs()).sum();
        Ok((0.5 * misfit * misfit + alpha * tv, residual))
    };

    let (mut j, residual) = evaluate(&columns, &beta)?;
    let mut z = model.adjoint_dirac(&residual)?;
    let m0 = j / alpha;
    let mut log = IterationLog::default();
    let mut sub_tol = config.subproblem_tol;
    let mut converged = false;
    let mut n = 0;
    let mut phi;
    loop {
        phi = primal_dual_gap(&z, &active, &beta, alpha, m0, interior);
        if phi <= config.tol * m0 {
            converged = true;
            break;
        }
        if n >= config.max_outer_iterations || sub_tol < 1e-15 {
            break;
        }

        let candidate = select_candidate(&z, interior);
        let mut warm = beta.clone();
        if active.contains(&candidate) {
            // gap stems from subproblem inexactness
            sub_tol *= 0.1;
        } else {
            let col = node_column(model, candidate)?;
            let k = columns.len();
            let mut grown = DMatrix::zeros(k + 1, k + 1);
            grown.view_mut((0, 0), (k, k)).copy_from(&gram);
            for (i, other) in columns.iter().enumerate() {
                let v = space.l2_inner(&col, other)?;
                grown[(i, k)] = v;
                grown[(k, i)] = v;
            }
            grown[(k, k)] = space.l2_inner(&col, &col)?;
            gram = grown;
            c = c.push(space.l2_inner(&col, u_d)?);
            columns.push(col);
            active.push(candidate);
            warm.push(0.0);
        }

        let solution = match solve_l1_least_squares(&gram, &c, alpha, &warm, sub_tol, config.subproblem_max_iterations) {
            Ok(s) => s,
            // an inexact step is fine as long as it does not increase j; the
            // gap accounts for the rest
            Err(Error::SolverFailure { iterations, best, .. }) => {
                let warm_v = DVector::from_column_slice(&warm);
                let best_v = DVector::from_column_slice(&best);
                let beta = if subproblem::objective(&gram, &c, alpha, &best_v) <= subproblem::objective(&gram, &c, alpha, &warm_v) {
                    best
                } else {
                    warm.clone()
                };
                sub_tol *= 0.1;
                SubproblemSolution {
                    beta,
                    iterations,
                    method: SubproblemMethod::ProximalGradient,
                }
            }
            Err(e) => return Err(e),
        };
        log.records.push(IterationRecord {
            n,
            phi,
            objective: j,
            support_size: beta.iter().filter(|b| **b != 0.0).count(),
            new_node: Some(candidate),
            subproblem_iterations: solution.iterations,
        });

        // prune vanishing coefficients together with their columns
        let keep: Vec<usize> = (0..active.len())
            .filter(|&i| solution.beta[i].abs() > config.prune_threshold)
            .collect();
        active = keep.iter().map(|&i| active[i]).collect();
        beta = keep.iter().map(|&i| solution.beta[i]).collect();
        columns = keep.iter().map(|&i| columns[i].clone()).collect();
        gram = DMatrix::from_fn(keep.len(), keep.len(), |a, b| gram[(keep[a], keep[b])]);
        c = DVector::from_iterator(keep.len(), keep.iter().map(|&i| c[i]));

        let (j_next, residual) = evaluate(&columns, &beta)?;
        j = j_next;
        z = model.adjoint_dirac(&residual)?;
        n += 1;
    }
    log.records.push(IterationRecord {
        n,
        phi,
        objective: j,
        support_size: active.len(),
        new_node: None,
        subproblem_iterations: 0,
    });

    let state = PdapState {
        active_set: active,
        coefficients: beta,
        columns,
        objective: j,
        gap: phi,
        iteration: n,
        m0,
    };
    Ok(PdapOutcome {
        measure: state.measure(model),
        state,
        adjoint: z,
        log,
        converged,
    })
}
