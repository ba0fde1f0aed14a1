//! Sparse initial-data identification for the heat equation.
//!
//! The unknown initial state is a finite sum of Dirac measures on the unit
//! square. It is recovered from a final-time observation by minimizing a
//! tracking functional plus a total-variation penalty over measures. The
//! state equation is discretized with P1 finite elements in space and
//! discontinuous Galerkin dG(0)/dG(1) in time, and the measure-space problem
//! is solved with the primal-dual active point method.
//!
//! Module map:
//!
//! * [`mesh`]: Friedrichs-Keller triangulations of the unit square.
//! * [`fem`]: P1 mass/stiffness assembly, banded direct solvers, point
//!   evaluation and L2 projection.
//! * [`timestepping`]: the control-to-state operator and its adjoint.
//! * [`measures`]: atomic measures, nodal projection, lumping and support
//!   matching.
//! * [`pdap`]: the active point solver and its finite-dimensional subproblem.
//! * [`experiments`]: reconstruction and convergence-order studies.
//! * [`cli`]: the command-line front end used by the `sparse-heat` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod measures;
pub mod mesh;
pub mod pdap;
pub mod timestepping;

pub use error::{Error, Result};
pub use fem::{FemSpace, NodalField, SparseSpd};
pub use measures::{Atom, DiscreteMeasure, SupportMatch};
pub use mesh::{BaryLocation, TriMesh};
pub use pdap::{IterationLog, PdapConfig, PdapOutcome};
pub use timestepping::{DgOrder, HeatModel, TimeGrid};

/// A point in the closed unit square.
pub type Point = [f64; 2];
