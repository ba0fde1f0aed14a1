//! Fully discrete cG(1)dG(r) heat solvers, r in {0, 1}.
//!
//! On each slab `(t_{m-1}, t_m]` the discrete state is a polynomial of
//! degree `r` in time with values in the P1 space. The slab equations are
//! obtained by testing the space-time bilinear form with the slab basis; the
//! jump term carries the end value of the previous slab, and on the first
//! slab the initial datum enters through the pairing with the test function
//! trace at `t_0^+`.
//!
//! For dG(1) the slab basis is the shifted Legendre pair `{1, psi}` with
//! `psi = 2 (t - t_{m-1}) / k - 1`. Writing `U = U0 + U1 psi`, testing with
//! `phi` and `phi psi` gives
//!
//! ```text
//! (M + kA) U0 +           M U1 =  c
//!       -M U0 + (M + kA/3) U1 = -c
//! ```
//!
//! where `c` is `M u(t_{m-1}^-)` (or the initial load on the first slab), and
//! the end trace is `U0 + U1`.

mod pade;

use std::sync::Arc;

pub use pade::{pade_step_oracle, subdiagonal_pade};

use crate::fem::{check_len, BandedCholesky, BandedLu, CsrMatrix, FemSpace, NodalField};
use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// Partition of `(0, T]` into `M` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    steps: Vec<f64>,
}

impl TimeGrid {
    /// `M` equal steps; nodes are `T m / M`, steps their differences.
    pub fn uniform(final_time: f64, intervals: usize) -> Result<Self> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if intervals == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        let node = |m: usize| final_time * m as f64 / intervals as f64;
        let steps = (1..=intervals).map(|m| node(m) - node(m - 1)).collect();
        Ok(Self { final_time, steps })
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn num_intervals(&self) -> usize {
        self.steps.len()
    }

    /// The nominal step `T / M`.
    pub fn step(&self) -> f64 {
        self.final_time / self.steps.len() as f64
    }
}

/// Polynomial degree of the time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DgOrder {
    Dg0,
    Dg1,
}

impl DgOrder {
    pub fn from_degree(r: u32) -> Result<Self> {
        match r {
            0 => Ok(Self::Dg0),
            1 => Ok(Self::Dg1),
            _ => Err(Error::InvalidArgument(format!(
                "dG order must be 0 or 1, got {r}"
            ))),
        }
    }

    pub fn degree(self) -> u32 {
        match self {
            Self::Dg0 => 0,
            Self::Dg1 => 1,
        }
    }
}

/// Factorized one-slab propagator on the interior unknowns.
#[derive(Debug, Clone)]
enum SlabSolver {
    /// `(M + kA) U = c`.
    Dg0(BandedCholesky),
    /// Interleaved block system, unknown `2i` is `U0_i`, `2i + 1` is `U1_i`.
    Dg1(BandedLu),
}

impl SlabSolver {
    fn build(mass: &CsrMatrix, stiffness: &CsrMatrix, k: f64, order: DgOrder) -> Result<Self> {
        match order {
            DgOrder::Dg0 => {
                let system = mass.add_scaled(1.0, stiffness, k);
                Ok(Self::Dg0(BandedCholesky::factor(&system)?))
            }
            DgOrder::Dg1 => {
                let mut t = Vec::with_capacity(4 * (mass.nnz() + stiffness.nnz()));
                for (i, j, v) in mass.iter() {
                    t.push((2 * i, 2 * j, v));
                    t.push((2 * i, 2 * j + 1, v));
                    t.push((2 * i + 1, 2 * j, -v));
                    t.push((2 * i + 1, 2 * j + 1, v));
                }
                for (i, j, v) in stiffness.iter() {
                    t.push((2 * i, 2 * j, k * v));
                    t.push((2 * i + 1, 2 * j + 1, k * v / 3.0));
                }
                let system = CsrMatrix::from_triplets(2 * mass.dim(), t);
                Ok(Self::Dg1(BandedLu::factor(&system)?))
            }
        }
    }

    /// End trace of the slab solution for slab data `c`.
    fn apply(&self, c: &[f64]) -> Vec<f64> {
        match self {
            Self::Dg0(chol) => chol.solve(c),
            Self::Dg1(lu) => {
                let rhs: Vec<f64> = c.iter().flat_map(|&v| [v, -v]).collect();
                let x = lu.solve(&rhs);
                x.chunks_exact(2).map(|p| p[0] + p[1]).collect()
            }
        }
    }

    /// Transpose of [`Self::apply`].
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::Dg0(chol) => chol.solve(y),
            Self::Dg1(lu) => {
                let rhs: Vec<f64> = y.iter().flat_map(|&v| [v, v]).collect();
                let w = lu.solve_transpose(&rhs);
                w.chunks_exact(2).map(|p| p[0] - p[1]).collect()
            }
        }
    }
}

/// Discrete heat model on a fixed space, time grid and dG order.
///
/// Immutable after construction; forward and adjoint runs take `&self` and
/// may be issued from several threads.
#[derive(Debug, Clone)]
pub struct HeatModel {
    space: Arc<FemSpace>,
    grid: TimeGrid,
    order: DgOrder,
    mass_interior: CsrMatrix,
    slab: SlabSolver,
}

impl HeatModel {
    pub fn new(space: Arc<FemSpace>, grid: TimeGrid, order: DgOrder) -> Result<Self> {
        let k = grid.step();
        let uniform = grid.steps().iter().all(|s| (s - k).abs() <= 1e-12 * k);
        if !uniform {
            return Err(Error::InvalidArgument("only uniform time grids are supported".into()));
        }
        let mass_interior = space.mass().matrix().restrict(space.interior());
        let stiffness_interior = space.stiffness().matrix().restrict(space.interior());
        let slab = SlabSolver::build(&mass_interior, &stiffness_interior, k, order)?;
        Ok(Self {
            space,
            grid,
            order,
            mass_interior,
            slab,
        })
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<FemSpace> {
        &self.space
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn order(&self) -> DgOrder {
        self.order
    }

    /// Runs all slabs for an interior initial load and returns the end trace
    /// at `T` on interior nodes.
    pub fn propagate_load(&self, load: &[f64]) -> Vec<f64> {
        let mut state = self.slab.apply(load);
        for _ in 1..self.grid.num_intervals() {
            let c = self.mass_interior.matvec(&state);
            state = self.slab.apply(&c);
        }
        state
    }

    /// Transpose of [`Self::propagate_load`].
    pub fn propagate_load_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut w = y.to_vec();
        for _ in 1..self.grid.num_intervals() {
            let t = self.slab.apply_transpose(&w);
            w = self.mass_interior.matvec(&t);
        }
        self.slab.apply_transpose(&w)
    }

    /// `S_kh q`: final state for the initial measure `q`.
    pub fn forward_dirac(&self, q: &DiscreteMeasure) -> Result<NodalField> {
        if q.is_empty() {
            return Ok(NodalField::zeros(self.space.mesh()));
        }
        let load = self.space.delta_load(q)?;
        Ok(self.forward_load(&load))
    }

    /// Final state for a full-length initial load vector `<q, phi_j>`;
    /// boundary entries are ignored.
    pub fn forward_load(&self, load: &[f64]) -> NodalField {
        let end = self.propagate_load(&self.space.gather(load));
        self.space.scatter(&end)
    }

    /// Final state for the initial value `v0`, entering via `(v0, phi)`.
    pub fn forward_field(&self, v0: &NodalField) -> Result<NodalField> {
        check_len(self.space.num_nodes(), v0.len())?;
        let load = self.space.mass().matrix().matvec(&v0.values);
        Ok(self.forward_load(&load))
    }

    /// `S_kh^* g`: nodal values of the initial adjoint trace `z^+_0`, so that
    /// `<q, z> = (S_kh q, g)` for every measure `q`.
    pub fn adjoint_dirac(&self, g: &NodalField) -> Result<NodalField> {
        check_len(self.space.num_nodes(), g.len())?;
        let mg = self.space.mass().matrix().matvec(&g.values);
        let z = self.propagate_load_transpose(&self.space.gather(&mg));
        Ok(self.space.scatter(&z))
    }
}
