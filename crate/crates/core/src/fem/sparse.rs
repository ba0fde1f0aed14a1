//! Compressed sparse row storage.

use std::sync::OnceLock;

use super::banded::BandedCholesky;
use crate::{Error, Result};

/// Square matrix in compressed sparse row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// in insertion order.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.dim)
            .map(|r| {
                let (cols, vals) = self.row(r);
                let ay: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * y[c]).sum();
                x[r] * ay
            })
            .sum()
    }

    /// Principal submatrix on the given ascending index set.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = k;
        }
        let triplets = indices
            .iter()
            .enumerate()
            .flat_map(|(k, &i)| {
                let (cols, vals) = self.row(i);
                let position = &position;
                cols.iter()
                    .zip(vals)
                    .filter(move |(&c, _)| position[c] != usize::MAX)
                    .map(move |(&c, &v)| (k, position[c], v))
            })
            .collect();
        Self::from_triplets(indices.len(), triplets)
    }

    /// Linear combination `a * self + b * other` on the union pattern.
    pub fn add_scaled(&self, a: f64, other: &CsrMatrix, b: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let triplets = self
            .iter()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.iter().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Self::from_triplets(self.dim, triplets)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.iter().map(|(r, c, _)| r.abs_diff(c)).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.iter().all(|(r, c, v)| (v - self.get(c, r)).abs() <= tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (r, c, v) in self.iter() {
            d[r][c] = v;
        }
        d
    }
}

/// Symmetric positive definite sparse matrix with a lazily built, cached
/// Cholesky factorization.
#[derive(Debug)]
pub struct SparseSpd {
    matrix: CsrMatrix,
    factor: OnceLock<std::result::Result<BandedCholesky, String>>,
}

impl Clone for SparseSpd {
    fn clone(&self) -> Self {
        Self::new(self.matrix.clone())
    }
}

impl SparseSpd {
    pub fn new(matrix: CsrMatrix) -> Self {
        Self {
            matrix,
            factor: OnceLock::new(),
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Principal submatrix, e.g. the Dirichlet block on interior nodes.
    pub fn restrict(&self, indices: &[usize]) -> SparseSpd {
        SparseSpd::new(self.matrix.restrict(indices))
    }

    /// Cholesky factor, computed on first use.
    pub fn factor(&self) -> Result<&BandedCholesky> {
        self.factor
            .get_or_init(|| BandedCholesky::factor(&self.matrix).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|msg| Error::Numerical(msg.clone()))
    }

    /// Solves `A x = b` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.len(),
            });
        }
        let factor = self.factor()?;
        let mut x = factor.solve(rhs);
        let ax = self.matrix.matvec(&x);
        let residual: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let correction = factor.solve(&residual);
        for (xi, ci) in x.iter_mut().zip(correction) {
            *xi += ci;
        }
        Ok(x)
    }
}

/// Free-function form of [`SparseSpd::solve`].
pub fn solve_spd(matrix: &SparseSpd, rhs: &[f64]) -> Result<Vec<f64>> {
    matrix.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn restrict_picks_principal_block() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![(0, 0, 1.0), (0, 2, 5.0), (2, 0, 5.0), (2, 2, 9.0), (1, 1, 4.0)],
        );
        let r = m.restrict(&[0, 2]);
        assert_eq!(r.to_dense(), vec![vec![1.0, 5.0], vec![5.0, 9.0]]);
    }

    #[test]
    fn non_spd_is_reported() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let spd = SparseSpd::new(m);
        assert!(matches!(spd.solve(&[1.0, 1.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let spd = SparseSpd::new(CsrMatrix::from_triplets(1, vec![(0, 0, 2.0)]));
        assert!(matches!(
            spd.solve(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
