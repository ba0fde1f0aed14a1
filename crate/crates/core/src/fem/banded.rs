//! Banded direct factorizations.
//!
//! With row-by-row node numbering on a structured mesh the P1 matrices have
//! bandwidth `n`, so a band factorization is a sparse direct solver with
//! fill confined to the band.

use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Cholesky factor `A = L L^T` stored as the lower band.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    dim: usize,
    bw: usize,
    // row i holds L[i][i-bw ..= i] at offsets 0..=bw
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let dim = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; dim * w];
        for (r, c, v) in a.iter() {
            if c <= r {
                band[r * w + (c + bw - r)] = v;
            }
        }
        for i in 0..dim {
            let i0 = i.saturating_sub(bw);
            for j in i0..=i {
                let j0 = j.saturating_sub(bw).max(i0);
                let mut s = band[i * w + (j + bw - i)];
                for k in j0..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { dim, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.dim {
            let row = &self.band[i * w..(i + 1) * w];
            let i0 = i.saturating_sub(bw);
            let mut s = x[i];
            for k in i0..i {
                s -= row[k + bw - i] * x[k];
            }
            x[i] = s / row[bw];
        }
        for i in (0..self.dim).rev() {
            x[i] /= self.band[i * w + bw];
            let xi = x[i];
            let i0 = i.saturating_sub(bw);
            let row = &self.band[i * w..(i + 1) * w];
            for k in i0..i {
                x[k] -= row[k + bw - i] * xi;
            }
        }
    }
}

/// LU factorization without pivoting, `A = L U` with unit lower `L`.
///
/// Only safe for matrices whose symmetric part is positive definite (every
/// leading block is then nonsingular); the dG(1) slab matrices are of this
/// kind.
#[derive(Debug, Clone)]
pub struct BandedLu {
    dim: usize,
    bw: usize,
    // row i holds A[i][i-bw ..= i+bw] at offsets 0..=2bw
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let dim = a.dim();
        let bw = a.bandwidth();
        let w = 2 * bw + 1;
        let mut band = vec![0.0; dim * w];
        for (r, c, v) in a.iter() {
            band[r * w + (c + bw - r)] = v;
        }
        let scale = band.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..dim {
            let pivot = band[k * w + bw];
            if pivot.abs() <= 1e-14 * scale || !pivot.is_finite() {
                return Err(Error::Numerical(format!(
                    "vanishing pivot {pivot:e} at row {k}"
                )));
            }
            let hi = (k + bw + 1).min(dim);
            for i in k + 1..hi {
                let l = band[i * w + (k + bw - i)] / pivot;
                band[i * w + (k + bw - i)] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..hi {
                    band[i * w + (j + bw - i)] -= l * band[k * w + (j + bw - k)];
                }
            }
        }
        Ok(Self { dim, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * (2 * self.bw + 1) + (j + self.bw - i)]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.dim, self.bw);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.dim, self.bw);
        let mut x = rhs.to_vec();
        // U^T y = b
        for i in 0..n {
            x[i] /= self.at(i, i);
            let xi = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                x[k] -= self.at(i, k) * xi;
            }
        }
        // L^T x = y
        for i in (0..n).rev() {
            let xi = x[i];
            for k in i.saturating_sub(bw)..i {
                x[k] -= self.at(i, k) * xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, bw: usize, symmetric: bool, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 * bw as f64 + 2.0));
            for j in i.saturating_sub(bw)..i {
                if rng.gen_bool(0.6) {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.push((i, j, v));
                    let u = if symmetric { v } else { rng.gen_range(-1.0..1.0) };
                    t.push((j, i, u));
                }
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.matvec(x);
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        r.sqrt() / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn cholesky_solves_random_band() {
        let a = random_banded(60, 7, true, 3);
        let f = BandedCholesky::factor(&a).unwrap();
        let b: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        assert!(residual(&a, &f.solve(&b), &b) < 1e-14);
    }

    #[test]
    fn lu_solves_and_transposes() {
        let a = random_banded(50, 5, false, 11);
        let f = BandedLu::factor(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| 1.0 + (i as f64).cos()).collect();
        assert!(residual(&a, &f.solve(&b), &b) < 1e-14);

        let at = CsrMatrix::from_triplets(50, a.iter().map(|(r, c, v)| (c, r, v)).collect());
        assert!(residual(&at, &f.solve_transpose(&b), &b) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 1.0)]);
        assert!(BandedCholesky::factor(&a).is_err());
    }
}
