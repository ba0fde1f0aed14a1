//! Reproducible Gaussian noise.
//!
//! Samples come from ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`),
//! converted to uniforms in `[0, 1)` with 53 random bits and then to standard
//! normals by the Box-Muller transform, two normals per pair of uniforms:
//! `r = sqrt(-2 ln(1 - u1))`, `z0 = r cos(2 pi u2)`, `z1 = r sin(2 pi u2)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `len` independent standard normal samples.
pub fn standard_normals(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len + 1);
    while out.len() < len {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        out.push(r * (TAU * u2).cos());
        out.push(r * (TAU * u2).sin());
    }
    out.truncate(len);
    out
}
