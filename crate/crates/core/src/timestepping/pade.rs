//! Scalar amplification factors of the dG(r) schemes.

use super::DgOrder;
use crate::{Error, Result};

/// Amplification of one dG(r) step for `u' + lambda u = 0`.
///
/// For dG(0) this is `1 / (1 + k lambda)`. For dG(1) the 2x2 slab system is
/// solved directly (no closed form is used), which makes this an
/// independent check on the rational function.
pub fn pade_step_oracle(lambda: f64, k: f64, order: DgOrder) -> Result<f64> {
    if !(lambda >= 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle needs lambda >= 0 and k > 0, got lambda = {lambda}, k = {k}"
        )));
    }
    let s = k * lambda;
    Ok(match order {
        DgOrder::Dg0 => 1.0 / (1.0 + s),
        DgOrder::Dg1 => {
            // [1 + s, 1; -1, 1 + s/3] (u0, u1) = (1, -1), Cramer's rule
            let (a, b, c, d) = (1.0 + s, 1.0, -1.0, 1.0 + s / 3.0);
            let det = a * d - b * c;
            let u0 = (d + b) / det;
            let u1 = (-a - c) / det;
            u0 + u1
        }
    })
}

/// The subdiagonal Padé approximant of `exp(-s)` of matching degree:
/// `1 / (1 + s)` and `(1 - s/3) / (1 + 2s/3 + s^2/6)`.
pub fn subdiagonal_pade(s: f64, order: DgOrder) -> f64 {
    match order {
        DgOrder::Dg0 => 1.0 / (1.0 + s),
        DgOrder::Dg1 => (1.0 - s / 3.0) / (1.0 + 2.0 * s / 3.0 + s * s / 6.0),
    }
}
