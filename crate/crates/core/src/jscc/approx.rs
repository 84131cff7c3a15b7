use serde::Serialize;

use super::RdSolution;
use crate::bounds::check_epsilon;
use crate::dmc::CostCapacitySolution;
use crate::error::{Error, Result};
use crate::special::q_inv;

/// Quantity solved for by [`jscc_gaussian_approx`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveFor {
    /// Source block length `k`.
    K,
    /// Ratio `k / n` (source symbols per channel use).
    Rate,
}

/// Solves `n C - k R = sqrt(n V + k Vs) Qinv(eps)` for `k`, dropping the
/// remainder term.
///
/// Squaring gives `R^2 k^2 - (2nCR + q^2 Vs) k + (n^2 C^2 - q^2 n V) = 0`
/// with `q = Qinv(eps)`; `nC/R` lies between the roots, and the sign of `q`
/// picks the admissible one.
pub fn jscc_gaussian_approx(
    rd: &RdSolution,
    cc: &CostCapacitySolution,
    n: usize,
    epsilon: f64,
    solve_for: SolveFor,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(cc.capacity > 0.0) {
        return Err(Error::Precondition("capacity-cost must be positive".into()));
    }
    if !(rd.rate > 0.0) {
        return Err(Error::Precondition("rate-distortion must be positive".into()));
    }
    let nf = n as f64;
    let (c, v, r, vs) = (cc.capacity, cc.dispersion, rd.rate, rd.var_tilted);
    let q = q_inv(epsilon)?;
    let k = if q == 0.0 {
        nf * c / r
    } else {
        let b = 2.0 * nf * c * r + q * q * vs;
        let disc = 4.0 * nf * c * r * q * q * vs + q.powi(4) * vs * vs + 4.0 * r * r * q * q * nf * v;
        let root = b + disc.max(0.0).sqrt();
        if q > 0.0 {
            // Smaller root, in the cancellation-free form.
            let constant = nf * nf * c * c - q * q * nf * v;
            if constant < 0.0 {
                return Err(Error::NoPositiveSolution);
            }
            2.0 * constant / root
        } else {
            root / (2.0 * r * r)
        }
    };
    Ok(match solve_for {
        SolveFor::K => k,
        SolveFor::Rate => k / nf,
    })
}

/// Width (nats) of the band attributed to the omitted remainder: the
/// larger of its known lower order `1/2 log n` and
/// `(1/2 |supp P_X*|) log n` on the upper side.
pub fn remainder_band(cc: &CostCapacitySolution, n: usize) -> f64 {
    let supp = cc.support().len() as f64;
    0.5f64.max(0.5 * supp) * (n.max(1) as f64).ln()
}
