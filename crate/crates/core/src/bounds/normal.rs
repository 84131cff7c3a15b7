//! Gaussian approximation to `log M*`.

use crate::dmc::CostCapacitySolution;
use crate::error::Result;
use crate::special::q_inv;

/// Third-order term of the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThirdOrder {
    None,
    /// `+ 1/2 log n`.
    #[default]
    HalfLogN,
}

/// `n C - sqrt(n V) Q^{-1}(eps)` plus the optional third-order term (nats).
pub fn normal_approx_raw(capacity: f64, dispersion: f64, n: usize, epsilon: f64, third: ThirdOrder) -> Result<f64> {
    super::check_epsilon(epsilon)?;
    let nf = n as f64;
    let spread = if dispersion > 0.0 { (nf * dispersion).sqrt() * q_inv(epsilon)? } else { 0.0 };
    let extra = match third {
        ThirdOrder::None => 0.0,
        ThirdOrder::HalfLogN => 0.5 * nf.ln(),
    };
    Ok(nf * capacity - spread + extra)
}

/// Gaussian approximation from a capacity-cost solution.
pub fn normal_approx(sol: &CostCapacitySolution, n: usize, epsilon: f64, third: ThirdOrder) -> Result<f64> {
    normal_approx_raw(sol.capacity, sol.dispersion, n, epsilon, third)
}
