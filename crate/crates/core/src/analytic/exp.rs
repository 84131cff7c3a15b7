//! Additive exponential-noise channel `Y = X + N`, `N ~ Exp(1)`, inputs
//! `x >= 0` with `sum_i x_i <= n beta`.
//!
//! Given the input, the tilted density is `j = a + c N` with
//! `a = log(1+beta) + beta/(1+beta)` and `c = -beta/(1+beta)`, so its sum
//! over a block is affine in a `Gamma(n, 1)` variable.

use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use super::{converse_from_cdf, AnalyticConverse};
use crate::error::{Error, Result};

/// Allowance for the accuracy of the incomplete-gamma evaluation.
const GAMMA_FP: f64 = 1e-11;

/// Mean constraint and blocklength of an exponential-channel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpChannelSpec {
    pub beta: f64,
    pub n: usize,
}

impl ExpChannelSpec {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        check_beta(beta)?;
        if n == 0 {
            return Err(Error::DomainError("blocklength must be positive".into()));
        }
        Ok(Self { beta, n })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::DomainError(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

/// `C(beta) = log(1+beta)` nats.
pub fn exp_capacity(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(beta.ln_1p())
}

/// `V(beta) = beta^2 / (1+beta)^2` nats^2.
pub fn exp_dispersion(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok((beta / (1.0 + beta)).powi(2))
}

/// `(intercept, coefficient)` with `j = intercept + coefficient * N`.
pub fn exp_tilted_params(beta: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    let lam = beta / (1.0 + beta);
    Ok((beta.ln_1p() + lam, -lam))
}

/// Bounds `(lower, upper)` on `P[sum_i j(x_i; Y_i) <= threshold]`.
pub fn exp_tilted_cdf(spec: &ExpChannelSpec, threshold: f64) -> Result<(f64, f64)> {
    let (a, c) = exp_tilted_params(spec.beta)?;
    let n = spec.n as f64;
    // sum j <= s  iff  G >= (n a - s) / |c|
    let g = (n * a - threshold) / -c;
    if g <= 0.0 {
        return Ok((1.0, 1.0));
    }
    let v = gamma_ur(n, g);
    let fp = GAMMA_FP * v + 1e-300;
    Ok(((v - fp).max(0.0), (v + fp).min(1.0)))
}

/// Converse upper bound on `log M*` (nats).
pub fn exp_converse_log_m(spec: &ExpChannelSpec, epsilon: f64) -> Result<AnalyticConverse> {
    let (a, c) = exp_tilted_params(spec.beta)?;
    let n = spec.n as f64;
    let cap = n * exp_capacity(spec.beta)?;
    let (log_m, gamma) =
        converse_from_cdf(epsilon, cap, -c * n.sqrt(), n * a, cap, |t| Ok(exp_tilted_cdf(spec, t)?.0))?;
    let notes = vec![format!(
        "codewords with total cost exactly n beta, n = {}; a maximal-cost code of length {} \
         extends to this shell by one extra coordinate",
        spec.n,
        spec.n - 1
    )];
    Ok(AnalyticConverse { log_m: log_m.max(0.0), gamma, approximate: false, notes })
}

/// Output log-likelihood ratio `L(t, n)` at output sum `t`, for inputs
/// uniform on the simplex `sum x_i = n beta` against the capacity-achieving
/// output.
///
/// Defined for `t > n beta`; at `n = 1` the last term vanishes and
/// `t = beta` is also accepted.
pub fn exp_output_idiv(t: f64, n: usize, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::DomainError("blocklength must be positive".into()));
    }
    let nf = n as f64;
    let nb = nf * beta;
    let in_domain = if n == 1 { t >= nb } else { t > nb };
    if !in_domain || !t.is_finite() {
        return Err(Error::DomainError(format!("output sum {t} outside the support (> {nb})")));
    }
    let tail = if n == 1 { 0.0 } else { (nf - 1.0) * (-nb / t).ln_1p() };
    Ok(nb - beta / (1.0 + beta) * t + nf * beta.ln_1p() + tail)
}

/// Maximizer `t*(n)` of `L(., n)`.
pub fn exp_idiv_maximizer(n: usize, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::DomainError("blocklength must be positive".into()));
    }
    let nf = n as f64;
    Ok(0.5 * (nf * beta + nf.sqrt() * (nf * beta * beta + 4.0 * (nf - 1.0) * (1.0 + beta)).sqrt()))
}

/// `max_{n,t} L(t, n) = beta/(1+beta) + log(1+beta)`.
pub fn exp_idiv_max(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(beta / (1.0 + beta) + beta.ln_1p())
}
