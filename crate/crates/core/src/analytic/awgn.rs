//! AWGN channel `Y = X + Z`, `Z ~ N(0, I_n)`, with `|x|^2 <= nP`.
//!
//! On the power shell `|x|^2 = nP` the summed tilted density is an affine
//! function of a noncentral chi-square variable:
//!
//! ```text
//! j(x^n; Y^n) = n/2 log(1+P) - P/(2(1+P)) (W - n - n/P),
//! W ~ chi2(n, noncentrality |x|^2 / P^2 = n/P).
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{converse_from_cdf, AnalyticConverse, MonteCarloSummary};
use crate::error::{Error, Result};
use crate::special::{noncentral_chi2_cdf, q_func};

/// Above this blocklength the chi-square tail is replaced by its Gaussian
/// approximation and results are flagged as approximate.
pub const EXACT_MAX_N: usize = 1_000_000;

/// SNR and blocklength of an AWGN evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwgnSpec {
    pub snr: f64,
    pub n: usize,
}

impl AwgnSpec {
    pub fn new(snr: f64, n: usize) -> Result<Self> {
        check_snr(snr)?;
        if n == 0 {
            return Err(Error::DomainError("blocklength must be positive".into()));
        }
        Ok(Self { snr, n })
    }

    fn ncp(&self) -> f64 {
        self.n as f64 / self.snr
    }

    fn slope(&self) -> f64 {
        self.snr / (2.0 * (1.0 + self.snr))
    }

    /// Chi-square level `w` with `j <= t` iff `W >= w`.
    fn chi2_level(&self, t: f64) -> f64 {
        let n = self.n as f64;
        n + self.ncp() + (0.5 * n * self.snr.ln_1p() - t) / self.slope()
    }

    /// Largest value the summed density can take (at `W = 0`).
    fn max_value(&self) -> f64 {
        let n = self.n as f64;
        0.5 * n * self.snr.ln_1p() + self.slope() * (n + self.ncp())
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::DomainError(format!("SNR must be positive and finite, got {snr}")));
    }
    Ok(())
}

/// `C(P) = 1/2 log(1+P)` nats.
pub fn awgn_capacity(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(0.5 * snr.ln_1p())
}

/// `V(P) = P(P+2) / (2(1+P)^2)` nats^2.
pub fn awgn_dispersion(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(0.5 * snr * (snr + 2.0) / (1.0 + snr).powi(2))
}

/// Bounds `(lower, upper)` on `P[j(x^n; Y^n) <= threshold]` for a codeword on
/// the power shell.
pub fn awgn_tilted_cdf(spec: &AwgnSpec, threshold: f64) -> Result<(f64, f64)> {
    let w = spec.chi2_level(threshold);
    if w <= 0.0 {
        return Ok((1.0, 1.0));
    }
    let n = spec.n as f64;
    if spec.n > EXACT_MAX_N {
        let mean = n + spec.ncp();
        let sd = (2.0 * (n + 2.0 * spec.ncp())).sqrt();
        let v = q_func((w - mean) / sd);
        return Ok((v, v));
    }
    let s = noncentral_chi2_cdf(w, n, spec.ncp())?;
    Ok((1.0 - s.upper, 1.0 - s.lower))
}

/// Mean and variance of the summed density, from the moments of the
/// Poisson mixture behind the noncentral chi-square law.
pub fn awgn_tilted_moments(spec: &AwgnSpec) -> (f64, f64) {
    let n = spec.n as f64;
    let mu = 0.5 * spec.ncp();
    // Poisson(mu) moments of K, then W | K ~ chi2(n + 2K).
    let (ek, vk) = (mu, mu);
    let ew = n + 2.0 * ek;
    let vw = 2.0 * (n + 2.0 * ek) + 4.0 * vk;
    let c = spec.slope();
    (0.5 * n * spec.snr.ln_1p() - c * (ew - n - spec.ncp()), c * c * vw)
}

/// Converse upper bound on `log M*` (nats) for equal-power codes.
pub fn awgn_converse_log_m(spec: &AwgnSpec, epsilon: f64) -> Result<AnalyticConverse> {
    let (mean, var) = awgn_tilted_moments(spec);
    let cap = spec.n as f64 * awgn_capacity(spec.snr)?;
    let (log_m, gamma) =
        converse_from_cdf(epsilon, mean, var.sqrt(), spec.max_value(), cap, |t| Ok(awgn_tilted_cdf(spec, t)?.0))?;
    let approximate = spec.n > EXACT_MAX_N;
    let mut notes = vec![format!(
        "codewords on the power shell |x|^2 = nP with n = {}; a maximal-power code of length {} \
         extends to this shell by one extra coordinate",
        spec.n,
        spec.n - 1
    )];
    if approximate {
        notes.push(format!("chi-square tail approximated by a Gaussian for n > {EXACT_MAX_N}"));
    }
    Ok(AnalyticConverse { log_m: log_m.max(0.0), gamma, approximate, notes })
}

/// Simulates the per-codeword summed density with `x = sqrt(P) (1, ..., 1)`,
/// computed directly from the channel output.
pub fn awgn_tilted_monte_carlo(spec: &AwgnSpec, draws: usize, seed: u64) -> MonteCarloSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spec.snr;
    let a = p.sqrt();
    let n = spec.n;
    let samples = (0..draws).map(move |_| {
        let mut s = 0.0;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let y = a + z;
            s += 0.5 * p.ln_1p() - 0.5 * z * z + (y * y - a * a + p) / (2.0 * (1.0 + p));
        }
        s
    });
    MonteCarloSummary::from_samples(samples)
}
