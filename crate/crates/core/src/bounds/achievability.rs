//! Dependence-testing achievability for a constant composition random code.
//!
//! Codewords are drawn uniformly from the type class of the admissible type
//! `t` closest to the capacity-cost achieving input distribution, so every
//! codeword meets the cost constraint. Against the product output law
//! induced by `t`, the information density of the type-class code is at
//! least `sum_i i(x_i; Y_i) - K_n` with `K_n = n H(t) - log(n choose t)`,
//! which gives
//!
//! ```text
//! eps <= E[ exp(-max(0, sum_i i(x_i; Y_i) - log((M-1)/2) - K_n)) ].
//! ```

use serde::Serialize;

use super::{check_epsilon, log_m_ceiling, nearest_admissible_type, BoundOptions, LetterPowers, TypeComposition};
use crate::dmc::{CostCapacitySolution, DmcChannel};
use crate::error::{Error, Result};
use crate::lattice::LatticeDistribution;

const SEARCH_ITERATIONS: usize = 60;

/// Lower bound on `log M*` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievabilityBound {
    /// nats.
    pub log_m: f64,
    /// Upper bound on the error probability at `log_m`.
    pub epsilon: f64,
    pub slack: f64,
    pub tail_loss: f64,
    /// Composition of the codewords.
    pub code_type: Vec<usize>,
    /// Type-class correction `K_n` (nats).
    pub correction: f64,
}

/// DT bound evaluator for one channel, cost level and blocklength.
pub struct DtAchievability {
    n: usize,
    input_size: usize,
    code_type: TypeComposition,
    correction: f64,
    sum: LatticeDistribution,
}

impl DtAchievability {
    pub fn new(channel: &DmcChannel, sol: &CostCapacitySolution, n: usize, opts: &BoundOptions) -> Result<Self> {
        let code_type = nearest_admissible_type(channel, sol.beta, n, &sol.p_x_star)?;
        let freq = code_type.frequencies();
        let q = channel.output_distribution(&freq);
        let mut bases = Vec::with_capacity(channel.input_size());
        for (x, row) in channel.kernel().iter().enumerate() {
            if code_type.counts[x] == 0 {
                bases.push(None);
                continue;
            }
            let atoms: Vec<(f64, f64)> = row
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| ((w / qy).ln(), w))
                .collect();
            bases.push(Some(LatticeDistribution::from_atoms(&atoms, opts.step)?));
        }
        let powers = LetterPowers::build(&bases, std::slice::from_ref(&code_type), opts.step, opts.budget_cells)?;
        let sum = powers.sum(&code_type.counts)?;
        let correction = code_type.class_correction();
        Ok(Self { n, input_size: channel.input_size(), code_type, correction, sum })
    }

    pub fn code_type(&self) -> &TypeComposition {
        &self.code_type
    }

    /// `K_n` in nats.
    pub fn correction(&self) -> f64 {
        self.correction
    }

    pub fn distribution(&self) -> &LatticeDistribution {
        &self.sum
    }

    /// Threshold `log((M-1)/2) + K_n`; `-inf` for `M = 1`.
    pub fn threshold(&self, log_m: f64) -> f64 {
        if log_m <= 0.0 {
            return f64::NEG_INFINITY;
        }
        // log(M - 1) = log M + log(1 - 1/M)
        log_m + (-(-log_m).exp_m1()).ln() - std::f64::consts::LN_2 + self.correction
    }

    /// Upper bound on the error probability of the best code with
    /// `exp(log_m)` codewords.
    pub fn epsilon(&self, log_m: f64) -> Result<f64> {
        if !(log_m >= 0.0) {
            return Err(Error::DomainError(format!("log M must be nonnegative, got {log_m}")));
        }
        if log_m == 0.0 {
            return Ok(0.0);
        }
        Ok(self.sum.expect_exp_clip(self.threshold(log_m)).1)
    }

    /// Largest `log M` whose bound does not exceed `epsilon`, by bisection.
    pub fn log_m(&self, epsilon: f64) -> Result<AchievabilityBound> {
        check_epsilon(epsilon)?;
        let mut lo = 0.0;
        let mut hi = log_m_ceiling(self.n, self.input_size, epsilon);
        if self.epsilon(hi)? <= epsilon {
            lo = hi;
        } else {
            for _ in 0..SEARCH_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                if self.epsilon(mid)? <= epsilon {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        Ok(AchievabilityBound {
            log_m: lo,
            epsilon: self.epsilon(lo)?,
            slack: self.sum.slack(),
            tail_loss: self.sum.tail_loss(),
            code_type: self.code_type.counts.clone(),
            correction: self.correction,
        })
    }
}

/// DT upper bound on the error probability for `exp(log_m)` codewords.
pub fn dt_achievability_epsilon(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    n: usize,
    log_m: f64,
) -> Result<f64> {
    DtAchievability::new(channel, sol, n, &BoundOptions::default())?.epsilon(log_m)
}

/// DT lower bound on `log M*(n, epsilon, beta)` (nats).
pub fn achievability_log_m(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    n: usize,
    epsilon: f64,
) -> Result<AchievabilityBound> {
    check_epsilon(epsilon)?;
    DtAchievability::new(channel, sol, n, &BoundOptions::default())?.log_m(epsilon)
}
