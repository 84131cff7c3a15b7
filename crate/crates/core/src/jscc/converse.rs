//! Converse for lossy joint source-channel coding under a channel cost
//! constraint: every `(k, n, d, eps, beta)` code satisfies
//!
//! ```text
//! eps >= E[ min over admissible types t of P_t[ J_S - I >= gamma | S ] ] - exp(-gamma)
//! ```
//!
//! where `J_S` is the summed d-tilted information of the `k` source letters
//! and `I` the summed channel density over `n` uses against the product of
//! optimal output distributions.

use rayon::prelude::*;
use serde::Serialize;

use super::{DmsSource, RdSolution};
use crate::bounds::{refine_around, BoundOptions, ChannelConverse};
use crate::dmc::{CostCapacitySolution, DmcChannel};
use crate::error::{Error, Result};
use crate::lattice::{unit_mass, LatticeDistribution};

/// Lower bound on the excess-distortion probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsccConverseBound {
    pub epsilon: f64,
    pub gamma: f64,
    /// Source plus channel lattice slack (nats).
    pub slack: f64,
}

/// Converse evaluator for one source, channel and pair of block lengths.
pub struct JsccConverse {
    source_sum: LatticeDistribution,
    channel: ChannelConverse,
    opts: BoundOptions,
}

impl JsccConverse {
    pub fn new(
        source: &DmsSource,
        rd: &RdSolution,
        channel: &DmcChannel,
        cc: &CostCapacitySolution,
        k: usize,
        n: usize,
        opts: &BoundOptions,
    ) -> Result<Self> {
        if rd.tilted.len() != source.alphabet_size() {
            return Err(Error::Precondition("rate-distortion solution does not match the source".into()));
        }
        let source_sum = if k == 0 {
            unit_mass(opts.step)?
        } else {
            let atoms: Vec<(f64, f64)> = rd.tilted.iter().copied().zip(source.pmf().iter().copied()).collect();
            LatticeDistribution::from_atoms(&atoms, opts.step)?.power(k, opts.budget_cells)?
        };
        let channel = ChannelConverse::new(channel, cc, n, opts)?;
        Ok(Self { source_sum, channel, opts: *opts })
    }

    pub fn source_distribution(&self) -> &LatticeDistribution {
        &self.source_sum
    }

    /// Bound at each gamma in `gammas`, before clipping at zero.
    fn raw(&self, gammas: &[f64]) -> Result<(Vec<f64>, f64)> {
        if gammas.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::DomainError("gamma must be positive".into()));
        }
        // The true source sum is at least (atom - slack); the channel cdf is
        // nondecreasing, so evaluating there keeps the bound valid.
        let s_slack = self.source_sum.slack();
        let atoms: Vec<(f64, f64)> = self.source_sum.atoms().collect();
        let mut thresholds = Vec::with_capacity(atoms.len() * gammas.len());
        for &g in gammas {
            thresholds.extend(atoms.iter().map(|&(u, _)| u - s_slack - g));
        }
        let (mins, c_slack) = self.channel.min_lower_cdf(&thresholds)?;
        let vals = mins
            .par_chunks(atoms.len())
            .zip(gammas.par_iter())
            .map(|(row, &g)| row.iter().zip(&atoms).map(|(p, &(_, m))| p * m).sum::<f64>() - (-g).exp())
            .collect();
        Ok((vals, s_slack + c_slack))
    }

    /// Lower bound on the excess-distortion probability at one `gamma`.
    pub fn epsilon(&self, gamma: f64) -> Result<f64> {
        Ok(self.raw(&[gamma])?.0[0].max(0.0))
    }

    /// Bound maximized over the gamma grid.
    pub fn epsilon_optimized(&self) -> Result<JsccConverseBound> {
        let grid = self.opts.gamma_grid;
        let hi = self.source_sum.mean().abs() + 10.0 * self.source_sum.variance().sqrt() + 10.0;
        let mut gammas = grid.initial(hi);
        let (mut vals, mut slack) = self.raw(&gammas)?;
        for _ in 0..grid.refine_rounds {
            let (sorted, best) = sorted_best(&gammas, &vals);
            let extra = refine_around(&sorted, best, grid.refine_points);
            let (more, s) = self.raw(&extra)?;
            slack = slack.max(s);
            gammas.extend(extra);
            vals.extend(more);
        }
        let mut best = 0;
        for i in 1..vals.len() {
            if vals[i] > vals[best] || (vals[i] == vals[best] && gammas[i] < gammas[best]) {
                best = i;
            }
        }
        Ok(JsccConverseBound { epsilon: vals[best].max(0.0), gamma: gammas[best], slack })
    }
}

fn sorted_best(gammas: &[f64], vals: &[f64]) -> (Vec<f64>, usize) {
    let mut idx: Vec<usize> = (0..gammas.len()).collect();
    idx.sort_by(|&a, &b| gammas[a].total_cmp(&gammas[b]));
    let sorted: Vec<f64> = idx.iter().map(|&i| gammas[i]).collect();
    let mut best = 0;
    for (pos, &i) in idx.iter().enumerate() {
        if vals[i] > vals[idx[best]] {
            best = pos;
        }
    }
    (sorted, best)
}

/// Converse lower bound on the excess-distortion probability of any
/// `(k, n, d, eps, beta)` code, at a fixed `gamma`.
pub fn jscc_converse_epsilon(
    source: &DmsSource,
    rd: &RdSolution,
    channel: &DmcChannel,
    cc: &CostCapacitySolution,
    k: usize,
    n: usize,
    gamma: f64,
) -> Result<f64> {
    JsccConverse::new(source, rd, channel, cc, k, n, &BoundOptions::default())?.epsilon(gamma)
}
