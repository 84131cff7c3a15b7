//! Converse: every code with `M` codewords of cost at most `beta` has error
//! probability at least
//!
//! ```text
//! min over admissible types t of P[ sum_i i(x_i; Y_i) <= log M - gamma ] - exp(-gamma)
//! ```
//!
//! for every `gamma > 0`, with the information density taken against the
//! product of optimal output distributions. The probability only depends on
//! the type of the codeword, so the minimum runs over types.
//!
//! On a type `t` the plain density sum equals the tilted sum minus
//! `lambda* (n beta - n b(t))`, so both forms share one lattice distribution
//! per type and differ by a per-type threshold shift.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use super::{check_epsilon, log_m_ceiling, refine_around, BoundOptions, ConverseForm, LetterPowers, TypeComposition};
use crate::dmc::{conditional_tilted_pmf, CostCapacitySolution, DmcChannel};
use crate::error::{Error, Result};
use crate::lattice::LatticeDistribution;

/// Upper bound on `log M*` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseBound {
    /// nats.
    pub log_m: f64,
    /// Threshold offset at which the bound was tightest (nats).
    pub gamma: f64,
    /// Largest location error of any lattice atom (nats).
    pub slack: f64,
    /// Largest dropped probability mass over types.
    pub tail_loss: f64,
    pub types_evaluated: usize,
    /// Counts of the type attaining the minimum at the chosen `gamma`.
    pub binding_type: Vec<usize>,
}

/// Per-type distributions are kept between passes when their total size
/// stays below this many cells.
const CACHE_CELLS: usize = 10_000_000;

/// Converse evaluator for one channel, cost level and blocklength.
pub struct ChannelConverse {
    n: usize,
    input_size: usize,
    capacity: f64,
    types: Vec<TypeComposition>,
    /// Threshold shift per type: `P[plain sum <= s] = P[tilted sum <= s + shift]`.
    shifts: Vec<f64>,
    powers: LetterPowers,
    opts: BoundOptions,
    cache: OnceLock<Option<Vec<LatticeDistribution>>>,
}

/// Running max of per-type quantiles (ties go to the earlier type).
#[derive(Clone)]
struct QuantileAcc {
    q: Vec<f64>,
    arg: Vec<usize>,
    slack: f64,
    tail: f64,
}

impl QuantileAcc {
    fn empty(k: usize) -> Self {
        Self { q: vec![f64::NEG_INFINITY; k], arg: vec![usize::MAX; k], slack: 0.0, tail: 0.0 }
    }

    fn merge(mut self, other: Self) -> Self {
        for i in 0..self.q.len() {
            let take = other.q[i] > self.q[i] || (other.q[i] == self.q[i] && other.arg[i] < self.arg[i]);
            if take {
                self.q[i] = other.q[i];
                self.arg[i] = other.arg[i];
            }
        }
        self.slack = self.slack.max(other.slack);
        self.tail = self.tail.max(other.tail);
        self
    }
}

impl ChannelConverse {
    pub fn new(channel: &DmcChannel, sol: &CostCapacitySolution, n: usize, opts: &BoundOptions) -> Result<Self> {
        let types = super::enumerate_admissible_types(channel, sol.beta, n, opts.type_budget)?;
        if types.is_empty() {
            return Err(Error::InfeasibleType { n, beta: sol.beta });
        }
        let a = channel.input_size();
        let mut bases = Vec::with_capacity(a);
        for x in 0..a {
            if types.iter().any(|t| t.counts[x] > 0) {
                let atoms = conditional_tilted_pmf(channel, sol, x)?;
                bases.push(Some(LatticeDistribution::from_atoms(&atoms, opts.step)?));
            } else {
                bases.push(None);
            }
        }
        let powers = LetterPowers::build(&bases, &types, opts.step, opts.budget_cells)?;
        let nf = n as f64;
        let shifts = types
            .iter()
            .map(|t| match opts.converse_form {
                ConverseForm::Plain => sol.lambda_star * nf * (sol.beta - t.mean_cost),
                ConverseForm::Tilted => 0.0,
            })
            .collect();
        Ok(Self { n, input_size: a, capacity: sol.capacity, types, shifts, powers, opts: *opts, cache: OnceLock::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn types(&self) -> &[TypeComposition] {
        &self.types
    }

    /// Distribution of the summed tilted density for a codeword of type `t`
    /// (the plain density sum is this shifted down by [`shift`](Self::shift)).
    pub fn type_distribution(&self, t: &TypeComposition) -> Result<LatticeDistribution> {
        self.powers.sum(&t.counts)
    }

    fn cached(&self) -> Option<&[LatticeDistribution]> {
        self.cache
            .get_or_init(|| {
                let mut out = Vec::with_capacity(self.types.len());
                let mut total = 0usize;
                for chunk in self.types.chunks(64) {
                    let ds: Vec<Result<LatticeDistribution>> =
                        chunk.par_iter().map(|t| self.type_distribution(t)).collect();
                    for d in ds {
                        let d = d.ok()?;
                        total += d.len();
                        if total > CACHE_CELLS {
                            return None;
                        }
                        out.push(d);
                    }
                }
                Some(out)
            })
            .as_deref()
    }

    /// Maps every type (by index) through `f` and folds the results with
    /// `merge`, which must be associative and commutative so the outcome
    /// does not depend on scheduling.
    fn fold_types<A: Send>(
        &self,
        f: impl Fn(usize, &LatticeDistribution) -> A + Sync,
        identity: impl Fn() -> A + Sync + Send,
        merge: impl Fn(A, A) -> A + Sync + Send,
    ) -> Result<A> {
        match self.cached() {
            Some(ds) => Ok(ds.par_iter().enumerate().map(|(i, d)| f(i, d)).reduce(identity, merge)),
            None => self
                .types
                .par_iter()
                .enumerate()
                .map(|(i, t)| Ok(f(i, &self.type_distribution(t)?)))
                .try_reduce(identity, |a, b| Ok(merge(a, b))),
        }
    }

    /// Threshold shift of type number `i` under the configured form.
    pub fn shift(&self, i: usize) -> f64 {
        self.shifts[i]
    }

    /// `max(0, min_t lower P_t[S <= log_m - gamma] - exp(-gamma))`.
    pub fn epsilon(&self, log_m: f64, gamma: f64) -> Result<f64> {
        let (v, _) = self.epsilon_at(log_m, &[gamma])?;
        Ok(v[0])
    }

    /// Converse bound at `log_m`, maximized over the gamma grid.
    /// Returns `(epsilon, gamma)`.
    pub fn epsilon_optimized(&self, log_m: f64) -> Result<(f64, f64)> {
        let grid = self.opts.gamma_grid;
        let hi = (self.n as f64 * self.capacity).max(log_m).max(5.0);
        let mut gammas = grid.initial(hi);
        let (mut vals, _) = self.epsilon_at(log_m, &gammas)?;
        for _ in 0..grid.refine_rounds {
            let (sorted, best) = sort_and_pick(&gammas, &vals, |a, b| a > b);
            let extra = refine_around(&sorted, best, grid.refine_points);
            let (more, _) = self.epsilon_at(log_m, &extra)?;
            gammas.extend(extra);
            vals.extend(more);
        }
        let (sorted_g, best) = sort_and_pick(&gammas, &vals, |a, b| a > b);
        let value = vals[gammas.iter().position(|&g| g == sorted_g[best]).unwrap()];
        Ok((value, sorted_g[best]))
    }

    fn epsilon_at(&self, log_m: f64, gammas: &[f64]) -> Result<(Vec<f64>, f64)> {
        if gammas.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::DomainError("gamma must be positive".into()));
        }
        if log_m.is_nan() {
            return Err(Error::DomainError("log M is NaN".into()));
        }
        let thresholds: Vec<f64> = gammas.iter().map(|&g| log_m - g).collect();
        let (mins, slack) = self.min_lower_cdf(&thresholds)?;
        let eps = mins.iter().zip(gammas).map(|(m, g)| (m - (-g).exp()).max(0.0)).collect();
        Ok((eps, slack))
    }

    /// For each threshold `s`, the minimum over admissible types of the
    /// lower bound on `P_t[S <= s]` (in the configured form), together with
    /// the largest lattice slack.
    pub fn min_lower_cdf(&self, thresholds: &[f64]) -> Result<(Vec<f64>, f64)> {
        let k = thresholds.len();
        self.fold_types(
            |i, d| {
                let shift = self.shifts[i];
                (thresholds.iter().map(|&s| d.lower_cdf(s + shift)).collect::<Vec<f64>>(), d.slack())
            },
            || (vec![f64::INFINITY; k], 0.0),
            |a, b| (a.0.iter().zip(&b.0).map(|(x, y)| x.min(*y)).collect(), a.1.max(b.1)),
        )
    }

    fn quantiles(&self, ps: &[f64]) -> Result<QuantileAcc> {
        let k = ps.len();
        self.fold_types(
            |i, d| {
                let shift = self.shifts[i];
                QuantileAcc {
                    q: ps.iter().map(|&p| d.lower_cdf_quantile(p) - shift).collect(),
                    arg: vec![i; k],
                    slack: d.slack(),
                    tail: d.tail_loss(),
                }
            },
            || QuantileAcc::empty(k),
            QuantileAcc::merge,
        )
    }

    /// `gamma + max_t sup{ s : lower P_t[S <= s] <= eps + exp(-gamma) }` for
    /// each gamma: the largest `log M` the converse does not exclude at that
    /// gamma.
    fn log_m_at(&self, epsilon: f64, gammas: &[f64]) -> Result<(Vec<f64>, QuantileAcc)> {
        let ps: Vec<f64> = gammas.iter().map(|&g| epsilon + (-g).exp()).collect();
        let acc = self.quantiles(&ps)?;
        let vals = gammas.iter().zip(&acc.q).map(|(g, q)| g + q).collect();
        Ok((vals, acc))
    }

    /// Largest `log M` not excluded by the converse at any gamma of the
    /// (refined) grid.
    pub fn log_m(&self, epsilon: f64) -> Result<ConverseBound> {
        check_epsilon(epsilon)?;
        let grid = self.opts.gamma_grid;
        let hi = (self.n as f64 * self.capacity).max(-(-epsilon).ln_1p() + 5.0);
        let gammas = grid.initial(hi);
        let (mut vals, acc) = self.log_m_at(epsilon, &gammas)?;
        let mut gammas = gammas;
        let mut args = acc.arg.clone();
        let mut slack = acc.slack;
        let mut tail = acc.tail;
        for _ in 0..grid.refine_rounds {
            let (sorted, best) = sort_and_pick(&gammas, &vals, |a, b| a < b);
            if !vals.iter().any(|v| v.is_finite()) {
                break;
            }
            let extra = refine_around(&sorted, best, grid.refine_points);
            let (more, acc) = self.log_m_at(epsilon, &extra)?;
            gammas.extend(extra);
            vals.extend(more);
            args.extend(acc.arg);
            slack = slack.max(acc.slack);
            tail = tail.max(acc.tail);
        }
        self.assemble(epsilon, &gammas, &vals, &args, slack, tail)
    }

    /// As [`log_m`](Self::log_m) on a caller-supplied gamma grid, without
    /// refinement.
    pub fn log_m_on_grid(&self, epsilon: f64, gammas: &[f64]) -> Result<ConverseBound> {
        check_epsilon(epsilon)?;
        if gammas.is_empty() || gammas.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::DomainError("gamma grid must be nonempty and positive".into()));
        }
        let (vals, acc) = self.log_m_at(epsilon, gammas)?;
        self.assemble(epsilon, gammas, &vals, &acc.arg, acc.slack, acc.tail)
    }

    fn assemble(
        &self,
        epsilon: f64,
        gammas: &[f64],
        vals: &[f64],
        args: &[usize],
        slack: f64,
        tail: f64,
    ) -> Result<ConverseBound> {
        let ceiling = log_m_ceiling(self.n, self.input_size, epsilon);
        let mut best = 0;
        for i in 1..vals.len() {
            if vals[i] < vals[best] || (vals[i] == vals[best] && gammas[i] < gammas[best]) {
                best = i;
            }
        }
        let binding_type = self.types.get(args[best]).map(|t| t.counts.clone()).unwrap_or_default();
        Ok(ConverseBound {
            log_m: vals[best].clamp(0.0, ceiling),
            gamma: gammas[best],
            slack,
            tail_loss: tail,
            types_evaluated: self.types.len(),
            binding_type,
        })
    }
}

/// Sorts the grid and returns it with the index (into the sorted grid) of
/// the best value under `better`; ties go to the smaller gamma.
fn sort_and_pick(gammas: &[f64], vals: &[f64], better: impl Fn(f64, f64) -> bool) -> (Vec<f64>, usize) {
    let mut idx: Vec<usize> = (0..gammas.len()).collect();
    idx.sort_by(|&a, &b| gammas[a].total_cmp(&gammas[b]));
    let mut best = 0;
    for (pos, &i) in idx.iter().enumerate() {
        if better(vals[i], vals[idx[best]]) {
            best = pos;
        }
    }
    (idx.iter().map(|&i| gammas[i]).collect(), best)
}

/// Converse lower bound on the error probability of any code with
/// `exp(log_m)` codewords, at a fixed `gamma`.
pub fn converse_epsilon(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    n: usize,
    log_m: f64,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::DomainError(format!("gamma must be positive, got {gamma}")));
    }
    if !(log_m > 0.0) {
        return Err(Error::DomainError(format!("log M must be positive, got {log_m}")));
    }
    ChannelConverse::new(channel, sol, n, &BoundOptions::default())?.epsilon(log_m, gamma)
}

/// Converse upper bound on `log M*(n, epsilon, beta)` (nats).
pub fn converse_log_m(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    n: usize,
    epsilon: f64,
) -> Result<ConverseBound> {
    check_epsilon(epsilon)?;
    ChannelConverse::new(channel, sol, n, &BoundOptions::default())?.log_m(epsilon)
}

/// Converse error bound at `log M = n rate`, `gamma = n alpha` for each `n`.
/// Requires `rate >= C(beta) + 2 alpha`.
pub fn strong_converse_curve(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    rate: f64,
    n_list: &[usize],
    alpha: f64,
    opts: &BoundOptions,
) -> Result<Vec<(usize, f64)>> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("alpha must be positive, got {alpha}")));
    }
    if !(rate >= sol.capacity + 2.0 * alpha) {
        return Err(Error::Precondition(format!(
            "rate {rate} nats is below C(beta) + 2 alpha = {}",
            sol.capacity + 2.0 * alpha
        )));
    }
    n_list
        .iter()
        .map(|&n| {
            let conv = ChannelConverse::new(channel, sol, n, opts)?;
            Ok((n, conv.epsilon(n as f64 * rate, n as f64 * alpha)?))
        })
        .collect()
}
