//! Discretized real-valued distributions with exact convolution and
//! two-sided tail queries.
//!
//! Atoms live on the global lattice `{k * step : k in Z}`, so any two
//! distributions with the same step can be convolved without re-binning.
//! Storage is sparse (sorted cell indices plus masses): per-letter tilted
//! densities of a finite channel produce a handful of atoms per letter,
//! and their n-fold sums stay sparse after dropping negligible cells.
//!
//! Each distribution carries two error terms:
//! - `slack`: every stored atom is within `slack` of the true value it
//!   represents;
//! - `tail_loss`: probability mass that was dropped, at unknown location.
//!
//! Queries return `(lower, upper)` pairs that bracket the exact answer for
//! the unquantized distribution.

use crate::error::{Error, Result};

/// Default lattice step (nats).
pub const DEFAULT_STEP: f64 = 1e-6;
/// Cells with less mass than this are dropped into `tail_loss`.
pub const TRUNCATION_MASS: f64 = 1e-18;
/// Default cap on intermediate support size.
pub const DEFAULT_BUDGET_CELLS: usize = 200_000_000;

const PMF_TOL: f64 = 1e-12;
const MAX_CELL: f64 = 4.0e18;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    step: f64,
    cells: Vec<i64>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    slack: f64,
    tail_loss: f64,
}

impl LatticeDistribution {
    /// Rounds each atom to the nearest lattice point.
    pub fn from_atoms(atoms: &[(f64, f64)], step: f64) -> Result<Self> {
        check_step(step)?;
        if atoms.is_empty() {
            return Err(Error::BadPmf("no atoms".into()));
        }
        let mut total = 0.0;
        let mut pairs = Vec::with_capacity(atoms.len());
        for &(value, p) in atoms {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::BadPmf(format!("probability {p} is not a finite nonnegative number")));
            }
            if !value.is_finite() {
                return Err(Error::BadPmf(format!("atom location {value} is not finite")));
            }
            total += p;
            if p == 0.0 {
                continue;
            }
            let k = (value / step).round();
            if k.abs() > MAX_CELL {
                return Err(Error::BadPmf(format!("atom {value} is too far from the origin for step {step}")));
            }
            pairs.push((k as i64, p));
        }
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::BadPmf(format!("probabilities sum to {total}")));
        }
        pairs.sort_by_key(|&(k, _)| k);
        let (cells, mass) = merge_sorted(&pairs);
        Ok(Self::assemble(step, cells, mass, 0.5 * step, 0.0))
    }

    /// Point mass at the lattice point nearest to `value`.
    pub fn delta(value: f64, step: f64) -> Result<Self> {
        Self::from_atoms(&[(value, 1.0)], step)
    }

    fn unit(step: f64) -> Self {
        Self::assemble(step, vec![0], vec![1.0], 0.0, 0.0)
    }

    fn assemble(step: f64, cells: Vec<i64>, mass: Vec<f64>, slack: f64, tail_loss: f64) -> Self {
        let mut cumulative = Vec::with_capacity(mass.len());
        let mut acc = 0.0;
        for &m in &mass {
            acc += m;
            cumulative.push(acc);
        }
        Self { step, cells, mass, cumulative, slack, tail_loss }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn tail_loss(&self) -> f64 {
        self.tail_loss
    }

    /// Number of stored atoms.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Location of the lowest stored atom.
    pub fn offset(&self) -> f64 {
        self.cells.first().map_or(0.0, |&k| k as f64 * self.step)
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `(location, mass)` pairs in increasing location order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cells.iter().zip(&self.mass).map(move |(&k, &m)| (k as f64 * self.step, m))
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Mean of the stored lattice values (normalized by stored mass).
    pub fn mean(&self) -> f64 {
        let total = self.total_mass();
        self.atoms().map(|(s, m)| s * m).sum::<f64>() / total
    }

    /// Variance of the stored lattice values (normalized by stored mass).
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let total = self.total_mass();
        self.atoms().map(|(s, m)| m * (s - mu) * (s - mu)).sum::<f64>() / total
    }

    /// Distribution of the sum of independent draws, with the default budget.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.convolve_within(other, DEFAULT_BUDGET_CELLS)
    }

    /// As [`convolve`](Self::convolve), failing with `BudgetExceeded` when the
    /// intermediate buffer would exceed `budget` cells.
    pub fn convolve_within(&self, other: &Self, budget: usize) -> Result<Self> {
        if self.step != other.step {
            return Err(Error::StepMismatch(self.step, other.step));
        }
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let (cells, mass) = convolve_sparse(small, large, budget)?;
        let (cells, mass, dropped) = truncate(cells, mass);
        let kept = 1.0 - (1.0 - self.tail_loss) * (1.0 - other.tail_loss);
        Ok(Self::assemble(self.step, cells, mass, self.slack + other.slack, kept + dropped))
    }

    /// `n`-fold self-convolution by binary exponentiation.
    pub fn power(&self, n: usize, budget: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("power requires n >= 1".into()));
        }
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut k = n;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.convolve_within(&base, budget)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.convolve_within(&base, budget)?;
        }
        Ok(result.expect("n >= 1"))
    }

    /// Bracket on `P[S <= t]`.
    ///
    /// `lower` counts atoms that lie at or below `t - slack`; `upper` counts
    /// atoms at or below `t + slack` plus all dropped mass.
    pub fn cdf_bounds(&self, t: f64) -> (f64, f64) {
        let lower = self.mass_at_or_below(t - self.slack);
        let upper = (self.mass_at_or_below(t + self.slack) + self.tail_loss).min(1.0);
        (lower, upper.max(lower))
    }

    /// Pessimistic (lower) side of [`cdf_bounds`](Self::cdf_bounds).
    pub fn lower_cdf(&self, t: f64) -> f64 {
        self.mass_at_or_below(t - self.slack)
    }

    fn mass_at_or_below(&self, s: f64) -> f64 {
        if s.is_nan() {
            return 0.0;
        }
        let step = self.step;
        let idx = self.cells.partition_point(|&k| k as f64 * step <= s);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// `sup { s : lower_cdf(s) <= p }`; `+inf` when the stored mass never
    /// exceeds `p`.
    pub fn lower_cdf_quantile(&self, p: f64) -> f64 {
        let idx = self.cumulative.partition_point(|&c| c <= p);
        match self.cells.get(idx) {
            Some(&k) => k as f64 * self.step + self.slack,
            None => f64::INFINITY,
        }
    }

    /// Bracket on `E[exp(-max(S - t, 0))]`.
    pub fn expect_exp_clip(&self, t: f64) -> (f64, f64) {
        let g = |s: f64| if s <= t { 1.0 } else { (-(s - t)).exp() };
        let mut lower = 0.0;
        let mut upper = 0.0;
        for (s, m) in self.atoms() {
            lower += m * g(s + self.slack);
            upper += m * g(s - self.slack);
        }
        let upper = (upper + self.tail_loss).min(1.0);
        (lower.clamp(0.0, 1.0), upper.max(lower))
    }
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::DomainError(format!("lattice step must be positive, got {step}")));
    }
    Ok(())
}

fn merge_sorted(pairs: &[(i64, f64)]) -> (Vec<i64>, Vec<f64>) {
    let mut cells: Vec<i64> = Vec::with_capacity(pairs.len());
    let mut mass: Vec<f64> = Vec::with_capacity(pairs.len());
    for &(k, m) in pairs {
        match cells.last() {
            Some(&last) if last == k => *mass.last_mut().unwrap() += m,
            _ => {
                cells.push(k);
                mass.push(m);
            }
        }
    }
    (cells, mass)
}

fn truncate(cells: Vec<i64>, mass: Vec<f64>) -> (Vec<i64>, Vec<f64>, f64) {
    if mass.iter().all(|&m| m >= TRUNCATION_MASS) {
        return (cells, mass, 0.0);
    }
    let mut dropped = 0.0;
    let mut out_c = Vec::with_capacity(cells.len());
    let mut out_m = Vec::with_capacity(mass.len());
    for (k, m) in cells.into_iter().zip(mass) {
        if m < TRUNCATION_MASS {
            dropped += m;
        } else {
            out_c.push(k);
            out_m.push(m);
        }
    }
    (out_c, out_m, dropped)
}

/// Sum of independent draws. Chooses between a dense accumulator over the
/// index span and a sort-merge of all atom pairs.
fn convolve_sparse(
    small: &LatticeDistribution,
    large: &LatticeDistribution,
    budget: usize,
) -> Result<(Vec<i64>, Vec<f64>)> {
    if small.is_empty() || large.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let pairs = small.len().saturating_mul(large.len());
    let lo = small.cells[0] + large.cells[0];
    let hi = small.cells[small.len() - 1] + large.cells[large.len() - 1];
    let span = (hi - lo) as u128 + 1;

    if span <= (4 * pairs as u128).max(1024) && span <= budget as u128 {
        let mut acc = vec![0.0f64; span as usize];
        for (&ka, &ma) in small.cells.iter().zip(&small.mass) {
            let shift = (ka + large.cells[0] - lo) as usize;
            for (&kb, &mb) in large.cells.iter().zip(&large.mass) {
                acc[shift + (kb - large.cells[0]) as usize] += ma * mb;
            }
        }
        let mut cells = Vec::new();
        let mut mass = Vec::new();
        for (i, m) in acc.into_iter().enumerate() {
            if m > 0.0 {
                cells.push(lo + i as i64);
                mass.push(m);
            }
        }
        return Ok((cells, mass));
    }

    if pairs > budget {
        return Err(Error::BudgetExceeded { needed: pairs, budget });
    }

    if small.len() <= 16 {
        // Few shifted copies: fold them in with linear merges.
        let mut cells: Vec<i64> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (&ka, &ma) in small.cells.iter().zip(&small.mass) {
            let mut out_c = Vec::with_capacity(cells.len() + large.len());
            let mut out_m = Vec::with_capacity(cells.len() + large.len());
            let (mut i, mut j) = (0usize, 0usize);
            while i < cells.len() || j < large.len() {
                let next_b = large.cells.get(j).map(|&kb| kb + ka);
                match (cells.get(i), next_b) {
                    (Some(&kc), Some(kb)) if kc == kb => {
                        out_c.push(kc);
                        out_m.push(mass[i] + ma * large.mass[j]);
                        i += 1;
                        j += 1;
                    }
                    (Some(&kc), Some(kb)) if kc < kb => {
                        out_c.push(kc);
                        out_m.push(mass[i]);
                        i += 1;
                    }
                    (Some(_), Some(kb)) | (None, Some(kb)) => {
                        out_c.push(kb);
                        out_m.push(ma * large.mass[j]);
                        j += 1;
                    }
                    (Some(&kc), None) => {
                        out_c.push(kc);
                        out_m.push(mass[i]);
                        i += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
            cells = out_c;
            mass = out_m;
        }
        return Ok((cells, mass));
    }

    let mut buf: Vec<(i64, f64)> = Vec::with_capacity(pairs);
    for (&ka, &ma) in small.cells.iter().zip(&small.mass) {
        for (&kb, &mb) in large.cells.iter().zip(&large.mass) {
            buf.push((ka + kb, ma * mb));
        }
    }
    buf.sort_by_key(|&(k, _)| k);
    Ok(merge_sorted(&buf))
}

/// Convolution power table for one base distribution, built by repeated
/// convolution so every count up to `max_count` is available.
#[derive(Debug, Clone)]
pub struct PowerLadder {
    powers: Vec<Option<LatticeDistribution>>,
}

impl PowerLadder {
    /// Stores the powers listed in `wanted` (count 0 is the unit mass).
    ///
    /// `budget` caps both each intermediate convolution and the total number
    /// of cells kept in the table.
    pub fn build(base: &LatticeDistribution, wanted: &[usize], budget: usize) -> Result<Self> {
        let max = wanted.iter().copied().max().unwrap_or(0);
        let mut keep = vec![false; max + 1];
        for &c in wanted {
            keep[c] = true;
        }
        let mut powers: Vec<Option<LatticeDistribution>> = vec![None; max + 1];
        let sparse_request = wanted.len() * 8 < max;
        if sparse_request {
            for &c in wanted {
                if powers[c].is_none() {
                    powers[c] = Some(if c == 0 {
                        LatticeDistribution::unit(base.step)
                    } else {
                        base.power(c, budget)?
                    });
                }
            }
        } else {
            let mut cur = LatticeDistribution::unit(base.step);
            let mut stored = 0usize;
            for c in 0..=max {
                if c > 0 {
                    cur = cur.convolve_within(base, budget)?;
                }
                if keep[c] {
                    stored += cur.len();
                    if stored > budget {
                        return Err(Error::BudgetExceeded { needed: stored, budget });
                    }
                    powers[c] = Some(cur.clone());
                }
            }
        }
        let stored: usize = powers.iter().flatten().map(|p| p.len()).sum();
        if stored > budget {
            return Err(Error::BudgetExceeded { needed: stored, budget });
        }
        Ok(Self { powers })
    }

    pub fn get(&self, count: usize) -> Option<&LatticeDistribution> {
        self.powers.get(count).and_then(|p| p.as_ref())
    }
}

/// Unit mass at zero on the given lattice.
pub fn unit_mass(step: f64) -> Result<LatticeDistribution> {
    check_step(step)?;
    Ok(LatticeDistribution::unit(step))
}
