//! Input types (compositions) of length-`n` sequences under a maximal cost
//! constraint.

use serde::Serialize;

use crate::dmc::DmcChannel;
use crate::error::{Error, Result};
use crate::special::{ln_multinomial, type_entropy};

/// Default cap on the number of enumerated types.
pub const DEFAULT_TYPE_BUDGET: usize = 10_000_000;

/// Letter counts of a length-`n` input sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeComposition {
    pub counts: Vec<usize>,
    pub mean_cost: f64,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>, cost: &[f64]) -> Self {
        let n: usize = counts.iter().sum();
        let total: f64 = counts.iter().zip(cost).map(|(&c, &b)| c as f64 * b).sum();
        let mean_cost = if n == 0 { 0.0 } else { total / n as f64 };
        Self { counts, mean_cost }
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `n H(t) - log(n choose counts)`, the log-ratio between the uniform
    /// distribution on the type class and the i.i.d. law with the type's
    /// frequencies. Zero for single-letter types.
    pub fn class_correction(&self) -> f64 {
        let n = self.n() as f64;
        (n * type_entropy(&self.counts) - ln_multinomial(&self.counts)).max(0.0)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

fn cost_tolerance(n: usize, beta: f64) -> f64 {
    1e-9 * (n as f64 * beta).abs().max(1.0)
}

fn total_cost(counts: &[usize], cost: &[f64]) -> f64 {
    counts.iter().zip(cost).map(|(&c, &b)| c as f64 * b).sum()
}

/// All types with mean cost at most `beta`, in descending lexicographic order
/// of the count vector.
pub fn enumerate_admissible_types(
    channel: &DmcChannel,
    beta: f64,
    n: usize,
    budget: usize,
) -> Result<Vec<TypeComposition>> {
    if n == 0 {
        return Err(Error::Precondition("blocklength must be at least 1".into()));
    }
    let cost = channel.cost();
    let a = cost.len();
    // Cheapest letter among positions i.. (for pruning).
    let mut min_rest = vec![f64::INFINITY; a + 1];
    for i in (0..a).rev() {
        min_rest[i] = min_rest[i + 1].min(cost[i]);
    }
    let limit = n as f64 * beta + cost_tolerance(n, beta);

    let mut walk = Walk { cost, min_rest, limit, budget, counts: vec![0; a], out: Vec::new() };
    walk.descend(0, n, 0.0)?;
    Ok(walk.out)
}

struct Walk<'a> {
    cost: &'a [f64],
    min_rest: Vec<f64>,
    limit: f64,
    budget: usize,
    counts: Vec<usize>,
    out: Vec<TypeComposition>,
}

impl Walk<'_> {
    /// Position `i` tries counts from high to low, so output is in
    /// descending lexicographic order.
    fn descend(&mut self, i: usize, left: usize, spent: f64) -> Result<()> {
        let last = self.counts.len() - 1;
        if i == last {
            if spent + left as f64 * self.cost[i] <= self.limit {
                if self.out.len() >= self.budget {
                    return Err(Error::BudgetExceeded { needed: self.budget + 1, budget: self.budget });
                }
                self.counts[i] = left;
                self.out.push(TypeComposition::new(self.counts.clone(), self.cost));
                self.counts[i] = 0;
            }
            return Ok(());
        }
        for c in (0..=left).rev() {
            let s = spent + c as f64 * self.cost[i];
            if s + (left - c) as f64 * self.min_rest[i + 1] > self.limit {
                continue;
            }
            self.counts[i] = c;
            self.descend(i + 1, left - c, s)?;
        }
        self.counts[i] = 0;
        Ok(())
    }
}

/// Admissible type closest in Euclidean distance to `target` (a distribution
/// on the input alphabet). Ties go to the type that comes first in
/// descending lexicographic order.
pub fn nearest_admissible_type(channel: &DmcChannel, beta: f64, n: usize, target: &[f64]) -> Result<TypeComposition> {
    if n == 0 {
        return Err(Error::Precondition("blocklength must be at least 1".into()));
    }
    let cost = channel.cost();
    let a = cost.len();
    if target.len() != a {
        return Err(Error::Precondition(format!("target has {} letters, channel has {a}", target.len())));
    }
    let limit = n as f64 * beta + cost_tolerance(n, beta);
    let centre: Vec<f64> = target.iter().map(|p| p * n as f64).collect();

    // Search boxes |c_x - n p_x| <= r. Any type outside the box is farther
    // than r (in count units), so a best candidate within r is optimal.
    let mut r = 1usize;
    loop {
        let lo: Vec<usize> = centre.iter().map(|&c| (c.floor() - r as f64).max(0.0) as usize).collect();
        let hi: Vec<usize> = centre.iter().map(|&c| ((c.ceil() + r as f64) as usize).min(n)).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut counts = vec![0usize; a];
        box_search(0, n, &lo, &hi, &mut counts, &mut |cand| {
            if total_cost(cand, cost) > limit {
                return;
            }
            let d: f64 = cand.iter().zip(&centre).map(|(&c, &m)| (c as f64 - m) * (c as f64 - m)).sum();
            // Candidates arrive in descending lexicographic order, so a
            // strict comparison keeps the first of equally distant types.
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, cand.to_vec()));
            }
        });
        if let Some((d, counts)) = best {
            if d <= (r * r) as f64 || r >= n {
                return Ok(TypeComposition::new(counts, cost));
            }
        } else if r >= n {
            return Err(Error::InfeasibleType { n, beta });
        }
        r = (2 * r).min(n);
    }
}

fn box_search(
    i: usize,
    left: usize,
    lo: &[usize],
    hi: &[usize],
    counts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    let a = counts.len();
    if i == a - 1 {
        if left >= lo[i] && left <= hi[i] {
            counts[i] = left;
            visit(counts);
        }
        return;
    }
    let top = hi[i].min(left);
    if top < lo[i] {
        return;
    }
    for c in (lo[i]..=top).rev() {
        counts[i] = c;
        box_search(i + 1, left - c, lo, hi, counts, visit);
    }
    counts[i] = 0;
}
