//! Finite-blocklength bounds on the maximal code size of a discrete
//! memoryless channel under a maximal per-codeword cost constraint.
//!
//! - [`converse`]: a lower bound on the error probability of any code with
//!   `M` codewords, evaluated exactly over input types and turned into an
//!   upper bound on `log M*`.
//! - [`achievability`]: the dependence-testing bound for a constant
//!   composition random code, giving a lower bound on `log M*`.
//! - [`normal`]: the Gaussian approximation with optional `1/2 log n` term.

pub mod achievability;
pub mod converse;
pub mod curve;
pub mod normal;
pub mod types;

pub use achievability::{achievability_log_m, dt_achievability_epsilon, AchievabilityBound, DtAchievability};
pub use converse::{converse_epsilon, converse_log_m, strong_converse_curve, ChannelConverse, ConverseBound};
pub use curve::{bound_curve, BoundCurve, BoundDiagnostics, BoundPoint};
pub use normal::{normal_approx, ThirdOrder};
pub use types::{enumerate_admissible_types, nearest_admissible_type, TypeComposition, DEFAULT_TYPE_BUDGET};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDistribution, PowerLadder, DEFAULT_BUDGET_CELLS, DEFAULT_STEP};

/// Search grid for the auxiliary threshold `gamma` of the converse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGrid {
    /// Smallest grid point (nats).
    pub lo: f64,
    /// Number of log-spaced points in the initial grid.
    pub points: usize,
    /// Rounds of local refinement around the current best point.
    pub refine_rounds: usize,
    /// Points inserted per refinement round.
    pub refine_points: usize,
}

impl Default for GammaGrid {
    fn default() -> Self {
        Self { lo: 1e-4, points: 64, refine_rounds: 3, refine_points: 16 }
    }
}

impl GammaGrid {
    /// Initial log-spaced grid on `[lo, hi]`.
    pub fn initial(&self, hi: f64) -> Vec<f64> {
        log_spaced(self.lo, hi.max(self.lo * 2.0), self.points.max(2))
    }
}

pub(crate) fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Interior points strictly between the neighbours of the best grid point.
pub fn refine_around(sorted: &[f64], best: usize, points: usize) -> Vec<f64> {
    let lo = if best == 0 { sorted[0] * 0.5 } else { sorted[best - 1] };
    let hi = if best + 1 == sorted.len() { sorted[best] * 2.0 } else { sorted[best + 1] };
    let mut out = log_spaced(lo, hi, points + 2);
    out.pop();
    out.remove(0);
    out
}

/// Density whose per-type tail drives the converse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConverseForm {
    /// Plain information density `log W(y|x)/P_Y*(y)`, minimized over
    /// admissible types only.
    #[default]
    Plain,
    /// Cost-tilted density `j(x;y,beta)`. Never larger than the plain form
    /// on admissible types, hence a weaker (still valid) bound.
    Tilted,
}

/// Numerical settings shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    /// Lattice step (nats).
    pub step: f64,
    /// Cap on lattice cells per convolution and per power table.
    pub budget_cells: usize,
    /// Cap on the number of enumerated input types.
    pub type_budget: usize,
    pub gamma_grid: GammaGrid,
    pub converse_form: ConverseForm,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            budget_cells: DEFAULT_BUDGET_CELLS,
            type_budget: DEFAULT_TYPE_BUDGET,
            gamma_grid: GammaGrid::default(),
            converse_form: ConverseForm::default(),
        }
    }
}

/// Upper end of the `log M` search bracket: `n log|A|` plus a margin that
/// also covers `log(1/(1-eps))`, beyond which any `M` is trivially excluded.
pub fn log_m_ceiling(n: usize, input_size: usize, epsilon: f64) -> f64 {
    n as f64 * (input_size as f64).ln() + 5f64.max(-(-epsilon).ln_1p())
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Per-letter convolution powers, composed into the distribution of a sum
/// over a whole type.
pub(crate) struct LetterPowers {
    ladders: Vec<Option<PowerLadder>>,
    step: f64,
    budget: usize,
}

impl LetterPowers {
    /// `bases[x]` is the per-letter distribution (None for letters that no
    /// type uses).
    pub(crate) fn build(
        bases: &[Option<LatticeDistribution>],
        types: &[TypeComposition],
        step: f64,
        budget: usize,
    ) -> Result<Self> {
        let mut ladders = Vec::with_capacity(bases.len());
        for (x, base) in bases.iter().enumerate() {
            let mut wanted: Vec<usize> = types.iter().map(|t| t.counts[x]).filter(|&c| c > 0).collect();
            wanted.sort_unstable();
            wanted.dedup();
            ladders.push(match (base, wanted.is_empty()) {
                (Some(b), false) => Some(PowerLadder::build(b, &wanted, budget)?),
                _ => None,
            });
        }
        Ok(Self { ladders, step, budget })
    }

    /// Distribution of the sum over one sequence of the given type.
    pub(crate) fn sum(&self, counts: &[usize]) -> Result<LatticeDistribution> {
        let mut acc: Option<LatticeDistribution> = None;
        for (x, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let power = self.ladders[x]
                .as_ref()
                .and_then(|l| l.get(c))
                .ok_or_else(|| Error::Precondition(format!("no power table for letter {x}, count {c}")))?;
            acc = Some(match acc {
                None => power.clone(),
                Some(a) => a.convolve_within(power, self.budget)?,
            });
        }
        match acc {
            Some(a) => Ok(a),
            None => crate::lattice::unit_mass(self.step),
        }
    }
}

/// Checks whether the values of a per-letter density (over all letters and
/// outputs given) lie on a common arithmetic progression. Returns the span
/// when they do.
pub fn lattice_span(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = 1e-9 * scale;
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if v.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let mut span = diffs[0];
    for &d in &diffs[1..] {
        span = approx_gcd(span, d, tol);
        if span <= 1e-6 * scale {
            return None;
        }
    }
    let on_grid = v.iter().all(|x| {
        let k = (x - v[0]) / span;
        (k - k.round()).abs() * span <= 10.0 * tol
    });
    on_grid.then_some(span)
}

fn approx_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = a % b;
        a = b;
        b = if b - r <= tol { 0.0 } else { r };
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_of_integer_multiples() {
        let s = lattice_span(&[0.3, 0.9, 1.5, 0.6]).unwrap();
        assert!((s - 0.3).abs() < 1e-9);
    }

    #[test]
    fn incommensurate_values_have_no_span() {
        assert!(lattice_span(&[0.0, 1.0, std::f64::consts::SQRT_2]).is_none());
    }

    #[test]
    fn refinement_points_lie_between_neighbours() {
        let g = [1.0, 2.0, 4.0];
        let r = refine_around(&g, 1, 5);
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|&x| x > 1.0 && x < 4.0));
    }
}
