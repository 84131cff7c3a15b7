//! Closed-form channels: AWGN with a maximal power constraint and the
//! additive exponential-noise channel with a maximal mean constraint.
//!
//! In both cases the distribution of the summed tilted density does not
//! depend on the codeword once its cost sits exactly at the constraint, so
//! the converse reduces to a one-dimensional tail, evaluated in closed form.

pub mod awgn;
pub mod exp;

pub use awgn::{
    awgn_capacity, awgn_converse_log_m, awgn_dispersion, awgn_tilted_cdf, awgn_tilted_moments,
    awgn_tilted_monte_carlo, AwgnSpec,
};
pub use exp::{
    exp_capacity, exp_converse_log_m, exp_dispersion, exp_idiv_max, exp_idiv_maximizer, exp_output_idiv,
    exp_tilted_cdf, exp_tilted_params, ExpChannelSpec,
};

use serde::Serialize;

use crate::bounds::{check_epsilon, normal::normal_approx_raw, refine_around, BoundCurve, BoundDiagnostics, BoundPoint, GammaGrid, ThirdOrder};
use crate::error::Result;
use crate::special::bisect_crossing;

/// Converse upper bound on `log M*` for an analytic channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticConverse {
    /// nats.
    pub log_m: f64,
    pub gamma: f64,
    /// Set when the tail was taken from a Gaussian approximation rather
    /// than an exact series (very long blocklengths only).
    pub approximate: bool,
    pub notes: Vec<String>,
}

/// Mean and variance estimates from a simulation, with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub draws: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

impl MonteCarloSummary {
    pub(crate) fn from_samples(samples: impl Iterator<Item = f64>) -> Self {
        let (mut n, mut s1, mut s2) = (0usize, 0.0f64, 0.0f64);
        let mut kept = Vec::new();
        for v in samples {
            n += 1;
            s1 += v;
            s2 += v * v;
            kept.push(v);
        }
        let nf = n as f64;
        let mean = s1 / nf;
        let variance = (s2 / nf - mean * mean) * nf / (nf - 1.0);
        let m4 = kept.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
        Self {
            draws: n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: ((m4 - variance * variance) / nf).max(0.0).sqrt(),
        }
    }
}

/// Minimizes `f(gamma)` over the default log-spaced grid on `[lo, hi]`
/// plus local refinement. Returns `(value, gamma)`.
pub(crate) fn minimize_over_gamma(grid: &GammaGrid, hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for g in grid.initial(hi) {
        pts.push((g, f(g)?));
    }
    for _ in 0..grid.refine_rounds {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best = argmin(&pts);
        if !pts[best].1.is_finite() {
            break;
        }
        let gs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        for g in refine_around(&gs, best, grid.refine_points) {
            pts.push((g, f(g)?));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = argmin(&pts);
    Ok((pts[best].1, pts[best].0))
}

fn argmin(pts: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.1 < pts[best].1 {
            best = i;
        }
    }
    best
}

/// Largest `log M` not excluded by the converse
/// `eps >= lower P[S <= log M - gamma] - exp(-gamma)`, where `lower_cdf`
/// bounds the cdf of the summed density from below and `s_max` is a point
/// at which that cdf reaches 1.
pub(crate) fn converse_from_cdf(
    epsilon: f64,
    mean: f64,
    sd: f64,
    s_max: f64,
    capacity_n: f64,
    lower_cdf: impl Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    let grid = GammaGrid::default();
    let hi = capacity_n.max(-(-epsilon).ln_1p() + 5.0);
    let scale = sd.max(1.0);
    minimize_over_gamma(&grid, hi, |g| {
        let p = epsilon + (-g).exp();
        if p >= 1.0 {
            return Ok(f64::INFINITY);
        }
        let mut lo = mean - 8.0 * scale;
        while lower_cdf(lo)? > p {
            lo -= 2.0 * (mean - lo).max(scale);
        }
        Ok(g + bisect_crossing(lo, s_max, p, 1e-13, &lower_cdf)?)
    })
}

/// Converse and normal approximation rows with a channel label.
pub(crate) fn analytic_curve(
    label: &str,
    capacity: f64,
    dispersion: f64,
    n_list: &[usize],
    epsilons: &[f64],
    converse: impl Fn(usize, f64) -> Result<AnalyticConverse> + Sync,
) -> Result<BoundCurve> {
    use rayon::prelude::*;
    let grid: Vec<(usize, f64)> = n_list.iter().flat_map(|&n| epsilons.iter().map(move |&e| (n, e))).collect();
    let rows: Vec<Result<BoundPoint>> = grid
        .par_iter()
        .map(|&(n, e)| {
            let c = converse(n, e)?;
            Ok(BoundPoint {
                n,
                epsilon: e,
                log_m_converse: c.log_m,
                log_m_achievability: None,
                log_m_normal: normal_approx_raw(capacity, dispersion, n, e, ThirdOrder::HalfLogN)?,
                gamma_used: c.gamma,
                diagnostics: BoundDiagnostics { notes: c.notes, ..BoundDiagnostics::default() },
            })
        })
        .collect();
    let mut points = Vec::with_capacity(rows.len());
    for r in rows {
        points.push(r?);
    }
    Ok(BoundCurve { channel: Some(label.to_string()), points, warnings: Vec::new() })
}

/// Converse and normal approximation curve for the AWGN channel.
pub fn awgn_curve(snr: f64, n_list: &[usize], epsilons: &[f64]) -> Result<BoundCurve> {
    let c = awgn_capacity(snr)?;
    let v = awgn_dispersion(snr)?;
    analytic_curve("awgn", c, v, n_list, epsilons, |n, e| awgn_converse_log_m(&AwgnSpec::new(snr, n)?, e))
}

/// Converse and normal approximation curve for the exponential-noise channel.
pub fn exp_curve(beta: f64, n_list: &[usize], epsilons: &[f64]) -> Result<BoundCurve> {
    let c = exp_capacity(beta)?;
    let v = exp_dispersion(beta)?;
    analytic_curve("exp", c, v, n_list, epsilons, |n, e| exp_converse_log_m(&ExpChannelSpec::new(beta, n)?, e))
}
