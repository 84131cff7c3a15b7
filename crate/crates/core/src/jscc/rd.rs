//! Rate-distortion function of a discrete memoryless source by
//! Blahut–Arimoto at fixed slope, with bisection on the slope to meet the
//! distortion target.

use serde::Serialize;

use super::DmsSource;
use crate::error::{Error, Result};

/// Default absolute tolerance (nats) on the rate.
pub const DEFAULT_RD_TOL: f64 = 1e-12;
const MAX_INNER: usize = 1_000_000;
const MAX_OUTER: usize = 400;
const SLOPE_CEILING: f64 = 1e9;

/// Solved rate-distortion problem at one distortion level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdSolution {
    pub d: f64,
    /// R(d), nats.
    pub rate: f64,
    /// `-R'(d)`, nats per distortion unit.
    pub lambda_s: f64,
    pub p_z_star: Vec<f64>,
    /// d-tilted information per source letter, nats.
    pub tilted: Vec<f64>,
    /// Variance of the d-tilted information, nats^2.
    pub var_tilted: f64,
    pub iterations: usize,
}

/// d-tilted information of source letter `s`.
pub fn d_tilted_info(rd: &RdSolution, s: usize) -> f64 {
    rd.tilted[s]
}

/// State of the fixed-slope iteration.
struct SlopePoint {
    q: Vec<f64>,
    distortion: f64,
    iterations: usize,
}

/// `-log sum_z q(z) exp(-lam (d(s,z) - base))` for each `s`, with `base`
/// the row minimum, returned together with the row minima.
fn log_partition(source: &DmsSource, q: &[f64], lam: f64) -> Vec<(f64, Vec<f64>)> {
    source
        .distortion()
        .iter()
        .map(|row| {
            let base = row.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = row.iter().zip(q).map(|(&d, &qz)| qz * (-lam * (d - base)).exp()).collect();
            (w.iter().sum::<f64>(), w)
        })
        .collect()
}

fn solve_slope(source: &DmsSource, lam: f64, init: &[f64], tol: f64) -> Result<SlopePoint> {
    let p = source.pmf();
    let mut q = init.to_vec();
    for it in 1..=MAX_INNER {
        let parts = log_partition(source, &q, lam);
        // c(z) = sum_s p(s) exp(-lam d(s,z)) / Z(s), using q(z) c(z) = sum_s p(s) w(s,z) / Z(s).
        let mut next = vec![0.0; q.len()];
        for (ps, (zs, w)) in p.iter().zip(&parts) {
            for (nz, wz) in next.iter_mut().zip(w) {
                *nz += ps * wz / zs;
            }
        }
        let mut gap = 0.0f64;
        for (nz, qz) in next.iter().zip(&q) {
            if *qz > 0.0 {
                gap = gap.max((nz / qz).ln());
            }
        }
        q = next;
        if gap <= tol {
            let distortion = expected_distortion(source, &q, lam);
            return Ok(SlopePoint { q, distortion, iterations: it });
        }
    }
    Err(Error::NonConvergence { iterations: MAX_INNER, gap: f64::NAN })
}

fn expected_distortion(source: &DmsSource, q: &[f64], lam: f64) -> f64 {
    let parts = log_partition(source, q, lam);
    source
        .pmf()
        .iter()
        .zip(source.distortion())
        .zip(&parts)
        .map(|((ps, row), (zs, w))| ps * row.iter().zip(w).map(|(d, wz)| d * wz).sum::<f64>() / zs)
        .sum()
}

/// Computes `R(d)` and the d-tilted information for `d_min < d`. Levels at
/// or above `d_max` give the zero-rate solution of the best constant
/// reproduction.
pub fn solve_rate_distortion(source: &DmsSource, d: f64, tol: f64) -> Result<RdSolution> {
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    let (d_min, (z0, d_max)) = (source.d_min(), source.best_constant());
    if !(d > d_min) {
        return Err(Error::InfeasibleDistortion { d, d_min, d_max });
    }
    let nz = source.reproduction_size();
    if d >= d_max {
        let mut p_z_star = vec![0.0; nz];
        p_z_star[z0] = 1.0;
        return Ok(RdSolution {
            d,
            rate: 0.0,
            lambda_s: 0.0,
            p_z_star,
            tilted: vec![0.0; source.alphabet_size()],
            var_tilted: 0.0,
            iterations: 0,
        });
    }
    let inner_tol = (tol * 1e-2).max(1e-15);
    let mut q = vec![1.0 / nz as f64; nz];
    let mut iterations = 0;

    // Distortion decreases in the slope: bracket the target.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    loop {
        let pt = solve_slope(source, hi, &q, inner_tol)?;
        iterations += pt.iterations;
        q = pt.q;
        if pt.distortion < d {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > SLOPE_CEILING {
            return Err(Error::NonConvergence { iterations, gap: pt.distortion - d });
        }
    }
    let mut best: Option<(f64, SlopePoint)> = None;
    for _ in 0..MAX_OUTER {
        let mid = 0.5 * (lo + hi);
        let pt = solve_slope(source, mid, &q, inner_tol)?;
        iterations += pt.iterations;
        q = pt.q.clone();
        let err = pt.distortion - d;
        if err > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let done = err.abs() <= 1e-14 * d.max(1.0) || hi - lo <= 1e-15 * hi;
        best = Some((mid, pt));
        if done {
            break;
        }
    }
    let (lam, pt) = best.expect("at least one bisection step");
    Ok(finish(source, d, lam, pt.q, iterations))
}

fn finish(source: &DmsSource, d: f64, lam: f64, q: Vec<f64>, iterations: usize) -> RdSolution {
    // j_S(s, d) = -log sum_z q(z) exp(lam d - lam d(s,z))
    let parts = log_partition(source, &q, lam);
    let tilted: Vec<f64> = source
        .distortion()
        .iter()
        .zip(&parts)
        .map(|(row, (zs, _))| {
            let base = row.iter().copied().fold(f64::INFINITY, f64::min);
            -zs.ln() + lam * (base - d)
        })
        .collect();
    let p = source.pmf();
    let rate: f64 = p.iter().zip(&tilted).map(|(ps, j)| ps * j).sum();
    let var_tilted = p.iter().zip(&tilted).map(|(ps, j)| ps * (j - rate) * (j - rate)).sum::<f64>().max(0.0);
    RdSolution { d, rate, lambda_s: lam, p_z_star: q, tilted, var_tilted, iterations }
}
