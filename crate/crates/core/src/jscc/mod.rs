//! Lossy joint source-channel coding over a cost-constrained channel:
//! rate-distortion with d-tilted information, the converse and the
//! Gaussian approximation.

mod approx;
mod converse;
mod rd;
mod source;

pub use approx::{jscc_gaussian_approx, remainder_band, SolveFor};
pub use converse::{jscc_converse_epsilon, JsccConverse, JsccConverseBound};
pub use rd::{d_tilted_info, solve_rate_distortion, RdSolution, DEFAULT_RD_TOL};
pub use source::DmsSource;

use std::io::Write;

use serde::Serialize;

use crate::bounds::BoundOptions;
use crate::dmc::{CostCapacitySolution, DmcChannel};
use crate::error::{Error, Result};
use crate::report::csv_number;

/// One evaluated `(k, n, epsilon)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsccRow {
    pub k: usize,
    pub n: usize,
    pub epsilon: f64,
    pub d: f64,
    pub beta: f64,
    /// Converse lower bound on the excess-distortion probability at `(k, n)`.
    pub converse_eps: f64,
    /// Source length predicted by the Gaussian approximation at `(n, epsilon)`;
    /// `None` when it has no nonnegative solution.
    pub approx_k: Option<f64>,
    /// Width of the remainder band around the approximation (nats).
    pub band_nats: f64,
}

/// Evaluates every `(k, n, epsilon)` combination, ordered by `k`, then `n`,
/// then `epsilon`.
#[allow(clippy::too_many_arguments)]
pub fn jscc_grid(
    source: &DmsSource,
    rd: &RdSolution,
    channel: &DmcChannel,
    cc: &CostCapacitySolution,
    k_list: &[usize],
    n_list: &[usize],
    epsilons: &[f64],
    opts: &BoundOptions,
) -> Result<Vec<JsccRow>> {
    let mut rows = Vec::new();
    for &k in k_list {
        for &n in n_list {
            let conv = JsccConverse::new(source, rd, channel, cc, k, n, opts)?.epsilon_optimized()?;
            for &e in epsilons {
                let approx_k = match jscc_gaussian_approx(rd, cc, n, e, SolveFor::K) {
                    Ok(v) => Some(v),
                    Err(Error::NoPositiveSolution) => None,
                    Err(err) => return Err(err),
                };
                rows.push(JsccRow {
                    k,
                    n,
                    epsilon: e,
                    d: rd.d,
                    beta: cc.beta,
                    converse_eps: conv.epsilon,
                    approx_k,
                    band_nats: remainder_band(cc, n),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with columns `k,n,epsilon,d,beta,converse_eps,approx_k,band_nats`.
pub fn write_jscc_csv(rows: &[JsccRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "k,n,epsilon,d,beta,converse_eps,approx_k,band_nats")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.n,
            csv_number(Some(r.epsilon)),
            csv_number(Some(r.d)),
            csv_number(Some(r.beta)),
            csv_number(Some(r.converse_eps)),
            csv_number(r.approx_k),
            csv_number(Some(r.band_nats))
        )?;
    }
    Ok(())
}
