//! Bound curves over grids of blocklengths and error probabilities, and
//! their CSV and plot-data renderings.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{lattice_span, normal_approx, BoundOptions, ChannelConverse, DtAchievability, ThirdOrder};
use crate::dmc::{tilted_density, CostCapacitySolution, DmcChannel};
use crate::error::Result;
use crate::report::csv_number;
use crate::units::Units;

type Series = (&'static str, fn(&BoundPoint) -> Option<f64>);

/// Bookkeeping for one bound point.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundDiagnostics {
    /// Largest lattice location error over the evaluated sums (nats).
    pub slack: f64,
    /// Largest probability mass dropped from any lattice sum.
    pub tail_loss: f64,
    pub types_evaluated: usize,
    /// Type attaining the converse minimum.
    pub binding_type: Vec<usize>,
    /// Composition of the achievability code.
    pub code_type: Vec<usize>,
    /// Type-class correction used by the achievability bound (nats).
    pub correction: f64,
    pub notes: Vec<String>,
}

/// Bounds on `log M*(n, epsilon, beta)`, all in nats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub n: usize,
    pub epsilon: f64,
    pub log_m_converse: f64,
    pub log_m_achievability: Option<f64>,
    pub log_m_normal: f64,
    pub gamma_used: f64,
    pub diagnostics: BoundDiagnostics,
}

/// A list of bound points with an optional channel label (used by the
/// analytic channels) and curve-level warnings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundCurve {
    pub channel: Option<String>,
    pub points: Vec<BoundPoint>,
    pub warnings: Vec<String>,
}

impl BoundCurve {
    /// CSV with a header row; `log M` columns in `units`.
    pub fn write_csv(&self, mut out: impl Write, units: Units) -> std::io::Result<()> {
        let u = units.suffix();
        let label = if self.channel.is_some() { "channel," } else { "" };
        writeln!(
            out,
            "{label}n,epsilon,converse_{u},achievability_{u},normal_approx_{u},gamma_nats,slack_nats,types_evaluated"
        )?;
        for p in &self.points {
            let prefix = self.channel.as_ref().map(|c| format!("{c},")).unwrap_or_default();
            writeln!(
                out,
                "{prefix}{},{},{},{},{},{},{},{}",
                p.n,
                csv_number(Some(p.epsilon)),
                csv_number(Some(units.from_nats(p.log_m_converse))),
                csv_number(p.log_m_achievability.map(|v| units.from_nats(v))),
                csv_number(Some(units.from_nats(p.log_m_normal))),
                csv_number(Some(p.gamma_used)),
                csv_number(Some(p.diagnostics.slack)),
                p.diagnostics.types_evaluated
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, units: Units) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, units).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Rate-versus-blocklength series (`log M / n` in `units`), one block
    /// per bound and error probability, separated by blank lines.
    pub fn write_plot_data(&self, mut out: impl Write, units: Units) -> std::io::Result<()> {
        let mut eps: Vec<f64> = self.points.iter().map(|p| p.epsilon).collect();
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        let series: [Series; 3] = [
            ("converse", |p| Some(p.log_m_converse)),
            ("achievability", |p| p.log_m_achievability),
            ("normal", |p| Some(p.log_m_normal)),
        ];
        let mut first = true;
        for e in &eps {
            for (name, get) in &series {
                let rows: Vec<_> = self.points.iter().filter(|p| p.epsilon == *e).collect();
                if !first {
                    writeln!(out, "\n")?;
                }
                first = false;
                writeln!(out, "# {name} epsilon={}", csv_number(Some(*e)))?;
                writeln!(out, "n rate_{}", units.suffix())?;
                for p in rows {
                    if let Some(v) = get(p) {
                        writeln!(out, "{} {}", p.n, csv_number(Some(units.from_nats(v) / p.n as f64)))?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Span of the arithmetic progression carrying the values of the tilted
/// density over the optimal support, if there is one.
pub fn density_span(channel: &DmcChannel, sol: &CostCapacitySolution) -> Result<Option<f64>> {
    let mut values = Vec::new();
    for x in sol.support() {
        for y in 0..channel.output_size() {
            if channel.kernel()[x][y] > 0.0 {
                values.push(tilted_density(channel, sol, x, y)?);
            }
        }
    }
    Ok(lattice_span(&values))
}

/// Converse, achievability and normal approximation at every `(n, epsilon)`
/// pair, ordered by `n` then `epsilon` as given.
pub fn bound_curve(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    n_list: &[usize],
    epsilons: &[f64],
    opts: &BoundOptions,
) -> Result<BoundCurve> {
    for &e in epsilons {
        super::check_epsilon(e)?;
    }
    let mut warnings = Vec::new();
    if let Some(span) = density_span(channel, sol)? {
        warnings.push(format!(
            "tilted information density is lattice-valued (span {span:.6} nats); \
             the 1/2 log n term of the normal approximation may be off by O(1)"
        ));
    }
    let per_n: Vec<Result<Vec<BoundPoint>>> = n_list
        .par_iter()
        .map(|&n| {
            let conv = ChannelConverse::new(channel, sol, n, opts)?;
            let dt = DtAchievability::new(channel, sol, n, opts)?;
            epsilons
                .iter()
                .map(|&e| {
                    let c = conv.log_m(e)?;
                    let a = dt.log_m(e)?;
                    Ok(BoundPoint {
                        n,
                        epsilon: e,
                        log_m_converse: c.log_m,
                        log_m_achievability: Some(a.log_m),
                        log_m_normal: normal_approx(sol, n, e, ThirdOrder::HalfLogN)?,
                        gamma_used: c.gamma,
                        diagnostics: BoundDiagnostics {
                            slack: c.slack.max(a.slack),
                            tail_loss: c.tail_loss.max(a.tail_loss),
                            types_evaluated: c.types_evaluated,
                            binding_type: c.binding_type,
                            code_type: a.code_type,
                            correction: a.correction,
                            notes: Vec::new(),
                        },
                    })
                })
                .collect()
        })
        .collect();
    let mut points = Vec::new();
    for r in per_n {
        points.extend(r?);
    }
    Ok(BoundCurve { channel: None, points, warnings })
}
