use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use costcap::Units;

/// Finite-blocklength bounds for channels with input cost constraints.
#[derive(Debug, Parser)]
#[command(name = "costcap", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity-cost, slope and dispersion of a discrete channel.
    Capacity(CapacityArgs),
    /// Converse, achievability and normal approximation over an (n, eps) grid.
    Bounds(BoundsArgs),
    /// Converse lower bound on the error probability above capacity.
    StrongConverse(StrongConverseArgs),
    /// AWGN channel with a maximal power constraint.
    Awgn(AwgnArgs),
    /// Additive exponential-noise channel with a maximal mean constraint.
    Exp(ExpArgs),
    /// Lossy joint source-channel coding over a discrete channel.
    Jscc(JsccArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Bits,
    Nats,
}

impl From<UnitArg> for Units {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Bits => Units::Bits,
            UnitArg::Nats => Units::Nats,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    /// Information density minimized over admissible types.
    Plain,
    /// Cost-tilted information density.
    Tilted,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Units for reported information quantities.
    #[arg(long, value_enum, default_value = "bits")]
    pub units: UnitArg,
    /// Lattice step for exact tail computations (nats).
    #[arg(long, default_value_t = costcap::lattice::DEFAULT_STEP)]
    pub step: f64,
    /// Cap on lattice cells per convolution.
    #[arg(long, env = "COSTCAP_BUDGET_CELLS", default_value_t = costcap::lattice::DEFAULT_BUDGET_CELLS)]
    pub budget: usize,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write rate-versus-n plot data to this file.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Channel file (JSON with "kernel" and "cost").
    #[arg(long)]
    pub channel: PathBuf,
    /// Cost levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    /// Random restarts used to check uniqueness of the optimal input.
    #[arg(long, default_value_t = 8)]
    pub probe_trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Channel file (JSON with "kernel" and "cost").
    #[arg(long)]
    pub channel: PathBuf,
    /// Cost level.
    #[arg(long)]
    pub beta: f64,
    /// Error probabilities: comma separated decimals or 1eX.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<String>,
    /// Blocklengths: comma separated values or start:stop:step ranges (inclusive).
    #[arg(long, required = true)]
    pub n: String,
    /// Density used by the converse.
    #[arg(long, value_enum, default_value = "plain")]
    pub form: FormArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StrongConverseArgs {
    /// Channel file (JSON with "kernel" and "cost").
    #[arg(long)]
    pub channel: PathBuf,
    /// Cost level.
    #[arg(long)]
    pub beta: f64,
    /// Code rate per channel use, in the configured units.
    #[arg(long, conflicts_with = "rate_above", required_unless_present = "rate_above")]
    pub rate: Option<f64>,
    /// Code rate given as an offset above capacity, in the configured units.
    #[arg(long)]
    pub rate_above: Option<f64>,
    /// Per-use slack in the threshold (nats); the threshold is n * alpha.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Blocklengths: comma separated values or start:stop:step ranges (inclusive).
    #[arg(long, required = true)]
    pub n: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AwgnArgs {
    /// Signal-to-noise ratio P (linear).
    #[arg(long)]
    pub snr: f64,
    /// Error probabilities: comma separated decimals or 1eX.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<String>,
    /// Blocklengths: comma separated values or start:stop:step ranges (inclusive).
    #[arg(long, required = true)]
    pub n: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    /// Mean input constraint.
    #[arg(long)]
    pub beta: f64,
    /// Error probabilities: comma separated decimals or 1eX.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<String>,
    /// Blocklengths: comma separated values or start:stop:step ranges (inclusive).
    #[arg(long, required = true)]
    pub n: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct JsccArgs {
    /// Channel file (JSON with "kernel" and "cost").
    #[arg(long)]
    pub channel: PathBuf,
    /// Source file (JSON with "pmf" and "distortion").
    #[arg(long)]
    pub source: PathBuf,
    /// Cost level.
    #[arg(long)]
    pub beta: f64,
    /// Distortion level.
    #[arg(long)]
    pub d: f64,
    /// Source block lengths: values or start:stop:step ranges.
    #[arg(long, required = true)]
    pub k: String,
    /// Blocklengths: comma separated values or start:stop:step ranges (inclusive).
    #[arg(long, required = true)]
    pub n: String,
    /// Error probabilities: comma separated decimals or 1eX.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `"10,20,100:200:50"` into `[10, 20, 100, 150, 200]`. With
/// `allow_zero` false, zero entries are rejected.
pub fn parse_lengths(spec: &str, allow_zero: bool) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a nonnegative integer"));
        match parts.as_slice() {
            [v] => out.push(num(v)?),
            [a, b, c] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                if step == 0 {
                    return Err(format!("range `{item}` has zero step"));
                }
                if stop < start {
                    return Err(format!("range `{item}` is empty"));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(format!("`{item}` is neither a value nor start:stop:step")),
        }
    }
    if out.is_empty() {
        return Err("no lengths given".into());
    }
    if !allow_zero && out.contains(&0) {
        return Err("lengths must be at least 1".into());
    }
    Ok(out)
}

/// Parses error probabilities (decimal or `1eX`) and checks `0 < eps < 1`.
pub fn parse_epsilons(items: &[String]) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for s in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if !(v > 0.0 && v < 1.0) {
            return Err(format!("epsilon {s} outside (0, 1)"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err("no error probabilities given".into());
    }
    Ok(out)
}
