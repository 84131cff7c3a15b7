use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use costcap::analytic::{awgn_capacity, awgn_curve, awgn_dispersion, exp_capacity, exp_curve, exp_dispersion};
use costcap::bounds::{bound_curve, strong_converse_curve, BoundCurve, BoundOptions, ConverseForm};
use costcap::dmc::{caid_uniqueness_probe, solve_capacity_cost, DEFAULT_TOL};
use costcap::jscc::{jscc_grid, solve_rate_distortion, write_jscc_csv, DmsSource, DEFAULT_RD_TOL};
use costcap::report::{csv_number, format_compact};
use costcap::{DmcChannel, Units};
use thiserror::Error;

use crate::args::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] costcap::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_budget() => 3,
            CliError::Core(e) if e.is_infeasible() => 4,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => e.name(),
            CliError::Io { .. } => "IoError",
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn load_channel(path: &Path) -> Result<DmcChannel> {
    DmcChannel::from_json(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_source(path: &Path) -> Result<DmsSource> {
    DmsSource::from_json(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Where the CSV and the per-point summaries go: with `--output` the CSV
/// lands in the file and summaries on stdout, otherwise the CSV takes stdout
/// and summaries move to stderr.
struct Sinks {
    csv: Box<dyn Write>,
    summary: Box<dyn Write>,
    csv_path: PathBuf,
}

impl Sinks {
    fn new(common: &Common) -> Result<Self> {
        Ok(match &common.output {
            Some(p) => Sinks {
                csv: Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?)),
                summary: Box::new(io::stdout()),
                csv_path: p.clone(),
            },
            None => Sinks { csv: Box::new(io::stdout()), summary: Box::new(io::stderr()), csv_path: "<stdout>".into() },
        })
    }

    fn say(&mut self, line: &str) -> Result<()> {
        writeln!(self.summary, "{line}").map_err(io_err(Path::new("<summary>")))
    }

    fn finish(mut self) -> Result<()> {
        let path = self.csv_path.clone();
        self.csv.flush().map_err(io_err(&path))
    }
}

fn options(common: &Common) -> Result<BoundOptions> {
    if !(common.step > 0.0 && common.step.is_finite()) {
        return Err(CliError::Config(format!("lattice step must be positive, got {}", common.step)));
    }
    if common.budget == 0 {
        return Err(CliError::Config("cell budget must be positive".into()));
    }
    Ok(BoundOptions { step: common.step, budget_cells: common.budget, ..BoundOptions::default() })
}

fn lengths(spec: &str, allow_zero: bool) -> Result<Vec<usize>> {
    parse_lengths(spec, allow_zero).map_err(CliError::Config)
}

fn epsilons(items: &[String]) -> Result<Vec<f64>> {
    parse_epsilons(items).map_err(CliError::Config)
}

fn num(v: f64) -> String {
    format_compact(v, 6)
}

fn write_plot(curve: &BoundCurve, path: &Option<PathBuf>, units: Units) -> Result<()> {
    if let Some(p) = path {
        let mut f = BufWriter::new(File::create(p).map_err(io_err(p))?);
        curve.write_plot_data(&mut f, units).map_err(io_err(p))?;
        f.flush().map_err(io_err(p))?;
    }
    Ok(())
}

fn summarize_curve(out: &mut Sinks, curve: &BoundCurve, units: Units) -> Result<()> {
    let u = units.suffix();
    for w in &curve.warnings {
        eprintln!("warning: {w}");
    }
    for p in &curve.points {
        let n = p.n as f64;
        let conv = units.from_nats(p.log_m_converse);
        let norm = units.from_nats(p.log_m_normal);
        let line = match p.log_m_achievability.map(|a| units.from_nats(a)) {
            Some(a) => format!(
                "n={} eps={}: achievability {} <= log M* <= converse {} {u}; normal approx {} (rates {} / {} / {} {u}/use)",
                p.n,
                num(p.epsilon),
                num(a),
                num(conv),
                num(norm),
                num(a / n),
                num(conv / n),
                num(norm / n)
            ),
            None => format!(
                "n={} eps={}: log M* <= converse {} {u}; normal approx {} (rates {} / {} {u}/use)",
                p.n,
                num(p.epsilon),
                num(conv),
                num(norm),
                num(conv / n),
                num(norm / n)
            ),
        };
        out.say(&line)?;
    }
    Ok(())
}

pub fn capacity(args: &CapacityArgs) -> Result<()> {
    let ch = load_channel(&args.channel)?;
    let units: Units = args.common.units.into();
    let mut out = Sinks::new(&args.common)?;
    let rows_to_csv = args.common.output.is_some();
    if rows_to_csv {
        let u = units.suffix();
        writeln!(out.csv, "beta,capacity_{u},lambda_star_{u},dispersion_{u}2,kink,unique")
            .map_err(io_err(&out.csv_path.clone()))?;
    }
    let ln2 = std::f64::consts::LN_2;
    for &beta in &args.beta {
        let sol = solve_capacity_cost(&ch, beta, DEFAULT_TOL)?;
        let unique = if args.probe_trials >= 2 {
            Some(caid_uniqueness_probe(&ch, beta, args.probe_trials)?.unique)
        } else {
            None
        };
        out.say(&format!("beta = {}", num(beta)))?;
        out.say(&format!("  C(beta)  = {} bits = {} nats", num(sol.capacity / ln2), num(sol.capacity)))?;
        out.say(&format!(
            "  lambda*  = {} bits = {} nats per cost unit",
            num(sol.lambda_star / ln2),
            num(sol.lambda_star)
        ))?;
        out.say(&format!(
            "  V(beta)  = {} bits^2 = {} nats^2",
            num(sol.dispersion / (ln2 * ln2)),
            num(sol.dispersion)
        ))?;
        let p: Vec<String> = sol.p_x_star.iter().map(|&v| num(v)).collect();
        out.say(&format!("  P_X*     = [{}]", p.join(", ")))?;
        if sol.kink {
            out.say("  note: the capacity-cost function has a kink here; lambda* is the midpoint of the admissible slopes")?;
        }
        if unique == Some(false) {
            out.say("  note: the optimal input distribution is not unique; the dispersion is the minimum over optimizers")?;
        }
        if rows_to_csv {
            let path = out.csv_path.clone();
            writeln!(
                out.csv,
                "{},{},{},{},{},{}",
                csv_number(Some(beta)),
                csv_number(Some(units.from_nats(sol.capacity))),
                csv_number(Some(units.from_nats(sol.lambda_star))),
                csv_number(Some(units.from_nats2(sol.dispersion))),
                sol.kink,
                unique.map(|u| u.to_string()).unwrap_or_default()
            )
            .map_err(io_err(&path))?;
        }
    }
    out.finish()
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let ch = load_channel(&args.channel)?;
    let ns = lengths(&args.n, false)?;
    let eps = epsilons(&args.eps)?;
    let mut opts = options(&args.common)?;
    opts.converse_form = match args.form {
        FormArg::Plain => ConverseForm::Plain,
        FormArg::Tilted => ConverseForm::Tilted,
    };
    let units: Units = args.common.units.into();
    let sol = solve_capacity_cost(&ch, args.beta, DEFAULT_TOL)?;
    let curve = bound_curve(&ch, &sol, &ns, &eps, &opts)?;
    let mut out = Sinks::new(&args.common)?;
    let path = out.csv_path.clone();
    curve.write_csv(&mut out.csv, units).map_err(io_err(&path))?;
    write_plot(&curve, &args.common.plot_data, units)?;
    out.say(&format!(
        "C(beta) = {} {u}, V(beta) = {} {u}^2",
        num(units.from_nats(sol.capacity)),
        num(units.from_nats2(sol.dispersion)),
        u = units.suffix()
    ))?;
    summarize_curve(&mut out, &curve, units)?;
    out.finish()
}

pub fn strong_converse(args: &StrongConverseArgs) -> Result<()> {
    let ch = load_channel(&args.channel)?;
    let ns = lengths(&args.n, false)?;
    let opts = options(&args.common)?;
    let units: Units = args.common.units.into();
    let sol = solve_capacity_cost(&ch, args.beta, DEFAULT_TOL)?;
    let rate = match (args.rate, args.rate_above) {
        (Some(r), _) => units.to_nats(r),
        (None, Some(d)) => sol.capacity + units.to_nats(d),
        (None, None) => return Err(CliError::Config("one of --rate or --rate-above is required".into())),
    };
    let curve = strong_converse_curve(&ch, &sol, rate, &ns, args.alpha, &opts)?;
    let mut out = Sinks::new(&args.common)?;
    let path = out.csv_path.clone();
    let u = units.suffix();
    let rate_u = csv_number(Some(units.from_nats(rate)));
    let alpha = csv_number(Some(args.alpha));
    (|| -> io::Result<()> {
        writeln!(out.csv, "n,rate_{u},alpha_nats,epsilon_lower")?;
        for &(n, e) in &curve {
            writeln!(out.csv, "{n},{rate_u},{alpha},{}", csv_number(Some(e)))?;
        }
        Ok(())
    })()
    .map_err(io_err(&path))?;
    out.say(&format!(
        "rate {} {u}/use against C(beta) = {} {u}/use",
        num(units.from_nats(rate)),
        num(units.from_nats(sol.capacity))
    ))?;
    for &(n, e) in &curve {
        out.say(&format!("n={n}: every code has error probability >= {}", num(e)))?;
    }
    out.finish()
}

fn analytic(curve: BoundCurve, header: String, common: &Common) -> Result<()> {
    let units: Units = common.units.into();
    let mut out = Sinks::new(common)?;
    let path = out.csv_path.clone();
    curve.write_csv(&mut out.csv, units).map_err(io_err(&path))?;
    write_plot(&curve, &common.plot_data, units)?;
    out.say(&header)?;
    for p in &curve.points {
        for note in p.diagnostics.notes.iter().skip(1) {
            eprintln!("note (n={}): {note}", p.n);
        }
    }
    if let Some(note) = curve.points.first().and_then(|p| p.diagnostics.notes.first()) {
        out.say(&format!("note: {note}"))?;
    }
    summarize_curve(&mut out, &curve, units)?;
    out.finish()
}

pub fn awgn(args: &AwgnArgs) -> Result<()> {
    let ns = lengths(&args.n, false)?;
    let eps = epsilons(&args.eps)?;
    let units: Units = args.common.units.into();
    let curve = awgn_curve(args.snr, &ns, &eps)?;
    let header = format!(
        "AWGN P = {}: C = {} {u}, V = {} {u}^2",
        num(args.snr),
        num(units.from_nats(awgn_capacity(args.snr)?)),
        num(units.from_nats2(awgn_dispersion(args.snr)?)),
        u = units.suffix()
    );
    analytic(curve, header, &args.common)
}

pub fn exp(args: &ExpArgs) -> Result<()> {
    let ns = lengths(&args.n, false)?;
    let eps = epsilons(&args.eps)?;
    let units: Units = args.common.units.into();
    let curve = exp_curve(args.beta, &ns, &eps)?;
    let header = format!(
        "exponential noise, beta = {}: C = {} {u}, V = {} {u}^2",
        num(args.beta),
        num(units.from_nats(exp_capacity(args.beta)?)),
        num(units.from_nats2(exp_dispersion(args.beta)?)),
        u = units.suffix()
    );
    analytic(curve, header, &args.common)
}

pub fn jscc(args: &JsccArgs) -> Result<()> {
    let ch = load_channel(&args.channel)?;
    let src = load_source(&args.source)?;
    let ks = lengths(&args.k, true)?;
    let ns = lengths(&args.n, false)?;
    let eps = epsilons(&args.eps)?;
    let opts = options(&args.common)?;
    let units: Units = args.common.units.into();
    let cc = solve_capacity_cost(&ch, args.beta, DEFAULT_TOL)?;
    let rd = solve_rate_distortion(&src, args.d, DEFAULT_RD_TOL)?;
    let rows = jscc_grid(&src, &rd, &ch, &cc, &ks, &ns, &eps, &opts)?;
    let mut out = Sinks::new(&args.common)?;
    let path = out.csv_path.clone();
    write_jscc_csv(&rows, &mut out.csv).map_err(io_err(&path))?;
    let u = units.suffix();
    if !src.pruned().is_empty() {
        eprintln!("note: dropped zero-probability source letters {:?}", src.pruned());
    }
    out.say(&format!(
        "R(d) = {} {u}, source dispersion = {} {u}^2; C(beta) = {} {u}, V(beta) = {} {u}^2",
        num(units.from_nats(rd.rate)),
        num(units.from_nats2(rd.var_tilted)),
        num(units.from_nats(cc.capacity)),
        num(units.from_nats2(cc.dispersion))
    ))?;
    for r in &rows {
        let approx = match r.approx_k {
            Some(k) => format!(
                "approx k = {} (remainder band +/- {} nats, about +/- {} source symbols)",
                num(k),
                num(r.band_nats),
                num(if rd.rate > 0.0 { r.band_nats / rd.rate } else { f64::INFINITY })
            ),
            None => "approx k: no nonnegative solution".into(),
        };
        out.say(&format!("k={} n={} eps={}: excess-distortion probability >= {}; {approx}", r.k, r.n, num(r.epsilon), num(r.converse_eps)))?;
    }
    out.finish()
}
