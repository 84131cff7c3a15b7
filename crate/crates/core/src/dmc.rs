//! Finite-alphabet channels with per-letter input cost, the capacity-cost
//! solver and the b-tilted information density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;
const PARSE_ROW_TOL: f64 = 1e-9;
/// Input masses below this are treated as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Default absolute tolerance (nats) on the capacity.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on Blahut–Arimoto iterations per solve.
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
const COST_TOL: f64 = 1e-10;
const DROP_DEFICIT: f64 = 1e-6;
const SPREAD_TOL: f64 = 1e-13;
const GAP_FLOOR: f64 = 1e-15;
/// Width of the admissible multiplier interval above which a kink is flagged.
pub const KINK_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DmcChannel {
    kernel: Vec<Vec<f64>>,
    cost: Vec<f64>,
    labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct ChannelFile {
    kernel: Vec<Vec<f64>>,
    cost: Vec<f64>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl DmcChannel {
    pub fn new(kernel: Vec<Vec<f64>>, cost: Vec<f64>) -> Result<Self> {
        let a = kernel.len();
        if a == 0 {
            return Err(Error::InvalidChannel("empty input alphabet".into()));
        }
        let b = kernel[0].len();
        if b == 0 {
            return Err(Error::InvalidChannel("empty output alphabet".into()));
        }
        if cost.len() != a {
            return Err(Error::InvalidChannel(format!("{} costs for {a} input letters", cost.len())));
        }
        for (x, row) in kernel.iter().enumerate() {
            if row.len() != b {
                return Err(Error::InvalidChannel(format!("row {x} has {} entries, expected {b}", row.len())));
            }
            if row.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidChannel(format!("row {x} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidChannel(format!("row {x} sums to {s}")));
            }
        }
        for (x, &c) in cost.iter().enumerate() {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidChannel(format!("cost of letter {x} is {c}")));
            }
        }
        for y in 0..b {
            if kernel.iter().all(|row| row[y] == 0.0) {
                return Err(Error::InvalidChannel(format!("output {y} is not accessible")));
            }
        }
        Ok(Self { kernel, cost, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.input_size() {
            return Err(Error::InvalidChannel(format!(
                "{} labels for {} input letters",
                labels.len(),
                self.input_size()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Parses `{"kernel": [[..]], "cost": [..], "labels": [..]}`.
    ///
    /// Rows off by more than 1e-9 are rejected; smaller discrepancies are
    /// renormalized away.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut kernel = file.kernel;
        for (x, row) in kernel.iter_mut().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PARSE_ROW_TOL {
                return Err(Error::InvalidChannel(format!("row {x} sums to {s}")));
            }
            if s > 0.0 {
                row.iter_mut().for_each(|w| *w /= s);
            }
        }
        let ch = Self::new(kernel, file.cost)?;
        match file.labels {
            Some(l) => ch.with_labels(l),
            None => Ok(ch),
        }
    }

    /// Binary symmetric channel with crossover `delta` and costs `b = (0, 1)`.
    pub fn bsc(delta: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]], vec![0.0, 1.0])
    }

    pub fn input_size(&self) -> usize {
        self.kernel.len()
    }

    pub fn output_size(&self) -> usize {
        self.kernel[0].len()
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Smallest letter cost.
    pub fn beta_min(&self) -> f64 {
        self.cost.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cost of the unconstrained capacity-achieving input found by the solver.
    pub fn beta_max(&self, tol: f64) -> Result<f64> {
        let run = maximize(self, f64::INFINITY, &uniform(self.input_size()), tol, DEFAULT_MAX_ITERATIONS)?;
        Ok(dot(&run.p, &self.cost))
    }

    /// Output distribution induced by `p`.
    pub fn output_distribution(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.output_size()];
        for (px, row) in p.iter().zip(&self.kernel) {
            if *px > 0.0 {
                for (qy, w) in q.iter_mut().zip(row) {
                    *qy += px * w;
                }
            }
        }
        q
    }

    /// Relative entropy `D(W(.|x) || q)` in nats; infinite when `q` misses an
    /// output reachable from `x`.
    pub fn divergence(&self, x: usize, q: &[f64]) -> f64 {
        let mut d = 0.0;
        for (&w, &qy) in self.kernel[x].iter().zip(q) {
            if w > 0.0 {
                if qy <= 0.0 {
                    return f64::INFINITY;
                }
                d += w * (w / qy).ln();
            }
        }
        d
    }

    /// Mutual information `I(X;Y)` in nats for input distribution `p`.
    pub fn mutual_information(&self, p: &[f64]) -> f64 {
        let q = self.output_distribution(p);
        p.iter()
            .enumerate()
            .filter(|(_, &px)| px > 0.0)
            .map(|(x, &px)| px * self.divergence(x, &q))
            .sum()
    }
}

/// Solved capacity-cost problem at one cost level.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCapacitySolution {
    pub beta: f64,
    /// C(beta), nats.
    pub capacity: f64,
    /// Slope of the capacity-cost function, nats per cost unit.
    pub lambda_star: f64,
    pub p_x_star: Vec<f64>,
    pub p_y_star: Vec<f64>,
    /// `E[j(x;Y,beta) | X = x]`, nats.
    pub cond_mean: Vec<f64>,
    /// `Var[j(x;Y,beta) | X = x]`, nats^2.
    pub cond_var: Vec<f64>,
    /// V(beta), nats^2.
    pub dispersion: f64,
    pub active_cost: f64,
    /// Set when the capacity-cost function has a kink at `beta`: every letter
    /// in the support costs exactly `beta`, and the multipliers compatible
    /// with the optimality conditions span more than [`KINK_WIDTH`].
    /// `lambda_star` is then the midpoint of that interval.
    pub kink: bool,
    pub iterations: usize,
}

impl CostCapacitySolution {
    /// Letters with positive mass under `p_x_star`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.p_x_star.len()).filter(|&x| self.p_x_star[x] > 0.0).collect()
    }
}

/// Maximizes `I(X;Y)` subject to `E[b(X)] <= beta`.
pub fn solve_capacity_cost(channel: &DmcChannel, beta: f64, tol: f64) -> Result<CostCapacitySolution> {
    solve_capacity_cost_from(channel, beta, tol, &uniform(channel.input_size()), DEFAULT_MAX_ITERATIONS)
}

/// As [`solve_capacity_cost`], starting the iterations from `init` and with
/// an explicit cap on the total number of iterations.
pub fn solve_capacity_cost_from(
    channel: &DmcChannel,
    beta: f64,
    tol: f64,
    init: &[f64],
    max_iterations: usize,
) -> Result<CostCapacitySolution> {
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    if beta.is_nan() {
        return Err(Error::DomainError("cost level is NaN".into()));
    }
    let beta_min = channel.beta_min();
    if beta <= beta_min {
        return Err(Error::InfeasibleCost { beta, beta_min });
    }
    if init.len() != channel.input_size() || init.iter().any(|&p| !(p >= 0.0)) || init.iter().sum::<f64>() <= 0.0 {
        return Err(Error::BadPmf("initial input distribution is invalid".into()));
    }
    let run = maximize(channel, beta, init, tol, max_iterations)?;
    Ok(finish(channel, beta, run.lambda, run.p, run.iterations))
}

fn finish(channel: &DmcChannel, beta: f64, lambda: f64, mut p: Vec<f64>, iterations: usize) -> CostCapacitySolution {
    for v in p.iter_mut() {
        if *v < SUPPORT_THRESHOLD {
            *v = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    let q = channel.output_distribution(&p);
    let a = channel.input_size();
    let d: Vec<f64> = (0..a).map(|x| channel.divergence(x, &q)).collect();
    let info: f64 = (0..a).filter(|&x| p[x] > 0.0).map(|x| p[x] * d[x]).sum();
    let active_cost = dot(&p, &channel.cost);

    // Complementary slackness, and the multiplier interval at a kink.
    let binding = active_cost >= beta - COST_TOL;
    let mut lambda = if binding { lambda } else { 0.0 };
    let mut kink = false;
    let support_at_beta = (0..a).filter(|&x| p[x] > 0.0).all(|x| (channel.cost[x] - beta).abs() <= COST_TOL);
    if binding && !support_at_beta {
        // Least-squares fit of the support equalities, more accurate than the
        // multiplier of the last update.
        let num: f64 = (0..a).filter(|&x| p[x] > 0.0).map(|x| p[x] * (d[x] - info) * (channel.cost[x] - beta)).sum();
        let den: f64 = (0..a).filter(|&x| p[x] > 0.0).map(|x| p[x] * (channel.cost[x] - beta).powi(2)).sum();
        lambda = (num / den).max(0.0);
    }
    if binding && support_at_beta {
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;
        for x in (0..a).filter(|&x| p[x] == 0.0) {
            let db = channel.cost[x] - beta;
            if db > COST_TOL {
                lo = lo.max((d[x] - info) / db);
            } else if db < -COST_TOL {
                hi = hi.min((info - d[x]) / -db);
            }
        }
        if hi.is_finite() && hi >= lo {
            kink = hi - lo > KINK_WIDTH;
            lambda = 0.5 * (lo + hi);
        }
    }

    let mut cond_mean = vec![0.0; a];
    let mut cond_var = vec![0.0; a];
    for x in 0..a {
        cond_mean[x] = d[x] - lambda * (channel.cost[x] - beta);
        cond_var[x] = if d[x].is_finite() {
            channel.kernel[x]
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| {
                    let e = (w / qy).ln() - d[x];
                    w * e * e
                })
                .sum()
        } else {
            f64::INFINITY
        };
    }
    let dispersion = p.iter().zip(&cond_var).filter(|(&px, _)| px > 0.0).map(|(px, v)| px * v).sum();
    CostCapacitySolution {
        beta,
        capacity: info.max(0.0),
        lambda_star: lambda,
        p_x_star: p,
        p_y_star: q,
        cond_mean,
        cond_var,
        dispersion,
        active_cost,
        kink,
        iterations,
    }
}

struct Run {
    p: Vec<f64>,
    d: Vec<f64>,
    lambda: f64,
    gap: f64,
    iterations: usize,
}

/// `D(W_x || q) - lambda (b(x) - beta)`, with the cost term dropped when
/// the multiplier is zero (so an infinite `beta` is allowed).
fn score(ch: &DmcChannel, d: &[f64], lambda: f64, beta: f64, x: usize) -> f64 {
    if lambda == 0.0 {
        d[x]
    } else {
        d[x] - lambda * (ch.cost[x] - beta)
    }
}

/// One constrained Blahut–Arimoto update: `p'(x) ∝ p(x) exp(mu D(W_x||q) - nu b(x))`
/// with `nu >= 0` chosen so that `E_{p'}[b] <= beta` holds with equality
/// whenever it binds. Returns the update and `lambda = nu / mu`.
fn constrained_step(ch: &DmcChannel, p: &[f64], d: &[f64], mu: f64, beta: f64, active: &[bool]) -> (Vec<f64>, f64) {
    let a = p.len();
    let idx: Vec<usize> = (0..a).filter(|&x| active[x] && p[x] > 0.0).collect();
    let dmax = idx.iter().map(|&x| d[x]).fold(f64::NEG_INFINITY, f64::max);
    let logit: Vec<f64> = idx.iter().map(|&x| p[x].ln() + mu * (d[x] - dmax)).collect();
    let cost: Vec<f64> = idx.iter().map(|&x| ch.cost[x]).collect();

    let tilt = |nu: f64| -> (Vec<f64>, f64, f64) {
        let e: Vec<f64> = logit.iter().zip(&cost).map(|(l, b)| l - nu * b).collect();
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = e.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        let mean: f64 = w.iter().zip(&cost).map(|(w, b)| w * b).sum();
        let var: f64 = w.iter().zip(&cost).map(|(w, b)| w * (b - mean) * (b - mean)).sum();
        (w, mean, var)
    };

    let (mut w, mean0, _) = tilt(0.0);
    let mut nu = 0.0;
    if beta.is_finite() && mean0 > beta {
        let scale = cost.iter().copied().fold(0.0f64, f64::max).max(1e-300);
        let mut lo = 0.0;
        let mut hi = 1.0 / scale;
        while tilt(hi).1 > beta && hi < 1e15 {
            lo = hi;
            hi *= 2.0;
        }
        nu = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (_, mean, var) = tilt(nu);
            let h = mean - beta;
            if h.abs() <= 1e-16 * beta.abs().max(1.0) {
                break;
            }
            if h > 0.0 {
                lo = nu;
            } else {
                hi = nu;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let newton = if var > 0.0 { nu + h / var } else { f64::NAN };
            nu = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        w = tilt(nu).0;
    }
    let mut out = vec![0.0; a];
    for (k, &x) in idx.iter().enumerate() {
        out[x] = w[k];
    }
    (out, nu / mu)
}

/// Iterates constrained Blahut–Arimoto updates on the letters flagged in
/// `active`.
///
/// The update exponent `mu >= 1` adapts: a larger power is kept only while it
/// increases the mutual information, with the plain update (which never
/// decreases it) as the fallback. This speeds up nearly flat directions such
/// as channels whose rows are almost identical.
fn cba_run(
    ch: &DmcChannel,
    beta: f64,
    p: Vec<f64>,
    active: &[bool],
    gap_tol: f64,
    spread_tol: f64,
    cap: usize,
) -> Run {
    let a = ch.input_size();
    let eval = |p: &[f64]| -> (Vec<f64>, f64) {
        let q = ch.output_distribution(p);
        let d: Vec<f64> = (0..a).map(|x| ch.divergence(x, &q)).collect();
        let info = (0..a).filter(|&x| p[x] > 0.0).map(|x| p[x] * d[x]).sum();
        (d, info)
    };

    let (d0, _) = eval(&p);
    let (mut p, mut lambda) = constrained_step(ch, &p, &d0, 1.0, beta, active);
    let (mut d, mut info) = eval(&p);
    let mut mu = 1.0f64;
    let mut iterations = 1;
    let mut stalls = 0;
    let mut best = info;
    loop {
        let smax = (0..a).filter(|&x| active[x]).map(|x| score(ch, &d, lambda, beta, x)).fold(f64::NEG_INFINITY, f64::max);
        let gap = smax - info;
        let spread = if spread_tol > 0.0 {
            let smin = (0..a)
                .filter(|&x| active[x] && p[x] > 1e-10)
                .map(|x| score(ch, &d, lambda, beta, x))
                .fold(f64::INFINITY, f64::min);
            smax - smin
        } else {
            f64::INFINITY
        };
        if gap <= gap_tol || spread <= spread_tol || iterations >= cap || !smax.is_finite() || stalls >= 20 {
            return Run { p, d, lambda, gap, iterations };
        }
        iterations += 1;

        let mut accepted = false;
        for trial in [2.0 * mu, mu] {
            if trial <= 1.0 {
                continue;
            }
            let (cand, cl) = constrained_step(ch, &p, &d, trial, beta, active);
            let (cd, ci) = eval(&cand);
            if ci > info {
                p = cand;
                lambda = cl;
                d = cd;
                info = ci;
                mu = trial.min(1e12);
                accepted = true;
                break;
            }
        }
        if !accepted {
            mu = 1.0;
            let (np, nl) = constrained_step(ch, &p, &d, 1.0, beta, active);
            p = np;
            lambda = nl;
            (d, info) = eval(&p);
        }
        // The plain update never decreases the objective, so a long run
        // without a new best means rounding noise has taken over.
        if info > best {
            best = info;
            stalls = 0;
        } else {
            stalls += 1;
        }
    }
}

/// Constrained maximizer of `I(X;Y)`.
///
/// A first pass over all letters locates the support; letters well outside
/// it are then dropped and the iteration continues on the rest, which
/// converges much faster. Dropped letters that turn out to violate the
/// optimality conditions are reinstated for good.
fn maximize(ch: &DmcChannel, beta: f64, init: &[f64], tol: f64, cap: usize) -> Result<Run> {
    let a = ch.input_size();
    let total: f64 = init.iter().sum();
    let floor = 1e-3 / a as f64;
    let mut p: Vec<f64> = init.iter().map(|v| v / total + floor).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);

    let all = vec![true; a];
    let loose = (tol * 1e-2).max(1e-13);
    let first = cba_run(ch, beta, p, &all, loose, 0.0, cap);
    let mut used = first.iterations;
    let smax = (0..a).map(|x| score(ch, &first.d, first.lambda, beta, x)).fold(f64::NEG_INFINITY, f64::max);
    let mut active: Vec<bool> =
        (0..a).map(|x| smax - score(ch, &first.d, first.lambda, beta, x) <= DROP_DEFICIT).collect();
    if !(0..a).any(|x| active[x] && ch.cost[x] <= beta) {
        let bmin = ch.beta_min();
        for (flag, &c) in active.iter_mut().zip(&ch.cost) {
            *flag = *flag || c == bmin;
        }
    }
    let mut pinned = vec![false; a];
    let mut run = first;

    for _ in 0..=a {
        let mut p = run.p.clone();
        for x in 0..a {
            if !active[x] {
                p[x] = 0.0;
            } else if p[x] == 0.0 {
                p[x] = 1e-6;
            }
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        run = cba_run(ch, beta, p, &active, GAP_FLOOR, SPREAD_TOL, cap.saturating_sub(used).max(1));
        used += run.iterations;
        let info: f64 = (0..a).filter(|&x| run.p[x] > 0.0).map(|x| run.p[x] * run.d[x]).sum();
        let smax = (0..a).map(|x| score(ch, &run.d, run.lambda, beta, x)).fold(f64::NEG_INFINITY, f64::max);
        run.gap = smax - info;
        let mut added = false;
        for x in 0..a {
            if !active[x] && score(ch, &run.d, run.lambda, beta, x) > info + SPREAD_TOL {
                pinned[x] = true;
                added = true;
            }
        }
        if !added {
            break;
        }
        for x in 0..a {
            active[x] = active[x] || pinned[x];
        }
    }

    if let Some((p, lambda)) = newton_polish(ch, beta, &run.p, run.lambda) {
        let q = ch.output_distribution(&p);
        let d: Vec<f64> = (0..a).map(|x| ch.divergence(x, &q)).collect();
        let info: f64 = (0..a).filter(|&x| p[x] > 0.0).map(|x| p[x] * d[x]).sum();
        let smax = (0..a).map(|x| score(ch, &d, lambda, beta, x)).fold(f64::NEG_INFINITY, f64::max);
        if smax - info <= run.gap.max(GAP_FLOOR) {
            run = Run { p, d, lambda, gap: smax - info, iterations: run.iterations };
        }
    }

    if used >= cap && !(run.gap <= tol) {
        return Err(Error::NonConvergence { iterations: used, gap: run.gap });
    }
    run.iterations = used;
    Ok(run)
}

/// Newton iterations on the optimality conditions restricted to the current
/// support `S`:
///
/// `D(W_x || q) - lambda (b(x) - beta) = c` for `x` in `S`, `sum p = 1`, and
/// `sum p b = beta` when the constraint binds.
///
/// First-order updates crawl when the support rows are nearly collinear;
/// this restores full precision there. Returns `None` when the system is
/// singular (non-unique optimizer, or a kink) or a letter would leave the
/// support.
fn newton_polish(ch: &DmcChannel, beta: f64, p0: &[f64], lambda0: f64) -> Option<(Vec<f64>, f64)> {
    let supp: Vec<usize> = (0..p0.len()).filter(|&x| p0[x] > SUPPORT_THRESHOLD).collect();
    let k = supp.len();
    let binding = beta.is_finite() && supp.iter().map(|&x| p0[x] * ch.cost[x]).sum::<f64>() >= beta - COST_TOL;
    let dim = k + 1 + usize::from(binding);

    let residual = |ps: &[f64], lambda: f64, c: f64| -> Option<Vec<f64>> {
        let mut full = vec![0.0; p0.len()];
        for (i, &x) in supp.iter().enumerate() {
            full[x] = ps[i];
        }
        let q = ch.output_distribution(&full);
        let mut r = Vec::with_capacity(dim);
        for &x in &supp {
            let d = ch.divergence(x, &q);
            if !d.is_finite() {
                return None;
            }
            r.push(d - if binding { lambda * (ch.cost[x] - beta) } else { 0.0 } - c);
        }
        r.push(ps.iter().sum::<f64>() - 1.0);
        if binding {
            r.push(supp.iter().zip(ps).map(|(&x, p)| p * ch.cost[x]).sum::<f64>() - beta);
        }
        Some(r)
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut ps: Vec<f64> = supp.iter().map(|&x| p0[x]).collect();
    let tot: f64 = ps.iter().sum();
    ps.iter_mut().for_each(|v| *v /= tot);
    let mut lambda = if binding { lambda0 } else { 0.0 };
    let mut full = vec![0.0; p0.len()];
    for (i, &x) in supp.iter().enumerate() {
        full[x] = ps[i];
    }
    let q0 = ch.output_distribution(&full);
    let mut c: f64 = supp
        .iter()
        .zip(&ps)
        .map(|(&x, p)| p * (ch.divergence(x, &q0) - if binding { lambda * (ch.cost[x] - beta) } else { 0.0 }))
        .sum();
    let mut r = residual(&ps, lambda, c)?;
    let start = norm(&r);

    for _ in 0..50 {
        let res = norm(&r);
        if res <= 1e-15 {
            break;
        }
        let mut full = vec![0.0; p0.len()];
        for (i, &x) in supp.iter().enumerate() {
            full[x] = ps[i];
        }
        let q = ch.output_distribution(&full);
        let mut jac = nalgebra::DMatrix::<f64>::zeros(dim, dim);
        for (i, &x) in supp.iter().enumerate() {
            for (j, &z) in supp.iter().enumerate() {
                let mut h = 0.0;
                for (y, &qy) in q.iter().enumerate() {
                    if qy > 0.0 {
                        h += ch.kernel[x][y] * ch.kernel[z][y] / qy;
                    }
                }
                jac[(i, j)] = -h;
            }
            jac[(i, k)] = -1.0;
            if binding {
                jac[(i, k + 1)] = -(ch.cost[x] - beta);
            }
            jac[(k, i)] = 1.0;
            if binding {
                jac[(k + 1, i)] = ch.cost[x];
            }
        }
        let rhs = nalgebra::DVector::from_iterator(dim, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = ps.iter().enumerate().map(|(i, p)| p + t * step[i]).collect();
            if cand.iter().all(|&v| v > 0.0) {
                let cc = c + t * step[k];
                let cl = if binding { lambda + t * step[k + 1] } else { 0.0 };
                if let Some(cr) = residual(&cand, cl, cc) {
                    if norm(&cr) < res {
                        ps = cand;
                        c = cc;
                        lambda = cl;
                        r = cr;
                        improved = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if !(norm(&r) < start) || lambda < 0.0 || supp.iter().zip(&ps).map(|(&x, p)| p * ch.cost[x]).sum::<f64>() > beta + COST_TOL {
        return None;
    }
    let mut out = vec![0.0; p0.len()];
    let tot: f64 = ps.iter().sum();
    for (i, &x) in supp.iter().enumerate() {
        out[x] = ps[i] / tot;
    }
    Some((out, lambda))
}

/// `j(x;y,beta) = log(W(y|x)/P_Y*(y)) - lambda* (b(x) - beta)`.
pub fn tilted_density(channel: &DmcChannel, sol: &CostCapacitySolution, x: usize, y: usize) -> Result<f64> {
    let w = channel.kernel[x][y];
    let q = sol.p_y_star[y];
    if q <= 0.0 {
        return Err(Error::UndefinedDensity { x, y });
    }
    if w == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((w / q).ln() - sol.lambda_star * (channel.cost[x] - sol.beta))
}

/// Atoms `(j(x;y,beta), W(y|x))` over outputs with `W(y|x) > 0`.
pub fn conditional_tilted_pmf(
    channel: &DmcChannel,
    sol: &CostCapacitySolution,
    x: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut atoms = Vec::new();
    for (y, &w) in channel.kernel[x].iter().enumerate() {
        if w > 0.0 {
            atoms.push((tilted_density(channel, sol, x, y)?, w));
        }
    }
    Ok(atoms)
}

/// `V(beta) = Var[j(X*;Y*,beta)]`, computed as the average conditional variance.
pub fn dispersion_cost(sol: &CostCapacitySolution) -> f64 {
    sol.p_x_star
        .iter()
        .zip(&sol.cond_var)
        .filter(|(&p, _)| p > 0.0)
        .map(|(p, v)| p * v)
        .sum()
}

/// Outcome of re-solving from randomized starting points.
#[derive(Debug, Clone, PartialEq)]
pub struct CaidProbe {
    pub trials: usize,
    /// Largest pairwise L1 distance between the optimal input distributions.
    pub max_l1_distance: f64,
    pub capacity_min: f64,
    pub capacity_max: f64,
    pub dispersion_min: f64,
    pub dispersion_max: f64,
    pub unique: bool,
    /// At `beta >= beta_max`: slope candidates `(0, left derivative)`.
    pub lambda_candidates: Vec<f64>,
}

/// Default seed for [`caid_uniqueness_probe`].
pub const PROBE_SEED: u64 = 0x5eed_cafe;

pub fn caid_uniqueness_probe(channel: &DmcChannel, beta: f64, trials: usize) -> Result<CaidProbe> {
    caid_uniqueness_probe_seeded(channel, beta, trials, PROBE_SEED)
}

pub fn caid_uniqueness_probe_seeded(channel: &DmcChannel, beta: f64, trials: usize, seed: u64) -> Result<CaidProbe> {
    if trials < 2 {
        return Err(Error::Precondition("probe needs at least two trials".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = channel.input_size();
    let mut sols = Vec::with_capacity(trials);
    for _ in 0..trials {
        // Dirichlet(1, ..., 1) start
        let init: Vec<f64> = (0..a).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        sols.push(solve_capacity_cost_from(channel, beta, DEFAULT_TOL, &init, DEFAULT_MAX_ITERATIONS)?);
    }
    let mut max_l1: f64 = 0.0;
    for i in 0..trials {
        for j in i + 1..trials {
            let d: f64 = sols[i].p_x_star.iter().zip(&sols[j].p_x_star).map(|(a, b)| (a - b).abs()).sum();
            max_l1 = max_l1.max(d);
        }
    }
    let caps = sols.iter().map(|s| s.capacity);
    let capacity_min = caps.clone().fold(f64::INFINITY, f64::min);
    let capacity_max = caps.fold(f64::NEG_INFINITY, f64::max);
    let disp = sols.iter().map(|s| s.dispersion);
    let dispersion_min = disp.clone().fold(f64::INFINITY, f64::min);
    let dispersion_max = disp.fold(f64::NEG_INFINITY, f64::max);
    let unique = !(max_l1 > 1e-6 && capacity_max - capacity_min <= 10.0 * DEFAULT_TOL);

    let mut lambda_candidates = Vec::new();
    if sols[0].lambda_star == 0.0 {
        let beta_max = channel.beta_max(DEFAULT_TOL)?;
        lambda_candidates.push(0.0);
        let below = beta_max - 1e-6;
        if below > channel.beta_min() {
            lambda_candidates.push(solve_capacity_cost(channel, below, DEFAULT_TOL)?.lambda_star);
        }
    }

    Ok(CaidProbe {
        trials,
        max_l1_distance: max_l1,
        capacity_min,
        capacity_max,
        dispersion_min,
        dispersion_max,
        unique,
        lambda_candidates,
    })
}

pub(crate) fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
