//! Exhaustive-enumeration oracles shared by the integration tests.
#![allow(dead_code)]

use costcap::jscc::{DmsSource, RdSolution};
use costcap::{CostCapacitySolution, DmcChannel};
use rand::Rng;

/// Random channel with strictly positive transition probabilities.
pub fn random_channel(rng: &mut impl Rng, a: usize, b: usize, cost: Vec<f64>) -> DmcChannel {
    let kernel = (0..a)
        .map(|_| {
            let raw: Vec<f64> = (0..b).map(|_| 0.05 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    DmcChannel::new(kernel, cost).unwrap()
}

/// Calls `f` with every sequence in `{0..k}^n`.
pub fn for_each_sequence(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut seq = vec![0usize; n];
    loop {
        f(&seq);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            seq[i] += 1;
            if seq[i] < k {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}

/// Distinct letter-count vectors of all input sequences with total cost at
/// most `n beta` (up to a relative 1e-9).
pub fn brute_force_types(cost: &[f64], n: usize, beta: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for_each_sequence(cost.len(), n, |xs| {
        let total: f64 = xs.iter().map(|&x| cost[x]).sum();
        if total <= n as f64 * beta + 1e-9 * (n as f64 * beta).max(1.0) {
            let mut c = vec![0usize; cost.len()];
            xs.iter().for_each(|&x| c[x] += 1);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    });
    out
}

/// Representative input sequence of a type.
pub fn sequence_of(counts: &[usize]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(x, &c)| std::iter::repeat_n(x, c)).collect()
}

/// Exact law of `sum_i density(x_i, Y_i)` for a fixed input sequence, by
/// enumerating every output sequence.
pub fn exact_sum_law(kernel: &[Vec<f64>], xs: &[usize], density: &dyn Fn(usize, usize) -> f64) -> Vec<(f64, f64)> {
    let b = kernel[0].len();
    let mut atoms = Vec::new();
    for_each_sequence(b, xs.len(), |ys| {
        let mut p = 1.0;
        let mut s = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            p *= kernel[x][y];
            if p == 0.0 {
                return;
            }
            s += density(x, y);
        }
        atoms.push((s, p));
    });
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

pub fn cdf(law: &[(f64, f64)], t: f64) -> f64 {
    law.iter().filter(|a| a.0 <= t).map(|a| a.1).sum()
}

/// `sup { s : P[S <= s] <= p }` for a finite law.
pub fn quantile(law: &[(f64, f64)], p: f64) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    while i < law.len() {
        // All atoms at the same location enter together.
        let v = law[i].0;
        while i < law.len() && law[i].0 == v {
            acc += law[i].1;
            i += 1;
        }
        if acc > p {
            return v;
        }
    }
    f64::INFINITY
}

pub fn expect_exp_clip(law: &[(f64, f64)], t: f64) -> f64 {
    law.iter().map(|&(s, p)| p * (-(s - t).max(0.0)).exp()).sum()
}

/// Exhaustive value of the converse for tiny block lengths: for every
/// source block, the minimum over admissible codewords of
/// `P[J_S - sum_j i(x_j; Y_j) >= gamma]`, averaged over the source.
pub fn jscc_brute_force(
    src: &DmsSource,
    rd: &RdSolution,
    ch: &DmcChannel,
    cc: &CostCapacitySolution,
    k: usize,
    n: usize,
    gamma: f64,
) -> f64 {
    let a = src.alphabet_size();
    let (nx, ny) = (ch.input_size(), ch.output_size());
    let dens = |x: usize, y: usize| (ch.kernel()[x][y] / cc.p_y_star[y]).ln();
    let mut codewords = Vec::new();
    for idx in 0..nx.pow(n as u32) {
        let x: Vec<usize> = (0..n).map(|j| idx / nx.pow(j as u32) % nx).collect();
        let cost: f64 = x.iter().map(|&xi| ch.cost()[xi]).sum();
        if cost <= n as f64 * cc.beta + 1e-9 {
            codewords.push(x);
        }
    }
    let mut total = 0.0;
    for sidx in 0..a.pow(k as u32) {
        let s: Vec<usize> = (0..k).map(|i| sidx / a.pow(i as u32) % a).collect();
        let ps: f64 = s.iter().map(|&si| src.pmf()[si]).product();
        let j: f64 = s.iter().map(|&si| rd.tilted[si]).sum();
        let mut best = f64::INFINITY;
        for x in &codewords {
            let mut p = 0.0;
            for yidx in 0..ny.pow(n as u32) {
                let y: Vec<usize> = (0..n).map(|t| yidx / ny.pow(t as u32) % ny).collect();
                let w: f64 = x.iter().zip(&y).map(|(&xi, &yi)| ch.kernel()[xi][yi]).product();
                let i: f64 = x.iter().zip(&y).map(|(&xi, &yi)| dens(xi, yi)).sum();
                if j - i >= gamma {
                    p += w;
                }
            }
            best = best.min(p);
        }
        total += ps * best;
    }
    (total - (-gamma).exp()).max(0.0)
}
