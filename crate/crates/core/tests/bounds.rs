mod common;

use common::*;
use costcap::bounds::*;
use costcap::dmc::{solve_capacity_cost, tilted_density, CostCapacitySolution, DEFAULT_TOL};
use costcap::special::q_func;
use costcap::DmcChannel;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LN2: f64 = std::f64::consts::LN_2;

fn bsc_setup() -> (DmcChannel, CostCapacitySolution) {
    let ch = DmcChannel::bsc(0.11).unwrap();
    let sol = solve_capacity_cost(&ch, 0.25, DEFAULT_TOL).unwrap();
    (ch, sol)
}

fn random_3x3() -> (DmcChannel, CostCapacitySolution) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ch = random_channel(&mut rng, 3, 3, vec![0.0, 0.5, 1.0]);
    let sol = solve_capacity_cost(&ch, 0.4, DEFAULT_TOL).unwrap();
    (ch, sol)
}

fn opts(form: ConverseForm) -> BoundOptions {
    BoundOptions { converse_form: form, ..BoundOptions::default() }
}

/// Exact per-type laws of the converse statistic.
fn exact_laws(ch: &DmcChannel, sol: &CostCapacitySolution, n: usize, form: ConverseForm) -> Vec<Vec<(f64, f64)>> {
    let dens = |x: usize, y: usize| match form {
        ConverseForm::Tilted => tilted_density(ch, sol, x, y).unwrap(),
        ConverseForm::Plain => (ch.kernel()[x][y] / sol.p_y_star[y]).ln(),
    };
    brute_force_types(ch.cost(), n, sol.beta)
        .iter()
        .map(|t| exact_sum_law(ch.kernel(), &sequence_of(t), &dens))
        .collect()
}

fn exact_converse(laws: &[Vec<(f64, f64)>], log_m: f64, gamma: f64) -> f64 {
    let m = laws.iter().map(|l| cdf(l, log_m - gamma)).fold(f64::INFINITY, f64::min);
    (m - (-gamma).exp()).max(0.0)
}

#[test]
fn type_count_matches_brute_force() {
    let ch = DmcChannel::new(vec![vec![0.5, 0.5]; 3], vec![0.0, 1.0, 2.0]).unwrap();
    let types = enumerate_admissible_types(&ch, 0.5, 10, DEFAULT_TYPE_BUDGET).unwrap();
    let mut brute = brute_force_types(ch.cost(), 10, 0.5);
    assert_eq!(types.len(), brute.len());
    brute.sort_by(|a, b| b.cmp(a));
    let got: Vec<Vec<usize>> = types.iter().map(|t| t.counts.clone()).collect();
    assert_eq!(got, brute);
}

#[test]
fn converse_epsilon_matches_exhaustive_enumeration() {
    for (ch, sol) in [bsc_setup(), random_3x3()] {
        for form in [ConverseForm::Plain, ConverseForm::Tilted] {
            for n in 2..=8 {
                let conv = ChannelConverse::new(&ch, &sol, n, &opts(form)).unwrap();
                let laws = exact_laws(&ch, &sol, n, form);
                assert_eq!(conv.types().len(), laws.len());
                let slack = n as f64 * 0.5e-6;
                let nc = n as f64 * sol.capacity;
                for log_m in [0.5 * nc, nc, nc + 1.3, nc + 4.1] {
                    for gamma in [0.25, 0.7, 1.9] {
                        let got = conv.epsilon(log_m, gamma).unwrap();
                        let exact = exact_converse(&laws, log_m, gamma);
                        let loose = exact_converse(&laws, log_m - 2.0 * slack, gamma);
                        assert!(got <= exact + 1e-12, "n={n} {form:?}: {got} > {exact}");
                        assert!(got >= loose - 1e-12, "n={n} {form:?}: {got} < {loose}");
                        assert!((got - exact).abs() <= 1e-4);
                    }
                }
            }
        }
    }
}

#[test]
fn bsc_converse_example_point() {
    let (ch, sol) = bsc_setup();
    let n = 6;
    let log_m = 3.0 * LN2;
    let laws = exact_laws(&ch, &sol, n, ConverseForm::Plain);
    let got = converse_epsilon(&ch, &sol, n, log_m, 0.5).unwrap();
    assert!((got - exact_converse(&laws, log_m, 0.5)).abs() <= 1e-4);
}

#[test]
fn converse_log_m_matches_exhaustive_sweep() {
    for (ch, sol) in [bsc_setup(), random_3x3()] {
        let n = 8;
        let eps = 0.3;
        let conv = ChannelConverse::new(&ch, &sol, n, &BoundOptions::default()).unwrap();
        let laws = exact_laws(&ch, &sol, n, ConverseForm::Plain);
        let grid = GammaGrid::default().initial(n as f64 * sol.capacity + 5.0);
        let exact = grid
            .iter()
            .map(|&g| {
                let p = eps + (-g).exp();
                g + laws.iter().map(|l| quantile(l, p)).fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let got = conv.log_m_on_grid(eps, &grid).unwrap();
        let slack = n as f64 * 0.5e-6;
        assert!(got.log_m >= exact - 1e-9 && got.log_m <= exact + 2.0 * slack + 1e-9, "{} vs {exact}", got.log_m);
    }
}

#[test]
fn small_log_m_gives_trivial_converse() {
    let (ch, sol) = bsc_setup();
    let v = converse_epsilon(&ch, &sol, 20, 1e-9, 1.0).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn dt_bound_matches_exhaustive_enumeration() {
    for (ch, sol) in [bsc_setup(), random_3x3()] {
        for n in 2..=8 {
            let dt = DtAchievability::new(&ch, &sol, n, &BoundOptions::default()).unwrap();

            // Nearest admissible type, first in descending lexicographic order on ties.
            let mut types = brute_force_types(ch.cost(), n, sol.beta);
            types.sort_by(|a, b| b.cmp(a));
            let dist = |t: &Vec<usize>| -> f64 {
                t.iter().zip(&sol.p_x_star).map(|(&c, p)| (c as f64 / n as f64 - p).powi(2)).sum()
            };
            let mut best = &types[0];
            for t in &types {
                if dist(t) < dist(best) {
                    best = t;
                }
            }
            assert_eq!(&dt.code_type().counts, best);

            // K_n from factorials.
            let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
            let multinomial = fact(n) / best.iter().map(|&c| fact(c)).product::<f64>();
            let entropy: f64 = best
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n as f64;
                    -p * p.ln()
                })
                .sum();
            let k_n = n as f64 * entropy - multinomial.ln();
            assert!((dt.correction() - k_n).abs() < 1e-10);

            let freq: Vec<f64> = best.iter().map(|&c| c as f64 / n as f64).collect();
            let q = ch.output_distribution(&freq);
            let dens = |x: usize, y: usize| (ch.kernel()[x][y] / q[y]).ln();
            let law = exact_sum_law(ch.kernel(), &sequence_of(best), &dens);
            for log_m in [0.3, 1.0, 2.0 * LN2, n as f64 * sol.capacity, n as f64 * 0.9] {
                let thr = ((log_m.exp() - 1.0) / 2.0).ln() + k_n;
                let exact = expect_exp_clip(&law, thr);
                let got = dt.epsilon(log_m).unwrap();
                assert!(got >= exact - 1e-12, "n={n} log_m={log_m}: {got} < {exact}");
                assert!(got - exact <= 1e-4);
            }
        }
    }
}

#[test]
fn dt_bound_agrees_with_monte_carlo() {
    use rand::Rng;
    let (ch, sol) = bsc_setup();
    let n = 6;
    let dt = DtAchievability::new(&ch, &sol, n, &BoundOptions::default()).unwrap();
    let t = dt.code_type().clone();
    let q = ch.output_distribution(&t.frequencies());
    let thr = dt.threshold(2.0 * LN2);
    let xs = sequence_of(&t.counts);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let samples = 400_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut s = 0.0;
        for &x in &xs {
            let flip = rng.random::<f64>() < 0.11;
            let y = if flip { 1 - x } else { x };
            s += (ch.kernel()[x][y] / q[y]).ln();
        }
        let v = (-(s - thr).max(0.0)).exp();
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / samples as f64;
    let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
    let got = dt.epsilon(2.0 * LN2).unwrap();
    assert!((got - mean).abs() <= 3.0 * se, "{got} vs {mean} +- {se}");
}

#[test]
fn single_message_needs_no_channel() {
    let (ch, sol) = bsc_setup();
    assert_eq!(dt_achievability_epsilon(&ch, &sol, 10, 0.0).unwrap(), 0.0);
}

#[test]
fn normal_approximation_values() {
    let (_, sol) = bsc_setup();
    let n = 1000;
    let half = normal_approx(&sol, n, 0.5, ThirdOrder::HalfLogN).unwrap();
    assert_eq!(half, n as f64 * sol.capacity + 0.5 * (n as f64).ln());
    let v = normal_approx(&sol, n, 1e-3, ThirdOrder::HalfLogN).unwrap() / LN2;
    // 387.40 - 26.039 * 3.0902 + 4.98 bits
    assert!((v - 311.9).abs() < 0.1, "{v}");
    let none = normal_approx(&sol, n, 1e-3, ThirdOrder::None).unwrap();
    assert!((half - none - 0.5 * (n as f64).ln() - (n as f64 * sol.dispersion).sqrt() * 3.090_232_306_167_813).abs() < 1e-6);
    assert!(normal_approx(&sol, n, 1.0, ThirdOrder::None).is_err());
}

#[test]
fn zero_dispersion_has_no_epsilon_dependence() {
    let ch = DmcChannel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 1.0]).unwrap();
    let sol = solve_capacity_cost(&ch, 0.5, DEFAULT_TOL).unwrap();
    let a = normal_approx(&sol, 100, 1e-3, ThirdOrder::HalfLogN).unwrap();
    let b = normal_approx(&sol, 100, 0.2, ThirdOrder::HalfLogN).unwrap();
    assert!((a - b).abs() < 1e-9);
    assert!((a - 100.0 * LN2 - 0.5 * 100f64.ln()).abs() < 1e-6);
}

#[test]
fn converse_at_median_is_near_n_capacity() {
    let (ch, sol) = bsc_setup();
    let n = 1000;
    let c = converse_log_m(&ch, &sol, n, 0.5).unwrap();
    let nc = n as f64 * sol.capacity;
    let w = 3.0 * (n as f64).ln();
    assert!(c.log_m >= nc - w && c.log_m <= nc + w, "{} vs {nc}", c.log_m);
}

#[test]
fn sandwich_and_monotonicity_in_epsilon() {
    let (ch, sol) = bsc_setup();
    let n = 300;
    let o = BoundOptions::default();
    let conv = ChannelConverse::new(&ch, &sol, n, &o).unwrap();
    let dt = DtAchievability::new(&ch, &sol, n, &o).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for eps in [1e-4, 1e-2, 0.5, 0.999] {
        let a = dt.log_m(eps).unwrap().log_m;
        let c = conv.log_m(eps).unwrap().log_m;
        assert!(a <= c, "eps={eps}: {a} > {c}");
        assert!(a > prev);
        prev = a;
    }
}

#[test]
fn plain_form_is_at_least_as_tight() {
    let (ch, sol) = bsc_setup();
    for n in [50, 200] {
        let plain = ChannelConverse::new(&ch, &sol, n, &opts(ConverseForm::Plain)).unwrap().log_m(1e-2).unwrap();
        let tilted = ChannelConverse::new(&ch, &sol, n, &opts(ConverseForm::Tilted)).unwrap().log_m(1e-2).unwrap();
        assert!(plain.log_m <= tilted.log_m + 1e-9);
    }
}

#[test]
fn strong_converse_examples() {
    let (ch, sol) = bsc_setup();
    let o = BoundOptions::default();
    let conv = ChannelConverse::new(&ch, &sol, 2000, &o).unwrap();
    assert!(conv.epsilon(2000.0 * 0.45 * LN2, 20.0).unwrap() >= 0.9);

    let rate = sol.capacity + 0.1;
    let curve = strong_converse_curve(&ch, &sol, rate, &[200, 2000], 0.02, &o).unwrap();
    assert!(curve[1].1 >= curve[0].1);
    assert!(curve.iter().all(|&(_, e)| (0.0..=1.0).contains(&e)));

    let err = strong_converse_curve(&ch, &sol, sol.capacity, &[100], 0.02, &o).unwrap_err();
    assert_eq!(err.name(), "Precondition");
}

#[test]
fn strong_converse_beats_chebyshev() {
    let (ch, sol) = bsc_setup();
    let o = BoundOptions::default();
    let alpha = 0.01;
    let rate = sol.capacity + 0.05 * LN2;
    for n in [500, 1000, 2000] {
        let conv = ChannelConverse::new(&ch, &sol, n, &o).unwrap();
        let got = conv.epsilon(n as f64 * rate, n as f64 * alpha).unwrap();
        // P[S > a] <= Var / (a - mean)^2 for a above the mean of every type.
        let a = n as f64 * (rate - alpha);
        let mut worst: f64 = 0.0;
        for (i, t) in conv.types().iter().enumerate() {
            let var: f64 = t.counts.iter().zip(&sol.cond_var).map(|(&c, v)| c as f64 * v).sum();
            let mean = n as f64 * sol.capacity - conv.shift(i);
            worst = worst.max(var / (a - mean).powi(2));
        }
        let cheb = (1.0 - worst - (-(n as f64) * alpha).exp()).max(0.0);
        assert!(got >= cheb - 1e-9, "n={n}: {got} < {cheb}");
    }
}

#[test]
fn curve_csv_layout() {
    let (ch, sol) = bsc_setup();
    let curve = bound_curve(&ch, &sol, &[20, 40], &[1e-2], &BoundOptions::default()).unwrap();
    let csv = curve.to_csv_string(costcap::Units::Bits);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,epsilon,converse_bits,achievability_bits,normal_approx_bits,gamma_nats,slack_nats,types_evaluated"
    );
    assert_eq!(lines.len(), 3);
    for p in &curve.points {
        assert!(p.log_m_achievability.unwrap() <= p.log_m_converse);
    }
    let nats = curve.to_csv_string(costcap::Units::Nats);
    assert!(nats.starts_with("n,epsilon,converse_nats"));
    assert_eq!(csv, bound_curve(&ch, &sol, &[20, 40], &[1e-2], &BoundOptions::default()).unwrap().to_csv_string(costcap::Units::Bits));
}

#[test]
fn lattice_warning_for_single_letter_support() {
    let ch = DmcChannel::new(vec![vec![0.9, 0.1], vec![0.9, 0.1]], vec![0.0, 1.0]).unwrap();
    let sol = solve_capacity_cost(&ch, 0.5, DEFAULT_TOL).unwrap();
    assert!(costcap::bounds::curve::density_span(&ch, &sol).unwrap().is_none());
    let (ch, sol) = bsc_setup();
    assert!(costcap::bounds::curve::density_span(&ch, &sol).unwrap().is_none());
    let bec = DmcChannel::new(vec![vec![0.8, 0.2, 0.0], vec![0.0, 0.2, 0.8]], vec![0.0, 0.0]).unwrap();
    let sol = solve_capacity_cost(&bec, 0.5, DEFAULT_TOL).unwrap();
    assert!(costcap::bounds::curve::density_span(&bec, &sol).unwrap().is_some());
}

#[test]
fn q_of_inverse_is_consistent() {
    assert!((q_func(3.090_232_306_167_813) - 1e-3).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gamma_optimization_only_tightens(seed in any::<u64>(), n in 4usize..16, frac in 0.8f64..1.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 3, 3, vec![0.0, 0.5, 1.0]);
        let sol = solve_capacity_cost(&ch, 0.5, DEFAULT_TOL).unwrap();
        let conv = ChannelConverse::new(&ch, &sol, n, &BoundOptions::default()).unwrap();
        let log_m = (frac * n as f64 * sol.capacity).max(0.1);
        let (best, _) = conv.epsilon_optimized(log_m).unwrap();
        let grid = GammaGrid::default().initial((n as f64 * sol.capacity).max(log_m).max(5.0));
        for g in grid.iter().step_by(7) {
            prop_assert!(conv.epsilon(log_m, *g).unwrap() <= best + 1e-15);
        }
    }

    #[test]
    fn achievability_never_exceeds_converse(seed in any::<u64>(), n in 2usize..16, eps in 0.001f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 3, 3, vec![0.0, 0.5, 1.0]);
        let sol = solve_capacity_cost(&ch, 0.4, DEFAULT_TOL).unwrap();
        let o = BoundOptions::default();
        let a = DtAchievability::new(&ch, &sol, n, &o).unwrap().log_m(eps).unwrap();
        let c = ChannelConverse::new(&ch, &sol, n, &o).unwrap().log_m(eps).unwrap();
        prop_assert!(a.log_m <= c.log_m, "{} > {}", a.log_m, c.log_m);
    }
}
