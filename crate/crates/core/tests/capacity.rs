use costcap::dmc::{
    caid_uniqueness_probe, conditional_tilted_pmf, dispersion_cost, solve_capacity_cost, tilted_density,
    DEFAULT_TOL,
};
use costcap::special::binary_entropy;
use costcap::DmcChannel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOG2E: f64 = std::f64::consts::LOG2_E;

fn random_channel(rng: &mut impl Rng) -> DmcChannel {
    let a = rng.random_range(2..=5);
    let b = rng.random_range(2..=5);
    loop {
        let kernel: Vec<Vec<f64>> = (0..a)
            .map(|_| {
                let raw: Vec<f64> = (0..b).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = raw.iter().sum();
                let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let last = 1.0 - row[..b - 1].iter().sum::<f64>();
                row[b - 1] = last.max(0.0);
                row
            })
            .collect();
        let cost: Vec<f64> = (0..a).map(|_| rng.random::<f64>() * 2.0).collect();
        if let Ok(ch) = DmcChannel::new(kernel, cost) {
            return ch;
        }
    }
}

fn pick_beta(ch: &DmcChannel, rng: &mut impl Rng) -> f64 {
    let lo = ch.beta_min();
    let hi = ch.beta_max(DEFAULT_TOL).unwrap();
    lo + (0.02 + 1.1 * rng.random::<f64>()) * (hi - lo).max(1e-3)
}

#[test]
fn kkt_and_variance_identity_on_random_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for trial in 0..50 {
        let ch = random_channel(&mut rng);
        let beta = pick_beta(&ch, &mut rng);
        let sol = solve_capacity_cost(&ch, beta, DEFAULT_TOL).unwrap();
        for x in 0..ch.input_size() {
            assert!(sol.cond_mean[x] <= sol.capacity + 1e-6, "trial {trial} x {x}: {sol:?}");
            if sol.p_x_star[x] > 0.0 {
                assert!((sol.cond_mean[x] - sol.capacity).abs() <= 1e-6, "trial {trial} x {x}: {sol:?}");
            }
        }
        let v: f64 = sol.p_x_star.iter().zip(&sol.cond_var).map(|(p, v)| p * v).sum();
        assert!((dispersion_cost(&sol) - v).abs() <= 1e-10);
        assert!(sol.active_cost <= beta + 1e-10);
        if sol.lambda_star > 0.0 {
            assert!((sol.active_cost - beta).abs() <= 1e-8, "trial {trial}: {sol:?}");
        }
    }
}

#[test]
fn bsc_closed_forms() {
    let delta: f64 = 0.11;
    let beta = 0.25;
    let ch = DmcChannel::bsc(delta).unwrap();
    let sol = solve_capacity_cost(&ch, beta, DEFAULT_TOL).unwrap();
    let conv = beta * (1.0 - delta) + (1.0 - beta) * delta;
    let c = binary_entropy(conv) - binary_entropy(delta);
    assert!(((sol.capacity - c) * LOG2E).abs() < 1e-9);
    assert!((sol.capacity * LOG2E - 0.38740).abs() < 5e-6);
    let lam = (1.0 - 2.0 * delta) * ((1.0 - conv) / conv).ln();
    assert!((sol.lambda_star - lam).abs() < 1e-7);

    // Four atoms of j(X*;Y*): (x, y) with probabilities p(x) W(y|x).
    let mut atoms = Vec::new();
    for (x, px) in [(0usize, 1.0 - beta), (1, beta)] {
        for y in 0..2 {
            let w = if x == y { 1.0 - delta } else { delta };
            let q = if y == 1 { conv } else { 1.0 - conv };
            let value = (w / q).ln() - lam * (x as f64 - beta);
            atoms.push((value, px * w));
            assert!((tilted_density(&ch, &sol, x, y).unwrap() - value).abs() < 1e-8);
        }
    }
    let mean: f64 = atoms.iter().map(|(v, p)| v * p).sum();
    let second: f64 = atoms.iter().map(|(v, p)| v * v * p).sum();
    let var = second - mean * mean;
    assert!((mean - c).abs() < 1e-9);
    assert!((sol.dispersion - var).abs() < 1e-8);
    assert!((sol.dispersion * LOG2E * LOG2E - 0.6781).abs() < 5e-4);
}

#[test]
fn lambda_matches_finite_difference() {
    let ch = DmcChannel::bsc(0.11).unwrap();
    let h = 1e-4;
    for beta in [0.1, 0.25, 0.4] {
        let sol = solve_capacity_cost(&ch, beta, DEFAULT_TOL).unwrap();
        let up = solve_capacity_cost(&ch, beta + h, DEFAULT_TOL).unwrap().capacity;
        let down = solve_capacity_cost(&ch, beta - h, DEFAULT_TOL).unwrap().capacity;
        let fd = (up - down) / (2.0 * h);
        assert!((sol.lambda_star - fd).abs() < 1e-3f64.max(10.0 * h), "{beta}: {} vs {fd}", sol.lambda_star);
    }
}

#[test]
fn zero_cost_channel_gives_plain_information_density() {
    let ch = DmcChannel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]], vec![0.0, 0.0]).unwrap();
    let sol = solve_capacity_cost(&ch, 0.5, DEFAULT_TOL).unwrap();
    assert_eq!(sol.lambda_star, 0.0);
    for x in 0..2 {
        for y in 0..3 {
            let i = (ch.kernel()[x][y] / sol.p_y_star[y]).ln();
            assert!((tilted_density(&ch, &sol, x, y).unwrap() - i).abs() < 1e-15);
        }
    }
}

#[test]
fn letter_at_cost_level_has_no_tilt() {
    let ch = DmcChannel::new(
        vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]],
        vec![0.0, 0.3, 1.0],
    )
    .unwrap();
    let sol = solve_capacity_cost(&ch, 0.3, DEFAULT_TOL).unwrap();
    assert!(sol.lambda_star > 0.0);
    for y in 0..3 {
        let i = (ch.kernel()[1][y] / sol.p_y_star[y]).ln();
        assert!((tilted_density(&ch, &sol, 1, y).unwrap() - i).abs() < 1e-15);
    }
}

#[test]
fn single_atom_rows() {
    let ch = DmcChannel::new(
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
        vec![0.0, 1.0, 0.5],
    )
    .unwrap();
    let sol = solve_capacity_cost(&ch, 0.3, DEFAULT_TOL).unwrap();
    assert_eq!(conditional_tilted_pmf(&ch, &sol, 0).unwrap().len(), 1);

    let uniform = DmcChannel::new(vec![vec![0.25; 4]; 2], vec![0.0, 1.0]).unwrap();
    let sol = solve_capacity_cost(&uniform, 0.5, DEFAULT_TOL).unwrap();
    let atoms = conditional_tilted_pmf(&uniform, &sol, 1).unwrap();
    let expect = -sol.lambda_star * (1.0 - 0.5);
    assert!(atoms.iter().all(|(v, _)| (v - expect).abs() < 1e-12));
}

#[test]
fn inactive_constraint_matches_unconstrained_dispersion() {
    let ch = DmcChannel::bsc(0.11).unwrap();
    let sol = solve_capacity_cost(&ch, 0.75, DEFAULT_TOL).unwrap();
    let l = (0.89f64 / 0.5).ln();
    let s = (0.11f64 / 0.5).ln();
    let m = 0.89 * l + 0.11 * s;
    let v = 0.89 * l * l + 0.11 * s * s - m * m;
    assert!((sol.dispersion - v).abs() < 1e-10);
}

#[test]
fn probe_on_identity_channel() {
    let ch = DmcChannel::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], vec![0.0; 3])
        .unwrap();
    let probe = caid_uniqueness_probe(&ch, 0.5, 2).unwrap();
    assert!(probe.unique, "{probe:?}");
    assert!(caid_uniqueness_probe(&ch, 0.5, 1).is_err());
}

#[test]
fn probe_reports_lambda_candidates_beyond_beta_max() {
    let ch = DmcChannel::bsc(0.11).unwrap();
    let probe = caid_uniqueness_probe(&ch, 0.5, 3).unwrap();
    assert_eq!(probe.lambda_candidates.first(), Some(&0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_is_monotone_and_concave(seed in any::<u64>(), u in 0.05f64..0.95, w in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng);
        let lo = ch.beta_min();
        let hi = ch.beta_max(DEFAULT_TOL).unwrap();
        prop_assume!(hi - lo > 1e-3);
        let b1 = lo + 0.5 * u.min(w) * (hi - lo);
        let b3 = lo + (0.5 + 0.5 * u.max(w)) * (hi - lo);
        let b2 = 0.5 * (b1 + b3);
        let tol = DEFAULT_TOL;
        let c1 = solve_capacity_cost(&ch, b1, tol).unwrap().capacity;
        let c2 = solve_capacity_cost(&ch, b2, tol).unwrap().capacity;
        let c3 = solve_capacity_cost(&ch, b3, tol).unwrap().capacity;
        prop_assert!(c1 <= c2 + 10.0 * tol && c2 <= c3 + 10.0 * tol);
        prop_assert!(c2 >= 0.5 * (c1 + c3) - 10.0 * tol);
    }

    #[test]
    fn solution_is_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng);
        let beta = pick_beta(&ch, &mut rng);
        let sol = solve_capacity_cost(&ch, beta, DEFAULT_TOL).unwrap();
        prop_assert!((sol.p_x_star.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!((sol.p_y_star.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let pushed = ch.output_distribution(&sol.p_x_star);
        for (a, b) in pushed.iter().zip(&sol.p_y_star) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        // The tilt is constant given x, so the conditional variance of the
        // tilted density equals that of the plain information density.
        for x in 0..ch.input_size() {
            let atoms: Vec<(f64, f64)> = (0..ch.output_size())
                .filter(|&y| ch.kernel()[x][y] > 0.0)
                .map(|y| ((ch.kernel()[x][y] / sol.p_y_star[y]).ln(), ch.kernel()[x][y]))
                .collect();
            let m: f64 = atoms.iter().map(|(v, p)| v * p).sum();
            let var: f64 = atoms.iter().map(|(v, p)| p * (v - m) * (v - m)).sum();
            prop_assert!((var - sol.cond_var[x]).abs() < 1e-10);
            let pmf = conditional_tilted_pmf(&ch, &sol, x).unwrap();
            prop_assert!((pmf.iter().map(|a| a.1).sum::<f64>() - 1.0).abs() < 1e-12);
            let mean: f64 = pmf.iter().map(|(v, p)| v * p).sum();
            prop_assert!((mean - sol.cond_mean[x]).abs() < 1e-12);
        }
    }
}
