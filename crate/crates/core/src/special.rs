//! Special functions: Gaussian tail and its inverse, log-multinomials and the
//! noncentral chi-square distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use statrs::function::erf::erfc_inv;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Gaussian complementary cdf, `Q(x) = P[N(0,1) > x]`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`q_func`] on `(0, 1)`.
///
/// Starts from the rational `erfc` inverse and applies Newton steps on the
/// relative residual of `Q`, which brings `Q(q_inv(p))` to within a few ulps
/// of `p` even deep in the tail.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(format!("q_inv requires 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Q(-x) = 1 - Q(x); 1 - p is exact for p in [0.5, 1).
    if p > 0.5 {
        return Ok(-upper_tail_inv(1.0 - p));
    }
    Ok(upper_tail_inv(p))
}

fn upper_tail_inv(p: f64) -> f64 {
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..3 {
        let phi = normal_pdf(x);
        if phi <= 0.0 {
            break;
        }
        let step = (q_func(x) - p) / phi;
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Natural log of the multinomial coefficient `n! / prod(c_i!)`.
pub fn ln_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut acc = ln_factorial(n as u64);
    for &c in counts {
        if c > 1 {
            acc -= ln_factorial(c as u64);
        }
    }
    acc
}

/// Entropy (nats) of the empirical distribution `counts / n`.
pub fn type_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0 && c < n)
        .map(|&c| {
            let p = c as f64 / nf;
            -p * p.ln()
        })
        .sum()
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

/// Bracketed value of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub lower: f64,
    pub upper: f64,
    pub terms: usize,
}

/// Relative Poisson tail at which the noncentral chi-square series stops.
pub const NCX2_TAIL: f64 = 1e-12;
/// Maximum number of Poisson terms summed.
pub const NCX2_MAX_TERMS: usize = 1_000_000;

/// `P[W <= x]` for `W` noncentral chi-square with `df` degrees of freedom and
/// noncentrality `ncp`.
///
/// Evaluated as the Poisson(ncp/2) mixture of central chi-square cdfs,
/// summed outward from the Poisson mode. The unsummed Poisson mass bounds the
/// truncation error, so `lower <= cdf <= upper`.
pub fn noncentral_chi2_cdf(x: f64, df: f64, ncp: f64) -> Result<SeriesValue> {
    if !(df > 0.0) || !(ncp >= 0.0) || x.is_nan() {
        return Err(Error::DomainError(format!(
            "noncentral chi-square needs df > 0, ncp >= 0 (df={df}, ncp={ncp}, x={x})"
        )));
    }
    if x <= 0.0 {
        return Ok(SeriesValue { lower: 0.0, upper: 0.0, terms: 0 });
    }
    if x == f64::INFINITY {
        return Ok(SeriesValue { lower: 1.0, upper: 1.0, terms: 0 });
    }
    let half_x = 0.5 * x;
    let mu = 0.5 * ncp;
    if mu == 0.0 {
        let v = gamma_lr(0.5 * df, half_x);
        return Ok(SeriesValue { lower: v, upper: v, terms: 1 });
    }

    let ln_weight = |j: f64| -mu + j * mu.ln() - ln_gamma(j + 1.0);
    let term = |j: f64| gamma_lr(0.5 * df + j, half_x);

    let mode = mu.floor();
    let w_mode = ln_weight(mode).exp();
    let mut acc = 0.0;
    let mut terms = 0usize;

    // Upward from the mode (inclusive). The central cdf terms decrease in j,
    // so the unsummed upper Poisson tail contributes at most tail * t_last.
    let mut j = mode;
    let mut w = w_mode;
    let mut t_last;
    loop {
        t_last = term(j);
        acc += w * t_last;
        terms += 1;
        j += 1.0;
        w *= mu / j;
        let ratio = mu / (j + 1.0);
        let rem = if ratio < 1.0 { w / (1.0 - ratio) } else { f64::INFINITY };
        if rem * t_last <= NCX2_TAIL * acc || rem < 1e-300 {
            break;
        }
        if terms > NCX2_MAX_TERMS {
            return Err(Error::SeriesBudget { terms });
        }
    }
    let upper_tail = if j > 0.0 { gamma_lr(j, mu) } else { 1.0 };
    let up_extra = upper_tail * t_last;

    // Downward from the mode. Terms increase as j decreases and never
    // exceed 1.
    let mut j_lo = mode;
    let mut w = w_mode;
    let mut t_low = t_last;
    while j_lo >= 1.0 {
        w *= j_lo / mu;
        j_lo -= 1.0;
        t_low = term(j_lo);
        acc += w * t_low;
        terms += 1;
        let ratio = j_lo / mu;
        let rem = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if rem <= NCX2_TAIL * acc || rem < 1e-300 {
            break;
        }
        if terms > NCX2_MAX_TERMS {
            return Err(Error::SeriesBudget { terms });
        }
    }
    let lower_tail = if j_lo >= 1.0 { statrs::function::gamma::gamma_ur(j_lo, mu) } else { 0.0 };

    // Allowance for the accuracy of the incomplete-gamma evaluations.
    let fp = 1e-11 * acc + 1e-300;
    Ok(SeriesValue {
        lower: (acc + lower_tail * t_low - fp).max(0.0),
        upper: (acc + lower_tail + up_extra + fp).min(1.0),
        terms,
    })
}

/// Smallest `s` in `[lo, hi]` (to within `tol`) with `f(s) > p`, for a
/// nondecreasing `f`. Returns `hi` when `f(hi) <= p`.
pub(crate) fn bisect_crossing(
    mut lo: f64,
    mut hi: f64,
    p: f64,
    tol: f64,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    if f(hi)? <= p {
        return Ok(hi);
    }
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_inv_half_is_zero() {
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn q_inv_table_value() {
        // standard normal table: z_{0.999} = 3.090232306...
        let z = q_inv(1e-3).unwrap();
        assert!((z - 3.090_232_306_167_813).abs() < 1e-9, "{z}");
    }

    #[test]
    fn q_inv_inverts_q_tightly() {
        for &p in &[1e-300, 1e-15, 1e-8, 1e-4, 0.01, 0.2, 0.4999, 0.5001, 0.8, 0.99, 1.0 - 1e-9] {
            let x = q_inv(p).unwrap();
            let rel = (q_func(x) - p).abs() / p;
            assert!(rel < 1e-12, "p={p} x={x} rel={rel}");
        }
    }

    #[test]
    fn q_inv_rejects_outside_unit_interval() {
        for &p in &[0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(q_inv(p), Err(Error::DomainError(_))));
        }
    }

    #[test]
    fn q_roundtrip_on_grid() {
        let mut x = -6.0f64;
        while x <= 6.0 {
            let p = q_func(x);
            let back = q_inv(p).unwrap();
            // For x < 0, p is close to 1 and its rounding alone moves the
            // inverse by up to ulp(p) / phi(x).
            let resolution = f64::EPSILON * p / normal_pdf(x);
            assert!((back - x).abs() < 1e-9 + 2.0 * resolution, "x={x} back={back}");
            x += 0.25;
        }
    }

    #[test]
    fn multinomial_of_single_class_is_zero() {
        assert_eq!(ln_multinomial(&[17, 0, 0]), 0.0);
        assert_eq!(type_entropy(&[17, 0, 0]), 0.0);
    }

    #[test]
    fn multinomial_small_values() {
        // 6! / (2! 3! 1!) = 60
        assert!((ln_multinomial(&[2, 3, 1]) - 60f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn central_chi2_matches_closed_form_df2() {
        // df = 2: cdf = 1 - exp(-x/2)
        let v = noncentral_chi2_cdf(3.0, 2.0, 0.0).unwrap();
        assert!((v.lower - (1.0 - (-1.5f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn ncx2_df1_matches_gaussian_closed_form() {
        // W = (Z + sqrt(ncp))^2
        for &(x, ncp) in &[(2.0f64, 1.0f64), (0.3, 4.0), (10.0, 2.5), (50.0, 30.0)] {
            let r: f64 = ncp;
            let exact = q_func(-x.sqrt() - r.sqrt()) - q_func(x.sqrt() - r.sqrt());
            let v = noncentral_chi2_cdf(x, 1.0, ncp).unwrap();
            assert!(v.lower - 1e-12 <= exact && exact <= v.upper + 1e-12, "{x} {ncp}: {v:?} vs {exact}");
            assert!(v.upper - v.lower < 1e-10);
        }
    }
}
