//! Number formatting shared by the CSV writers.

/// Decimal rendering with `digits` significant digits. Very large or very
/// small magnitudes switch to exponent notation.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let digits = digits.max(1);
    let e = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&e) {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i32 - 1 - e).max(0) as usize;
    format!("{v:.decimals$}")
}

/// [`format_sig`] with trailing zeros removed.
pub fn format_compact(v: f64, digits: usize) -> String {
    trim_zeros(&format_sig(v, digits))
}

/// [`format_compact`] with 12 digits, or an empty field for missing values.
pub fn csv_number(v: Option<f64>) -> String {
    v.map(|x| format_compact(x, 12)).unwrap_or_default()
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    if !mantissa.contains('.') {
        return s.to_string();
    }
    format!("{}{exp}", mantissa.trim_end_matches('0').trim_end_matches('.'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(format_sig(387.401234567890, 12), "387.401234568");
        assert_eq!(format_sig(0.000123456789012345, 12), "0.000123456789012");
        assert_eq!(format_sig(-2.5, 3), "-2.50");
        assert_eq!(format_sig(1e-9, 3), "1.00e-9");
        assert_eq!(format_sig(0.0, 12), "0");
    }

    #[test]
    fn csv_trims_trailing_zeros() {
        assert_eq!(csv_number(Some(0.001)), "0.001");
        assert_eq!(csv_number(Some(200.0)), "200");
        assert_eq!(csv_number(Some(1e-9)), "1e-9");
        assert_eq!(csv_number(Some(-2.5e20)), "-2.5e20");
        assert_eq!(csv_number(None), "");
    }
}
