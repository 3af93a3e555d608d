//! Text formatting for console reports: six significant digits, decimal
//! notation over a moderate exponent range, scientific outside it.

/// Format a number to six significant digits.
///
/// Values whose decimal exponent lies in -4..=5 print in positional
/// notation with trailing zeros trimmed; everything else uses scientific
/// notation. Zero prints as `0`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..=5).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let text = format!("{x:.decimals$}");
        if text.contains('.') {
            let trimmed = text.trim_end_matches('0').trim_end_matches('.');
            trimmed.to_string()
        } else {
            text
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Format a vector as a bracketed, comma-separated list at six digits.
pub fn sig6_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| sig6(*v)).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positional_range_trims_trailing_zeros() {
        assert_eq!(sig6(2.661), "2.661");
        assert_eq!(sig6(1.725_004), "1.725");
        assert_eq!(sig6(0.000123456), "0.000123456");
        assert_eq!(sig6(123456.0), "123456");
        assert_eq!(sig6(-0.5), "-0.5");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn extreme_magnitudes_switch_to_scientific() {
        assert_eq!(sig6(1.234567e9), "1.23457e9");
        assert_eq!(sig6(9.87e-7), "9.87000e-7");
    }

    #[test]
    fn six_digits_survive_the_round_trip() {
        for &x in &[3.141592653589793, 2.718281828459045, 1.0e-3, 4.0 / 3.0] {
            let shown: f64 = sig6(x).parse().unwrap();
            assert!((shown - x).abs() <= 5e-6 * x.abs());
        }
    }
}
