//! Locale-independent number rendering for artifacts.

pub const SIG_DIGITS: i32 = 4;

fn magnitude(x: f64) -> i32 {
    x.abs().log10().floor() as i32
}

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let step = 10f64.powi(magnitude(x) - (SIG_DIGITS - 1));
    (x / step).round() * step
}

/// Fixed-point text with [`SIG_DIGITS`] significant digits. Values outside
/// `[1e-6, 1e15)` in magnitude use scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded = round_sig(x);
    if rounded == 0.0 {
        return "0".to_string();
    }
    let mag = magnitude(rounded);
    if !(-6..15).contains(&mag) {
        return format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    }
    let decimals = (SIG_DIGITS - 1 - mag).max(0) as usize;
    format!("{rounded:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_four_significant_digits() {
        assert_eq!(fmt_sig(156.25), "156.3");
        assert_eq!(fmt_sig(0.012345), "0.01235");
        assert_eq!(fmt_sig(123456.0), "123500");
        assert_eq!(fmt_sig(9.99961), "10.00");
        assert_eq!(fmt_sig(-3.0), "-3.000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(2.5e-9), "2.500e-9");
    }

    #[test]
    fn rendering_is_idempotent() {
        for x in [1.0 / 3.0, 2.0f64.sqrt() * 1e5, 0.000_731_9, 47.2, 1330.0] {
            let once = fmt_sig(x);
            let again = fmt_sig(once.parse().unwrap());
            assert_eq!(once, again);
        }
    }
}
