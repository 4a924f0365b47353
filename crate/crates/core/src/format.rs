//! Number rendering for CSV and JSON output.

/// Significant digits used in every serialized number.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`-style rendering: 12 significant digits, trailing zeros removed,
/// scientific notation outside `[1e-5, 1e12)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

/// The float nearest to the 12-digit rendering, for JSON output.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_like_printf_g() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(100.0), "100");
        assert_eq!(fmt_num(-2.094523045234753), "-2.09452304523");
        assert_eq!(fmt_num(6.090_413_9e-8), "6.0904139e-8");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123_456_789_012_345.0), "1.23456789012e14");
        assert_eq!(fmt_num(-0.0), "0");
    }

    #[test]
    fn rounding_is_stable() {
        for x in [0.1, 2.0f64.sqrt(), -5.573526022256968, 1e-9 / 7.0] {
            let once = round_sig(x);
            assert_eq!(round_sig(once), once);
            assert_eq!(fmt_num(once), fmt_num(x));
        }
    }
}
