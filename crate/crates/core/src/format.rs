//! Text formatting shared by the CSV and JSON outputs.

use serde::Serializer;

/// Significant digits used for every floating-point value written to disk.
pub const SIG_DIGITS: usize = 9;

/// `%g`-style formatting with `digits` significant digits; infinities print as `inf`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Shorthand for [`fmt_sig`] with [`SIG_DIGITS`].
pub fn fmt9(x: f64) -> String {
    fmt_sig(x, SIG_DIGITS)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes a float as a number, or as the string `"inf"` when it is infinite.
pub fn serialize_extended<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

pub fn serialize_extended_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_extended(v, s),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_style() {
        assert_eq!(fmt9(16.0), "16");
        assert_eq!(fmt9(1.920_678_46e0), "1.92067846");
        assert_eq!(fmt9(f64::INFINITY), "inf");
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(1.5e-7), "1.5e-07");
        assert_eq!(fmt9(-2.5e12), "-2.5e+12");
        assert_eq!(fmt9(32.571_428_571_4), "32.5714286");
        assert_eq!(fmt9(0.000_123_456_789_123), "0.000123456789");
    }
}
