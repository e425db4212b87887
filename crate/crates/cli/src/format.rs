//! Number formatting shared by every emitted file.

use serde::Serialize;
use serde_json::Value;

/// Significant digits of every float written to CSV or JSON.
pub const SIG_DIGITS: usize = 12;

/// C-style `%.12g`: shortest of fixed or exponent notation, trailing zeros
/// dropped. Negative zero prints as `0`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A float rounded to [`SIG_DIGITS`], as the nearest double.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_g(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`SIG_DIGITS`] and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// One CSV line of formatted floats.
pub fn csv_row(values: &[f64]) -> String {
    let mut line = values.iter().map(|v| fmt_g(*v)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_g(2.0 / std::f64::consts::PI), "0.636619772368");
        assert_eq!(fmt_g(-0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(20.0), "20");
        assert_eq!(fmt_g(0.05), "0.05");
        assert_eq!(fmt_g(1e-5), "1e-05");
        assert_eq!(fmt_g(-2.359e-3), "-0.002359");
        assert_eq!(fmt_g(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_g(std::f64::consts::SQRT_2), "1.41421356237");
        assert_eq!(fmt_g(999999999999.9), "1e+12");
    }

    #[test]
    fn json_floats_are_rounded() {
        let s = to_json(&serde_json::json!({"x": 0.1 + 0.2, "n": 3})).unwrap();
        assert!(s.contains("\"x\": 0.3"));
        assert!(s.contains("\"n\": 3"));
    }
}
