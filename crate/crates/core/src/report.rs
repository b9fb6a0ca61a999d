//! Deterministic text output: CSV and JSON writers shared by the CLI.
//!
//! CSV files use `.` as the decimal separator, LF line endings, UTF-8, and
//! scientific notation with 17 significant digits, so identical runs produce
//! byte-identical artifacts.

use crate::error::Result;

/// Scientific notation with 17 significant digits (1 + 16 fractional).
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Parses a float written by [`fmt_float`].
pub fn parse_float(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s
            .parse::<f64>()
            .map_err(|e| crate::Error::Config(format!("bad float {s:?}: {e}"))),
    }
}

/// Gain curve rows as `s,g` CSV.
pub fn gain_curve_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("s,g\n");
    for &(s, g) in rows {
        out.push_str(&fmt_float(s));
        out.push(',');
        out.push_str(&fmt_float(g));
        out.push('\n');
    }
    out
}

/// Simple FNV-1a hash used for deterministic run identifiers.
pub fn run_id(payload: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in payload.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
