//! Per-epoch metric records and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "epoch,raw_loss,transformed_loss,grad_scale,effective_lr,x,train_acc,test_loss,test_acc";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRow {
    pub epoch: usize,
    pub raw_loss: f64,
    pub transformed_loss: f64,
    pub grad_scale: f64,
    pub effective_lr: f64,
    pub x: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

/// Formats like C's `%.17g`: seventeen significant digits, trailing zeros
/// removed, exponent form outside `1e-4 <= |v| < 1e17`.
pub fn fmt_g17(v: f64) -> String {
    const PRECISION: i32 = 17;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g17).unwrap_or_default()
}

impl TraceRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            fmt_g17(self.raw_loss),
            fmt_g17(self.transformed_loss),
            fmt_g17(self.grad_scale),
            fmt_g17(self.effective_lr),
            opt(self.x),
            opt(self.train_accuracy),
            opt(self.test_loss),
            opt(self.test_accuracy),
        )
    }
}

pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in trace {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

pub fn emit_csv(trace: &[TraceRow], path: &Path) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(trace_to_csv(trace).as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_matches_printf() {
        // reference strings from printf("%.17g")
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-6.54296875, "-6.54296875"),
            (1e-5, "1.0000000000000001e-05"),
            (0.0001, "0.0001"),
            (1e17, "1e+17"),
            (12345678901234567.0, "12345678901234568"),
            (2.5e-300, "2.5e-300"),
            (-0.0, "-0"),
            (100.0, "100"),
            (f64::INFINITY, "inf"),
        ];
        for (v, s) in cases {
            assert_eq!(fmt_g17(v), s, "{v}");
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(trace_to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn absent_fields_are_empty() {
        let row = TraceRow {
            epoch: 3,
            raw_loss: 0.5,
            transformed_loss: 0.5,
            grad_scale: 1.0,
            effective_lr: 0.0,
            ..Default::default()
        };
        assert_eq!(row.csv_line(), "3,0.5,0.5,1,0,,,,");
    }

    proptest! {
        #[test]
        fn g17_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(fmt_g17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
