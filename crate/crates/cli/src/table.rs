//! CSV emission with fixed-precision numbers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const HEADER: &str = "t,bound,oracle,margin,in_domain";

/// `v` to 9 significant digits, trailing zeros dropped, in the style of `%.9g`.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim(mantissa), exp.abs());
    }
    let decimals = (8 - exp) as usize;
    trim(&format!("{v:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub bound: Option<f64>,
    pub oracle: Option<f64>,
    pub margin: Option<f64>,
    pub in_domain: bool,
}

impl Row {
    pub fn line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            sig9(self.t),
            cell(self.bound),
            cell(self.oracle),
            cell(self.margin),
            self.in_domain
        )
    }
}

/// Writes `header` and `lines` to `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, header: &str, lines: &[String]) -> io::Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(w, "{header}")?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()
}
