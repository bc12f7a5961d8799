//! CSV output with numbers at nine significant digits.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

/// `x` to nine significant digits in positional notation, falling back to
/// exponent form outside `1e-5 <= |x| < 1e15`.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-5..15).contains(&exp) {
        return sci;
    }
    format!("{x:.*}", (8 - exp).max(0) as usize)
}

pub type CsvOut = csv::Writer<Box<dyn Write>>;

pub fn writer(path: Option<&Path>) -> io::Result<CsvOut> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink))
}
