//! Noise samples as CSV: one sample per line, comma separated.

use crate::{Error, Result};
use nalgebra::DVector;
use std::io::{BufRead, Write};

/// Writes with Rust's shortest round-trip float formatting, so reloading is bit-exact.
pub fn write_noise_csv<W: Write>(mut out: W, samples: &[DVector<f64>]) -> Result<()> {
    for w in samples {
        let line: Vec<String> = w.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_noise_csv<R: BufRead>(input: R) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        if let Some(first) = out.first() {
            if first.len() != vals.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("{} values, expected {}", vals.len(), first.len()),
                });
            }
        }
        out.push(DVector::from_vec(vals));
    }
    Ok(out)
}
