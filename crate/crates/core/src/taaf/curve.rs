//! Sampled activation shapes and their CSV form (`x,y,epoch,unit_id`).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::taaf::TaafUnit;

/// Pre-normalization probe range for exported curves.
pub const PROBE_RANGE: (f64, f64) = (-3.0, 3.0);

pub const CURVE_HEADER: &str = "x,y,epoch,unit_id";

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub epoch: usize,
    pub unit_id: String,
}

/// Samples `unit` at `n_samples` evenly spaced points of [`PROBE_RANGE`].
pub fn export_curve(
    unit: &TaafUnit,
    n_samples: usize,
    epoch: usize,
    unit_id: &str,
) -> Result<ActivationCurve> {
    if n_samples < 2 {
        return Err(Error::Config(format!(
            "a curve needs at least 2 samples, got {n_samples}"
        )));
    }
    let (lo, hi) = PROBE_RANGE;
    let step = (hi - lo) / (n_samples - 1) as f64;
    let xs: Vec<f64> = (0..n_samples)
        .map(|i| if i + 1 == n_samples { hi } else { lo + i as f64 * step })
        .collect();
    let ys = xs.iter().map(|&x| unit.eval(x)).collect();
    Ok(ActivationCurve {
        xs,
        ys,
        epoch,
        unit_id: unit_id.to_string(),
    })
}

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn curves_to_csv(curves: &[ActivationCurve]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for c in curves {
        for (x, y) in c.xs.iter().zip(&c.ys) {
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(*x), fmt_f64(*y), c.epoch, c.unit_id);
        }
    }
    out
}

pub fn write_curves(path: &Path, curves: &[ActivationCurve]) -> Result<()> {
    std::fs::write(path, curves_to_csv(curves)).map_err(|e| Error::io(path, e))
}

/// Parses curve CSV, grouping consecutive rows with the same `(epoch, unit_id)`.
pub fn parse_curves(text: &str, path: &Path) -> Result<Vec<ActivationCurve>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => return Err(Error::csv(path, format!("missing header `{CURVE_HEADER}`"))),
    }
    let mut curves: Vec<ActivationCurve> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::csv(path, format!("line {lineno}: expected 4 fields, got {}", cells.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::csv(path, format!("line {lineno}: `{s}` is not a number")))
        };
        let x = num(cells[0])?;
        let y = num(cells[1])?;
        let epoch = cells[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::csv(path, format!("line {lineno}: bad epoch `{}`", cells[2])))?;
        let id = cells[3].trim();
        match curves.last_mut() {
            Some(c) if c.epoch == epoch && c.unit_id == id => {
                c.xs.push(x);
                c.ys.push(y);
            }
            _ => curves.push(ActivationCurve {
                xs: vec![x],
                ys: vec![y],
                epoch,
                unit_id: id.to_string(),
            }),
        }
    }
    Ok(curves)
}

pub fn read_curves(path: &Path) -> Result<Vec<ActivationCurve>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curves(&text, path)
}
