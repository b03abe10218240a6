use std::path::Path;

use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::taaf::curve::fmt_f64;

struct Layout {
    n_features: usize,
    n_forces: usize,
}

fn parse_header(header: &csv::StringRecord, path: &Path) -> Result<Layout> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let energy_at = names
        .iter()
        .position(|&n| n == "energy")
        .ok_or_else(|| Error::csv(path, "header has no `energy` column"))?;
    let expect = |idx: usize, want: String| -> Result<()> {
        if names[idx] == want {
            Ok(())
        } else {
            Err(Error::csv(path, format!("header column {} is `{}`, expected `{want}`", idx + 1, names[idx])))
        }
    };
    if energy_at == 0 {
        return Err(Error::csv(path, "header needs at least one feature column before `energy`"));
    }
    for i in 0..energy_at {
        expect(i, format!("f{i}"))?;
    }
    for (k, idx) in (energy_at + 1..names.len()).enumerate() {
        expect(idx, format!("fx{k}"))?;
    }
    Ok(Layout { n_features: energy_at, n_forces: names.len() - energy_at - 1 })
}

/// Parses dataset CSV with header `f0,...,fk,energy[,fx0,...]`.
///
/// `path` is only used in error messages. Data rows are numbered from 0;
/// line numbers count the header as line 1.
pub fn parse_csv(text: &str, path: &Path) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Err(Error::csv(path, "file is empty"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::csv(path, e.to_string()))?.clone();
    let layout = parse_header(&header, path)?;
    let width = header.len();

    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, format!("row {row}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = format!("line {line} (row {row})");
        if record.len() != width {
            return Err(Error::csv(path, format!("{at}: expected {width} fields, got {}", record.len())));
        }
        let mut values = Vec::with_capacity(width);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::csv(path, format!("{at}: column `{}` value `{cell}` is not a number", &header[col]))
            })?;
            if !v.is_finite() {
                return Err(Error::csv(path, format!("{at}: column `{}` is not finite", &header[col])));
            }
            values.push(v);
        }
        let forces = values.split_off(layout.n_features + 1);
        let energy = values.pop().expect("energy column");
        samples.push(Sample {
            features: values,
            energy,
            forces: (layout.n_forces > 0).then_some(forces),
        });
    }
    if samples.is_empty() {
        return Err(Error::csv(path, "no data rows"));
    }
    Dataset::new(samples).map_err(|e| Error::csv(path, e.to_string()))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Serializes with 17 significant digits, which round-trips exactly.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n_feat = dataset.feature_dim();
    let n_force = dataset.force_dim().unwrap_or(0);
    let mut header: Vec<String> = (0..n_feat).map(|i| format!("f{i}")).collect();
    header.push("energy".into());
    header.extend((0..n_force).map(|i| format!("fx{i}")));
    w.write_record(&header)?;
    for s in dataset.samples() {
        let row = s
            .features
            .iter()
            .chain(std::iter::once(&s.energy))
            .chain(s.forces.iter().flatten())
            .map(|&v| fmt_f64(v));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("refusing to write an empty dataset".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file)).map_err(|e| Error::csv(path, e.to_string()))
}
