//! Sample matrices as header-less CSV and JSON helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One row per sample, shortest round-trip decimal for every value.
pub fn samples_to_csv(samples: &Matrix) -> String {
    let mut out = String::with_capacity(samples.nrows() * samples.ncols() * 20);
    for r in 0..samples.nrows() {
        for c in 0..samples.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", samples[(r, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_samples_csv(path: &Path, samples: &Matrix) -> Result<()> {
    fs::write(path, samples_to_csv(samples))?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::Dataset(format!("{}: bad value `{field}` at row {i}, column {j}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dataset(format!(
                    "{}: row {i} has {} columns, expected {}",
                    path.display(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{}: no samples", path.display())));
    }
    let d = rows[0].len();
    Ok(Matrix::from_row_iterator(rows.len(), d, rows.into_iter().flatten()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
