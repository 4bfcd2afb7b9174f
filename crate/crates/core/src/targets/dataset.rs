use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Covariates (one row per datum) and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vector,
    pub standardized: bool,
    pub has_intercept: bool,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Dataset("dataset has no rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::Dataset(format!(
                "{} covariate rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            // nalgebra is column-major
            let (row, col) = (pos % x.nrows(), pos / x.nrows());
            return Err(Error::Dataset(format!("non-finite covariate at row {row}, column {col}")));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("non-finite label at row {row}")));
        }
        Ok(Self {
            x,
            y,
            standardized: false,
            has_intercept: false,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate_binary(&self) -> Result<()> {
        match self.y.iter().position(|&v| v != 0.0 && v != 1.0) {
            Some(row) => Err(Error::Dataset(format!(
                "label {} at row {row} is not in {{0, 1}}",
                self.y[row]
            ))),
            None => Ok(()),
        }
    }

    /// Z-scores every column with population standard deviation.
    pub fn standardize(mut self) -> Result<Self> {
        let n = self.x.nrows() as f64;
        for c in 0..self.x.ncols() {
            let col = self.x.column(c);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if !(std > 0.0) {
                return Err(Error::Dataset(format!(
                    "column {c} is constant and cannot be standardized"
                )));
            }
            for r in 0..self.x.nrows() {
                self.x[(r, c)] = (self.x[(r, c)] - mean) / std;
            }
        }
        self.standardized = true;
        Ok(self)
    }

    /// Appends a trailing column of ones.
    pub fn with_intercept(mut self) -> Self {
        let n = self.x.nrows();
        let d = self.x.ncols();
        self.x = self.x.insert_column(d, 1.0);
        debug_assert_eq!(self.x.nrows(), n);
        self.has_intercept = true;
        self
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(rows),
            y: Vector::from_iterator(rows.len(), rows.iter().map(|&r| self.y[r])),
            standardized: self.standardized,
            has_intercept: self.has_intercept,
        }
    }

    /// Writes covariates then label per row, no header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in 0..self.len() {
            for c in 0..self.x.ncols() {
                out.push_str(&format!("{},", self.x[(r, c)]));
            }
            out.push_str(&format!("{}\n", self.y[r]));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Reads a numeric CSV whose final column is the label.
///
/// A header row is detected when the first row does not parse as numbers.
pub fn load_csv_dataset(path: &Path, standardize: bool, add_intercept: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            // header
            width = Some(rec.len());
            continue;
        }
        match width {
            Some(w) if w != rec.len() => {
                return Err(Error::Dataset(format!(
                    "{}: row {i} has {} fields, expected {w}",
                    path.display(),
                    rec.len()
                )))
            }
            None => width = Some(rec.len()),
            _ => {}
        }
        let mut row = Vec::with_capacity(rec.len());
        for (col, (field, p)) in rec.iter().zip(parsed).enumerate() {
            let v = p.map_err(|_| {
                Error::Dataset(format!(
                    "{}: cannot parse `{field}` at row {i}, column {col}",
                    path.display()
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Dataset(format!(
                    "{}: non-finite value `{field}` at row {i}, column {col}",
                    path.display()
                )));
            }
            row.push(v);
        }
        rows.push(row);
    }

    let w = width.unwrap_or(0);
    if rows.is_empty() || w < 2 {
        return Err(Error::Dataset(format!(
            "{}: need at least one row with a covariate and a label",
            path.display()
        )));
    }
    let n = rows.len();
    let x = Matrix::from_fn(n, w - 1, |r, c| rows[r][c]);
    let y = Vector::from_fn(n, |r, _| rows[r][w - 1]);
    let mut ds = Dataset::new(x, y)?;
    if standardize {
        ds = ds.standardize()?;
    }
    if add_intercept {
        ds = ds.with_intercept();
    }
    Ok(ds)
}
