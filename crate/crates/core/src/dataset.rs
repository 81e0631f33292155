//! Tabular numeric data: loading, validation, summaries and predictor ranges.
//!
//! A [`Dataset`] is immutable once built. Values are stored row-major so a
//! background observation is a contiguous slice.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    values: Vec<f64>,
    n: usize,
    response: Option<Vec<f64>>,
    response_name: Option<String>,
}

impl Dataset {
    /// Builds a dataset from rows of predictor values. Every row must have
    /// one value per name.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "row {r} has {} values, expected {p}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(names, values, rows.len())
    }

    /// Builds a dataset from a row-major buffer of `n * names.len()` values.
    pub fn from_flat(names: Vec<String>, values: Vec<f64>, n: usize) -> Result<Self> {
        let p = names.len();
        if p == 0 {
            return Err(Error::InvalidDataset("no predictor columns".into()));
        }
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 observations, got {n}")));
        }
        if values.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "buffer holds {} values, expected {}",
                values.len(),
                n * p
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidDataset("empty predictor name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate predictor name '{name}'")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column '{}'",
                pos / p,
                names[pos % p]
            )));
        }
        Ok(Self {
            names,
            values,
            n,
            response: None,
            response_name: None,
        })
    }

    pub fn with_response(mut self, name: impl Into<String>, response: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if response.len() != self.n {
            return Err(Error::InvalidDataset(format!(
                "response has {} values, expected {}",
                response.len(),
                self.n
            )));
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite response value".into()));
        }
        if name.is_empty() || self.names.contains(&name) {
            return Err(Error::InvalidDataset(format!("invalid response name '{name}'")));
        }
        self.response = Some(response);
        self.response_name = Some(name);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_predictors(&self) -> usize {
        self.names.len()
    }

    pub fn predictor_names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let p = self.n_predictors();
        &self.values[r * p..(r + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_predictors())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|row| row[j]).collect()
    }

    /// Row-major predictor values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn response_name(&self) -> Option<&str> {
        self.response_name.as_deref()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n_predictors() {
            return Err(Error::InvalidIndex {
                index: i,
                p: self.n_predictors(),
            });
        }
        Ok(())
    }

    /// Per-column means, in predictor order.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.n_predictors())
            .map(|j| self.rows().map(|row| row[j]).sum::<f64>() / self.n as f64)
            .collect()
    }

    pub fn describe(&self) -> Vec<(String, ColumnStats)> {
        let mut out: Vec<(String, ColumnStats)> = (0..self.n_predictors())
            .map(|j| (self.names[j].clone(), ColumnStats::of(&self.column(j))))
            .collect();
        if let (Some(name), Some(y)) = (&self.response_name, &self.response) {
            out.push((name.clone(), ColumnStats::of(y)));
        }
        out
    }

    /// The interval a predictor is swept over.
    pub fn effective_range(&self, i: usize, policy: RangePolicy) -> Result<(f64, f64)> {
        self.check_index(i)?;
        let mut col = self.column(i);
        col.sort_by(f64::total_cmp);
        Ok(match policy {
            RangePolicy::Full => (col[0], col[col.len() - 1]),
            RangePolicy::Quantile { lo, hi } => (quantile_sorted(&col, lo), quantile_sorted(&col, hi)),
        })
    }

    /// Writes the dataset as CSV, predictors first and the response last.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = self.names.join(",");
        if let Some(name) = &self.response_name {
            header.push(',');
            header.push_str(name);
        }
        writeln!(out, "{header}")?;
        for (r, row) in self.rows().enumerate() {
            let mut line = String::new();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            if let Some(y) = &self.response {
                line.push(',');
                line.push_str(&y[r].to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

/// Loads a numeric CSV file. When `response_name` is given that column is
/// split out as the response; all other columns become predictors.
pub fn load_csv(path: &Path, response_name: Option<&str>) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.iter().any(|h| h.contains('"')) {
        return Err(csv_err("quoted header cells are not supported".into()));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if h.is_empty() {
            return Err(csv_err("empty header cell".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(csv_err(format!("duplicate header '{h}'")));
        }
    }
    let response_col = match response_name {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| csv_err(format!("response column '{name}' not found")))?,
        ),
        None => None,
    };
    if header.len() - usize::from(response_col.is_some()) == 0 {
        return Err(csv_err("no predictor columns".into()));
    }

    let mut values = Vec::new();
    let mut response = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        // 1-based line number of this record in the file
        let row = record.position().map_or(n + 2, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(csv_err(format!(
                "row {row}: expected {} cells, found {}",
                header.len(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.contains('"') {
                return Err(csv_err(format!(
                    "row {row}, column '{}': quoted cells are not supported",
                    header[j]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row,
                column: header[j].clone(),
                cell: cell.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(csv_err(format!(
                    "row {row}, column '{}': non-finite value {cell}",
                    header[j]
                )));
            }
            if Some(j) == response_col {
                response.push(v);
            } else {
                values.push(v);
            }
        }
        n += 1;
    }

    let mut names = header;
    let response_label = response_col.map(|j| names.remove(j));
    let ds = Dataset::from_flat(names, values, n)?;
    match response_label {
        Some(label) => ds.with_response(label, response),
        None => Ok(ds),
    }
}

/// Summary statistics of one column; `sd` uses the n-1 denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl ColumnStats {
    /// Panics on an empty slice.
    pub fn of(xs: &[f64]) -> Self {
        assert!(!xs.is_empty(), "ColumnStats of an empty column");
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            sd,
            min: sorted[0],
            median: quantile_sorted(&sorted, 0.5),
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Which part of a predictor's observed values is swept.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RangePolicy {
    #[default]
    Full,
    Quantile {
        lo: f64,
        hi: f64,
    },
}

impl RangePolicy {
    pub fn quantile(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::InvalidConfig(format!(
                "quantile range needs 0 <= lo < hi <= 1, got ({lo}, {hi})"
            )));
        }
        Ok(Self::Quantile { lo, hi })
    }
}

impl fmt::Display for RangePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangePolicy::Full => write!(f, "full"),
            RangePolicy::Quantile { lo, hi } => write!(f, "quantile({lo},{hi})"),
        }
    }
}

/// Linear interpolation between closest order statistics at zero-based
/// position `q * (len - 1)`. `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
