use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// `m` labelled points `(z_i, w_i)` with `z_i ∈ R^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dataset("feature dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::Dataset("dataset must contain at least one point".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if features.iter().chain(&labels).any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite value".into()));
        }
        Ok(Self { dim, features, labels })
    }

    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let dim = rows.first().map(|r| r.0.len()).unwrap_or(0);
        let mut features = Vec::with_capacity(rows.len() * dim);
        let mut labels = Vec::with_capacity(rows.len());
        for (z, w) in rows {
            if z.len() != dim {
                return Err(Error::Dataset("rows have different feature counts".into()));
            }
            features.extend_from_slice(z);
            labels.push(*w);
        }
        Self::new(dim, features, labels)
    }

    /// Reads a CSV with a header row, `k` feature columns and the label in the
    /// last column. Rows violating `‖z‖ ≤ radius` or `|w| ≤ radius` are
    /// rejected, naming their line numbers (the header is line 1).
    pub fn from_csv_reader<R: Read>(reader: R, radius: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let width = rdr.headers()?.len();
        if width < 2 {
            return Err(Error::Dataset(
                "header must name at least one feature column and a label column".into(),
            ));
        }
        let k = width - 1;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut rejected = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != width {
                return Err(Error::Dataset(format!(
                    "line {line}: expected {width} columns, found {}",
                    record.len()
                )));
            }
            let values = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Dataset(format!("line {line}: {e}")))?;
            let (z, w) = values.split_at(k);
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= radius && w[0].abs() <= radius) {
                rejected.push(line);
                continue;
            }
            features.extend_from_slice(z);
            labels.push(w[0]);
        }
        if !rejected.is_empty() {
            let lines: Vec<String> = rejected.iter().map(u64::to_string).collect();
            return Err(Error::Dataset(format!(
                "rows outside the radius {radius} bound at lines {}",
                lines.join(", ")
            )));
        }
        Self::new(k, features, labels)
    }

    pub fn from_csv_path(path: &Path, radius: f64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file), radius)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Largest `‖z_i‖` and `|w_i|`.
    pub fn extent(&self) -> (f64, f64) {
        let z = self
            .features
            .chunks_exact(self.dim)
            .map(|z| z.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let w = self.labels.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (z, w)
    }
}
