//! Per-node label distributions and their CSV form.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{LabeledSets, NodeId};

/// Tolerance on row sums for a valid field.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// `N x l` row-stochastic matrix; row `j` is node `j`'s label distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    data: Vec<f64>,
    num_labels: usize,
}

impl ProbabilityField {
    /// Every row uniform.
    pub fn uniform(num_nodes: usize, num_labels: usize) -> Self {
        ProbabilityField {
            data: vec![1.0 / num_labels as f64; num_nodes * num_labels],
            num_labels,
        }
    }

    /// Wraps row-major data without validation.
    pub fn from_raw(data: Vec<f64>, num_labels: usize) -> Result<Self> {
        if num_labels == 0 || data.len() % num_labels != 0 {
            return Err(Error::Dimension(format!(
                "{} entries do not form rows of {num_labels} labels",
                data.len()
            )));
        }
        Ok(ProbabilityField { data, num_labels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let l = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != l) {
            return Err(Error::Dimension(format!("row {i} has {} entries, expected {l}", rows[i].len())));
        }
        Self::from_raw(rows.concat(), l)
    }

    pub fn num_nodes(&self) -> usize {
        self.data.len() / self.num_labels
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn row(&self, node: NodeId) -> &[f64] {
        let l = self.num_labels;
        &self.data[node * l..(node + 1) * l]
    }

    pub fn row_mut(&mut self, node: NodeId) -> &mut [f64] {
        let l = self.num_labels;
        &mut self.data[node * l..(node + 1) * l]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.num_labels)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn set_one_hot(&mut self, node: NodeId, label: usize) {
        let row = self.row_mut(node);
        row.fill(0.0);
        row[label] = 1.0;
    }

    /// Overwrite every labeled node's row with its one-hot.
    pub fn clamp_labeled(&mut self, labeled: &LabeledSets) {
        for (node, label) in labeled.pairs() {
            self.set_one_hot(node, label);
        }
    }

    /// Checks non-negativity and row sums within [`ROW_SUM_TOL`].
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::Ingestion {
                    row: i,
                    msg: format!("negative or non-finite entry in {row:?}"),
                });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Ingestion {
                    row: i,
                    msg: format!("row sums to {s}"),
                });
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &ProbabilityField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Headerless CSV, one row per node, shortest round-trip decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for row in self.rows() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parse a headerless CSV without checking row sums.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Ingestion {
                        row: i,
                        msg: format!("invalid number `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }
}

/// Most probable label per node, ties going to the lowest label index.
pub fn classify(field: &ProbabilityField) -> Vec<usize> {
    field
        .rows()
        .map(|row| {
            let mut best = 0;
            for (i, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_rules() {
        let f = ProbabilityField::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
            vec![0.2, 0.5, 0.3],
        ])
        .unwrap();
        assert_eq!(classify(&f), vec![2, 0, 1]);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = ProbabilityField::from_rows(&[
            vec![0.1, 0.2, 0.7000000000000001],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        let back = ProbabilityField::parse_csv(&f.to_csv().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn validate_catches_bad_rows() {
        let f = ProbabilityField::from_rows(&[vec![0.5, 0.5], vec![1.2, -0.2]]).unwrap();
        assert!(matches!(f.validate(), Err(Error::Ingestion { row: 1, .. })));
        let g = ProbabilityField::from_rows(&[vec![0.5, 0.6]]).unwrap();
        assert!(g.validate().is_err());
    }
}
