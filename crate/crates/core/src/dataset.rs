use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-labelled numeric table of `n` observations.
///
/// Storage is column-major. Every entry is finite, there are at least two
/// rows and column names are unique; these are checked once on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset column names".into(),
                expected: columns.len(),
                found: names.len(),
            });
        }
        if columns.is_empty() {
            return Err(Error::InvalidDataset("no columns".into()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        let mut seen = HashSet::new();
        for (name, col) in names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate column `{name}`")));
            }
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("column `{name}`"),
                    expected: n,
                    found: col.len(),
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("column `{name}`"),
                });
            }
        }
        Ok(Self { names, columns })
    }

    /// Builds a dataset from `(name, values)` pairs.
    pub fn from_columns<S: Into<String>>(cols: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = cols.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        Self::new(names, columns)
    }

    /// Builds a dataset from row-major records.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(Error::DimensionMismatch {
                    context: format!("row {i}"),
                    expected: names.len(),
                    found: row.len(),
                });
            }
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
        }
        Self::new(names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.position(name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, index: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[index]).collect()
    }

    /// Appends a column, validating length, finiteness and name uniqueness.
    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if self.position(&name).is_some() {
            return Err(Error::InvalidDataset(format!("duplicate column `{name}`")));
        }
        self.names.push(name);
        self.columns.push(values);
        Self::new(self.names, self.columns)
    }

    /// Replaces the values of an existing column.
    pub fn replace_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        let idx = self
            .position(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        self.columns[idx] = values;
        Self::new(self.names, self.columns)
    }

    /// Keeps only the rows for which `keep` is true.
    pub fn filter_rows(&self, keep: &[bool]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| {
                c.iter()
                    .zip(keep)
                    .filter_map(|(v, k)| k.then_some(*v))
                    .collect()
            })
            .collect();
        Self::new(self.names.clone(), columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_short_tables() {
        let dup = Dataset::from_columns(vec![("a", vec![1.0, 2.0]), ("a", vec![3.0, 4.0])]);
        assert!(matches!(dup, Err(Error::InvalidDataset(_))));
        let short = Dataset::from_columns(vec![("a", vec![1.0])]);
        assert!(matches!(short, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let bad = Dataset::from_columns(vec![("a", vec![1.0, f64::NAN])]);
        assert!(matches!(bad, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn rows_and_columns_agree() {
        let d = Dataset::from_rows(
            vec!["y".into(), "x".into()],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        assert_eq!(d.column("x").unwrap(), &[2.0, 4.0]);
        assert_eq!(d.row(1), vec![3.0, 4.0]);
        assert!(matches!(d.column("z"), Err(Error::UnknownColumn(_))));
    }
}
