//! CSV ingestion and preprocessing transforms.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;

/// Reads a headed CSV of numeric cells. When `expected` is given the header
/// must match it exactly, in order.
pub fn read_csv<R: Read>(reader: R, expected: Option<&[String]>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_string)
        .collect();
    if let Some(exp) = expected {
        if exp != header.as_slice() {
            return Err(Error::SchemaMismatch {
                expected: exp.to_vec(),
                found: header,
            });
        }
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(e, line))?;
        for (j, cell) in record.iter().enumerate() {
            let column = j + 1;
            if cell.is_empty() || matches!(cell, "NA" | "na" | "NaN" | "nan" | ".") {
                return Err(Error::MissingValue { line, column });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column,
                    message: format!("`{cell}` is not finite"),
                });
            }
            columns[j].push(v);
        }
    }
    Dataset::new(header, columns)
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line());
    match err.kind() {
        csv::ErrorKind::Io(e) => Error::Io(e.to_string()),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            column: (*len as usize).min(*expected_len as usize) + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => Error::Parse {
            line,
            column: 0,
            message: err.to_string(),
        },
    }
}

pub fn read_csv_path(path: impl AsRef<Path>, expected: Option<&[String]>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, expected)
}

/// Writes `data` as CSV. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(data.names()).map_err(io)?;
    for i in 0..data.n_rows() {
        wtr.write_record(data.row(i).iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_path(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(data, File::create(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
            Comparator::Eq => value == threshold,
            Comparator::Ne => value != threshold,
        }
    }
}

/// Dichotomization rule: 1 above the threshold / at the level, 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomizeRule {
    ByThreshold(f64),
    ByLevel(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TransformStep {
    /// Drops rows where `column comparator threshold` holds.
    ExcludeRows {
        column: String,
        comparator: Comparator,
        threshold: f64,
    },
    /// Natural log of `column + offset`, in place.
    Log {
        column: String,
        #[serde(default)]
        offset: f64,
    },
    Dichotomize {
        column: String,
        rule: DichotomizeRule,
    },
    Standardize {
        column: String,
    },
    /// Adds `c^2` for each listed column.
    AugmentQuadratic {
        columns: Vec<String>,
    },
    /// Adds `a*b` for each pair of listed columns.
    AugmentInteractions {
        columns: Vec<String>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformSpec {
    pub steps: Vec<TransformStep>,
}

impl TransformSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("transform spec: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        for step in &self.steps {
            let (name, v) = match step {
                TransformStep::ExcludeRows { threshold, .. } => ("threshold", *threshold),
                TransformStep::Log { offset, .. } => {
                    if *offset < 0.0 {
                        return Err(Error::OutOfRange {
                            name: "offset".into(),
                            value: *offset,
                            range: "[0, inf)".into(),
                        });
                    }
                    ("offset", *offset)
                }
                TransformStep::Dichotomize {
                    rule: DichotomizeRule::ByThreshold(t) | DichotomizeRule::ByLevel(t),
                    ..
                } => ("threshold", *t),
                _ => continue,
            };
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("transform {name}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub step: String,
    pub rows_before: usize,
    pub rows_after: usize,
    pub created: Vec<String>,
}

pub fn quadratic_name(column: &str) -> String {
    format!("{column}^2")
}

pub fn interaction_name(a: &str, b: &str) -> String {
    format!("{a}*{b}")
}

/// Applies the steps in order, returning the new dataset and one provenance
/// entry per step.
pub fn apply_transforms(
    data: &Dataset,
    spec: &TransformSpec,
) -> Result<(Dataset, Vec<ProvenanceEntry>)> {
    spec.validate()?;
    let mut cur = data.clone();
    let mut log = Vec::with_capacity(spec.steps.len());
    for step in &spec.steps {
        let rows_before = cur.n_rows();
        let mut created = Vec::new();
        let label;
        cur = match step {
            TransformStep::ExcludeRows {
                column,
                comparator,
                threshold,
            } => {
                label = format!("exclude_rows({column} {comparator:?} {threshold})");
                let keep: Vec<bool> = cur
                    .column(column)?
                    .iter()
                    .map(|v| !comparator.holds(*v, *threshold))
                    .collect();
                if keep.iter().filter(|k| **k).count() < 2 {
                    return Err(Error::EmptyAfterExclusion);
                }
                cur.filter_rows(&keep)?
            }
            TransformStep::Log { column, offset } => {
                label = format!("log({column} + {offset})");
                let values = cur
                    .column(column)?
                    .iter()
                    .enumerate()
                    .map(|(row, v)| {
                        let s = v + offset;
                        if s > 0.0 {
                            Ok(s.ln())
                        } else {
                            Err(Error::NonPositiveLogInput {
                                column: column.clone(),
                                row,
                                value: s,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                cur.replace_column(column, values)?
            }
            TransformStep::Dichotomize { column, rule } => {
                label = format!("dichotomize({column}, {rule:?})");
                let values = cur
                    .column(column)?
                    .iter()
                    .map(|v| {
                        let hit = match rule {
                            DichotomizeRule::ByThreshold(t) => v > t,
                            DichotomizeRule::ByLevel(l) => v == l,
                        };
                        if hit { 1.0 } else { 0.0 }
                    })
                    .collect();
                cur.replace_column(column, values)?
            }
            TransformStep::Standardize { column } => {
                label = format!("standardize({column})");
                let x = cur.column(column)?;
                let (m, s) = (stats::mean(x), stats::std_dev(x));
                if s <= 1e-12 * m.abs() + 1e-300 {
                    return Err(Error::DegenerateCovariate(column.clone()));
                }
                let values = x.iter().map(|v| (v - m) / s).collect();
                cur.replace_column(column, values)?
            }
            TransformStep::AugmentQuadratic { columns } => {
                label = format!("augment_quadratic({})", columns.join(", "));
                let mut next = cur;
                for c in columns {
                    let values = next.column(c)?.iter().map(|v| v * v).collect();
                    let name = quadratic_name(c);
                    next = next.with_column(name.clone(), values)?;
                    created.push(name);
                }
                next
            }
            TransformStep::AugmentInteractions { columns } => {
                label = format!("augment_interactions({})", columns.join(", "));
                let mut next = cur;
                for c in columns {
                    next.column(c)?;
                }
                for (i, a) in columns.iter().enumerate() {
                    for b in &columns[i + 1..] {
                        let values = next
                            .column(a)?
                            .iter()
                            .zip(next.column(b)?)
                            .map(|(u, v)| u * v)
                            .collect();
                        let name = interaction_name(a, b);
                        next = next.with_column(name.clone(), values)?;
                        created.push(name);
                    }
                }
                next
            }
        };
        log.push(ProvenanceEntry {
            step: label,
            rows_before,
            rows_after: cur.n_rows(),
            created,
        });
    }
    Ok((cur, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_columns(vec![
            ("y", vec![1.0, 2.0, 3.0]),
            ("x1", vec![-1.0, 2.0, 3.0]),
            ("x2", vec![1.0, 1.0, 1.0]),
            ("x3", vec![0.5, 0.25, 4.0]),
        ])
        .unwrap()
    }

    #[test]
    fn reads_simple_file() {
        let d = read_csv("y,x1\n1,2\n3,4\n".as_bytes(), None).unwrap();
        assert_eq!(d.names(), &["y", "x1"]);
        assert_eq!(d.column("x1").unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn parse_error_names_position() {
        let err = read_csv("y,x1\n1,2\n3,abc\n".as_bytes(), None).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                column: 2,
                message: "`abc` is not a number".into()
            }
        );
    }

    #[test]
    fn missing_and_schema() {
        let err = read_csv("y,x1\n1,\n3,4\n".as_bytes(), None).unwrap_err();
        assert_eq!(err, Error::MissingValue { line: 2, column: 2 });
        let exp = vec!["y".to_string(), "x2".to_string()];
        let err = read_csv("y,x1\n1,2\n3,4\n".as_bytes(), Some(&exp)).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { .. }));
        let err = read_csv("y,x1\n1,2\n3\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn round_trip_is_exact() {
        let d = Dataset::from_columns(vec![
            ("a", vec![0.1 + 0.2, std::f64::consts::PI, -1e-300]),
            ("b", vec![1.0 / 3.0, 6.02214076e23, 0.0]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice(), None).unwrap(), d);
    }

    #[test]
    fn log_of_ones_is_zero() {
        let spec = TransformSpec {
            steps: vec![TransformStep::Log {
                column: "x2".into(),
                offset: 0.0,
            }],
        };
        let (out, _) = apply_transforms(&toy(), &spec).unwrap();
        assert_eq!(out.column("x2").unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn log_rejects_non_positive() {
        let spec = TransformSpec {
            steps: vec![TransformStep::Log {
                column: "x1".into(),
                offset: 0.0,
            }],
        };
        let err = apply_transforms(&toy(), &spec).unwrap_err();
        assert!(matches!(err, Error::NonPositiveLogInput { row: 0, .. }));
        let spec = TransformSpec {
            steps: vec![TransformStep::Log {
                column: "x1".into(),
                offset: 2.0,
            }],
        };
        assert!(apply_transforms(&toy(), &spec).is_ok());
    }

    #[test]
    fn dichotomize_threshold() {
        let spec = TransformSpec {
            steps: vec![TransformStep::Dichotomize {
                column: "x1".into(),
                rule: DichotomizeRule::ByThreshold(0.0),
            }],
        };
        let (once, _) = apply_transforms(&toy(), &spec).unwrap();
        assert_eq!(once.column("x1").unwrap(), &[0.0, 1.0, 1.0]);
        let (twice, _) = apply_transforms(&once, &spec).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn augmentation_adds_three_columns() {
        let spec = TransformSpec::from_json(
            r#"[{"op":"augment_quadratic","columns":["x2","x3"]},
                {"op":"augment_interactions","columns":["x2","x3"]}]"#,
        )
        .unwrap();
        let d = toy();
        let (out, log) = apply_transforms(&d, &spec).unwrap();
        assert_eq!(out.n_cols(), d.n_cols() + 3);
        assert_eq!(out.column("x3^2").unwrap(), &[0.25, 0.0625, 16.0]);
        assert_eq!(out.column("x2*x3").unwrap(), &[0.5, 0.25, 4.0]);
        for name in d.names() {
            assert_eq!(out.column(name).unwrap(), d.column(name).unwrap());
        }
        assert_eq!(log[1].created, vec!["x2*x3"]);
    }

    #[test]
    fn exclusion_and_errors() {
        let spec = TransformSpec::from_json(
            r#"[{"op":"exclude_rows","column":"x3","comparator":"gt","threshold":1}]"#,
        )
        .unwrap();
        let (out, log) = apply_transforms(&toy(), &spec).unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!((log[0].rows_before, log[0].rows_after), (3, 2));

        let spec = TransformSpec::from_json(
            r#"[{"op":"exclude_rows","column":"x3","comparator":"lt","threshold":1}]"#,
        )
        .unwrap();
        assert_eq!(apply_transforms(&toy(), &spec).unwrap_err(), Error::EmptyAfterExclusion);

        let spec = TransformSpec::from_json(r#"[{"op":"standardize","column":"zz"}]"#).unwrap();
        assert_eq!(
            apply_transforms(&toy(), &spec).unwrap_err(),
            Error::UnknownColumn("zz".into())
        );
        let spec = TransformSpec::from_json(r#"[{"op":"log","column":"x1","offset":-1}]"#).unwrap();
        assert!(matches!(apply_transforms(&toy(), &spec), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn standardize_moments() {
        let spec = TransformSpec::from_json(r#"[{"op":"standardize","column":"x3"}]"#).unwrap();
        let (out, _) = apply_transforms(&toy(), &spec).unwrap();
        let x = out.column("x3").unwrap();
        assert!(stats::mean(x).abs() < 1e-15);
        assert!((stats::variance(x) - 1.0).abs() < 1e-12);
    }
}
