//! Line-oriented dataset formats.
//!
//! * Univariate: one sample per line, `label` then `T` values, tab- or comma-separated.
//! * Multivariate: JSON lines `{"label": k, "values": [[...], ...]}` with `C` arrays of `T` numbers.
//!
//! Writers emit shortest round-trip decimal representations.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix, Shape, TimeSeriesSample};
use crate::error::{Error, ParseErrorKind, Result};

fn parse_err(path: &Path, line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        kind,
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_number(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        parse_err(
            path,
            line,
            ParseErrorKind::NonNumeric {
                field: field.to_string(),
            },
        )
    })?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            line,
            ParseErrorKind::NonFinite {
                field: field.to_string(),
            },
        ));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum LabelKey {
    Numeric(f64),
    Text(String),
}

/// Parses a UCR-style univariate file. Labels are re-indexed densely from 0 in sorted order.
pub fn parse_univariate_tsv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let delim = if line.contains('\t') { '\t' } else { ',' };
        let mut fields = line.split(delim);
        let label = fields.next().unwrap_or_default().trim().to_string();
        let values = fields
            .map(|f| parse_number(path, line_no, f))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(parse_err(
                path,
                line_no,
                ParseErrorKind::Malformed("row has a label but no values".into()),
            ));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_err(
                    path,
                    line_no,
                    ParseErrorKind::Ragged {
                        expected: w,
                        found: values.len(),
                    },
                ))
            }
            _ => {}
        }
        rows.push((label, values));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, ParseErrorKind::Empty));
    }

    let numeric = rows.iter().all(|(l, _)| l.parse::<f64>().is_ok());
    let key = |l: &str| {
        if numeric {
            LabelKey::Numeric(l.parse().unwrap_or(f64::NAN))
        } else {
            LabelKey::Text(l.to_string())
        }
    };
    let mut distinct: Vec<LabelKey> = Vec::new();
    for (l, _) in &rows {
        let k = key(l);
        if !distinct.contains(&k) {
            distinct.push(k);
        }
    }
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let samples = rows
        .into_iter()
        .map(|(l, values)| {
            let k = key(&l);
            let label = distinct.iter().position(|d| *d == k);
            let t = values.len();
            TimeSeriesSample::new(Matrix::from_vec(Shape::new(1, t), values)?, label)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(dataset_name(path), distinct.len(), samples)
}

/// Writes a single-channel dataset as tab-separated `label\tv1\t...\tvT` lines.
pub fn write_univariate_tsv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if dataset.shape().channels != 1 {
        return Err(Error::InvalidInput(format!(
            "univariate format needs one channel, dataset has {}",
            dataset.shape().channels
        )));
    }
    let mut out = String::new();
    for s in dataset.samples() {
        let label = s.label().ok_or_else(|| {
            Error::InvalidInput("univariate format requires every sample to be labelled".into())
        })?;
        write!(out, "{label}").expect("write to string");
        for v in s.values().row(0) {
            write!(out, "\t{v}").expect("write to string");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonSample {
    #[serde(default)]
    label: Option<usize>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
}

/// Parses JSON-lines multivariate samples, validating a rectangular common shape.
pub fn parse_multivariate_jsonl(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut shape: Option<Shape> = None;
    let mut samples = Vec::new();
    let mut num_classes = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: JsonSample = serde_json::from_str(raw)
            .map_err(|e| parse_err(path, line_no, ParseErrorKind::Malformed(e.to_string())))?;
        let channels = parsed.values.len();
        let timesteps = parsed.values.first().map_or(0, Vec::len);
        if channels == 0 || timesteps == 0 {
            return Err(parse_err(
                path,
                line_no,
                ParseErrorKind::Malformed("values must be a non-empty C x T array".into()),
            ));
        }
        if let Some(bad) = parsed.values.iter().find(|r| r.len() != timesteps) {
            return Err(parse_err(
                path,
                line_no,
                ParseErrorKind::Ragged {
                    expected: timesteps,
                    found: bad.len(),
                },
            ));
        }
        let this = Shape::new(channels, timesteps);
        match shape {
            None => shape = Some(this),
            Some(s) if s != this => {
                return Err(parse_err(
                    path,
                    line_no,
                    ParseErrorKind::ShapeMismatch {
                        expected: s.to_string(),
                        found: this.to_string(),
                    },
                ))
            }
            _ => {}
        }
        if let Some(l) = parsed.label {
            num_classes = num_classes.max(l + 1);
        }
        num_classes = num_classes.max(parsed.num_classes.unwrap_or(0));
        let values = Matrix::from_rows(&parsed.values)
            .map_err(|e| parse_err(path, line_no, ParseErrorKind::Malformed(e.to_string())))?;
        let sample = TimeSeriesSample::new(values, parsed.label)
            .map_err(|e| parse_err(path, line_no, ParseErrorKind::Malformed(e.to_string())))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(parse_err(path, 0, ParseErrorKind::Empty));
    }
    Dataset::new(dataset_name(path), num_classes.max(1), samples)
}

pub fn write_multivariate_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in dataset.samples() {
        let line = JsonSample {
            label: s.label(),
            values: s.values().to_rows(),
            num_classes: Some(dataset.num_classes()),
        };
        out.push_str(&serde_json::to_string(&line).expect("samples serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Distinct labels present in a dataset, for reporting.
pub fn label_histogram(dataset: &Dataset) -> Vec<(Option<usize>, usize)> {
    let keys: BTreeSet<Option<usize>> = dataset.samples().iter().map(|s| s.label()).collect();
    keys.into_iter()
        .map(|k| {
            let n = dataset.samples().iter().filter(|s| s.label() == k).count();
            (k, n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_tab_separated_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "toy.tsv", "1\t0.5\t0.7\n2\t0.1\t0.2");
        let d = parse_univariate_tsv(&p).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.shape(), Shape::new(1, 2));
        assert_eq!(d.num_classes(), 2);
        assert_eq!(d.samples()[0].label(), Some(0));
        assert_eq!(d.samples()[1].label(), Some(1));
    }

    #[test]
    fn labels_reindexed_in_sorted_numeric_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "toy.csv", "10,1\n-1,2\n2,3\n10,4\n");
        let d = parse_univariate_tsv(&p).unwrap();
        let labels: Vec<_> = d.samples().iter().map(|s| s.label().unwrap()).collect();
        assert_eq!(labels, vec![2, 0, 1, 2]);
    }

    #[test]
    fn ragged_row_names_line_two() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.tsv", "1\t0.5\t0.7\n2\t0.1\n");
        match parse_univariate_tsv(&p).unwrap_err() {
            Error::Parse { line, kind, .. } => {
                assert_eq!(line, 2);
                assert_eq!(kind, ParseErrorKind::Ragged { expected: 2, found: 1 });
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_numeric_and_empty_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "n.tsv", "1\t0.5\n1\tabc\n");
        assert!(matches!(
            parse_univariate_tsv(&p).unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::NonNumeric { .. }, .. }
        ));
        let p = write(&dir, "e.tsv", "\n\n");
        assert!(matches!(
            parse_univariate_tsv(&p).unwrap_err(),
            Error::Parse { kind: ParseErrorKind::Empty, .. }
        ));
        let p = write(&dir, "f.tsv", "1\tNaN\n");
        assert!(matches!(
            parse_univariate_tsv(&p).unwrap_err(),
            Error::Parse { kind: ParseErrorKind::NonFinite { .. }, .. }
        ));
    }

    #[test]
    fn jsonl_channel_mismatch_reported_at_line_two() {
        let dir = tempfile::tempdir().unwrap();
        let row = |c: usize| {
            let values = vec![vec![0.0; 50]; c];
            serde_json::json!({"label": 0, "values": values}).to_string()
        };
        let p = write(&dir, "ok.jsonl", &format!("{}\n{}\n", row(3), row(3)));
        let d = parse_multivariate_jsonl(&p).unwrap();
        assert_eq!((d.len(), d.shape()), (2, Shape::new(3, 50)));

        let p = write(&dir, "bad.jsonl", &format!("{}\n{}\n", row(3), row(2)));
        assert!(matches!(
            parse_multivariate_jsonl(&p).unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::ShapeMismatch { .. }, .. }
        ));
    }

    #[test]
    fn jsonl_malformed_and_ragged_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.jsonl", "{\"label\":0,\"values\":[[1,2]]}\n{oops\n");
        assert!(matches!(
            parse_multivariate_jsonl(&p).unwrap_err(),
            Error::Parse { line: 2, kind: ParseErrorKind::Malformed(_), .. }
        ));
        let p = write(&dir, "r.jsonl", "{\"label\":0,\"values\":[[1,2],[3]]}\n");
        assert!(matches!(
            parse_multivariate_jsonl(&p).unwrap_err(),
            Error::Parse { line: 1, kind: ParseErrorKind::Ragged { .. }, .. }
        ));
    }
}
