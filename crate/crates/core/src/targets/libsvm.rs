//! LIBSVM sparse text: `label idx:val idx:val …` with 1-based feature indices.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Reads a LIBSVM file into a dense [`Dataset`].
///
/// Labels may use any two-value encoding (`±1`, `{0,1}`, `{1,2}`, …); the
/// smaller value maps to −1. With `scale` set, each column is rescaled onto `[−1, 1]`.
pub fn load_libsvm(path: impl AsRef<Path>, scale: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut data = parse_libsvm(&text)?;
    if scale {
        data.scale_columns();
    }
    Ok(data)
}

pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(format!("bad label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(parse_err(format!("non-finite label {label_tok:?}")));
        }

        let mut entries = Vec::new();
        let mut last_index = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected idx:val, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err("feature indices are 1-based".into()));
            }
            if idx <= last_index {
                return Err(parse_err(format!(
                    "feature index {idx} is not increasing (previous {last_index})"
                )));
            }
            last_index = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(format!("bad feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(parse_err(format!("non-finite feature value {val}")));
            }
            dim = dim.max(idx);
            entries.push((idx - 1, val));
        }
        raw_labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::Format("no samples found".into()));
    }
    if dim == 0 {
        return Err(Error::Format("no features found".into()));
    }

    let alphabet: BTreeSet<u64> = raw_labels.iter().map(|l| ordered_bits(*l)).collect();
    let labels: Vec<f64> = match alphabet.len() {
        1 => raw_labels
            .iter()
            .map(|l| if *l > 0.0 { 1.0 } else { -1.0 })
            .collect(),
        2 => {
            let low = raw_labels.iter().copied().fold(f64::INFINITY, f64::min);
            raw_labels
                .iter()
                .map(|l| if *l == low { -1.0 } else { 1.0 })
                .collect()
        }
        k => {
            return Err(Error::Format(format!(
                "expected a binary label alphabet, found {k} distinct labels"
            )))
        }
    };

    let mut features = vec![0.0; rows.len() * dim];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[i * dim + j] = v;
        }
    }
    Dataset::new(features, labels, dim)
}

/// Bit pattern that orders and dedups finite floats (with `-0.0 == 0.0`).
fn ordered_bits(x: f64) -> u64 {
    let x = if x == 0.0 { 0.0 } else { x };
    x.to_bits()
}

/// Writes a dataset in LIBSVM format, omitting zero entries.
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for (row, y) in data.rows().zip(data.labels()) {
        out.push_str(if *y > 0.0 { "+1" } else { "-1" });
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push('\n');
    }
    out
}
