use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::{Matrix, Vector};
use crate::problems::remap_labels;

/// One sparse row; indices are 0-based in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmRecord {
    pub label: f64,
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmDataset {
    pub labels: Vector,
    pub design: Matrix,
    pub n_features: usize,
}

impl LibsvmDataset {
    /// Labels mapped to `{-1, +1}` (`0` becomes `-1`).
    pub fn signed_labels(&self) -> Result<Vector> {
        Ok(Vector::from_vec(remap_labels(self.labels.as_slice())?))
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_record(text: &str, line: usize) -> Result<LibsvmRecord> {
    let mut tokens = text.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| parse_error(line, "missing label"))?;
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_error(line, format!("label `{label_tok}` is not a number")))?;
    let mut entries = Vec::new();
    let mut last: Option<usize> = None;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_error(line, format!("expected index:value, found `{tok}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_error(line, format!("index `{idx}` is not a positive integer")))?;
        if idx == 0 {
            return Err(parse_error(line, "indices are 1-based"));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_error(line, format!("value `{val}` is not a number")))?;
        if last.is_some_and(|p| idx <= p) {
            return Err(parse_error(line, format!("index {idx} is not increasing")));
        }
        last = Some(idx);
        entries.push((idx - 1, val));
    }
    Ok(LibsvmRecord { label, entries })
}

/// Parses LIBSVM text. Blank lines and lines starting with `#` are skipped.
/// The feature count is the largest index seen unless `n_features` is given.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<LibsvmDataset> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_error(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records.push(parse_record(trimmed, lineno)?);
    }
    if records.is_empty() {
        return Err(parse_error(0, "no records"));
    }
    let seen = records
        .iter()
        .filter_map(|r| r.entries.last().map(|&(j, _)| j + 1))
        .max()
        .unwrap_or(0);
    let n = match n_features {
        Some(n) if n < seen => {
            return Err(Error::contract(format!(
                "feature index {seen} exceeds requested count {n}"
            )));
        }
        Some(n) => n,
        None => seen,
    };
    let mut design = Matrix::zeros(records.len(), n);
    for (i, r) in records.iter().enumerate() {
        for &(j, v) in &r.entries {
            design[(i, j)] = v;
        }
    }
    Ok(LibsvmDataset {
        labels: Vector::from_iterator(records.len(), records.iter().map(|r| r.label)),
        design,
        n_features: n,
    })
}

pub fn read_libsvm(path: &Path, n_features: Option<usize>) -> Result<LibsvmDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), n_features)
}

/// Writes nonzero entries with shortest round-trip formatting.
pub fn write_libsvm<W: Write>(mut out: W, labels: &Vector, design: &Matrix) -> Result<()> {
    if labels.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            expected: design.nrows(),
            got: labels.len(),
        });
    }
    let mut line = String::new();
    for i in 0..design.nrows() {
        line.clear();
        line.push_str(&format!("{:?}", labels[i]));
        for j in 0..design.ncols() {
            let v = design[(i, j)];
            if v != 0.0 {
                line.push_str(&format!(" {}:{:?}", j + 1, v));
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io("<libsvm output>", e))?;
    }
    Ok(())
}
