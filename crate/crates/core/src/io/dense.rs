use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::Matrix;

/// Parses a dense matrix with one row per line and comma or whitespace
/// separated values. `#` comment lines and blank lines are skipped.
pub fn parse_dense_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("`{s}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no rows".into(),
        });
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(Matrix::from_row_iterator(m, n, rows.into_iter().flatten()))
}

pub fn read_dense_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dense_csv(&text)
}
