//! Matrix files: CSV, row-major, one row per line, no header.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{f}`: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

/// Shortest round-trip decimal for every entry.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}
