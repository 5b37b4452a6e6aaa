//! Matrix CSV ingestion and atomic output files.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use ppd_core::DenseMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Read a numeric CSV whose rows are samples and columns features. With
/// `has_header` the first line is skipped.
pub fn read_matrix_csv(path: &Path, has_header: bool) -> CliResult<DenseMatrix> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Parse {
                path: path.to_path_buf(),
                line,
                column: None,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: None,
                    message: format!("expected {c} fields, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line,
                column: Some(j as u64 + 1),
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: Some(j as u64 + 1),
                    message: format!("'{field}' is not finite"),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    let cols =
        cols.ok_or_else(|| CliError::InvalidInput(format!("{}: no data rows", path.display())))?;
    Ok(DenseMatrix::from_row_slice(rows, cols, &data)?)
}

/// CSV text of a matrix; values use the shortest representation that parses
/// back to the same double.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 20);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write through a temporary file in the target directory and rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::InvalidInput(format!("cannot serialise output: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        column: Some(e.column() as u64),
        message: e
            .to_string()
            .split(" at line ")
            .next()
            .unwrap_or_default()
            .to_string(),
    })
}
