//! Delimited-text input and output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use elm_uq::numerics::{Mat, Vector};

use crate::error::{CliError, CliResult};

/// Inputs (`d × n`) and optional targets read from a header-rowed CSV file.
/// Input columns are those named `x…`; the target column is `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Mat,
    pub y: Option<Vector>,
}

pub fn read_table(path: &Path, need_y: bool) -> CliResult<Table> {
    let ctx = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(&ctx, e))?;
    let headers = reader.headers().map_err(|e| CliError::data(&ctx, e))?.clone();
    let x_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    if x_cols.is_empty() {
        return Err(CliError::Data(format!("{ctx}: no input columns (headers starting with 'x')")));
    }
    let y_col = headers.iter().position(|h| h == "y");
    if need_y && y_col.is_none() {
        return Err(CliError::Data(format!("{ctx}: no 'y' column")));
    }

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::data(&ctx, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize| -> CliResult<f64> {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CliError::Data(format!("{ctx}, line {line}, column '{}': cannot parse '{raw}' as a number", &headers[col]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("{ctx}, line {line}, column '{}': non-finite value", &headers[col])));
            }
            Ok(v)
        };
        for &c in &x_cols {
            xs.push(field(c)?);
        }
        if let Some(c) = y_col {
            ys.push(field(c)?);
        }
    }
    let n = xs.len() / x_cols.len();
    if n == 0 {
        return Err(CliError::Data(format!("{ctx}: no data rows")));
    }
    let x = Mat::from_column_slice(x_cols.len(), n, &xs);
    let y = y_col.map(|_| Vector::from_vec(ys));
    Ok(Table { x, y })
}

pub fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(dir.display(), e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::data(path.display(), e))?;
    Ok((path, BufWriter::new(file)))
}

/// Write a file through `body` and return its path.
pub fn write_file<F>(dir: &Path, name: &str, body: F) -> CliResult<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let (path, mut w) = create(dir, name)?;
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::data(path.display(), e))?;
    Ok(path)
}
