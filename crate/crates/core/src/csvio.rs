//! Matrices as CSV: one observation per line, comma-separated decimals.
//!
//! A single header line is skipped when the first line does not parse as
//! numbers. Errors name the 1-based line and column of the offending cell.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::ObservationMatrix;

pub fn read_matrix<R: Read>(reader: R) -> Result<ObservationMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse(format!("row {line}: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            continue; // header
        }
        let width = *cols.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {line}: expected {width} fields, found {}",
                rec.len()
            )));
        }
        for (j, (p, raw)) in parsed.into_iter().zip(rec.iter()).enumerate() {
            let v = p.map_err(|_| {
                Error::Parse(format!(
                    "row {line}, column {}: cannot parse '{raw}' as a number",
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "row {line}, column {}: value '{raw}' is not finite",
                    j + 1
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    match cols {
        Some(c) => ObservationMatrix::new(rows, c, data),
        None => Err(Error::EmptyInput("csv file has no data rows")),
    }
}

pub fn read_matrix_path(path: impl AsRef<Path>) -> Result<ObservationMatrix> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix(f).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes every entry with 17 significant digits, which reads back to the
/// identical double.
pub fn write_matrix<W: Write>(x: &ObservationMatrix, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let mut line = String::new();
    for r in x.iter_rows() {
        line.clear();
        for (j, v) in r.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_matrix_path(x: &ObservationMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_matrix(x, std::io::BufWriter::new(f))
}
