//! Numeric matrix CSV files.
//!
//! A file is a rectangular grid of decimal numbers with an optional header
//! row; the first row is a header when any of its cells fails to parse as a
//! number. Output uses 17 significant digits so values round-trip exactly.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

pub fn read_matrix_csv(reader: impl Read) -> Result<LabeledMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if line == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(Error::Parse(format!(
                    "line {} has {} fields, expected {w}",
                    line + 1,
                    record.len()
                )));
            }
        }
        width = Some(record.len());
        for (col, v) in parsed.into_iter().enumerate() {
            let v = v.ok_or_else(|| {
                Error::Parse(format!(
                    "line {}, column {}: cannot parse {:?}",
                    line + 1,
                    col + 1,
                    &record[col]
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse("no numeric rows".into()));
    }
    let cols = width.unwrap_or(0);
    Ok(LabeledMatrix {
        header,
        values: DMatrix::from_row_slice(rows, cols, &values),
    })
}

pub fn read_matrix_path(path: impl AsRef<Path>) -> Result<LabeledMatrix> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_matrix_csv(std::io::BufReader::new(file))
}

pub fn read_sym_matrix_path(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let m = read_matrix_path(path)?.values;
    SymMatrix::new(m)
}

pub fn write_matrix_csv(
    m: &DMatrix<f64>,
    header: Option<&[String]>,
    mut out: impl Write,
) -> Result<()> {
    if let Some(h) = header {
        writeln!(out, "{}", h.join(","))?;
    }
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_path(
    m: &DMatrix<f64>,
    header: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_csv(m, header, &mut w)?;
    w.flush()?;
    Ok(())
}
