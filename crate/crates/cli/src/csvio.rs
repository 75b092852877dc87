//! CSV ingestion and fixed-precision export.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use dmoc_core::DataSet;
use thiserror::Error;

/// Significant digits kept when writing numbers.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("row {row}: {source}")]
    Csv { row: usize, source: csv::Error },
    #[error("row {row}, column {column}: {message}")]
    Cell { row: usize, column: usize, message: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("no data rows")]
    Empty,
}

/// Rounds to [`SIGNIFICANT_DIGITS`] so the value survives a write and reload.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest text that reads back to `quantize(v)`; exponent notation outside
/// `[1e-4, 1e15)` in magnitude.
pub fn format_value(v: f64) -> String {
    let q = quantize(v);
    if q == 0.0 {
        "0".to_string()
    } else if q.abs() < 1e-4 || q.abs() >= 1e15 {
        format!("{q:e}")
    } else {
        format!("{q}")
    }
}

/// Reads one profile per row. Rows are 1-based in errors and count the
/// header; columns are 1-based. A first row that does not parse as numbers is
/// taken as a header and skipped.
pub fn load_profiles(path: impl AsRef<Path>) -> Result<DataSet, LoadError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    read_profiles(file)
}

pub fn read_profiles(reader: impl Read) -> Result<DataSet, LoadError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|source| LoadError::Csv { row, source })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().any(|cell| cell.parse::<f64>().is_err()) {
            continue;
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_cell(cell, row, j + 1))
            .collect::<Result<Vec<f64>, _>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(expected) if expected != values.len() => {
                return Err(LoadError::Ragged { row, expected, found: values.len() })
            }
            _ => {}
        }
        rows.push(values);
    }
    let dim = dim.ok_or(LoadError::Empty)?;
    DataSet::with_dim(dim, rows).map_err(|e| LoadError::Cell { row: 0, column: 0, message: e.to_string() })
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64, LoadError> {
    let err = |message: String| LoadError::Cell { row, column, message };
    let v: f64 = cell.parse().map_err(|_| err(format!("not a number: {cell:?}")))?;
    if !v.is_finite() {
        return Err(err(format!("non-finite value {cell:?}")));
    }
    if v < 0.0 {
        return Err(err(format!("negative value {v}")));
    }
    Ok(v)
}

/// Writes a header and rows of preformatted cells.
pub fn write_table(
    path: impl AsRef<Path>,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(io::BufWriter::new(File::create(path)?));
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn write_profiles(path: impl AsRef<Path>, data: &DataSet) -> io::Result<()> {
    let mut out = io::BufWriter::new(File::create(path)?);
    let header: Vec<String> = (1..=data.dim()).map(|t| format!("t{t}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for g in data.iter() {
        let cells: Vec<String> = g.iter().map(|&v| format_value(v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_nine_significant_digits() {
        assert_eq!(format_value(1.0 / 3.0), "0.333333333");
        assert_eq!(format_value(-2.5), "-2.5");
        assert_eq!(format_value(123456789012.0), "123456789000");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(5.406586921e-14), "5.40658692e-14");
        assert_eq!(format_value(2e20), "2e20");
    }

    #[test]
    fn header_is_detected() {
        let data = read_profiles("a,b\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(data.rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let data = read_profiles("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(data.len(), 2);
    }

    #[test]
    fn nan_cell_is_located() {
        let err = read_profiles("t1,t2\n1,2\n3,NaN\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::Cell { row: 3, column: 2, .. }), "{err}");
    }

    #[test]
    fn negative_and_ragged_rows_are_rejected() {
        assert!(matches!(
            read_profiles("1,2\n3,-4\n".as_bytes()).unwrap_err(),
            LoadError::Cell { row: 2, column: 2, .. }
        ));
        assert!(matches!(
            read_profiles("1,2\n3\n".as_bytes()).unwrap_err(),
            LoadError::Ragged { row: 2, expected: 2, found: 1 }
        ));
        assert!(matches!(read_profiles("a,b\n".as_bytes()).unwrap_err(), LoadError::Empty));
    }

    proptest! {
        #[test]
        fn formatted_values_round_trip(v in prop_oneof![-1e12f64..1e12, -1e-6f64..1e-6, 1e14f64..1e18]) {
            let text = format_value(v);
            let back: f64 = text.parse().unwrap();
            prop_assert_eq!(back, quantize(v));
            prop_assert_eq!(format_value(back), text);
            prop_assert!((back - v).abs() <= v.abs() * 1e-8);
        }
    }
}
