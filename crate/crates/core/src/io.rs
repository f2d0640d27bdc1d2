//! CSV ingestion and JSON helpers.
//!
//! Tables are comma-separated, UTF-8, with `.` as the decimal mark. A header
//! row is detected when the first record contains a non-numeric field.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn columns(&self) -> usize {
        self.header
            .as_ref()
            .map(|h| h.len())
            .or_else(|| self.rows.first().map(|r| r.len()))
            .unwrap_or(0)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.as_ref()?.iter().position(|h| h == name)
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

pub fn read_table_from<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = r + 1;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if r == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(Error::Parse {
                    row: row_no,
                    column: rec.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", rec.len()),
                });
            }
        } else {
            width = Some(rec.len());
        }
        let mut row = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: c + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    column: c + 1,
                    message: "non-finite value".into(),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn read_table(path: &Path) -> Result<Table> {
    read_table_from(std::fs::File::open(path)?)
}

/// Writes a CSV with the given header and rows. Floats use Rust's shortest
/// round-trip formatting, so output is byte-stable.
pub fn write_csv<W: std::io::Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection() {
        let t = read_table_from("x1,x2,y\n0,1,2\n3,4,5\n".as_bytes()).unwrap();
        assert_eq!(t.header.as_deref().unwrap(), ["x1", "x2", "y"]);
        assert_eq!(t.rows, vec![vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        let t = read_table_from("0.5,1\n2,3e-1\n".as_bytes()).unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows[1], vec![2.0, 0.3]);
    }

    #[test]
    fn parse_errors_name_location() {
        let err = read_table_from("x,y\n1,2\n3,abc\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            e => panic!("unexpected {e}"),
        }
        let err = read_table_from("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn empty_input() {
        let t = read_table_from("".as_bytes()).unwrap();
        assert!(t.rows.is_empty() && t.header.is_none());
    }
}
