//! CSV readers and writers for fields and result tables.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x1,x2,value` rows in row-major grid order.
pub fn write_field<W: Write>(field: &ScalarField, out: W) -> Result<()> {
    let grid = field.grid();
    let n = grid.points_per_axis();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "value"])?;
    for i1 in 0..n {
        for i2 in 0..n {
            w.write_record([fmt17(grid.coord(i1)), fmt17(grid.coord(i2)), fmt17(field.at(i1, i2))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_file(field: &ScalarField, path: &Path) -> Result<()> {
    write_field(field, File::create(path)?)
}

pub fn read_field<R: Read>(input: R) -> Result<ScalarField> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x1", "x2", "value"] {
        return Err(Error::Parse(format!("expected header x1,x2,value, got {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!("expected 3 columns, got {}", rec.len())));
        }
        let mut nums = [0.0; 3];
        for (slot, s) in nums.iter_mut().zip(rec.iter()) {
            *slot = s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))?;
        }
        rows.push(nums);
    }
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() {
        return Err(Error::Parse(format!("{} rows do not form a square grid", rows.len())));
    }
    let grid = GridSpec::new(n)?;
    let tol = 1e-9 * grid.spacing();
    let mut values = Vec::with_capacity(rows.len());
    for (idx, [x1, x2, v]) in rows.into_iter().enumerate() {
        let (i1, i2) = (idx / n, idx % n);
        if (x1 - grid.coord(i1)).abs() > tol || (x2 - grid.coord(i2)).abs() > tol {
            return Err(Error::Parse(format!("row {idx}: coordinates ({x1}, {x2}) are not in row-major grid order")));
        }
        values.push(v);
    }
    ScalarField::new(grid, values)
}

pub fn read_field_file(path: &Path) -> Result<ScalarField> {
    read_field(File::open(path)?)
}

/// Writes a header plus rows of already-formatted cells.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_table(File::create(path)?, header, rows)
}

/// Reads a numeric table, returning the header and rows. Empty cells read as NaN.
pub fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                let s = s.trim();
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
