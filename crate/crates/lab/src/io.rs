//! Field snapshots and CSV tables.
//!
//! A field file is a little-endian header of 64-bit words, `n, L, n1,
//! n_torus[..], t`, followed by the values in row-major order. Integers are
//! stored as `u64`, reals as `f64`. Periodic-only data (no `x₁` truncation)
//! is written with `L = 0`; `n1` then holds the cell count of the first
//! torus axis.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rarefaction_core::domain::{DomainSpec, Field, MAX_DIM};
use rarefaction_core::torus::{TorusField, TorusGrid};

use crate::LabError;

/// What a field file holds.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Cylinder(Field),
    Periodic { field: TorusField, t: f64 },
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_word(r: &mut impl Read, path: &Path) -> Result<[u8; 8], LabError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => corrupt(path, "truncated header"),
        _ => e.into(),
    })?;
    Ok(b)
}

fn write_raw(
    path: &Path,
    dim: usize,
    half: f64,
    counts: &[usize],
    t: f64,
    values: &[f64],
) -> Result<(), LabError> {
    let mut w = BufWriter::new(File::create(path)?);
    put_u64(&mut w, dim as u64)?;
    put_f64(&mut w, half)?;
    for &c in counts {
        put_u64(&mut w, c as u64)?;
    }
    put_f64(&mut w, t)?;
    for &v in values {
        put_f64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(path: &Path, f: &Field) -> Result<(), LabError> {
    let s = f.spec();
    let mut counts = vec![s.n1];
    counts.extend_from_slice(&s.n_torus);
    write_raw(path, s.dim, s.half_length, &counts, f.t(), f.values())
}

pub fn write_periodic(path: &Path, f: &TorusField, t: f64) -> Result<(), LabError> {
    write_raw(path, f.grid.dim(), 0.0, &f.grid.counts, t, &f.values)
}

fn corrupt(path: &Path, msg: impl std::fmt::Display) -> LabError {
    LabError::Format(format!("{}: {msg}", path.display()))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, LabError> {
    let mut r = BufReader::new(File::open(path)?);
    let dim = u64::from_le_bytes(get_word(&mut r, path)?) as usize;
    if dim == 0 || dim > MAX_DIM {
        return Err(corrupt(path, format!("dimension {dim} out of range")));
    }
    let half = f64::from_le_bytes(get_word(&mut r, path)?);
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        counts.push(u64::from_le_bytes(get_word(&mut r, path)?) as usize);
    }
    let t = f64::from_le_bytes(get_word(&mut r, path)?);
    let len: usize = counts.iter().product();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * len {
        return Err(corrupt(
            path,
            format!("expected {len} values, found {} bytes", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if half == 0.0 {
        let grid = TorusGrid::new(counts).map_err(|e| corrupt(path, e))?;
        let field = TorusField::new(grid, values).map_err(|e| corrupt(path, e))?;
        return Ok(Snapshot::Periodic { field, t });
    }
    let spec = DomainSpec::new(dim, half, counts[0], counts[1..].to_vec())
        .map_err(|e| corrupt(path, e))?;
    Ok(Snapshot::Cylinder(
        Field::new(spec, values, t).map_err(|e| corrupt(path, e))?,
    ))
}

pub fn read_field(path: &Path) -> Result<Field, LabError> {
    match read_snapshot(path)? {
        Snapshot::Cylinder(f) => Ok(f),
        Snapshot::Periodic { .. } => Err(corrupt(
            path,
            "holds periodic data, expected a cylinder field",
        )),
    }
}

/// Writes a header and rows of numbers; floats use shortest round-trip form.
/// Shortest round-trip text, in exponent form for very small or large values.
pub fn real(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e9).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn write_table<R: AsRef<[f64]>>(
    path: &Path,
    header: &[&str],
    rows: &[R],
) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|&v| real(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Like [`write_table`] for rows mixing text and numbers.
pub fn write_records(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `(coordinates…, value)` per grid point; meant for small grids.
pub fn field_csv(path: &Path, f: &Field) -> Result<(), LabError> {
    let s = f.spec();
    let mut header: Vec<String> = (1..=s.dim).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for (k, v) in f.values().iter().enumerate() {
        let x = s.point(k);
        let mut rec: Vec<String> = x[..s.dim].iter().map(|&c| real(c)).collect();
        rec.push(real(*v));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header row.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), LabError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|e| corrupt(path, format!("row {}: `{c}`: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
