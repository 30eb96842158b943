//! Field serialization: CSV (`x,value` or `x,re,im`) and a little-endian
//! binary container.
//!
//! Binary layout: `N: u64`, `T: f64`, `kind: u64` (0 real, 1 complex), then
//! `N` (real) or `2N` (complex, interleaved re/im) `f64` samples. All words are
//! 8 bytes, little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid, RealField};

/// Either flavour of sampled field, as read back from disk.
#[derive(Debug, Clone)]
pub enum AnyField {
    Real(RealField),
    Complex(ComplexField),
}

/// Format with 17 significant digits so every `f64` round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_real_csv<W: Write>(field: &RealField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "value"])?;
    for (x, v) in field.grid().nodes().iter().zip(field.values()) {
        w.write_record([fmt_f64(*x), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex_csv<W: Write>(field: &ComplexField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re", "im"])?;
    for (x, v) in field.grid().nodes().iter().zip(field.values()) {
        w.write_record([fmt_f64(*x), fmt_f64(v.re), fmt_f64(v.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a CSV written by [`write_real_csv`] or [`write_complex_csv`].
///
/// The grid is reconstructed from the node column: `N` rows, `T = -x_0`.
pub fn read_csv<R: Read>(input: R) -> Result<AnyField> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let complex = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "value"] => false,
        ["x", "re", "im"] => true,
        other => return Err(Error::Format(format!("unexpected CSV header {other:?}"))),
    };
    let mut xs = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); if complex { 2 } else { 1 }];
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Format("short CSV row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number in CSV: {e}")))
        };
        xs.push(parse(0)?);
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse(c + 1)?);
        }
    }
    let n = xs.len();
    let half_period = xs.first().map(|x| -x).unwrap_or(0.0);
    let grid = Grid::new(n, half_period)?;
    let spacing_err = xs
        .iter()
        .zip(grid.nodes())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if spacing_err > 1e-9 * half_period.max(1.0) {
        return Err(Error::Format("CSV nodes are not a uniform periodic grid".into()));
    }
    if complex {
        let vals = cols[0]
            .iter()
            .zip(&cols[1])
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Ok(AnyField::Complex(ComplexField::new(&grid, vals)?))
    } else {
        Ok(AnyField::Real(RealField::new(&grid, cols.swap_remove(0))?))
    }
}

pub fn read_real_csv_file(path: &Path) -> Result<RealField> {
    match read_csv(BufReader::new(File::open(path)?))? {
        AnyField::Real(f) => Ok(f),
        AnyField::Complex(_) => Err(Error::Format(format!(
            "{} holds a complex field",
            path.display()
        ))),
    }
}

const KIND_REAL: u64 = 0;
const KIND_COMPLEX: u64 = 1;

pub fn write_binary<W: Write>(field: &AnyField, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let (grid, kind) = match field {
        AnyField::Real(f) => (f.grid(), KIND_REAL),
        AnyField::Complex(f) => (f.grid(), KIND_COMPLEX),
    };
    w.write_all(&(grid.n_points() as u64).to_le_bytes())?;
    w.write_all(&grid.half_period().to_le_bytes())?;
    w.write_all(&kind.to_le_bytes())?;
    match field {
        AnyField::Real(f) => {
            for v in f.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        AnyField::Complex(f) => {
            for v in f.values() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(input: R) -> Result<AnyField> {
    let mut r = BufReader::new(input);
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<R>| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let half_period = f64::from_le_bytes(next(&mut r)?);
    let kind = u64::from_le_bytes(next(&mut r)?);
    let grid = Grid::new(n, half_period)?;
    match kind {
        KIND_REAL => {
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                vals.push(f64::from_le_bytes(next(&mut r)?));
            }
            Ok(AnyField::Real(RealField::new(&grid, vals)?))
        }
        KIND_COMPLEX => {
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                let re = f64::from_le_bytes(next(&mut r)?);
                let im = f64::from_le_bytes(next(&mut r)?);
                vals.push(Complex64::new(re, im));
            }
            Ok(AnyField::Complex(ComplexField::new(&grid, vals)?))
        }
        other => Err(Error::Format(format!("unknown field kind tag {other}"))),
    }
}

/// Write `contents` to `path` via a temporary sibling and an atomic rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
