//! Binary field snapshots.
//!
//! Layout, little-endian: magic `PREG`, version `u32`, then `n, m, N_t, N_x` as
//! `u32` and `T, L` as `f64` (40 bytes in total), followed by the samples in
//! storage order as `(re, im)` pairs of `f64`. The component count is implied by
//! the payload length.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Field, Grid, Shape};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PREG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [g.n(), g.m(), g.nt(), g.nx()] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&g.period_t().to_le_bytes())?;
    w.write_all(&g.period_x().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.data().len());
    for z in field.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot. With `shape == None` the shape is inferred from the
/// component count, preferring `Scalar`, then `Vector`, `Matrix`, `Density`.
pub fn read_field<R: Read>(mut r: R, shape: Option<Shape>) -> Result<Field> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| Error::Format("truncated header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let grid = Grid::new(
        u32_at(8) as usize,
        u32_at(12) as usize,
        u32_at(16) as usize,
        u32_at(20) as usize,
        f64_at(24),
        f64_at(32),
    )?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let per_point = grid.points() * 16;
    if payload.is_empty() || payload.len() % per_point != 0 {
        return Err(Error::Format(format!("payload of {} bytes", payload.len())));
    }
    let comps = payload.len() / per_point;
    let shape = match shape {
        Some(s) if s.comps(&grid) == comps => s,
        Some(s) => return Err(Error::Format(format!("{comps} components do not match {s:?}"))),
        None => [Shape::Scalar, Shape::Vector, Shape::Matrix, Shape::Density]
            .into_iter()
            .find(|s| s.comps(&grid) == comps)
            .ok_or_else(|| Error::Format(format!("no shape has {comps} components")))?,
    };
    let data = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Field::from_vec(grid, shape, data)
}

pub fn save(path: &Path, field: &Field) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path, shape: Option<Shape>) -> Result<Field> {
    read_field(BufReader::new(File::open(path)?), shape)
}
