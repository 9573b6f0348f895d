//! Binary checkpoints of `(f, X)` states.
//!
//! Layout, all little-endian: magic `G2FL`, format version `u32`, `N` as `u32`,
//! period `f64`, active-direction bitmask `u8`, stencil order `u8`, then the
//! `N^k` values of `f`, then `X` as 7 consecutive components per point. Points
//! are row-major over the active directions. Time is not stored.

use std::io::{Read, Write};

use super::{Field, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::g2algebra::Vec7;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"G2FL";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Contents of a checkpoint file.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub grid: Grid,
    pub f: ScalarField,
    pub x: VectorField,
}

pub fn write_checkpoint<W: Write>(mut w: W, f: &ScalarField, x: &VectorField) -> Result<()> {
    let grid = f.grid();
    if grid != x.grid() {
        return Err(Error::GridMismatch);
    }
    let mut buf = Vec::with_capacity(22 + 64 * grid.npoints());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_dim() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.period().to_le_bytes());
    buf.push(grid.active_mask());
    buf.push(grid.stencil_order());
    for v in f.raw() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for p in 0..grid.npoints() {
        for v in x.at(p).0 {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 22 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("missing G2FL header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let period = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let mask = bytes[20];
    let order = bytes[21];
    let active: Vec<usize> = (0..7).filter(|d| mask & (1 << d) != 0).collect();
    if mask & 0x80 != 0 {
        return Err(bad("bitmask names an eighth direction"));
    }
    let grid = Grid::new(period, n, &active, order).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let np = grid.npoints();
    if bytes.len() != 22 + 64 * np {
        return Err(Error::Checkpoint(format!(
            "expected {} bytes, found {}",
            22 + 64 * np,
            bytes.len()
        )));
    }
    let val = |i: usize| f64::from_le_bytes(bytes[22 + 8 * i..30 + 8 * i].try_into().unwrap());
    let f = Field::from_raw(&grid, (0..np).map(val).collect());
    let xs: Vec<Vec7> = (0..np)
        .map(|p| Vec7(std::array::from_fn(|c| val(np + 7 * p + c))))
        .collect();
    let x = Field::from_values(&grid, &xs);
    Ok(Checkpoint { grid, f, x })
}
