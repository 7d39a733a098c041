//! Binary snapshots, little-endian throughout.
//!
//! Envelope (`ENVF`): magic, version u32, nx u32, ny u32, flags u32
//! (bit 0: B present, bit 1: mean flow present), L_x f64, L_y f64, tau f64,
//! then A as interleaved re/im f64, then B likewise, then the mean flow as f64.
//!
//! Direct (`DIRF`): magic, version u32, n u32, L_x f64, t f64, eps f64, then u as f64.

use std::io::{Read, Write};

use crate::direct::DirectField;
use crate::envelope::EnvelopeState;
use crate::spectral::Grid;
use crate::{Error, Result, C64};

pub const ENVELOPE_MAGIC: &[u8; 4] = b"ENVF";
pub const DIRECT_MAGIC: &[u8; 4] = b"DIRF";
pub const VERSION: u32 = 1;

const HAS_B: u32 = 1;
const HAS_MEANFLOW: u32 = 2;

pub fn write_envelope(w: &mut impl Write, s: &EnvelopeState) -> Result<()> {
    let flags = if s.b.is_some() { HAS_B } else { 0 } | if s.meanflow.is_some() { HAS_MEANFLOW } else { 0 };
    w.write_all(ENVELOPE_MAGIC)?;
    for v in [VERSION, s.grid.nx as u32, s.grid.ny as u32, flags] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [s.grid.lx, s.grid.ly, s.tau] {
        w.write_all(&v.to_le_bytes())?;
    }
    let complex = |w: &mut dyn Write, f: &[C64]| -> std::io::Result<()> {
        for z in f {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    };
    complex(w, &s.a)?;
    if let Some(b) = &s.b {
        complex(w, b)?;
    }
    if let Some(m) = &s.meanflow {
        for v in m {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_envelope(r: &mut impl Read) -> Result<EnvelopeState> {
    expect_magic(r, ENVELOPE_MAGIC)?;
    let [nx, ny, flags] = [u32_le(r)?, u32_le(r)?, u32_le(r)?];
    let (lx, ly, tau) = (f64_le(r)?, f64_le(r)?, f64_le(r)?);
    let grid = Grid::new_2d(nx as usize, ny as usize, lx, ly).map_err(|e| Error::Snapshot(e.to_string()))?;
    let complex = |r: &mut dyn Read| -> Result<Vec<C64>> {
        (0..grid.len()).map(|_| Ok(C64::new(f64_le(r)?, f64_le(r)?))).collect()
    };
    let a = complex(r)?;
    let b = if flags & HAS_B != 0 { Some(complex(r)?) } else { None };
    let meanflow = if flags & HAS_MEANFLOW != 0 {
        Some((0..grid.len()).map(|_| f64_le(r)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    Ok(EnvelopeState { grid, a, b, meanflow, tau })
}

pub fn write_direct(w: &mut impl Write, f: &DirectField) -> Result<()> {
    w.write_all(DIRECT_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(f.grid.nx as u32).to_le_bytes())?;
    for v in [f.grid.lx, f.t, f.eps] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &f.u {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_direct(r: &mut impl Read) -> Result<DirectField> {
    expect_magic(r, DIRECT_MAGIC)?;
    let n = u32_le(r)?;
    let (lx, t, eps) = (f64_le(r)?, f64_le(r)?, f64_le(r)?);
    let grid = Grid::new_1d(n as usize, lx).map_err(|e| Error::Snapshot(e.to_string()))?;
    let u = (0..grid.len()).map(|_| f64_le(r)).collect::<Result<Vec<_>>>()?;
    Ok(DirectField { grid, u, t, eps })
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Snapshot(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&got)
        )));
    }
    let version = u32_le(r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    Ok(())
}

fn u32_le(r: &mut (impl Read + ?Sized)) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn f64_le(r: &mut (impl Read + ?Sized)) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
