//! "THINPH1" binary files for fields, masks and thin functions.
//!
//! Layout, little-endian: the 7-byte magic, `u16` version, `u8 n`, `f64`
//! alpha, half extent and spacing, one `u32` count per axis (thin axes, then
//! `y`; thin functions list the thin axes only), then the payload: `f64`
//! values in node order, or one byte per slab node for masks (0 zero,
//! 1 positive). An optional trailer `u32 len` + UTF-8 `key=value` lines
//! carries run metadata.

use crate::error::{Error, Result};
use crate::extension::ThinFunction;
use crate::grid::{build_grid, Grid, GridSpec, Phase, ScalarField, ThinMask};
use std::path::Path;

pub const MAGIC: &[u8; 7] = b"THINPH1";
pub const VERSION: u16 = 1;

/// Ordered `key=value` pairs stored after the payload.
pub type Metadata = Vec<(String, String)>;

fn header(grid: &Grid, with_y: bool) -> Vec<u8> {
    let s = grid.spec();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(s.n as u8);
    for v in [s.alpha, s.half_extent, s.spacing] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let counts = grid.spec().counts();
    let axes = if with_y { counts.len() } else { counts.len() - 1 };
    for &c in &counts[..axes] {
        out.extend_from_slice(&(c as u32).to_le_bytes());
    }
    out
}

fn trailer(out: &mut Vec<u8>, meta: &Metadata) {
    if meta.is_empty() {
        return;
    }
    let text: String = meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
}

pub fn encode_field(field: &ScalarField, meta: &Metadata) -> Vec<u8> {
    let mut out = header(field.grid(), true);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    trailer(&mut out, meta);
    out
}

pub fn encode_mask(mask: &ThinMask, meta: &Metadata) -> Vec<u8> {
    let mut out = header(mask.grid(), true);
    out.extend(mask.states().iter().map(|p| u8::from(*p == Phase::Positive)));
    trailer(&mut out, meta);
    out
}

pub fn encode_thin(f: &ThinFunction, meta: &Metadata) -> Vec<u8> {
    let mut out = header(f.grid(), false);
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    trailer(&mut out, meta);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated file: need {k} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn read_header<'a>(bytes: &'a [u8], with_y: bool) -> Result<(Grid, Reader<'a>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(7)? != MAGIC {
        return Err(Error::Format("bad magic, expected THINPH1".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.take(1)?[0] as usize;
    let (alpha, half_extent, spacing) = (r.f64()?, r.f64()?, r.f64()?);
    let grid = build_grid(GridSpec::new(n, alpha, half_extent, spacing)?)?;
    let expected = grid.spec().counts();
    let axes = if with_y { expected.len() } else { expected.len() - 1 };
    for &e in &expected[..axes] {
        let c = r.u32()? as usize;
        if c != e {
            return Err(Error::Format(format!("axis count {c} does not match the grid ({e})")));
        }
    }
    Ok((grid, r))
}

fn read_trailer(mut r: Reader<'_>) -> Result<Metadata> {
    if r.pos == r.bytes.len() {
        return Ok(Vec::new());
    }
    let len = r.u32()? as usize;
    let text = std::str::from_utf8(r.take(len)?).map_err(|e| Error::Format(format!("metadata is not UTF-8: {e}")))?;
    if r.pos != r.bytes.len() {
        return Err(Error::Format("trailing bytes after metadata".into()));
    }
    text.lines()
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Format(format!("metadata line without '=': {l}")))
        })
        .collect()
}

fn read_values(r: &mut Reader<'_>, count: usize) -> Result<Vec<f64>> {
    (0..count).map(|_| r.f64()).collect()
}

pub fn decode_field(bytes: &[u8]) -> Result<(ScalarField, Metadata)> {
    let (grid, mut r) = read_header(bytes, true)?;
    let values = read_values(&mut r, grid.node_count())?;
    let field = ScalarField::new(grid, values)?;
    Ok((field, read_trailer(r)?))
}

pub fn decode_mask(bytes: &[u8]) -> Result<(ThinMask, Metadata)> {
    let (grid, mut r) = read_header(bytes, true)?;
    let states = r
        .take(grid.slab_count())?
        .iter()
        .map(|&b| match b {
            0 => Ok(Phase::Zero),
            1 => Ok(Phase::Positive),
            _ => Err(Error::Format(format!("mask byte {b} is neither 0 nor 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let mask = ThinMask::new(&grid, states)?;
    Ok((mask, read_trailer(r)?))
}

pub fn decode_thin(bytes: &[u8]) -> Result<(ThinFunction, Metadata)> {
    let (grid, mut r) = read_header(bytes, false)?;
    let values = read_values(&mut r, grid.slab_count())?;
    let f = ThinFunction::new(&grid, values)?;
    Ok((f, read_trailer(r)?))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_field(path: &Path, field: &ScalarField, meta: &Metadata) -> Result<()> {
    write_file(path, &encode_field(field, meta))
}

pub fn read_field(path: &Path) -> Result<(ScalarField, Metadata)> {
    decode_field(&read_file(path)?)
}

pub fn write_mask(path: &Path, mask: &ThinMask, meta: &Metadata) -> Result<()> {
    write_file(path, &encode_mask(mask, meta))
}

pub fn read_mask(path: &Path) -> Result<(ThinMask, Metadata)> {
    decode_mask(&read_file(path)?)
}

pub fn write_thin(path: &Path, f: &ThinFunction, meta: &Metadata) -> Result<()> {
    write_file(path, &encode_thin(f, meta))
}

pub fn read_thin(path: &Path) -> Result<(ThinFunction, Metadata)> {
    decode_thin(&read_file(path)?)
}
