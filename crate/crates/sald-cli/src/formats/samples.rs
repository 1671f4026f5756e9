//! Flat binary format for precomputed sample batches.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic   b"SALD"
//! version u32 = 1
//! dim     u32 (2 or 3)
//! n_values u64
//! n_grads  u64
//! values: n_values x (dim coordinates, h) f64
//! grads:  n_grads x (dim coordinates, dim normal) f64
//! ```

use std::fs;
use std::path::Path;

use sald::geometry::{GradSample, SampleBatch, ValueSample};

use super::FormatError;

pub const MAGIC: &[u8; 4] = b"SALD";
pub const VERSION: u32 = 1;

pub fn write_samples(path: &Path, batch: &SampleBatch) -> Result<(), FormatError> {
    let dim = batch.dim;
    let mut out = Vec::with_capacity(
        24 + batch.values.len() * (dim + 1) * 8 + batch.grads.len() * dim * 2 * 8,
    );
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(batch.values.len() as u64).to_le_bytes());
    out.extend_from_slice(&(batch.grads.len() as u64).to_le_bytes());
    for v in &batch.values {
        for c in &v.point[..dim] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&v.h.to_le_bytes());
    }
    for g in &batch.grads {
        for c in &g.point[..dim] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for c in &g.normal[..dim] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<SampleBatch, FormatError> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(4)? != MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "SALD sample",
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.bad_header(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    if dim != 2 && dim != 3 {
        return Err(r.bad_header(format!("bad dimension {dim}")));
    }
    let n_values = r.u64()? as usize;
    let n_grads = r.u64()? as usize;
    let expect = 28 + (n_values * (dim + 1) + n_grads * 2 * dim) * 8;
    if bytes.len() != expect {
        return Err(r.bad_header(format!(
            "size mismatch: expected {expect} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut values = Vec::with_capacity(n_values);
    for _ in 0..n_values {
        let mut point = [0.0; 3];
        for c in point.iter_mut().take(dim) {
            *c = r.f64()?;
        }
        values.push(ValueSample { point, h: r.f64()? });
    }
    let mut grads = Vec::with_capacity(n_grads);
    for _ in 0..n_grads {
        let mut point = [0.0; 3];
        let mut normal = [0.0; 3];
        for c in point.iter_mut().take(dim) {
            *c = r.f64()?;
        }
        for c in normal.iter_mut().take(dim) {
            *c = r.f64()?;
        }
        grads.push(GradSample { point, normal });
    }
    Ok(SampleBatch { dim, values, grads })
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
    pub path: &'a Path,
}

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.bad_header("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bad_header(&self, what: String) -> FormatError {
        FormatError::BadHeader {
            path: self.path.display().to_string(),
            what,
        }
    }
}
