//! Self-describing binary checkpoints for trained decoders.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   b"SNET"
//! version u32 = 1
//! spatial_dim u32, latent_dim u32, hidden u32, depth u32
//! skip    u32 (u32::MAX when the net has no skip connection)
//! beta    f64
//! per layer: weights row-major f64, then biases f64
//! if latent_dim > 0: n_shapes u64, then n_shapes x latent_dim f64
//! ```
//!
//! Layer shapes are derived from the header, so the payload is exactly
//! the parameters.

use std::fs;
use std::path::Path;

use sald::net::{ImplicitNet, Layer};
use sald::train::LatentTable;

use super::samples::Reader;
use super::FormatError;

pub const MAGIC: &[u8; 4] = b"SNET";
pub const VERSION: u32 = 1;

pub fn write_checkpoint(
    path: &Path,
    net: &ImplicitNet,
    latents: Option<&LatentTable>,
) -> Result<(), FormatError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.spatial_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(net.latent_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(net.hidden() as u32).to_le_bytes());
    out.extend_from_slice(&(net.depth() as u32).to_le_bytes());
    out.extend_from_slice(&(net.skip_layer().map_or(u32::MAX, |s| s as u32)).to_le_bytes());
    out.extend_from_slice(&net.beta().to_le_bytes());
    for layer in net.layers() {
        for w in &layer.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.b {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    if net.latent_dim() > 0 {
        let n = latents.map_or(0, LatentTable::len);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        if let Some(table) = latents {
            for row in table.rows() {
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_checkpoint(
    path: &Path,
) -> Result<(ImplicitNet, Option<LatentTable>), FormatError> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(4)? != MAGIC {
        return Err(FormatError::BadMagic {
            path: path.display().to_string(),
            expected: "SNET checkpoint",
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.bad_header(format!("unsupported version {version}")));
    }
    let spatial_dim = r.u32()? as usize;
    let latent_dim = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let depth = r.u32()? as usize;
    let skip_raw = r.u32()?;
    let skip = (skip_raw != u32::MAX).then_some(skip_raw as usize);
    let beta = r.f64()?;
    if !(1..=3).contains(&spatial_dim) || depth < 2 || hidden == 0 || !beta.is_finite() {
        return Err(r.bad_header("implausible header fields".into()));
    }
    let in_dim = spatial_dim + latent_dim;
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let cols = if l == 0 {
            in_dim
        } else if skip == Some(l) {
            hidden + in_dim
        } else {
            hidden
        };
        let rows = if l == depth - 1 { 1 } else { hidden };
        let mut w = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            w.push(r.f64()?);
        }
        let mut b = Vec::with_capacity(rows);
        for _ in 0..rows {
            b.push(r.f64()?);
        }
        layers.push(Layer { rows, cols, w, b });
    }
    let latents = if latent_dim > 0 {
        let n = r.u64()? as usize;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(latent_dim);
            for _ in 0..latent_dim {
                row.push(r.f64()?);
            }
            rows.push(row);
        }
        (n > 0).then(|| LatentTable::from_rows(rows).unwrap())
    } else {
        None
    };
    if r.pos != bytes.len() {
        return Err(r.bad_header("trailing bytes".into()));
    }
    let net = ImplicitNet::from_parts(spatial_dim, latent_dim, beta, skip, layers)?;
    Ok((net, latents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sald::net::geometric_init;

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let mut net = ImplicitNet::build_decoder(2, 4, 16, 4, 100.0);
        geometric_init(&mut net, 0.5, 3);
        let latents = LatentTable::new(3, 4, 0.01, 7);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.snet");
        write_checkpoint(&p, &net, Some(&latents)).unwrap();
        let (net2, lat2) = read_checkpoint(&p).unwrap();
        assert_eq!(net, net2);
        assert_eq!(Some(latents), lat2);
        let p2 = dir.path().join("net2.snet");
        write_checkpoint(&p2, &net2, lat2.as_ref()).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn unconditioned_checkpoint_has_no_latents() {
        let mut net = ImplicitNet::build_decoder(3, 0, 8, 3, 100.0);
        geometric_init(&mut net, 1.0, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.snet");
        write_checkpoint(&p, &net, None).unwrap();
        let (net2, lat) = read_checkpoint(&p).unwrap();
        assert_eq!(net, net2);
        assert!(lat.is_none());
    }
}
