//! Binary archive of a [`RecycleBasis`], so recycling data persists across runs.
//!
//! Layout, all integers `u64` and all scalars `f64`, little-endian:
//!
//! ```text
//! "SRPCRREP"  magic, 8 bytes
//! version     u32 (currently 1)
//! n           vector length
//! blocks      number of blocks
//! per block:
//!   k, J
//!   Ũ         k vectors of n scalars
//!   R         k·J columns: first_row, len, len scalars
//!   boundary  u then v, n scalars each
//!   count     number of deflation references, then each reference
//! post        number of post-iteration deflation references, then each reference
//! reference:  u8 tag; 0 = boundary pair of block <u64 index>,
//!             1 = inline pair (u then v, n scalars each)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::operator::DeflationPair;
use crate::recycle::RecycleBasis;
use crate::shortrep::{PermutationDescriptor, RFactor, ShortRepresentation};

pub const MAGIC: &[u8; 8] = b"SRPCRREP";
pub const VERSION: u32 = 1;

pub fn save_basis(path: impl AsRef<Path>, basis: &RecycleBasis) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_basis(&mut w, basis)?;
    w.flush()?;
    Ok(())
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<RecycleBasis> {
    read_basis(&mut BufReader::new(File::open(path)?))
}

pub fn write_basis(w: &mut impl Write, basis: &RecycleBasis) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    put_u64(w, basis.dim())?;
    put_u64(w, basis.blocks().len())?;
    let boundaries: Vec<&Arc<DeflationPair>> = basis.blocks().iter().map(|b| b.boundary()).collect();
    for rep in basis.blocks() {
        put_u64(w, rep.k())?;
        put_u64(w, rep.stride())?;
        for u in rep.u_tilde() {
            put_f64s(w, u)?;
        }
        for c in 0..rep.block_dim() {
            let (lo, vals) = rep.r().column(c);
            put_u64(w, lo)?;
            put_u64(w, vals.len())?;
            put_f64s(w, vals)?;
        }
        put_f64s(w, rep.boundary().u())?;
        put_f64s(w, rep.boundary().v())?;
        put_refs(w, rep.deflations(), &boundaries)?;
    }
    put_refs(w, basis.post_deflations(), &boundaries)?;
    Ok(())
}

pub fn read_basis(r: &mut impl Read) -> Result<RecycleBasis> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Archive("bad magic".into()));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    let version = u32::from_le_bytes(ver);
    if version != VERSION {
        return Err(Error::Archive(format!("unsupported version {version}")));
    }
    let n = get_u64(r)?;
    let n_blocks = get_u64(r)?;
    if n == 0 || n_blocks == 0 {
        return Err(Error::Archive("empty basis".into()));
    }
    let mut blocks: Vec<ShortRepresentation> = Vec::with_capacity(n_blocks.min(1024));
    for _ in 0..n_blocks {
        let k = get_u64(r)?;
        let j = get_u64(r)?;
        let perm = PermutationDescriptor::new(k, j).map_err(|e| Error::Archive(e.to_string()))?;
        let u_tilde = (0..k).map(|_| get_vector(r, n)).collect::<Result<Vec<_>>>()?;
        let m = perm.dim();
        let mut columns = Vec::with_capacity(m);
        for _ in 0..m {
            let lo = get_u64(r)?;
            let len = get_u64(r)?;
            if len > m {
                return Err(Error::Archive("R column longer than the block".into()));
            }
            columns.push((lo, get_f64s(r, len)?));
        }
        let rf = RFactor::from_columns(m, columns)?;
        let boundary = Arc::new(DeflationPair::new(get_vector(r, n)?, get_vector(r, n)?)?);
        let boundaries: Vec<&Arc<DeflationPair>> = blocks.iter().map(|b| b.boundary()).collect();
        let defl = get_refs(r, n, &boundaries)?;
        blocks.push(ShortRepresentation::new(u_tilde, rf, perm, defl, boundary)?);
    }
    let boundaries: Vec<&Arc<DeflationPair>> = blocks.iter().map(|b| b.boundary()).collect();
    let post = get_refs(r, n, &boundaries)?;
    RecycleBasis::from_parts(blocks, post)
}

fn put_u64(w: &mut impl Write, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn put_refs(w: &mut impl Write, refs: &[Arc<DeflationPair>], boundaries: &[&Arc<DeflationPair>]) -> Result<()> {
    put_u64(w, refs.len())?;
    for p in refs {
        match boundaries.iter().position(|b| Arc::ptr_eq(b, p)) {
            Some(i) => {
                w.write_all(&[0])?;
                put_u64(w, i)?;
            }
            None => {
                w.write_all(&[1])?;
                put_f64s(w, p.u())?;
                put_f64s(w, p.v())?;
            }
        }
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Archive("count overflows usize".into()))
}

fn get_f64s(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len.min(1 << 20));
    let mut b = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn get_vector(r: &mut impl Read, n: usize) -> Result<DenseVector> {
    DenseVector::new(get_f64s(r, n)?).map_err(|_| Error::Archive("non-finite vector entry".into()))
}

fn get_refs(r: &mut impl Read, n: usize, boundaries: &[&Arc<DeflationPair>]) -> Result<Vec<Arc<DeflationPair>>> {
    let count = get_u64(r)?;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        match tag[0] {
            0 => {
                let i = get_u64(r)?;
                let p = boundaries
                    .get(i)
                    .ok_or_else(|| Error::Archive(format!("reference to unknown block {i}")))?;
                out.push(Arc::clone(p));
            }
            1 => out.push(Arc::new(DeflationPair::new(get_vector(r, n)?, get_vector(r, n)?)?)),
            t => return Err(Error::Archive(format!("unknown reference tag {t}"))),
        }
    }
    Ok(out)
}
