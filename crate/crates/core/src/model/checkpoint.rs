//! Binary parameter snapshots.
//!
//! Layout (little-endian): magic `TEGGCNCK`, `u32` version, `u8` scalar
//! width in bytes, `u32` tensor count, then per tensor: `u32` name length,
//! UTF-8 name, `u8` decay flag, `u64` rows, `u64` cols, row-major data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::autodiff::ParamSet;
use crate::error::{io_err, Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"TEGGCNCK";
const VERSION: u32 = 1;

pub fn write_checkpoint<T: Scalar, W: Write>(params: &ParamSet<T>, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[T::BYTES as u8])?;
    w.write_all(&(params.params.len() as u32).to_le_bytes())?;
    for p in &params.params {
        w.write_all(&(p.name.len() as u32).to_le_bytes())?;
        w.write_all(p.name.as_bytes())?;
        w.write_all(&[p.decay as u8])?;
        let (r, c) = p.value.dim();
        w.write_all(&(r as u64).to_le_bytes())?;
        w.write_all(&(c as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(r * c * T::BYTES);
        for &v in p.value.iter() {
            v.to_le_bytes_vec(&mut buf);
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_checkpoint<T: Scalar, R: Read>(r: R) -> Result<ParamSet<T>> {
    let mut r = Reader { inner: r };
    if r.bytes(MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let width = r.u8()? as usize;
    if width != T::BYTES {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {width}-byte scalars, expected {}",
            T::BYTES
        )));
    }
    let count = r.u32()?;
    let mut params = ParamSet::default();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.bytes(len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let decay = r.u8()? != 0;
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let total = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(width))
            .ok_or_else(|| Error::Checkpoint(format!("tensor {name} too large")))?;
        let raw = r.bytes(total)?;
        let data: Vec<T> = raw.chunks_exact(width).map(T::from_le_slice).collect();
        let value = Array2::from_shape_vec((rows, cols), data).expect("sized above");
        params.push(name, value, decay);
    }
    let mut rest = Vec::new();
    r.inner
        .read_to_end(&mut rest)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok(params)
}

pub fn save_checkpoint<T: Scalar>(params: &ParamSet<T>, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    write_checkpoint(params, BufWriter::new(f)).map_err(io_err(path))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<ParamSet<T>> {
    let f = File::open(path).map_err(io_err(path))?;
    read_checkpoint(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            data in proptest::collection::vec(proptest::num::f64::ANY, 1..40),
            cols in 1usize..5,
        ) {
            let rows = data.len() / cols;
            prop_assume!(rows > 0);
            let mut ps = ParamSet::default();
            let m = Array2::from_shape_vec((rows, cols), data[..rows * cols].to_vec()).unwrap();
            ps.push("w", m, true);
            ps.push("b", Array2::<f64>::zeros((0, 3)), false);
            let mut buf = Vec::new();
            write_checkpoint(&ps, &mut buf).unwrap();
            let back: ParamSet<f64> = read_checkpoint(&buf[..]).unwrap();
            prop_assert_eq!(back.params.len(), 2);
            for (a, b) in ps.params.iter().zip(&back.params) {
                prop_assert_eq!(&a.name, &b.name);
                prop_assert_eq!(a.decay, b.decay);
                prop_assert_eq!(a.value.dim(), b.value.dim());
                for (x, y) in a.value.iter().zip(b.value.iter()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut ps = ParamSet::default();
        ps.push("w", Array2::<f32>::ones((2, 2)), true);
        let mut buf = Vec::new();
        write_checkpoint(&ps, &mut buf).unwrap();
        assert!(read_checkpoint::<f64, _>(&buf[..]).is_err());
        assert!(read_checkpoint::<f32, _>(&buf[..buf.len() - 1]).is_err());
    }
}
