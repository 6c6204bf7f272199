//! Binary model container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "ABAEMDL\0"
//! version u32
//! width   u8       scalar width in bytes (4 or 8)
//! k       u64
//! d       u64
//! lambda  f64
//! 4 × { rows u64, cols u64, rows·cols scalars }   T, M, W, b
//! ```

use super::AbaeParams;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

const MAGIC: &[u8; 8] = b"ABAEMDL\0";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained parameters plus the orthogonality weight they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct AbaeModel<S> {
    pub params: AbaeParams<S>,
    pub lambda: f64,
}

pub fn save_model<S: Scalar>(model: &AbaeModel<S>) -> Vec<u8> {
    let p = &model.params;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.push(S::WIDTH);
    out.extend_from_slice(&(p.num_aspects() as u64).to_le_bytes());
    out.extend_from_slice(&(p.dim() as u64).to_le_bytes());
    out.extend_from_slice(&model.lambda.to_le_bytes());
    for t in p.to_tensors() {
        out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
        for &x in t.as_slice() {
            x.write_le(&mut out);
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {} (wanted {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn load_model<S: Scalar>(bytes: &[u8]) -> Result<AbaeModel<S>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not an ABAE model file".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let width = c.take(1)?[0];
    if width != S::WIDTH {
        return Err(Error::Format(format!("model stores {width}-byte scalars, reader expects {}", S::WIDTH)));
    }
    let k = c.u64()? as usize;
    let d = c.u64()? as usize;
    let lambda = f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes"));
    let expected = [(k, d), (d, d), (k, d), (1, k)];
    let mut tensors = Vec::with_capacity(4);
    for (name, (er, ec)) in ["T", "M", "W", "b"].iter().zip(expected) {
        let rows = c.u64()? as usize;
        let cols = c.u64()? as usize;
        if (rows, cols) != (er, ec) {
            return Err(Error::Format(format!(
                "{name} is {rows}x{cols}, expected {er}x{ec} for k={k}, d={d}"
            )));
        }
        let raw = c.take(rows * cols * usize::from(width))?;
        let data = raw.chunks_exact(usize::from(width)).map(S::read_le).collect();
        tensors.push(Matrix::from_vec(rows, cols, data)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(AbaeModel { params: AbaeParams::from_tensors(&tensors)?, lambda })
}
