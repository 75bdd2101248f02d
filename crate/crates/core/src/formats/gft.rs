use std::path::Path;

use super::Cursor;
use crate::error::{Error, Result};

pub const GFT_MAGIC: &[u8; 4] = b"GFT1";

/// Frame-major `f32` matrix: `frame_count` rows of `dims` values.
///
/// Layout: magic `GFT1`, `u32` frame count, `u32` dims, `f32` frame rate,
/// then the row-major payload. Missing values are stored as NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct GftFile {
    pub dims: usize,
    pub frame_rate: f32,
    pub data: Vec<f32>,
}

impl GftFile {
    pub fn new(dims: usize, frame_rate: f32, data: Vec<f32>) -> Result<Self> {
        if dims == 0 || !data.len().is_multiple_of(dims) {
            return Err(Error::InvalidInput(format!("{} values do not form rows of {dims}", data.len())));
        }
        Ok(Self { dims, frame_rate, data })
    }

    /// Builds from `f64` rows; every row must have `dims` entries.
    pub fn from_rows<R: AsRef<[f64]>>(dims: usize, frame_rate: f32, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(Error::InvalidInput(format!("row {i} has {} values, expected {dims}", r.len())));
            }
            data.extend(r.iter().map(|&v| v as f32));
        }
        Self::new(dims, frame_rate, data)
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dims).map(|r| r.iter().map(|&v| v as f64).collect()).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(GFT_MAGIC);
        out.extend_from_slice(&(self.frame_count() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims as u32).to_le_bytes());
        out.extend_from_slice(&self.frame_rate.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        let truncated = || Error::format(origin, "truncated GFT1 file");
        if c.take(4).ok_or_else(truncated)? != GFT_MAGIC {
            return Err(Error::format(origin, "bad magic, expected GFT1"));
        }
        let frames = c.u32().ok_or_else(truncated)? as usize;
        let dims = c.u32().ok_or_else(truncated)? as usize;
        let frame_rate = c.f32().ok_or_else(truncated)?;
        if dims == 0 {
            return Err(Error::format(origin, "zero dims"));
        }
        let expected = frames
            .checked_mul(dims)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::format(origin, "header sizes overflow"))?;
        if c.remaining() != expected {
            return Err(Error::format(
                origin,
                format!("payload is {} bytes, header implies {expected}", c.remaining()),
            ));
        }
        let data = (0..frames * dims).map(|_| c.f32().unwrap()).collect();
        Ok(Self { dims, frame_rate, data })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }

    /// Reads and checks the dimensionality; violations are rejected, never coerced.
    pub fn read_expecting(path: impl AsRef<Path>, dims: usize) -> Result<Self> {
        let path = path.as_ref();
        let f = Self::read(path)?;
        if f.dims != dims {
            return Err(Error::format(path, format!("expected {dims} dims, file has {}", f.dims)));
        }
        Ok(f)
    }
}
