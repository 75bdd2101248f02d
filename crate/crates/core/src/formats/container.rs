use std::path::Path;

use serde_json::Value;

use super::Cursor;
use crate::error::{Error, Result};

pub const GCK_MAGIC: &[u8; 4] = b"GCK1";

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { name: name.into(), shape, data }
    }
}

/// Named `f64` arrays behind a JSON header.
///
/// Layout: magic `GCK1`, `u32` version, `u32` header length, header JSON,
/// then per array: `u32` name length, name, `u32` rank, `rank` x `u32`
/// dims, payload. The header records `array_count` so truncation at an
/// array boundary is detected.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayContainer {
    pub version: u32,
    pub header: Value,
    pub arrays: Vec<NamedArray>,
}

impl ArrayContainer {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut header = self.header.clone();
        match &mut header {
            Value::Object(map) => {
                map.insert("array_count".into(), Value::from(self.arrays.len()));
            }
            _ => return Err(Error::Checkpoint("container header must be a JSON object".into())),
        }
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::new();
        out.extend_from_slice(GCK_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for a in &self.arrays {
            out.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for d in &a.shape {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        let truncated = || Error::Checkpoint("truncated container".into());
        if c.take(4).ok_or_else(truncated)? != GCK_MAGIC {
            return Err(Error::Checkpoint("bad magic, expected GCK1".into()));
        }
        let version = c.u32().ok_or_else(truncated)?;
        let json_len = c.u32().ok_or_else(truncated)? as usize;
        let mut header: Value = serde_json::from_slice(c.take(json_len).ok_or_else(truncated)?)
            .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
        let count = header
            .as_object_mut()
            .and_then(|m| m.remove("array_count"))
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Checkpoint("header lacks array_count".into()))?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let name_len = c.u32().ok_or_else(truncated)? as usize;
            let name = std::str::from_utf8(c.take(name_len).ok_or_else(truncated)?)
                .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?
                .to_string();
            let rank = c.u32().ok_or_else(truncated)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(c.u32().ok_or_else(truncated)? as usize);
            }
            let len: usize = shape.iter().product();
            if c.remaining() < len.saturating_mul(8) {
                return Err(truncated());
            }
            let data = (0..len).map(|_| c.f64().unwrap()).collect();
            arrays.push(NamedArray { name, shape, data });
        }
        if c.remaining() != 0 {
            return Err(Error::Checkpoint(format!("{} trailing bytes", c.remaining())));
        }
        Ok(Self { version, header, arrays })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn get(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }
}
