//! Binary checkpoint layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "GWMCKPT\0"
//! version  u32
//! meta     u64 length + UTF-8 JSON {"config": .., "vocab": ..}
//! count    u64
//! count × { name: u32 length + UTF-8, rank: u32, dims: rank × u64,
//!           values: product(dims) × f64 }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelError};
use crate::chem::Vocab;
use crate::gnn::ParamEntry;

const MAGIC: &[u8; 8] = b"GWMCKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint metadata: {0}")]
    Meta(#[from] serde_json::Error),
    #[error("checkpoint field is not valid UTF-8")]
    Utf8,
    #[error("checkpoint tensor `{0}` does not match the model")]
    Mismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: ModelConfig,
    vocab: Option<Vocab>,
}

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Option<Vocab>,
    pub tensors: Vec<ParamEntry>,
}

impl Checkpoint {
    /// Rebuilds the model and loads the stored values, checking every name
    /// and shape.
    pub fn into_model(self) -> Result<Model, CheckpointError> {
        let mut model = Model::new(self.config)?;
        if model.store().len() != self.tensors.len() {
            return Err(CheckpointError::Mismatch(format!(
                "{} tensors stored, {} expected",
                self.tensors.len(),
                model.store().len()
            )));
        }
        for t in self.tensors {
            let id = model
                .store()
                .id(&t.name)
                .ok_or_else(|| CheckpointError::Mismatch(t.name.clone()))?;
            if model.store().entry(id).shape != t.shape {
                return Err(CheckpointError::Mismatch(t.name));
            }
            model.store_mut().set(id, t.values);
        }
        Ok(model)
    }
}

pub fn write_checkpoint(mut w: impl Write, model: &Model, vocab: Option<&Vocab>) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let meta = serde_json::to_vec(&Meta {
        config: model.config().clone(),
        vocab: vocab.cloned(),
    })?;
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(&meta)?;
    let entries = model.store().entries();
    w.write_all(&(entries.len() as u64).to_le_bytes())?;
    for e in entries {
        w.write_all(&(e.name.len() as u32).to_le_bytes())?;
        w.write_all(e.name.as_bytes())?;
        w.write_all(&(e.shape.len() as u32).to_le_bytes())?;
        for &d in &e.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in &e.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_bytes(r: &mut impl Read, len: u64) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len).read_to_end(&mut buf)?;
    if buf.len() as u64 != len {
        return Err(std::io::ErrorKind::UnexpectedEof.into());
    }
    Ok(buf)
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Checkpoint, CheckpointError> {
    let mut magic = [0; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let len = read_u64(&mut r)?;
    let meta: Meta = serde_json::from_slice(&read_bytes(&mut r, len)?)?;
    let count = read_u64(&mut r)?;
    let mut tensors = Vec::new();
    for _ in 0..count {
        let len = read_u32(&mut r)?;
        let name = String::from_utf8(read_bytes(&mut r, u64::from(len))?).map_err(|_| CheckpointError::Utf8)?;
        let rank = read_u32(&mut r)?;
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<std::io::Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = read_bytes(&mut r, 8 * n as u64)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.push(ParamEntry { name, shape, values });
    }
    Ok(Checkpoint {
        config: meta.config,
        vocab: meta.vocab,
        tensors,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &Model, vocab: Option<&Vocab>) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, vocab)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
