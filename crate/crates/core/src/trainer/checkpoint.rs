//! Binary model container.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! "DDPM" version
//! hyperparameters   string (key=value lines)
//! words, chars      list of strings (without PAD/UNK)
//! pos               u8 flag, then list of strings if 1
//! relations         list of strings (the 14 labels)
//! tensors           count, then per tensor:
//!                   name, rank, dims..., row-major f32 values
//! ```
//!
//! Strings are a byte length followed by UTF-8 bytes.

use thiserror::Error;

use crate::conllx::Relation;
use crate::model::{HyperParams, ModelError, ParserModel, Symbols, Vocab};
use crate::numerics::{ParamStore, Tensor};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"DDPM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint parameters do not match its configuration: {0}")]
    Inconsistent(#[source] ModelError),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("checkpoint field exceeds u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn string(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn list<'a>(&mut self, items: impl ExactSizeIterator<Item = &'a str>) {
        self.u32(items.len());
        for s in items {
            self.string(s);
        }
    }
}

/// Serializes a model; values are rounded to `f32`.
pub fn save<T: Scalar>(model: &ParserModel<T>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION as usize);
    w.string(&model.hyper().to_key_values());

    let vocab = model.vocab();
    w.list(vocab.words.symbols().iter().map(String::as_str));
    w.list(vocab.chars.symbols().iter().map(String::as_str));
    match &vocab.pos {
        Some(tags) => {
            w.0.push(1);
            w.list(tags.symbols().iter().map(String::as_str));
        }
        None => w.0.push(0),
    }
    w.list(Relation::ALL.iter().map(|r| r.as_str()));

    w.u32(model.params.len());
    for (_, name, tensor) in model.params.iter() {
        w.string(name);
        w.u32(tensor.rank());
        for &d in tensor.shape() {
            w.u32(d);
        }
        for &v in tensor.data() {
            w.0.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    w.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn len(&mut self) -> Result<usize, CheckpointError> {
        Ok(self.u32()? as usize)
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let n = self.len()?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| CheckpointError::Malformed("string is not UTF-8".into()))
    }

    fn list(&mut self) -> Result<Vec<String>, CheckpointError> {
        let n = self.len()?;
        // Each entry needs at least its 4-byte length.
        if n > self.bytes.len().saturating_sub(self.pos) / 4 {
            return Err(CheckpointError::Truncated);
        }
        (0..n).map(|_| self.string()).collect()
    }
}

/// Reads a model written by [`save`], checking magic, version and that the
/// tensors match the stored configuration.
pub fn load<T: Scalar>(bytes: &[u8]) -> Result<ParserModel<T>, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() {
        return Err(CheckpointError::Truncated);
    }
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let hyper = HyperParams::from_key_values(&r.string()?)
        .map_err(|e| CheckpointError::Malformed(format!("hyperparameters: {e}")))?;

    let symbols =
        |items: Vec<String>| Symbols::new(items).map_err(|e| CheckpointError::Malformed(format!("vocabulary: {e}")));
    let words = symbols(r.list()?)?;
    let chars = symbols(r.list()?)?;
    let pos = match r.u8()? {
        0 => None,
        1 => Some(symbols(r.list()?)?),
        other => return Err(CheckpointError::Malformed(format!("bad POS flag {other}"))),
    };
    let relations = r.list()?;
    let expected: Vec<&str> = Relation::ALL.iter().map(|r| r.as_str()).collect();
    if relations != expected {
        return Err(CheckpointError::Malformed(format!("relation inventory {relations:?}")));
    }

    let count = r.len()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        if params.id_of(&name).is_some() {
            return Err(CheckpointError::Malformed(format!("duplicate tensor {name}")));
        }
        let rank = r.len()?;
        if rank == 0 || rank > 8 {
            return Err(CheckpointError::Malformed(format!("tensor {name} has rank {rank}")));
        }
        let dims = (0..rank).map(|_| r.len()).collect::<Result<Vec<_>, _>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| CheckpointError::Malformed(format!("tensor {name} is too large")))?;
        let raw = r.take(len)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| T::of(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
            .collect();
        let tensor = Tensor::new(dims, data).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        params.add(name, tensor);
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Malformed("trailing bytes".into()));
    }

    let vocab = Vocab { words, chars, pos };
    ParserModel::from_params(vocab, hyper, params).map_err(CheckpointError::Inconsistent)
}
