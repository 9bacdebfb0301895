//! Binary model format.
//!
//! ```text
//! "PTXM" | version u16 | task u8 | payload_len u64 | crc32(payload) u32 | payload
//! payload = classes: u8 count, (u16 len, utf8)*
//!           vocab:   u32 count, (u32 len, utf8)*   in feature-id order
//!           weights: u64 count, f64*
//!           meta:    seed u64, epochs u32, corpus_hash u32, averaged u8
//! ```
//!
//! All integers and floats are little-endian.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::perceptron::{ModelMeta, TaggerModel};
use crate::types::{label_set_for, Task};

pub const MAGIC: [u8; 4] = *b"PTXM";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8 + 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("corrupt model: {0}")]
    CorruptModel(&'static str),
}

impl TaggerModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        let classes = self.label_set().classes;
        payload.push(classes.len() as u8);
        for c in classes {
            payload.extend_from_slice(&(c.len() as u16).to_le_bytes());
            payload.extend_from_slice(c.as_bytes());
        }
        payload.extend_from_slice(&(self.vocab().len() as u32).to_le_bytes());
        for f in self.vocab() {
            payload.extend_from_slice(&(f.len() as u32).to_le_bytes());
            payload.extend_from_slice(f.as_bytes());
        }
        payload.extend_from_slice(&(self.weights().len() as u64).to_le_bytes());
        for w in self.weights() {
            payload.extend_from_slice(&w.to_le_bytes());
        }
        let meta = self.meta();
        payload.extend_from_slice(&meta.seed.to_le_bytes());
        payload.extend_from_slice(&meta.epochs.to_le_bytes());
        payload.extend_from_slice(&meta.corpus_hash.to_le_bytes());
        payload.push(u8::from(meta.averaged));

        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.task().code());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TaggerModel, CodecError> {
        let mut r = Reader(bytes);
        if r.take(4)? != MAGIC {
            return Err(CodecError::CorruptModel("bad magic"));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let task = Task::from_code(r.u8()?).ok_or(CodecError::CorruptModel("unknown task"))?;
        let len = usize::try_from(r.u64()?).map_err(|_| CodecError::CorruptModel("payload too large"))?;
        let crc = r.u32()?;
        if r.0.len() != len {
            return Err(CodecError::CorruptModel("payload length mismatch"));
        }
        if crc32fast::hash(r.0) != crc {
            return Err(CodecError::CorruptModel("checksum mismatch"));
        }

        let n_classes = r.u8()? as usize;
        let expected = label_set_for(task).classes;
        if n_classes != expected.len() {
            return Err(CodecError::CorruptModel("label set does not match task"));
        }
        for class in expected {
            let n = r.u16()? as usize;
            if r.take(n)? != class.as_bytes() {
                return Err(CodecError::CorruptModel("label set does not match task"));
            }
        }
        let n_vocab = r.u32()? as usize;
        let mut vocab = Vec::with_capacity(n_vocab.min(r.0.len()));
        for _ in 0..n_vocab {
            let n = r.u32()? as usize;
            vocab.push(r.string(n)?);
        }
        let n_weights = usize::try_from(r.u64()?).map_err(|_| CodecError::CorruptModel("too many weights"))?;
        if n_weights.checked_mul(8).is_none_or(|b| b > r.0.len()) {
            return Err(CodecError::CorruptModel("truncated weights"));
        }
        let weights = (0..n_weights)
            .map(|_| r.u64().map(f64::from_bits))
            .collect::<Result<Vec<_>, _>>()?;
        let meta = ModelMeta {
            seed: r.u64()?,
            epochs: r.u32()?,
            corpus_hash: r.u32()?,
            averaged: match r.u8()? {
                0 => false,
                1 => true,
                _ => return Err(CodecError::CorruptModel("bad flag")),
            },
        };
        if !r.0.is_empty() {
            return Err(CodecError::CorruptModel("trailing bytes"));
        }
        TaggerModel::from_parts(task, vocab, weights, meta)
            .ok_or(CodecError::CorruptModel("inconsistent vocabulary and weights"))
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.0.len() < n {
            return Err(CodecError::CorruptModel("truncated"));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.array::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        self.array().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        self.array().map(u64::from_le_bytes)
    }

    fn string(&mut self, n: usize) -> Result<String, CodecError> {
        let bytes = self.take(n)?;
        core::str::from_utf8(bytes)
            .map(String::from)
            .map_err(|_| CodecError::CorruptModel("feature is not UTF-8"))
    }
}
