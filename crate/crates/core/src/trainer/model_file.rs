//! Model file: `LPTR`, format version (u16 LE), CRC-32 of everything that
//! follows (u32 LE), metadata length (u64 LE), JSON metadata, then the
//! parameter tensors as little-endian f32 in directory order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Checkpoint;
use crate::ingest::LabelSet;
use crate::model::{ModelConfig, ModelError, PointerModel};
use crate::numcore::{ParamStore, Tensor};
use crate::tokenizer::SubwordVocab;

pub const MAGIC: &[u8; 4] = b"LPTR";
pub const FORMAT_VERSION: u16 = 1;

const CRC_OFFSET: usize = 6;
const HEADER_LEN: usize = 18;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("model file format version {found}, this build reads version {supported}")]
    VersionMismatch { found: u16, supported: u16 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("model file truncated: {actual} bytes, expected {expected}")]
    TruncatedFile { expected: usize, actual: usize },
    #[error("bad model metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset from the start of the tensor payload.
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    config: ModelConfig,
    label_set: LabelSet,
    vocab_hash: String,
    vocab: SubwordVocab,
    epoch: usize,
    validation_pa: Option<f64>,
    tensors: Vec<TensorEntry>,
}

impl Metadata {
    fn payload_len(&self) -> usize {
        self.tensors
            .iter()
            .map(|t| 4 * t.shape.iter().product::<usize>())
            .sum()
    }
}

pub fn to_bytes(checkpoint: &Checkpoint) -> Vec<u8> {
    let mut offset = 0;
    let tensors = checkpoint
        .model
        .params()
        .iter()
        .map(|p| {
            let entry = TensorEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                offset,
            };
            offset += 4 * p.value.len();
            entry
        })
        .collect();
    let meta = Metadata {
        config: checkpoint.model.config().clone(),
        label_set: checkpoint.label_set.clone(),
        vocab_hash: checkpoint.vocab.content_hash(),
        vocab: checkpoint.vocab.clone(),
        epoch: checkpoint.epoch,
        validation_pa: checkpoint.validation_pa,
        tensors,
    };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");

    let mut out = Vec::with_capacity(HEADER_LEN + json.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in checkpoint.model.params().iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[CRC_OFFSET + 4..]);
    out[CRC_OFFSET..CRC_OFFSET + 4].copy_from_slice(&crc.to_le_bytes());
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, ModelFileError> {
    let truncated = |expected: usize| ModelFileError::TruncatedFile {
        expected,
        actual: bytes.len(),
    };
    let magic_len = bytes.len().min(4);
    if bytes[..magic_len] != MAGIC[..magic_len] {
        return Err(ModelFileError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(ModelFileError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let stored = u32::from_le_bytes(
        bytes[CRC_OFFSET..CRC_OFFSET + 4]
            .try_into()
            .expect("4 bytes"),
    );
    let meta_len = u64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
    let meta_end = usize::try_from(meta_len)
        .ok()
        .and_then(|l| l.checked_add(HEADER_LEN))
        .ok_or_else(|| ModelFileError::Metadata(format!("metadata length {meta_len}")))?;
    if bytes.len() < meta_end {
        return Err(truncated(meta_end));
    }
    // Parsed before the checksum so a short file reports as truncated.
    let meta: Result<Metadata, _> = serde_json::from_slice(&bytes[HEADER_LEN..meta_end]);
    if let Ok(m) = &meta {
        let expected = meta_end + m.payload_len();
        if bytes.len() < expected {
            return Err(truncated(expected));
        }
    }
    let computed = crc32fast::hash(&bytes[CRC_OFFSET + 4..]);
    if computed != stored {
        return Err(ModelFileError::ChecksumMismatch { stored, computed });
    }
    let meta = meta.map_err(|e| ModelFileError::Metadata(e.to_string()))?;
    if bytes.len() != meta_end + meta.payload_len() {
        return Err(ModelFileError::Metadata(format!(
            "{} trailing bytes",
            bytes.len() - meta_end - meta.payload_len()
        )));
    }
    if meta.vocab.content_hash() != meta.vocab_hash {
        return Err(ModelFileError::Metadata("vocabulary hash mismatch".into()));
    }

    let payload = &bytes[meta_end..];
    let mut params = ParamStore::new();
    for t in &meta.tensors {
        let n: usize = t.shape.iter().product();
        let raw = payload
            .get(t.offset..t.offset + 4 * n)
            .ok_or_else(|| ModelFileError::Metadata(format!("tensor {} out of range", t.name)))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let tensor =
            Tensor::new(&t.shape, data).map_err(|e| ModelFileError::Metadata(e.to_string()))?;
        params.add(t.name.clone(), tensor);
    }
    let model = PointerModel::from_params(meta.config, params)?;
    if model.config().vocab_size != meta.vocab.len()
        || model.config().num_labels != meta.label_set.len()
    {
        return Err(ModelFileError::Metadata(
            "config does not match the stored vocabulary or label set".into(),
        ));
    }
    Ok(Checkpoint {
        model,
        vocab: meta.vocab,
        label_set: meta.label_set,
        epoch: meta.epoch,
        validation_pa: meta.validation_pa,
    })
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_model(checkpoint: &Checkpoint, path: &Path) -> Result<(), ModelFileError> {
    write_atomic(path, &to_bytes(checkpoint)).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<Checkpoint, ModelFileError> {
    let bytes = std::fs::read(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}
