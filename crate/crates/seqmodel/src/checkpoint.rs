//! Checkpoint file format: a magic line, a JSON manifest (version, config,
//! vocabularies, named tensor shapes with byte offsets, training metadata),
//! then the raw little-endian row-major parameter arrays.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::model::Model;
use crate::params::ParamLayout;
use crate::scalar::Scalar;
use crate::vocab::Vocab;

const MAGIC: &[u8] = b"LENCKPT1\n";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub step: usize,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestTensor {
    name: String,
    /// Byte offset into the data section.
    offset: u64,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    dtype: String,
    config: ModelConfig,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    tensors: Vec<ManifestTensor>,
    meta: TrainingMeta,
}

/// A trained model with its vocabularies.
pub struct Checkpoint<T: Scalar> {
    pub model: Model<T>,
    pub src_vocab: Vocab,
    pub tgt_vocab: Vocab,
    pub meta: TrainingMeta,
}

pub fn save_checkpoint<T: Scalar>(ckpt: &Checkpoint<T>, path: &Path) -> Result<(), ModelError> {
    let layout = &ckpt.model.layout;
    let tensors: Vec<ManifestTensor> = layout
        .tensors
        .iter()
        .map(|t| ManifestTensor {
            name: t.name.clone(),
            offset: (t.offset * T::BYTES) as u64,
            rows: t.rows,
            cols: t.cols,
        })
        .collect();
    let manifest = Manifest {
        version: 1,
        dtype: T::DTYPE.to_string(),
        config: ckpt.model.cfg.clone(),
        src_vocab: ckpt.src_vocab.clone(),
        tgt_vocab: ckpt.tgt_vocab.clone(),
        tensors,
        meta: ckpt.meta.clone(),
    };
    let manifest_bytes = serde_json::to_vec(&manifest)
        .map_err(|e| ModelError::CorruptCheckpoint(e.to_string()))?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    f.write_all(&manifest_bytes)?;
    let mut buf = Vec::with_capacity(ckpt.model.arena.len() * T::BYTES);
    for v in &ckpt.model.arena {
        buf.extend_from_slice(&v.to_le_bytes_vec());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>, ModelError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ModelError::CorruptCheckpoint("bad magic".into()));
    }
    let mut pos = MAGIC.len();
    let len_bytes: [u8; 8] = bytes[pos..pos + 8].try_into().expect("length prefix");
    let manifest_len = u64::from_le_bytes(len_bytes) as usize;
    pos += 8;
    if bytes.len() < pos + manifest_len {
        return Err(ModelError::CorruptCheckpoint("truncated manifest".into()));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[pos..pos + manifest_len])
        .map_err(|e| ModelError::CorruptCheckpoint(format!("manifest: {e}")))?;
    pos += manifest_len;
    if manifest.version != 1 {
        return Err(ModelError::CorruptCheckpoint(format!(
            "unsupported version {}",
            manifest.version
        )));
    }
    if manifest.dtype != T::DTYPE {
        return Err(ModelError::CorruptCheckpoint(format!(
            "dtype {} in file, {} requested",
            manifest.dtype,
            T::DTYPE
        )));
    }
    // The layout is a pure function of the config; the manifest must agree.
    let layout = ParamLayout::for_config(&manifest.config);
    if layout.tensors.len() != manifest.tensors.len() {
        return Err(ModelError::CorruptCheckpoint("tensor count mismatch".into()));
    }
    for (spec, m) in layout.tensors.iter().zip(&manifest.tensors) {
        if spec.name != m.name
            || spec.rows != m.rows
            || spec.cols != m.cols
            || (spec.offset * T::BYTES) as u64 != m.offset
        {
            return Err(ModelError::CorruptCheckpoint(format!(
                "tensor {} shape/offset disagrees with config-derived layout",
                m.name
            )));
        }
    }
    let data = &bytes[pos..];
    if data.len() != layout.total * T::BYTES {
        return Err(ModelError::CorruptCheckpoint(format!(
            "data section holds {} bytes, layout needs {}",
            data.len(),
            layout.total * T::BYTES
        )));
    }
    let mut arena = Vec::with_capacity(layout.total);
    for chunk in data.chunks_exact(T::BYTES) {
        arena.push(T::from_le_slice(chunk));
    }
    let mut src_vocab = manifest.src_vocab;
    let mut tgt_vocab = manifest.tgt_vocab;
    src_vocab.rebuild_index();
    tgt_vocab.rebuild_index();
    let model = Model::from_arena(manifest.config, arena)?;
    Ok(Checkpoint { model, src_vocab, tgt_vocab, meta: manifest.meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelConfig, ModelMode};

    fn cfg(d_model: usize) -> ModelConfig {
        ModelConfig {
            mode: ModelMode::EncoderDecoder,
            n_layers: 1,
            n_heads: 2,
            d_model,
            d_ff: 16,
            dropout: 0.1,
            max_len: 32,
            src_vocab: 12,
            tgt_vocab: 9,
        }
    }

    fn sample(d_model: usize) -> Checkpoint<f32> {
        Checkpoint {
            model: Model::new(cfg(d_model), 77).unwrap(),
            src_vocab: Vocab::new(vec!["int".into(), "x".into()], 12),
            tgt_vocab: Vocab::new(vec!["(".into(), ")".into(), "SimpleName".into()], 1),
            meta: TrainingMeta { epoch: 3, step: 1200, final_loss: 0.25 },
        }
    }

    #[test]
    fn round_trip_bit_exact() {
        let dir = std::env::temp_dir().join("seqmodel-ckpt-test");
        let path = dir.join("model.ckpt");
        let ckpt = sample(8);
        save_checkpoint(&ckpt, &path).unwrap();
        let loaded = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(loaded.model.arena, ckpt.model.arena);
        assert_eq!(loaded.model.cfg, ckpt.model.cfg);
        assert_eq!(loaded.src_vocab, ckpt.src_vocab);
        assert_eq!(loaded.tgt_vocab.id("SimpleName"), ckpt.tgt_vocab.id("SimpleName"));
        assert_eq!(loaded.meta, ckpt.meta);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = std::env::temp_dir().join("seqmodel-ckpt-trunc");
        let path = dir.join("model.ckpt");
        save_checkpoint(&sample(8), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 13]).unwrap();
        match load_checkpoint::<f32>(&path) {
            Err(ModelError::CorruptCheckpoint(_)) => {}
            other => panic!("expected corrupt checkpoint, got {:?}", other.is_ok()),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn mismatched_config_is_corrupt() {
        // Write with d_model 8, then doctor the manifest to claim 16.
        let dir = std::env::temp_dir().join("seqmodel-ckpt-mismatch");
        let path = dir.join("model.ckpt");
        save_checkpoint(&sample(8), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mlen = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
        let manifest = String::from_utf8(bytes[17..17 + mlen].to_vec()).unwrap();
        let doctored = manifest.replace("\"d_model\":8", "\"d_model\":16");
        let mut out = bytes[..9].to_vec();
        out.extend_from_slice(&(doctored.len() as u64).to_le_bytes());
        out.extend_from_slice(doctored.as_bytes());
        out.extend_from_slice(&bytes[17 + mlen..]);
        std::fs::write(&path, out).unwrap();
        match load_checkpoint::<f32>(&path) {
            Err(ModelError::CorruptCheckpoint(_)) => {}
            other => panic!("expected corrupt checkpoint, got {:?}", other.is_ok()),
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
