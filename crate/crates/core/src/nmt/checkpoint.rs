//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes        | content                                              |
//! |--------------|------------------------------------------------------|
//! | 8            | magic `KW2QCKPT`                                     |
//! | 4            | format version, `u32`                                |
//! | 8            | header length `n`, `u64`                             |
//! | n            | UTF-8 JSON header: model config, vocabulary hash and |
//! |              | the `(name, rows, cols)` list of parameter groups    |
//! | 8·Σrows·cols | every group as row-major `f64`, in header order      |
//! | 32           | SHA-256 of all preceding bytes                       |
//!
//! Group order is [`ModelParams::groups`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use super::linalg::Matrix;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::text::Vocabulary;

pub const MAGIC: &[u8; 8] = b"KW2QCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Serialize, Deserialize)]
struct GroupHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model_config: ModelConfig,
    vocab_hash: String,
    groups: Vec<GroupHeader>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab_hash: String,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn verify_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let actual = vocab.content_hash();
        if actual != self.vocab_hash {
            return Err(Error::VocabHash {
                expected: self.vocab_hash.clone(),
                actual,
            });
        }
        Ok(())
    }
}

pub fn checkpoint_bytes(params: &ModelParams, config: &ModelConfig, vocab_hash: &str) -> Result<Vec<u8>> {
    if !params.matches(config) {
        return Err(Error::Dimension("parameters do not match the model config".into()));
    }
    let groups = params.groups();
    let header = Header {
        model_config: *config,
        vocab_hash: vocab_hash.to_string(),
        groups: groups
            .iter()
            .map(|(name, m)| GroupHeader {
                name: name.clone(),
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header)?;
    let payload_len: usize = groups.iter().map(|(_, m)| m.as_slice().len() * 8).sum();
    let mut out = Vec::with_capacity(20 + header.len() + payload_len + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, m) in &groups {
        for x in m.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn save_checkpoint(params: &ModelParams, config: &ModelConfig, vocab_hash: &str, path: &Path) -> Result<()> {
    let bytes = checkpoint_bytes(params, config, vocab_hash)?;
    // rename is atomic, readers never see a partial file
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Parses a checkpoint without checking the vocabulary.
pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 12 + DIGEST_LEN {
        return Err(corrupt(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch (truncated or corrupted file)"));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes"));
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|n| n.checked_add(20))
        .filter(|&end| end <= body.len())
        .ok_or_else(|| corrupt("header length exceeds file"))?;
    let header: Header =
        serde_json::from_slice(&body[20..header_end]).map_err(|e| corrupt(format!("header: {e}")))?;
    header.model_config.validate()?;

    let mut params = ModelParams::zeros(&header.model_config);
    let expected = params.groups();
    if expected.len() != header.groups.len() {
        return Err(corrupt("parameter group count does not match the model config"));
    }
    for ((name, m), g) in expected.iter().zip(&header.groups) {
        if *name != g.name || m.shape() != (g.rows, g.cols) {
            return Err(corrupt(format!(
                "group {} ({}×{}) does not match expected {name} {:?}",
                g.name,
                g.rows,
                g.cols,
                m.shape()
            )));
        }
    }
    let payload = &body[header_end..];
    let needed: usize = header.groups.iter().map(|g| g.rows * g.cols * 8).sum();
    if payload.len() != needed {
        return Err(corrupt(format!("payload has {} bytes, expected {needed}", payload.len())));
    }
    let mut offset = 0;
    for (_, m) in params.groups_mut() {
        let n = m.as_slice().len();
        let values = payload[offset..offset + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        *m = Matrix::from_vec(m.rows(), m.cols(), values).expect("length checked");
        offset += 8 * n;
    }
    if !params.is_finite() {
        return Err(corrupt("non-finite parameter values"));
    }
    Ok(Checkpoint {
        config: header.model_config,
        vocab_hash: header.vocab_hash,
        params,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes)
}

/// Loads a checkpoint and checks that it was trained with `vocab`.
pub fn load_checkpoint(path: &Path, vocab: &Vocabulary) -> Result<(ModelParams, ModelConfig)> {
    let ckpt = read_checkpoint(path)?;
    ckpt.verify_vocab(vocab)?;
    if ckpt.config.vocab_size != vocab.len() {
        return Err(Error::Dimension(format!(
            "checkpoint vocabulary size {} differs from vocabulary file ({})",
            ckpt.config.vocab_size,
            vocab.len()
        )));
    }
    Ok((ckpt.params, ckpt.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            embed_dim: 3,
            hidden_dim: 4,
            encoder_layers: 2,
            decoder_layers: 1,
            vocab_size: 7,
            max_decode_len: 5,
        }
    }

    #[test]
    fn bytes_round_trip_bit_exact() {
        let c = cfg();
        let p = ModelParams::init(&c, 5);
        let bytes = checkpoint_bytes(&p, &c, "abc").unwrap();
        let back = parse_checkpoint(&bytes).unwrap();
        assert_eq!(back.config, c);
        assert_eq!(back.vocab_hash, "abc");
        for ((_, a), (_, b)) in p.groups().iter().zip(back.params.groups()) {
            let a: Vec<u64> = a.as_slice().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = b.as_slice().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn damaged_files_are_rejected() {
        let c = cfg();
        let bytes = checkpoint_bytes(&ModelParams::init(&c, 5), &c, "abc").unwrap();
        for cut in [0, 7, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(parse_checkpoint(&bytes[..cut]), Err(Error::Checkpoint(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        let mid = flipped.len() - 100;
        flipped[mid] ^= 0x10;
        assert!(matches!(parse_checkpoint(&flipped), Err(Error::Checkpoint(_))));
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(parse_checkpoint(&magic).is_err());
    }

    #[test]
    fn mismatched_shapes_are_refused_on_save() {
        let p = ModelParams::init(&cfg(), 5);
        let mut other = cfg();
        other.hidden_dim = 5;
        assert!(checkpoint_bytes(&p, &other, "x").is_err());
    }
}
