//! Binary checkpoint container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header, then every tensor as little-endian `f64` in header order,
//! followed by the word-vector table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{ModelConfig, ModelParams, TENSOR_NAMES};
use super::tensor::Tensor;
use super::Model;
use crate::corpus::{LabelVocab, WordVectorTable};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DISCRE\0\x01";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct VectorsEntry {
    dim: usize,
    words: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    toolkit_version: String,
    config: ModelConfig,
    labels: LabelVocab,
    tensors: Vec<TensorEntry>,
    vectors: VectorsEntry,
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: model.config.clone(),
        labels: model.labels.clone(),
        tensors: model
            .params
            .tensors()
            .iter()
            .zip(TENSOR_NAMES)
            .map(|(t, name)| TensorEntry {
                name: name.to_string(),
                rows: t.rows,
                cols: t.cols,
            })
            .collect(),
        vectors: VectorsEntry {
            dim: model.vectors.dim(),
            words: model.vectors.words().to_vec(),
        },
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let floats: usize = model.params.num_parameters() + model.vectors.raw_data().len();
    let mut out = Vec::with_capacity(20 + json.len() + 8 * floats);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in model.params.tensors() {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in model.vectors.raw_data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated file while reading {what}"))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn floats(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| Error::Checkpoint(format!("{what} too large")))?;
        let raw = self.take(len, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let hlen = u64::from_le_bytes(r.take(8, "header length")?.try_into().unwrap());
    let hlen = usize::try_from(hlen).map_err(|_| Error::Checkpoint("header too large".into()))?;
    let header: Header = serde_json::from_slice(r.take(hlen, "header")?)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if header.format_version != version {
        return Err(Error::Checkpoint("header version disagrees with preamble".into()));
    }
    header.config.validate()?;
    let shapes = ModelParams::expected_shapes(&header.config);
    if header.tensors.len() != shapes.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {}", shapes.len(), header.tensors.len())));
    }
    let mut tensors = Vec::with_capacity(shapes.len());
    for ((entry, &(rows, cols)), name) in header.tensors.iter().zip(&shapes).zip(TENSOR_NAMES) {
        if entry.name != name || (entry.rows, entry.cols) != (rows, cols) {
            return Err(Error::Checkpoint(format!(
                "tensor {} ({}×{}) does not match expected {name} ({rows}×{cols})",
                entry.name, entry.rows, entry.cols
            )));
        }
        let data = r.floats(rows * cols, &entry.name)?;
        tensors.push(Tensor { rows, cols, data });
    }
    let params = ModelParams::from_tensors(&header.config, tensors)?;
    let dim = header.vectors.dim;
    let data = r.floats(header.vectors.words.len() * dim, "word vectors")?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let entries = header
        .vectors
        .words
        .into_iter()
        .zip(data.chunks_exact(dim.max(1)).map(<[f64]>::to_vec));
    let vectors = WordVectorTable::from_entries(dim, entries)?;
    Model::from_parts(header.config, params, header.labels, vectors)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|e| match e {
        Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
        other => other,
    })
}
