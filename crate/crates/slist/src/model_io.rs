//! Model file container.
//!
//! Layout: an 8-byte magic, a little-endian u32 header length, a JSON header
//! (format version, model kind, item count, hyperparameters, vocabulary id
//! list), then the dense row-major matrix as 64-bit little-endian floats.
//! Writing and re-reading a model reproduces it bit for bit.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::representation::DecayParams;
use crate::solver::{HyperParams, ItemModel, ModelKind};

const MAGIC: &[u8; 8] = b"SLISTMDL";
const FORMAT_VERSION: u32 = 1;

/// JSON cannot carry `inf`, so the diagonal cap is stored as an optional
/// number with `null` meaning unbounded.
#[derive(Serialize, Deserialize)]
struct HyperHeader {
    lambda: f64,
    xi: Option<f64>,
    alpha: f64,
    delta_time: f64,
    delta_pos: f64,
    delta_inf: f64,
    decay_future: bool,
}

impl From<&HyperParams> for HyperHeader {
    fn from(h: &HyperParams) -> Self {
        HyperHeader {
            lambda: h.lambda,
            xi: h.xi.is_finite().then_some(h.xi),
            alpha: h.alpha,
            delta_time: h.decay.delta_time,
            delta_pos: h.decay.delta_pos,
            delta_inf: h.decay.delta_inf,
            decay_future: h.decay.decay_future,
        }
    }
}

impl From<HyperHeader> for HyperParams {
    fn from(h: HyperHeader) -> Self {
        HyperParams {
            lambda: h.lambda,
            xi: h.xi.unwrap_or(f64::INFINITY),
            alpha: h.alpha,
            decay: DecayParams {
                delta_time: h.delta_time,
                delta_pos: h.delta_pos,
                delta_inf: h.delta_inf,
                decay_future: h.decay_future,
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    model_kind: ModelKind,
    n: usize,
    hyper: HyperHeader,
    vocab: Vec<String>,
}

/// Writes a model to any sink.
pub fn write_model<W: Write>(model: &ItemModel, mut w: W) -> Result<()> {
    let header = ModelHeader {
        format_version: FORMAT_VERSION,
        model_kind: model.kind,
        n: model.n_items(),
        hyper: HyperHeader::from(&model.hyper),
        vocab: model.vocab.clone(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::ModelFormat(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for &v in model.matrix.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a model previously written with [`write_model`].
pub fn read_model<R: Read>(mut r: R) -> Result<ItemModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("bad magic bytes".into()));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: ModelHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    if header.vocab.len() != header.n {
        return Err(Error::ModelFormat(format!(
            "header claims {} items but lists {} ids",
            header.n,
            header.vocab.len()
        )));
    }
    let n = header.n;
    let mut payload = vec![0u8; n * n * 8];
    r.read_exact(&mut payload)?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let matrix = Array2::from_shape_vec((n, n), values)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(ItemModel {
        kind: header.model_kind,
        matrix,
        vocab: header.vocab,
        hyper: header.hyper.into(),
    })
}

/// Convenience wrapper writing to a filesystem path.
pub fn save_model(model: &ItemModel, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_model(model, std::io::BufWriter::new(file))
}

/// Convenience wrapper reading from a filesystem path.
pub fn load_model(path: &std::path::Path) -> Result<ItemModel> {
    let file = std::fs::File::open(path)?;
    read_model(std::io::BufReader::new(file))
}
