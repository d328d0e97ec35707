//! Binary checkpoint files.
//!
//! Layout (little endian): magic `DOAC`, version `u32`, metadata length
//! `u32` followed by that many bytes of UTF-8 JSON (network spec plus
//! [`CheckpointMetadata`]), block count `u32`, then per block: layer index
//! `u32`, block kind tag `u32`, value count `u64` and the values as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use doa_core::Real;
use serde::{Deserialize, Serialize};

use crate::error::{NetError, Result};
use crate::params::{BlockKind, ModelParams};
use crate::spec::NetworkSpec;

const MAGIC: &[u8; 4] = b"DOAC";
const VERSION: u32 = 1;

/// Provenance stored alongside the parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetadata {
    pub grid_half_points: usize,
    pub grid_resolution_deg: f64,
    pub n_sensors: usize,
    pub spacing_ratio: f64,
    pub training_snrs_db: Vec<f64>,
    /// `"fixed"` or `"mixed"`.
    pub k_policy: String,
    /// Source count (fixed) or maximum source count (mixed).
    pub k: usize,
    pub epoch: usize,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: NetworkSpec,
    metadata: CheckpointMetadata,
}

pub fn write_checkpoint<T: Real, W: Write>(
    mut w: W,
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    metadata: &CheckpointMetadata,
) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        spec: spec.clone(),
        metadata: metadata.clone(),
    })
    .map_err(|e| NetError::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let blocks: Vec<(usize, BlockKind, &[T])> = params
        .layers
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.blocks().into_iter().map(move |(k, b)| (i, k, b)))
        .collect();
    w.write_all(&(blocks.len() as u32).to_le_bytes())?;
    for (layer, kind, values) in blocks {
        w.write_all(&(layer as u32).to_le_bytes())?;
        w.write_all(&kind.tag().to_le_bytes())?;
        w.write_all(&(values.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            let x = v.to_f64().ok_or_else(|| NetError::Format("parameter not representable".into()))?;
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NetError::Format(format!("truncated checkpoint while reading {what}")),
        _ => NetError::Io(e),
    })?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r, what)?))
}

pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<(NetworkSpec, ModelParams<T>, CheckpointMetadata)> {
    let magic: [u8; 4] = read_array(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(NetError::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(NetError::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = read_u32(&mut r, "metadata length")? as usize;
    let mut header = vec![0u8; len];
    r.read_exact(&mut header)
        .map_err(|_| NetError::Format("truncated checkpoint metadata".into()))?;
    let header: Header = serde_json::from_slice(&header).map_err(|e| NetError::Format(format!("metadata: {e}")))?;
    header.spec.validate()?;
    let mut params = ModelParams::<T>::zeros(&header.spec)?;
    let mut seen = vec![Vec::new(); params.layers.len()];
    let count = read_u32(&mut r, "block count")?;
    for _ in 0..count {
        let layer = read_u32(&mut r, "layer index")? as usize;
        let tag = read_u32(&mut r, "block kind")?;
        let n = u64::from_le_bytes(read_array(&mut r, "block length")?) as usize;
        let kind = BlockKind::from_tag(tag).ok_or_else(|| NetError::Format(format!("unknown block kind {tag}")))?;
        let target = params
            .layers
            .get_mut(layer)
            .and_then(|l| l.blocks_mut().into_iter().find(|(k, _)| *k == kind))
            .ok_or_else(|| NetError::Format(format!("layer {layer} has no {kind:?} block")))?
            .1;
        if target.len() != n {
            return Err(NetError::Format(format!(
                "layer {layer} {kind:?}: {n} values stored, {} expected",
                target.len()
            )));
        }
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)
            .map_err(|_| NetError::Format(format!("truncated checkpoint in layer {layer} {kind:?}")))?;
        for (dst, chunk) in target.iter_mut().zip(buf.chunks_exact(8)) {
            let x = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            *dst = T::from_f64(x).ok_or_else(|| NetError::Format("value not representable".into()))?;
        }
        if seen[layer].contains(&kind) {
            return Err(NetError::Format(format!("duplicate block {kind:?} in layer {layer}")));
        }
        seen[layer].push(kind);
    }
    for (i, l) in params.layers.iter().enumerate() {
        if l.blocks().len() != seen[i].len() {
            return Err(NetError::Format(format!("layer {i} is missing parameter blocks")));
        }
    }
    Ok((header.spec, params, header.metadata))
}

pub fn save_checkpoint<T: Real>(
    path: impl AsRef<Path>,
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    metadata: &CheckpointMetadata,
) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), spec, params, metadata)
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<(NetworkSpec, ModelParams<T>, CheckpointMetadata)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
