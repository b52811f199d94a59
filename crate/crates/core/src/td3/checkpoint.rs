//! Checkpoint file format (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes   "PEVCKPT1"
//! meta_len     u32
//! meta         meta_len bytes of UTF-8 JSON (CheckpointMeta)
//! net_count    u32
//! per network:
//!   n_sizes    u32
//!   sizes      n_sizes × u32          [inputs, hidden..., outputs]
//!   hidden     u8                     0 identity, 1 relu, 2 tanh
//!   output     u8
//!   per layer: weights (inputs × outputs, row-major f64) then bias (f64)
//! ```
//!
//! Networks appear in the order named by `meta.networks`; the first one is
//! always the actor.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::nn::{Activation, Dense, Mlp};
use crate::observation::Normalization;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"PEVCKPT1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub obs_dim: usize,
    pub action_dim: usize,
    /// Neighbours observed per pursuer.
    pub neighbor_cap: usize,
    /// Pursuer count the policy was trained with.
    pub n_pursuers: usize,
    pub normalization: Normalization,
    pub variable_speed: bool,
    /// Environment steps trained.
    pub steps: u64,
    pub networks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub networks: Vec<Mlp>,
}

impl Checkpoint {
    pub fn actor(&self) -> &Mlp {
        &self.networks[0]
    }

    pub fn network(&self, name: &str) -> Option<&Mlp> {
        self.meta
            .networks
            .iter()
            .position(|n| n == name)
            .map(|i| &self.networks[i])
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| bad("value does not fit in u32"))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_checkpoint(w: &mut impl Write, ckpt: &Checkpoint) -> Result<()> {
    if ckpt.networks.is_empty() || ckpt.networks.len() != ckpt.meta.networks.len() {
        return Err(bad("network list and names disagree"));
    }
    w.write_all(MAGIC)?;
    let meta = serde_json::to_vec(&ckpt.meta)?;
    put_u32(w, meta.len())?;
    w.write_all(&meta)?;
    put_u32(w, ckpt.networks.len())?;
    for net in &ckpt.networks {
        let sizes = net.sizes();
        put_u32(w, sizes.len())?;
        for s in sizes {
            put_u32(w, s)?;
        }
        w.write_all(&[net.hidden.code(), net.output.code()])?;
        for layer in &net.layers {
            // row-major regardless of the in-memory layout
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)"));
    }
    let meta_len = get_u32(r)?;
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta)?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta)?;
    let count = get_u32(r)?;
    if count != meta.networks.len() || count == 0 {
        return Err(bad(format!(
            "{count} networks stored but {} named",
            meta.networks.len()
        )));
    }
    let mut networks = Vec::with_capacity(count);
    for _ in 0..count {
        let n_sizes = get_u32(r)?;
        if n_sizes < 2 {
            return Err(bad("network needs at least two layer sizes"));
        }
        let sizes = (0..n_sizes).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        let hidden = Activation::from_code(get_u8(r)?).ok_or_else(|| bad("unknown activation"))?;
        let output = Activation::from_code(get_u8(r)?).ok_or_else(|| bad("unknown activation"))?;
        let mut layers = Vec::with_capacity(n_sizes - 1);
        for w in sizes.windows(2) {
            let weights = get_f64s(r, w[0] * w[1])?;
            let bias = get_f64s(r, w[1])?;
            layers.push(Dense {
                weights: Array2::from_shape_vec((w[0], w[1]), weights)
                    .map_err(|e| bad(e.to_string()))?,
                bias: Array1::from(bias),
            });
        }
        networks.push(Mlp {
            layers,
            hidden,
            output,
        });
    }
    let actor = &networks[0];
    if actor.input_dim() != meta.obs_dim || actor.output_dim() != meta.action_dim {
        return Err(bad(format!(
            "actor is {}→{} but metadata says {}→{}",
            actor.input_dim(),
            actor.output_dim(),
            meta.obs_dim,
            meta.action_dim
        )));
    }
    Ok(Checkpoint { meta, networks })
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, ckpt)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let f = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open checkpoint {}: {e}", path.display())))?;
    read_checkpoint(&mut BufReader::new(f))
}
