//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! "FSER" | u32 version
//! u32 class_count | u32 C | u32 H | u32 W
//! u64 epoch
//! [u8; 32] rng seed | u64 rng stream | u128 rng word position
//! u32 layer_count
//! per layer: u8 kind, kind fields, u8 has_params, then weight and bias tensors
//! per tensor: u32 rank | u32 dims[rank] | f64 data[Π dims]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{Layer, LayerKind, Params};
use super::{Network, NnError, Tensor};

pub const MAGIC: &[u8; 4] = b"FSER";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<NnError> for CheckpointError {
    fn from(e: NnError) -> Self {
        CheckpointError::Corrupt(e.to_string())
    }
}

/// Position of a ChaCha8 generator, enough to resume it exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub epoch: u64,
    pub rng: RngState,
}

const KIND_CONV: u8 = 1;
const KIND_RELU: u8 = 2;
const KIND_POOL: u8 = 3;
const KIND_DROPOUT: u8 = 4;
const KIND_FLATTEN: u8 = 5;
const KIND_DENSE: u8 = 6;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, t: &Tensor) {
    put_u32(out, t.rank());
    for &d in t.shape() {
        put_u32(out, d);
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let net = &ckpt.network;
    let mut out = Vec::with_capacity(64 + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, net.class_count);
    for d in net.input_shape {
        put_u32(&mut out, d);
    }
    out.extend_from_slice(&ckpt.epoch.to_le_bytes());
    out.extend_from_slice(&ckpt.rng.seed);
    out.extend_from_slice(&ckpt.rng.stream.to_le_bytes());
    out.extend_from_slice(&ckpt.rng.word_pos.to_le_bytes());
    put_u32(&mut out, net.layers.len());
    for layer in &net.layers {
        match layer.kind {
            LayerKind::Conv2d {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                out.push(KIND_CONV);
                for v in [out_channels, kernel, stride, padding] {
                    put_u32(&mut out, v);
                }
            }
            LayerKind::Relu => out.push(KIND_RELU),
            LayerKind::MaxPool2d { window, stride } => {
                out.push(KIND_POOL);
                put_u32(&mut out, window);
                put_u32(&mut out, stride);
            }
            LayerKind::Dropout { rate } => {
                out.push(KIND_DROPOUT);
                out.extend_from_slice(&rate.to_le_bytes());
            }
            LayerKind::Flatten => out.push(KIND_FLATTEN),
            LayerKind::Dense { out_features } => {
                out.push(KIND_DENSE);
                put_u32(&mut out, out_features);
            }
        }
        match &layer.params {
            Some(p) => {
                out.push(1);
                put_tensor(&mut out, &p.weight);
                put_tensor(&mut out, &p.bias);
            }
            None => out.push(0),
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn tensor(&mut self) -> Result<Tensor, CheckpointError> {
        let rank = self.u32()?;
        if rank > 8 {
            return Err(CheckpointError::Corrupt(format!("tensor rank {rank}")));
        }
        let shape = (0..rank).map(|_| self.u32()).collect::<Result<Vec<_>, _>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CheckpointError::Corrupt("tensor size overflows".into()))?;
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Tensor::from_vec(&shape, data)?)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 {
        return Err(if MAGIC.starts_with(bytes) {
            CheckpointError::Truncated
        } else {
            CheckpointError::BadMagic
        });
    }
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let class_count = r.u32()?;
    let input_shape = [r.u32()?, r.u32()?, r.u32()?];
    let epoch = r.u64()?;
    let rng = RngState {
        seed: r.array()?,
        stream: r.u64()?,
        word_pos: u128::from_le_bytes(r.array()?),
    };
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let kind = match r.u8()? {
            KIND_CONV => LayerKind::Conv2d {
                out_channels: r.u32()?,
                kernel: r.u32()?,
                stride: r.u32()?,
                padding: r.u32()?,
            },
            KIND_RELU => LayerKind::Relu,
            KIND_POOL => LayerKind::MaxPool2d {
                window: r.u32()?,
                stride: r.u32()?,
            },
            KIND_DROPOUT => LayerKind::Dropout { rate: r.f64()? },
            KIND_FLATTEN => LayerKind::Flatten,
            KIND_DENSE => LayerKind::Dense { out_features: r.u32()? },
            other => return Err(CheckpointError::Corrupt(format!("unknown layer kind {other}"))),
        };
        let params = match r.u8()? {
            0 => None,
            1 => Some(Params {
                weight: r.tensor()?,
                bias: r.tensor()?,
            }),
            other => return Err(CheckpointError::Corrupt(format!("bad parameter flag {other}"))),
        };
        let parametric = matches!(kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. });
        if parametric != params.is_some() {
            return Err(CheckpointError::Corrupt(format!(
                "{kind:?} has wrong parameter presence"
            )));
        }
        layers.push(Layer::new(kind, params));
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    let network = Network {
        layers,
        input_shape,
        class_count,
    };
    // run a zero batch through the structure to reject inconsistent layer tables
    let logits = network.infer(&Tensor::zeros(&[1, input_shape[0], input_shape[1], input_shape[2]]))?;
    if logits.shape() != [1, class_count] {
        return Err(CheckpointError::Corrupt(
            "layer table does not end in class logits".into(),
        ));
    }
    Ok(Checkpoint { network, epoch, rng })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    let io_err = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, encode(ckpt)).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
