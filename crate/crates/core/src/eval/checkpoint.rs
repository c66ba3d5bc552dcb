//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "EEAECKPT"
//! version      u32
//! architecture u32 model count, then per model:
//!                u32 encoder layers, u32 decoder layers,
//!                per layer u32 in, u32 out, u8 activation
//! snapshots    u32 count, f64 each
//! config       u32 byte length, UTF-8 text
//! parameters   per model, per layer: weight (row-major f64), bias (f64)
//! checksum     u32 CRC-32 of every preceding byte
//! ```
//!
//! Model 0 is the deployed model (the assembled network for a stack); any further
//! models are the pretrained levels in order.

use std::path::Path;

use crate::autoencoder::AEModel;
use crate::numkit::{Activation, DenseLayer, Matrix};
use crate::stacking::StackedModel;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EEAECKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AEModel,
    pub levels: Vec<AEModel>,
    pub snapshots: Vec<f64>,
    /// The configuration that produced the model, as text.
    pub config: String,
}

impl Checkpoint {
    pub fn from_model(model: &AEModel, config: impl Into<String>) -> Self {
        Self {
            model: model.clone(),
            levels: Vec::new(),
            snapshots: Vec::new(),
            config: config.into(),
        }
    }

    pub fn from_stacked(stacked: &StackedModel, config: impl Into<String>) -> Self {
        Self {
            model: stacked.assembled.clone(),
            levels: stacked.levels.clone(),
            snapshots: stacked.snapshots.clone(),
            config: config.into(),
        }
    }

    /// Rebuilds a [`StackedModel`]. A single-model checkpoint becomes a one-level stack
    /// whose snapshots are taken now.
    pub fn into_stacked(self, p: f64) -> Result<StackedModel> {
        if self.levels.is_empty() {
            return crate::stacking::assemble(&[self.model], p);
        }
        if self.snapshots.len() != self.model.layers().count() {
            return Err(Error::CheckpointCorrupt("snapshot count does not match layer count".into()));
        }
        Ok(StackedModel {
            levels: self.levels,
            assembled: self.model,
            snapshots: self.snapshots,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let models: Vec<&AEModel> = std::iter::once(&self.model).chain(&self.levels).collect();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, models.len() as u32);
        for m in &models {
            put_u32(&mut out, m.encoder.len() as u32);
            put_u32(&mut out, m.decoder.len() as u32);
            for l in m.layers() {
                put_u32(&mut out, l.in_dim() as u32);
                put_u32(&mut out, l.out_dim() as u32);
                out.push(l.activation.code());
            }
        }
        put_u32(&mut out, self.snapshots.len() as u32);
        for &s in &self.snapshots {
            out.extend_from_slice(&s.to_le_bytes());
        }
        put_u32(&mut out, self.config.len() as u32);
        out.extend_from_slice(self.config.as_bytes());
        for m in &models {
            for l in m.layers() {
                for &w in l.weight.as_slice().iter().chain(&l.bias) {
                    out.extend_from_slice(&w.to_le_bytes());
                }
            }
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            if bytes.len() < MAGIC.len() && MAGIC.starts_with(bytes) {
                return Err(Error::Truncated("checkpoint shorter than its magic".into()));
            }
            return Err(Error::CheckpointMagic);
        }
        let mut r = Reader { buf: bytes, pos: MAGIC.len() };
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::CheckpointVersion { found: version, supported: VERSION });
        }
        let model_count = r.u32()? as usize;
        if model_count == 0 {
            return Err(Error::CheckpointCorrupt("no models".into()));
        }
        let mut arch = Vec::new();
        for _ in 0..model_count {
            let ne = r.u32()? as usize;
            let nd = r.u32()? as usize;
            let mut layers = Vec::new();
            for _ in 0..ne + nd {
                let i = r.u32()? as usize;
                let o = r.u32()? as usize;
                let a = r.u8()?;
                let act = Activation::from_code(a)
                    .ok_or_else(|| Error::CheckpointCorrupt(format!("unknown activation code {a}")))?;
                layers.push((i, o, act));
            }
            arch.push((ne, layers));
        }
        let ns = r.u32()? as usize;
        let snapshots = (0..ns).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let nc = r.u32()? as usize;
        let config = String::from_utf8(r.take(nc)?.to_vec())
            .map_err(|_| Error::CheckpointCorrupt("config is not UTF-8".into()))?;
        let mut models = Vec::with_capacity(model_count);
        for (ne, layers) in arch {
            let mut built = Vec::with_capacity(layers.len());
            for (i, o, act) in layers {
                let count = i.checked_mul(o).ok_or_else(|| Error::CheckpointCorrupt("layer size overflow".into()))?;
                let w = r.f64s(count)?;
                let b = r.f64s(o)?;
                built.push(DenseLayer::new(Matrix::new(o, i, w)?, b, act)?);
            }
            let decoder = built.split_off(ne);
            let model = AEModel::new(built, decoder)
                .map_err(|e| Error::CheckpointCorrupt(format!("inconsistent architecture: {e}")))?;
            models.push(model);
        }
        let body_end = r.pos;
        let stored = r.u32()?;
        if r.pos != bytes.len() {
            return Err(Error::CheckpointCorrupt(format!(
                "{} trailing bytes after checksum",
                bytes.len() - r.pos
            )));
        }
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(Error::CheckpointChecksum { stored, computed });
        }
        let model = models.remove(0);
        Ok(Self {
            model,
            levels: models,
            snapshots,
            config,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Truncated(format!("checkpoint ends at byte {} (needed {n} more from {})", self.buf.len(), self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::CheckpointCorrupt("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
