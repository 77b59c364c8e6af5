//! Binary checkpoint archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "FC2N" | version u32 | tensor count u32
//! per tensor: name length u16 | UTF-8 name | rank u8 | dims u32 * rank | f32 data
//! step u64
//! ```
//!
//! Besides every parameter and its two Adam moments (`<name>.adam_m`,
//! `<name>.adam_v`), the archive carries `meta.config`: the run
//! configuration text, one byte per f32 element.

use std::fs;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{build_model, Model};
use crate::optim::AdamHyper;
use crate::tensor::{Shape, Tensor4};

use super::config::{lr_schedule, TrainConfig};

pub const MAGIC: &[u8; 4] = b"FC2N";
pub const FORMAT_VERSION: u32 = 1;
const CONFIG_TENSOR: &str = "meta.config";

/// Complete training state.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model<f32>,
    pub train: TrainConfig,
    /// Completed optimisation steps; also the Adam bias-correction count.
    pub step: u64,
}

impl Checkpoint {
    pub fn new(model: Model<f32>, train: TrainConfig) -> Self {
        Checkpoint {
            model,
            train,
            step: 0,
        }
    }

    pub fn scale(&self) -> usize {
        self.model.scale()
    }

    /// Optimiser state to continue from this checkpoint.
    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            lr: lr_schedule(self.step, &self.train),
            step_count: self.step,
            ..AdamHyper::default()
        }
    }

    fn config_text(&self) -> String {
        RunConfig {
            model: self.model.config,
            train: self.train,
            ..RunConfig::default()
        }
        .to_text()
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut tensors: Vec<(String, Vec<usize>, &[f32])> = Vec::new();
        let text: Vec<f32> = self.config_text().bytes().map(f32::from).collect();
        tensors.push((CONFIG_TENSOR.to_string(), vec![text.len()], &text));
        for p in self.model.params.iter() {
            let dims = tensor_dims(p.shape());
            tensors.push((p.name.clone(), dims.clone(), p.value.data()));
            tensors.push((format!("{}.adam_m", p.name), dims.clone(), p.adam_m.data()));
            tensors.push((format!("{}.adam_v", p.name), dims, p.adam_v.data()));
        }

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, dims, data) in tensors {
            let name_len = u16::try_from(name.len())
                .map_err(|_| Error::Format(format!("tensor name too long: {name}")))?;
            out.extend_from_slice(&name_len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(dims.len() as u8);
            for d in &dims {
                let d = u32::try_from(*d)
                    .map_err(|_| Error::Format(format!("dimension too large in {name}")))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        Ok(out)
    }

    /// Parses and validates the whole archive before building anything.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic bytes, not a checkpoint".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = r.u8()? as usize;
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let numel = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| Error::Format(format!("tensor {name} is too large")))?;
            let raw = r.take(numel.checked_mul(4).ok_or_else(|| Error::Format("overflow".into()))?)?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push((name, dims, data));
        }
        let step = r.u64()?;
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the step counter",
                bytes.len() - r.pos
            )));
        }

        let (_, _, text) = tensors
            .iter()
            .find(|(n, _, _)| n == CONFIG_TENSOR)
            .ok_or_else(|| Error::Format(format!("missing {CONFIG_TENSOR}")))?;
        let text: String = text
            .iter()
            .map(|&b| {
                if (0.0..=127.0).contains(&b) && b.fract() == 0.0 {
                    Ok(b as u8 as char)
                } else {
                    Err(Error::Format(format!("{CONFIG_TENSOR} is not ASCII text")))
                }
            })
            .collect::<Result<_>>()?;
        let run = RunConfig::parse(&text)
            .map_err(|e| Error::Format(format!("embedded configuration: {e}")))?;
        run.validate()
            .map_err(|e| Error::Format(format!("embedded configuration: {e}")))?;

        let mut model: Model<f32> = build_model(run.model, 0)?;
        let expected = 3 * model.params.len() + 1;
        if tensors.len() != expected {
            return Err(Error::Format(format!(
                "tensor count mismatch: archive has {}, configuration needs {expected}",
                tensors.len()
            )));
        }
        let mut by_name: std::collections::HashMap<String, (Vec<usize>, Vec<f32>)> = tensors
            .into_iter()
            .map(|(n, d, v)| (n, (d, v)))
            .collect();
        for p in model.params.iter_mut() {
            let shape = p.shape();
            let dims = tensor_dims(shape);
            let mut fetch = |name: String| -> Result<Tensor4<f32>> {
                let (d, v) = by_name
                    .remove(&name)
                    .ok_or_else(|| Error::Format(format!("missing tensor {name}")))?;
                if d != dims {
                    return Err(Error::Format(format!(
                        "tensor {name} has dims {d:?}, expected {dims:?}"
                    )));
                }
                Tensor4::from_vec(shape, v)
            };
            p.value = fetch(p.name.clone())?;
            p.adam_m = fetch(format!("{}.adam_m", p.name))?;
            p.adam_v = fetch(format!("{}.adam_v", p.name))?;
        }
        Ok(Checkpoint {
            model,
            train: run.train,
            step,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode()?;
        // write-then-rename so a crash never leaves a truncated archive
        let tmp = path.with_extension("fc2n.tmp");
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::decode(&bytes).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Rank 0 for scalars, rank 1 for biases, rank 4 for kernels.
fn tensor_dims(shape: Shape) -> Vec<usize> {
    if shape.is_scalar() {
        Vec::new()
    } else if shape.n == 1 && shape.h == 1 && shape.w == 1 {
        vec![shape.c]
    } else {
        vec![shape.n, shape.h, shape.w, shape.c]
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!(
                "truncated archive: needed {n} bytes at offset {}, {} left",
                self.pos,
                self.bytes.len() - self.pos
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
