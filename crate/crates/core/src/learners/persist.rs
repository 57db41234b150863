//! Binary model format.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes   "DBMODEL\0"
//! version      u32       MODEL_VERSION
//! kind         u8        0 = nn, 1 = logistic, 2 = linear
//! n_hidden     u8        number of hidden layers (0 for logistic/linear)
//! widths       u32 * n_hidden
//! alpha        f64
//! seed         u64
//! gamma_l      f64
//! n_features   u8
//! per feature  u8 feature index, u8 log10 flag, f64 offset, f64 scale
//! per layer    f64 * (n_in * n_out) weights, row-major with one row per
//!              input unit, then f64 * n_out biases
//! ```
//!
//! Layers run from the input to the single output unit. Feature indices
//! follow `Feature::ALL` (d, theta, cm_power, delay, mpc_power).

use super::network::{Dense, NnParams};
use super::{ModelKind, ModelSpec, TrainedModel};
use crate::dataset::{Feature, FeatureScale, Scaler};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 8] = b"DBMODEL\0";
pub const MODEL_VERSION: u32 = 1;

pub fn model_to_bytes<F: Real>(model: &TrainedModel<F>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.push(model.spec.kind.code());
    out.push(model.spec.hidden_layout.len() as u8);
    for &w in &model.spec.hidden_layout {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.extend_from_slice(&model.spec.alpha.to_le_bytes());
    out.extend_from_slice(&model.spec.seed.to_le_bytes());
    out.extend_from_slice(&model.gamma_l.to_f64_lossy().to_le_bytes());
    let params = model.scaler.params();
    out.push(params.len() as u8);
    for p in params {
        out.push(p.feature.index() as u8);
        out.push(u8::from(p.log10));
        out.extend_from_slice(&p.offset.to_le_bytes());
        out.extend_from_slice(&p.scale.to_le_bytes());
    }
    for layer in &model.params.layers {
        for v in layer.weights.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn model_from_bytes<F: Real>(bytes: &[u8]) -> Result<TrainedModel<F>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("not a model file".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let code = r.u8()?;
    let kind = ModelKind::from_code(code).ok_or_else(|| Error::ModelFormat(format!("unknown kind {code}")))?;
    let n_hidden = r.u8()? as usize;
    let hidden_layout = (0..n_hidden)
        .map(|_| r.u32().map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let alpha = r.f64()?;
    let seed = r.u64()?;
    let gamma_l = r.f64()?;
    let spec = ModelSpec {
        kind,
        hidden_layout,
        alpha,
        seed,
    };
    spec.validate()?;

    let n_features = r.u8()? as usize;
    let mut scales = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let idx = r.u8()? as usize;
        let feature = *Feature::ALL
            .get(idx)
            .ok_or_else(|| Error::ModelFormat(format!("unknown feature index {idx}")))?;
        let log10 = r.u8()? != 0;
        let offset = r.f64()?;
        let scale = r.f64()?;
        scales.push(FeatureScale {
            feature,
            log10,
            offset,
            scale,
        });
    }
    let scaler = Scaler::from_params(scales)?;

    let mut params = NnParams::<F>::zeros(n_features, &spec.hidden_layout);
    for layer in &mut params.layers {
        let Dense { weights, bias, .. } = layer;
        for v in weights.iter_mut().chain(bias.iter_mut()) {
            *v = F::lit(r.f64()?);
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    TrainedModel::new(spec, params, scaler, F::lit(gamma_l))
}
