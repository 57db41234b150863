//! Neural-network, logistic and linear classifiers with soft outputs.
//!
//! All three share [`NnParams`]: logistic and linear regression are the
//! network with no hidden layer. Networks and logistic models are trained on
//! cross-entropy with an L2 penalty; linear regression is a closed-form ridge
//! fit on the `{0, 1}` labels whose output is clamped to `[0, 1]`.

mod network;
mod persist;
mod train;

pub use network::{loss_gradient, regularized_loss, sigmoid, Dense, NnParams};
pub use persist::{model_from_bytes, model_to_bytes, MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, train_traced, Optimizer, TrainConfig, TrainingTrace};

use std::fmt;
use std::str::FromStr;

use crate::dataset::{FeatureMatrix, FeatureVector, Scaler};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper bounds on network size.
pub const MAX_HIDDEN_LAYERS: usize = 4;
pub const MAX_HIDDEN_NODES: usize = 100;

/// Clip applied to soft decisions inside [`cross_entropy`] only.
pub const CE_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Nn,
    Logistic,
    Linear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Nn, ModelKind::Logistic, ModelKind::Linear];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nn => "nn",
            ModelKind::Logistic => "logistic",
            ModelKind::Linear => "linear",
        }
    }

    /// Short label used in reports ("NN", "GR", "LR").
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Nn => "NN",
            ModelKind::Logistic => "GR",
            ModelKind::Linear => "LR",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            ModelKind::Nn => 0,
            ModelKind::Logistic => 1,
            ModelKind::Linear => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nn" => Ok(ModelKind::Nn),
            "logistic" | "gr" => Ok(ModelKind::Logistic),
            "linear" | "lr" => Ok(ModelKind::Linear),
            _ => Err(Error::InvalidConfig(format!("unknown model kind `{s}`"))),
        }
    }
}

/// Hypothesis class and regularization of one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden_layout: Vec<usize>,
    pub alpha: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn nn(hidden_layout: &[usize], alpha: f64, seed: u64) -> Result<Self> {
        Self::checked(ModelKind::Nn, hidden_layout.to_vec(), alpha, seed)
    }

    pub fn logistic(alpha: f64, seed: u64) -> Result<Self> {
        Self::checked(ModelKind::Logistic, Vec::new(), alpha, seed)
    }

    pub fn linear(alpha: f64) -> Result<Self> {
        Self::checked(ModelKind::Linear, Vec::new(), alpha, 0)
    }

    fn checked(kind: ModelKind, hidden_layout: Vec<usize>, alpha: f64, seed: u64) -> Result<Self> {
        let spec = ModelSpec {
            kind,
            hidden_layout,
            alpha,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: self.alpha,
            });
        }
        match self.kind {
            ModelKind::Nn => validate_layout(&self.hidden_layout),
            _ if !self.hidden_layout.is_empty() => Err(Error::InvalidConfig(format!(
                "{} model takes no hidden layers",
                self.kind
            ))),
            _ => Ok(()),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ModelSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn total_hidden_nodes(&self) -> usize {
        self.hidden_layout.iter().sum()
    }
}

/// Checks a hidden layout against the 1..=4 layers, <= 100 nodes bounds.
pub fn validate_layout(layout: &[usize]) -> Result<()> {
    if layout.is_empty() || layout.len() > MAX_HIDDEN_LAYERS {
        return Err(Error::InvalidConfig(format!(
            "network needs 1 to {MAX_HIDDEN_LAYERS} hidden layers, got {}",
            layout.len()
        )));
    }
    if layout.contains(&0) {
        return Err(Error::InvalidConfig("hidden layer of width 0".into()));
    }
    let total: usize = layout.iter().sum();
    if total > MAX_HIDDEN_NODES {
        return Err(Error::InvalidConfig(format!(
            "{total} hidden nodes exceed the limit of {MAX_HIDDEN_NODES}"
        )));
    }
    Ok(())
}

/// A fitted learner: parameters, the scaler of its features and the
/// hardening threshold `gamma_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<F = f64> {
    pub spec: ModelSpec,
    pub params: NnParams<F>,
    pub scaler: Scaler,
    pub gamma_l: F,
}

impl<F: Real> TrainedModel<F> {
    pub fn new(spec: ModelSpec, params: NnParams<F>, scaler: Scaler, gamma_l: F) -> Result<Self> {
        spec.validate()?;
        if !params.is_consistent() {
            return Err(Error::ModelFormat("inconsistent layer shapes".into()));
        }
        let hidden = params.hidden_layout();
        if hidden != spec.hidden_layout {
            return Err(Error::ModelFormat(format!(
                "layout {hidden:?} does not match spec {:?}",
                spec.hidden_layout
            )));
        }
        if params.n_inputs() != scaler.combo().len() {
            return Err(Error::DimensionMismatch {
                expected: scaler.combo().len(),
                found: params.n_inputs(),
            });
        }
        let model = TrainedModel {
            spec,
            params,
            scaler,
            gamma_l,
        };
        model.check_gamma()?;
        Ok(model)
    }

    fn check_gamma(&self) -> Result<()> {
        if !(self.gamma_l >= F::zero() && self.gamma_l <= F::one()) {
            return Err(Error::OutOfRange {
                what: "gamma_l",
                value: self.gamma_l.to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn with_gamma_l(mut self, gamma_l: F) -> Result<Self> {
        self.gamma_l = gamma_l;
        self.check_gamma()?;
        Ok(self)
    }

    /// Soft decision for one already standardized row.
    pub fn soft_from_row(&self, row: &[F]) -> Result<F> {
        if row.len() != self.params.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.params.n_inputs(),
                found: row.len(),
            });
        }
        Ok(self.squash(self.params.logit(row)))
    }

    /// Soft decisions for every row of a standardized matrix.
    pub fn soft_batch(&self, m: &FeatureMatrix<F>) -> Result<Vec<F>> {
        if m.combo() != self.scaler.combo() {
            return Err(Error::FeatureMismatch {
                expected: self.scaler.combo().to_string(),
                found: m.combo().to_string(),
            });
        }
        let mut ws = network::Workspace::new();
        let logits = network::batch_logits(&self.params, m.values(), m.n_rows(), &mut ws);
        Ok(logits.into_iter().map(|z| self.squash(z)).collect())
    }

    /// Hard decisions for every row of a standardized matrix.
    pub fn decide_batch(&self, m: &FeatureMatrix<F>) -> Result<Vec<u8>> {
        Ok(self
            .soft_batch(m)?
            .into_iter()
            .map(|s| harden(s, self.gamma_l))
            .collect())
    }

    pub fn decide(&self, features: &FeatureVector) -> Result<u8> {
        Ok(harden(predict_soft(self, features)?, self.gamma_l))
    }

    fn squash(&self, z: F) -> F {
        match self.spec.kind {
            ModelKind::Linear => z.max(F::zero()).min(F::one()),
            _ => sigmoid(z),
        }
    }
}

/// Soft decision in `[0, 1]` for raw (unscaled) features.
pub fn predict_soft<F: Real>(model: &TrainedModel<F>, features: &FeatureVector) -> Result<F> {
    let row: Vec<F> = model
        .scaler
        .transform(features)?
        .into_iter()
        .map(F::lit)
        .collect();
    model.soft_from_row(&row)
}

/// 1 iff `soft > gamma_l`.
pub fn harden<F: Real>(soft: F, gamma_l: F) -> u8 {
    u8::from(soft > gamma_l)
}

/// Mean binary cross-entropy with softs clipped to `[1e-12, 1 - 1e-12]`.
pub fn cross_entropy<F: Real>(labels: &[u8], softs: &[F]) -> Result<F> {
    if labels.len() != softs.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: softs.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let lo = F::lit(CE_CLIP);
    let hi = F::one() - lo;
    let total: F = labels
        .iter()
        .zip(softs)
        .map(|(&l, &s)| {
            let s = s.max(lo).min(hi);
            if l == 1 {
                -s.ln()
            } else {
                -(F::one() - s).ln()
            }
        })
        .sum();
    Ok(total / F::lit(labels.len() as f64))
}

/// Mean absolute disagreement between decisions and labels.
pub fn error_metric(labels: &[u8], decisions: &[u8]) -> Result<f64> {
    if labels.len() != decisions.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: decisions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let wrong = labels
        .iter()
        .zip(decisions)
        .map(|(&l, &d)| (l as i32 - d as i32).unsigned_abs() as usize)
        .sum::<usize>();
    Ok(wrong as f64 / labels.len() as f64)
}
