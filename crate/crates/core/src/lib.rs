//! Band assignment in dual-band (cmWave/mmWave) cells.
//!
//! The crate synthesizes correlated two-band channel realizations, applies a
//! closed-form threshold rule on the observed cmWave shadowing, and trains
//! neural-network, logistic and linear classifiers that predict whether the
//! mmWave band offers the larger rate.
//!
//! Numeric kernels are generic over [`Real`] (`f32`/`f64`); the `*F64` and
//! `*F32` aliases below name the concrete instantiations.

// `!(x > 0.0)` style checks are there to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learners;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod tbba;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CellConfigF64 = channel::CellConfig<f64>;
pub type CellConfigF32 = channel::CellConfig<f32>;
pub type LinkBudgetF64 = channel::LinkBudget<f64>;
pub type LinkBudgetF32 = channel::LinkBudget<f32>;
pub type TbbaConfigF64 = tbba::TbbaConfig<f64>;
pub type TbbaConfigF32 = tbba::TbbaConfig<f32>;
pub type TbbaRuleF64 = tbba::TbbaRule<f64>;
pub type TbbaRuleF32 = tbba::TbbaRule<f32>;
pub type NnParamsF64 = learners::NnParams<f64>;
pub type NnParamsF32 = learners::NnParams<f32>;
pub type TrainedModelF64 = learners::TrainedModel<f64>;
pub type TrainedModelF32 = learners::TrainedModel<f32>;
