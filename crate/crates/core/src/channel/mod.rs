//! Stochastic two-band channel: break-point path loss, correlated
//! log-normal shadowing, Shannon rates and rate-comparison labels.

pub mod budget;
pub mod cell;
pub mod config;
pub mod shadowing;

pub use budget::{link_budget, mean_snr_db, noise_power, path_loss, rate, snr_db, LinkBudget};
pub use cell::{cell_seed, generate_cell, generate_cell_realization, CellRealization, MsPlacement};
pub use config::{Band, CellConfig};
pub use shadowing::{joint_shadowing_covariance, sample_joint_shadowing, JointShadowing, ShadowingSampler};
