//! Threshold-based band assignment (TBBA).
//!
//! Given the cmWave rate `r_c` observed at an MS, the rule maps it back to
//! the shadowing domain of each band (`v0`, `v1`), conditions the mmWave
//! shadowing on `S^c = v0` using the joint Gaussian model, and assigns the
//! mmWave band when `P(S^m >= v1 | S^c = v0) >= gamma_t`. For positive
//! correlation this reduces to comparing the observed `S^c` with a closed
//! form threshold.

pub mod qfunc;

pub use qfunc::{erfc, q, q_inv};

use crate::channel::{link_budget, mean_snr_db, rate, Band, CellConfig, LinkBudget};
use crate::dataset::{Dataset, Feature, FeatureVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default probability threshold.
pub const DEFAULT_GAMMA_T: f64 = 0.5;

/// Statistics and per-MS link budget the rule needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbbaConfig<F = f64> {
    pub gamma_t: F,
    pub sigma_c: F,
    pub sigma_m: F,
    pub rho: F,
    pub w_c: F,
    pub w_m: F,
    pub lb: LinkBudget<F>,
}

impl<F: Real> TbbaConfig<F> {
    pub fn new(gamma_t: F, cell: &CellConfig<F>, lb: LinkBudget<F>) -> Result<Self> {
        let cfg = TbbaConfig {
            gamma_t,
            sigma_c: cell.sigma_c,
            sigma_m: cell.sigma_m,
            rho: cell.rho,
            w_c: cell.w_c,
            w_m: cell.w_m,
            lb,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_t >= F::zero() && self.gamma_t <= F::one()) {
            return Err(Error::OutOfRange {
                what: "gamma_t",
                value: self.gamma_t.to_f64_lossy(),
            });
        }
        if !(self.rho > -F::one() && self.rho < F::one()) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: self.rho.to_f64_lossy(),
            });
        }
        for (what, v) in [
            ("sigma_c", self.sigma_c),
            ("sigma_m", self.sigma_m),
            ("w_c", self.w_c),
            ("w_m", self.w_m),
            ("gamma_prime_c", self.lb.gamma_prime_c),
        ] {
            if !(v > F::zero()) {
                return Err(Error::OutOfRange {
                    what,
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Observed cmWave rate mapped into the shadowing domain of each band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VPair<F = f64> {
    /// cmWave shadowing that produces `r_c`, dB.
    pub v0: F,
    /// mmWave shadowing needed to match `r_c`, dB.
    pub v1: F,
}

/// Moments of `S^m` given `S^c = v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments<F = f64> {
    pub mu: F,
    pub sigma2: F,
}

/// Shadowing value in band `band` that yields rate `r` with scale factor
/// `gamma_prime`.
fn shadowing_for_rate<F: Real>(r: F, w: F, gamma_prime: F, gamma_dprime: F) -> F {
    (r / w).exp_m1().div(gamma_prime).log10() / gamma_dprime
}

pub fn v_pair<F: Real>(r_c: F, cfg: &TbbaConfig<F>) -> Result<VPair<F>> {
    if !(r_c > F::zero()) {
        return Err(Error::OutOfRange {
            what: "cmWave rate",
            value: r_c.to_f64_lossy(),
        });
    }
    let g2 = cfg.lb.gamma_dprime;
    Ok(VPair {
        v0: shadowing_for_rate(r_c, cfg.w_c, cfg.lb.gamma_prime_c, g2),
        v1: shadowing_for_rate(r_c, cfg.w_m, cfg.lb.gamma_prime_m, g2),
    })
}

pub fn conditional_moments<F: Real>(v0: F, cfg: &TbbaConfig<F>) -> ConditionalMoments<F> {
    ConditionalMoments {
        mu: cfg.rho * cfg.sigma_m / cfg.sigma_c * v0,
        sigma2: (F::one() - cfg.rho * cfg.rho) * cfg.sigma_m * cfg.sigma_m,
    }
}

/// `P(R^m >= R^c | R^c = r_c) = Q((v1 - mu) / sigma)`.
pub fn mmwave_probability<F: Real>(r_c: F, cfg: &TbbaConfig<F>) -> Result<F> {
    let v = v_pair(r_c, cfg)?;
    let m = conditional_moments(v.v0, cfg);
    Ok(q((v.v1 - m.mu) / m.sigma2.sqrt()))
}

/// Shadowing threshold `T`; the rule picks mmWave iff `S^c >= T`.
///
/// Requires `rho > 0`. `gamma_t = 0` and `gamma_t = 1` give `-inf` and
/// `+inf`.
pub fn shadowing_threshold<F: Real>(r_c: F, cfg: &TbbaConfig<F>) -> Result<F> {
    if !(cfg.rho > F::zero()) {
        return Err(Error::UnsupportedCorrelation {
            rho: cfg.rho.to_f64_lossy(),
        });
    }
    if cfg.gamma_t <= F::zero() {
        return Ok(F::neg_infinity());
    }
    if cfg.gamma_t >= F::one() {
        return Ok(F::infinity());
    }
    let v = v_pair(r_c, cfg)?;
    let sigma_cond = conditional_moments(v.v0, cfg).sigma2.sqrt();
    let scale = cfg.sigma_c / (cfg.rho * cfg.sigma_m);
    Ok(scale * (v.v1 - q_inv(cfg.gamma_t)? * sigma_cond))
}

/// Decision from the observed cmWave shadowing `s_c` (dB) and rate `r_c`.
/// Falls back to the probability comparison when `rho <= 0`.
pub fn decide_from_observation<F: Real>(s_c: F, r_c: F, cfg: &TbbaConfig<F>) -> Result<u8> {
    match shadowing_threshold(r_c, cfg) {
        Ok(t) => Ok(u8::from(s_c >= t)),
        Err(Error::UnsupportedCorrelation { .. }) => {
            Ok(u8::from(mmwave_probability(r_c, cfg)? >= cfg.gamma_t))
        }
        Err(e) => Err(e),
    }
}

/// TBBA with knowledge of the cell statistics and path loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbbaRule<F = f64> {
    pub cell: CellConfig<F>,
    pub gamma_t: F,
    /// Error added to the path loss the rule assumes, dB (0 for the oracle).
    pub path_loss_error_db: F,
}

impl<F: Real> TbbaRule<F> {
    pub fn new(cell: CellConfig<F>, gamma_t: F) -> Self {
        TbbaRule {
            cell,
            gamma_t,
            path_loss_error_db: F::zero(),
        }
    }

    pub fn with_path_loss_error(self, db: F) -> Self {
        TbbaRule {
            path_loss_error_db: db,
            ..self
        }
    }

    /// Decision for an MS at distance `d` with observed cmWave SNR (dB).
    pub fn decide(&self, d: F, cm_snr_db: F) -> Result<u8> {
        let true_lb = link_budget(d, &self.cell)?;
        // The observation is produced by the true channel; the rule sees it
        // through the budget it believes in.
        let s_obs = cm_snr_db - mean_snr_db(Band::Cm, d, &self.cell)?;
        let r_c = rate(Band::Cm, &true_lb, s_obs, &self.cell);
        let lb = true_lb.with_path_loss_error(self.path_loss_error_db);
        let cfg = TbbaConfig::new(self.gamma_t, &self.cell, lb)?;
        let s_c = shadowing_for_rate(r_c, cfg.w_c, lb.gamma_prime_c, lb.gamma_dprime);
        decide_from_observation(s_c, r_c, &cfg)
    }
}

impl TbbaRule<f64> {
    /// Decision for an example; requires `d` and `cm_power`.
    pub fn decide_features(&self, fv: &FeatureVector) -> Result<u8> {
        let d = fv.d.ok_or(Error::InsufficientFeatures(Feature::Distance))?;
        let p = fv
            .cm_power
            .ok_or(Error::InsufficientFeatures(Feature::CmPower))?;
        self.decide(d, p)
    }

    /// Decisions for every example of `ds`, in order.
    pub fn decide_dataset(&self, ds: &Dataset) -> Result<Vec<u8>> {
        ds.examples()
            .iter()
            .map(|e| self.decide_features(&e.features))
            .collect()
    }
}

/// Single-example entry point: `1` assigns the mmWave band.
pub fn tbba_decide(fv: &FeatureVector, cell: &CellConfig, gamma_t: f64) -> Result<u8> {
    TbbaRule::new(*cell, gamma_t).decide_features(fv)
}
