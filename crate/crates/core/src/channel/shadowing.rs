//! Jointly Gaussian two-band shadowing over a set of MS positions.
//!
//! Within a band the spatial covariance decays as `exp(-d / d_dcor)`. Across
//! bands it is `rho sigma_c sigma_m exp(-d / sqrt(d_dcor_c d_dcor_m))`, so
//! co-located samples have correlation exactly `rho`. Variables are ordered
//! as all cmWave values followed by all mmWave values.

use faer::{Mat, Side};
use rand::RngExt;
use rand_distr::StandardNormal;

use super::cell::MsPlacement;
use super::config::CellConfig;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Diagonal jitter levels, as multiples of each band's variance.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Shadowing values in dB, one per MS position and band.
#[derive(Debug, Clone, PartialEq)]
pub struct JointShadowing {
    pub s_c: Vec<f64>,
    pub s_m: Vec<f64>,
}

fn build_covariance(placement: &MsPlacement, cfg: &CellConfig, jitter: f64) -> Mat<f64> {
    let pos = placement.positions();
    let n = pos.len();
    let (sc, sm) = (cfg.sigma_c, cfg.sigma_m);
    let (vc, vm, vx) = (sc * sc, sm * sm, cfg.rho * sc * sm);
    let (ic, im) = (1.0 / cfg.d_dcor_c, 1.0 / cfg.d_dcor_m);
    let ix = 1.0 / (cfg.d_dcor_c * cfg.d_dcor_m).sqrt();
    let mut cov = Mat::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..=i {
            let dx = pos[i].0 - pos[j].0;
            let dy = pos[i].1 - pos[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            let c = vc * (-d * ic).exp();
            let m = vm * (-d * im).exp();
            let x = vx * (-d * ix).exp();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
            cov[(n + i, n + j)] = m;
            cov[(n + j, n + i)] = m;
            cov[(n + i, j)] = x;
            cov[(j, n + i)] = x;
            cov[(n + j, i)] = x;
            cov[(i, n + j)] = x;
        }
    }
    if jitter > 0.0 {
        for i in 0..n {
            cov[(i, i)] += jitter * vc;
            cov[(n + i, n + i)] += jitter * vm;
        }
    }
    cov
}

/// Full `2N x 2N` covariance of `(S^c_1..S^c_N, S^m_1..S^m_N)`.
pub fn joint_shadowing_covariance(placement: &MsPlacement, cfg: &CellConfig) -> Mat<f64> {
    build_covariance(placement, cfg, 0.0)
}

/// Factorized covariance; draws any number of joint samples.
pub struct ShadowingSampler {
    n: usize,
    factor: Mat<f64>,
    jitter: f64,
}

impl ShadowingSampler {
    /// Factorizes the joint covariance, escalating diagonal jitter through
    /// [`JITTER_LADDER`] before giving up.
    pub fn new(placement: &MsPlacement, cfg: &CellConfig) -> Result<Self> {
        let n = placement.len();
        if n == 0 {
            return Err(Error::InvalidConfig("no MS positions".into()));
        }
        let mut last = 0.0;
        for jitter in JITTER_LADDER {
            last = jitter;
            let cov = build_covariance(placement, cfg, jitter);
            if let Ok(llt) = cov.llt(Side::Lower) {
                return Ok(ShadowingSampler {
                    n,
                    factor: llt.L().to_owned(),
                    jitter,
                });
            }
        }
        Err(Error::NotPositiveDefinite { jitter: last })
    }

    /// Jitter multiple that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor `L` with `L L^T` the (jittered) covariance.
    pub fn factor(&self) -> &Mat<f64> {
        &self.factor
    }

    pub fn sample(&self, rng: &mut SimRng) -> JointShadowing {
        let dim = 2 * self.n;
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut s = vec![0.0; dim];
        // s = L z, column-wise so that the inner loop runs down a contiguous column
        for (k, &zk) in z.iter().enumerate() {
            let col = self.factor.col(k);
            for i in k..dim {
                s[i] += col[i] * zk;
            }
        }
        let s_m = s.split_off(self.n);
        JointShadowing { s_c: s, s_m }
    }
}

/// One zero-mean joint draw, deterministic in `seed`.
pub fn sample_joint_shadowing(
    placement: &MsPlacement,
    cfg: &CellConfig,
    seed: u64,
) -> Result<JointShadowing> {
    let sampler = ShadowingSampler::new(placement, cfg)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}
