//! Path loss, noise, SNR and Shannon rate per band.

use super::config::{Band, CellConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Exponent scale turning dB shadowing into a linear factor, `10^(0.1 S)`.
pub const GAMMA_DPRIME: f64 = 0.1;

/// Free-space loss at the 1 m reference distance, dB.
pub fn reference_loss<F: Real>(f: F) -> F {
    let twenty = F::lit(20.0);
    twenty * (F::lit(4.0) * F::PI() * f / F::lit(SPEED_OF_LIGHT)).log10()
}

/// Two-slope path loss in dB: exponent 2 up to `d_break`, `eps` beyond.
pub fn path_loss<F: Real>(d: F, f: F, cfg: &CellConfig<F>) -> Result<F> {
    if !(d >= F::one()) {
        return Err(Error::OutOfRange {
            what: "distance (m)",
            value: d.to_f64_lossy(),
        });
    }
    let pl0 = reference_loss(f);
    let twenty = F::lit(20.0);
    Ok(if d <= cfg.d_break {
        pl0 + twenty * d.log10()
    } else {
        pl0 + twenty * cfg.d_break.log10() + F::lit(10.0) * cfg.eps * (d / cfg.d_break).log10()
    })
}

/// Noise power over bandwidth `w`, dBm.
pub fn noise_power<F: Real>(w: F, cfg: &CellConfig<F>) -> F {
    cfg.noise_psd + F::lit(10.0) * w.log10()
}

/// Linear SNR scale factors of both bands at one MS position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<F = f64> {
    pub gamma_prime_c: F,
    pub gamma_prime_m: F,
    pub gamma_dprime: F,
}

impl<F: Real> LinkBudget<F> {
    pub fn new(gamma_prime_c: F, gamma_prime_m: F) -> Self {
        LinkBudget {
            gamma_prime_c,
            gamma_prime_m,
            gamma_dprime: F::lit(GAMMA_DPRIME),
        }
    }

    pub fn gamma_prime(&self, band: Band) -> F {
        match band {
            Band::Cm => self.gamma_prime_c,
            Band::Mm => self.gamma_prime_m,
        }
    }

    /// Budget computed with a path loss that is off by `db` in both bands.
    pub fn with_path_loss_error(&self, db: F) -> Self {
        let k = F::lit(10.0).powf(-db / F::lit(10.0));
        LinkBudget::new(self.gamma_prime_c * k, self.gamma_prime_m * k)
    }
}

/// `P_tx - PL - N0` in dB for one band (SNR without shadowing).
pub fn mean_snr_db<F: Real>(band: Band, d: F, cfg: &CellConfig<F>) -> Result<F> {
    let pl = path_loss(d, cfg.carrier(band), cfg)?;
    Ok(cfg.tx_power(band) - pl - noise_power(cfg.bandwidth(band), cfg))
}

pub fn link_budget<F: Real>(d: F, cfg: &CellConfig<F>) -> Result<LinkBudget<F>> {
    let ten = F::lit(10.0);
    let gp = |band| -> Result<F> { Ok(ten.powf(mean_snr_db(band, d, cfg)? / ten)) };
    Ok(LinkBudget::new(gp(Band::Cm)?, gp(Band::Mm)?))
}

/// SNR in dB including the shadowing term.
pub fn snr_db<F: Real>(band: Band, d: F, shadowing_db: F, cfg: &CellConfig<F>) -> Result<F> {
    Ok(mean_snr_db(band, d, cfg)? + shadowing_db)
}

/// Shannon rate `w_b ln(1 + gamma'_b 10^(0.1 S))` in nats/s.
pub fn rate<F: Real>(band: Band, lb: &LinkBudget<F>, shadowing_db: F, cfg: &CellConfig<F>) -> F {
    let snr = lb.gamma_prime(band) * F::lit(10.0).powf(lb.gamma_dprime * shadowing_db);
    cfg.bandwidth(band) * snr.ln_1p()
}
