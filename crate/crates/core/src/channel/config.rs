use crate::error::{Error, Result};
use crate::scalar::Real;

/// Frequency band: cmWave (`Cm`) or mmWave (`Mm`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Cm,
    Mm,
}

/// Cell and propagation parameters of the stochastic environment.
///
/// Defaults reproduce the reference configuration: 2.5/28 GHz carriers,
/// 10/100 MHz bandwidths, 15/22 dBm transmit power, exponent 4 beyond a
/// 50 m break point, 25/24 m decorrelation distances, 5/7 dB shadowing,
/// cross-band correlation 0.75, -174 dBm/Hz noise, and 2000 MSs in a
/// 500 m square cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig<F = f64> {
    pub f_c: F,
    pub f_m: F,
    pub w_c: F,
    pub w_m: F,
    /// dBm; `-inf` disables the band.
    pub p_tx_c: F,
    pub p_tx_m: F,
    pub eps: F,
    pub d_break: F,
    pub d_dcor_c: F,
    pub d_dcor_m: F,
    pub sigma_c: F,
    pub sigma_m: F,
    pub rho: F,
    /// dBm/Hz
    pub noise_psd: F,
    pub cell_side: F,
    pub n_points: usize,
}

impl<F: Real> Default for CellConfig<F> {
    fn default() -> Self {
        CellConfig {
            f_c: F::lit(2.5e9),
            f_m: F::lit(28e9),
            w_c: F::lit(10e6),
            w_m: F::lit(100e6),
            p_tx_c: F::lit(15.0),
            p_tx_m: F::lit(22.0),
            eps: F::lit(4.0),
            d_break: F::lit(50.0),
            d_dcor_c: F::lit(25.0),
            d_dcor_m: F::lit(24.0),
            sigma_c: F::lit(5.0),
            sigma_m: F::lit(7.0),
            rho: F::lit(0.75),
            noise_psd: F::lit(-174.0),
            cell_side: F::lit(500.0),
            n_points: 2000,
        }
    }
}

impl<F: Real> CellConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_c", self.f_c),
            ("f_m", self.f_m),
            ("w_c", self.w_c),
            ("w_m", self.w_m),
            ("d_break", self.d_break),
            ("d_dcor_c", self.d_dcor_c),
            ("d_dcor_m", self.d_dcor_m),
            ("sigma_c", self.sigma_c),
            ("sigma_m", self.sigma_m),
            ("cell_side", self.cell_side),
        ];
        for (what, v) in positive {
            if !(v > F::zero() && v.is_finite()) {
                return Err(Error::OutOfRange {
                    what,
                    value: v.to_f64_lossy(),
                });
            }
        }
        if !(self.rho > -F::one() && self.rho < F::one()) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: self.rho.to_f64_lossy(),
            });
        }
        if !(self.eps >= F::lit(2.0) && self.eps.is_finite()) {
            return Err(Error::OutOfRange {
                what: "eps",
                value: self.eps.to_f64_lossy(),
            });
        }
        for (what, v) in [("p_tx_c", self.p_tx_c), ("p_tx_m", self.p_tx_m)] {
            if v.is_nan() || v == F::infinity() {
                return Err(Error::OutOfRange {
                    what,
                    value: v.to_f64_lossy(),
                });
            }
        }
        if !self.noise_psd.is_finite() {
            return Err(Error::OutOfRange {
                what: "noise_psd",
                value: self.noise_psd.to_f64_lossy(),
            });
        }
        if self.n_points == 0 {
            return Err(Error::InvalidConfig("n_points must be at least 1".into()));
        }
        Ok(())
    }

    pub fn carrier(&self, band: Band) -> F {
        match band {
            Band::Cm => self.f_c,
            Band::Mm => self.f_m,
        }
    }

    pub fn bandwidth(&self, band: Band) -> F {
        match band {
            Band::Cm => self.w_c,
            Band::Mm => self.w_m,
        }
    }

    pub fn tx_power(&self, band: Band) -> F {
        match band {
            Band::Cm => self.p_tx_c,
            Band::Mm => self.p_tx_m,
        }
    }

    pub fn sigma(&self, band: Band) -> F {
        match band {
            Band::Cm => self.sigma_c,
            Band::Mm => self.sigma_m,
        }
    }

    pub fn decorrelation(&self, band: Band) -> F {
        match band {
            Band::Cm => self.d_dcor_c,
            Band::Mm => self.d_dcor_m,
        }
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<G: Real>(&self) -> CellConfig<G> {
        let c = |v: F| G::lit(v.to_f64_lossy());
        CellConfig {
            f_c: c(self.f_c),
            f_m: c(self.f_m),
            w_c: c(self.w_c),
            w_m: c(self.w_m),
            p_tx_c: c(self.p_tx_c),
            p_tx_m: c(self.p_tx_m),
            eps: c(self.eps),
            d_break: c(self.d_break),
            d_dcor_c: c(self.d_dcor_c),
            d_dcor_m: c(self.d_dcor_m),
            sigma_c: c(self.sigma_c),
            sigma_m: c(self.sigma_m),
            rho: c(self.rho),
            noise_psd: c(self.noise_psd),
            cell_side: c(self.cell_side),
            n_points: self.n_points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        CellConfig::<f64>::default().validate().unwrap();
        CellConfig::<f32>::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = CellConfig::<f64>::default();
        assert!(CellConfig { rho: 1.0, ..base }.validate().is_err());
        assert!(CellConfig { eps: 1.5, ..base }.validate().is_err());
        assert!(CellConfig { sigma_m: 0.0, ..base }.validate().is_err());
        assert!(CellConfig { n_points: 0, ..base }.validate().is_err());
        // a disabled band is allowed
        CellConfig {
            p_tx_m: f64::NEG_INFINITY,
            ..base
        }
        .validate()
        .unwrap();
    }
}
