use rand::RngExt;

use super::budget::{link_budget, rate, snr_db, LinkBudget};
use super::config::{Band, CellConfig};
use super::shadowing::{JointShadowing, ShadowingSampler};
use crate::dataset::{Dataset, Example, FeatureVector};
use crate::error::Result;
use crate::rng::{derive_seed, rng_from_seed, Stream};

/// Distances below this are clamped to stay clear of the reference-loss
/// singularity, meters.
pub const MIN_DISTANCE: f64 = 1.0;

/// MS positions relative to the BS at the origin, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct MsPlacement {
    positions: Vec<(f64, f64)>,
}

impl MsPlacement {
    pub fn new(positions: Vec<(f64, f64)>) -> Self {
        MsPlacement { positions }
    }

    /// `n` positions uniform over the `side x side` square centred on the BS.
    pub fn uniform(n: usize, side: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let h = side / 2.0;
        let positions = (0..n)
            .map(|_| (rng.random_range(-h..=h), rng.random_range(-h..=h)))
            .collect();
        MsPlacement { positions }
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Euclidean distance of MS `i`, clamped to [`MIN_DISTANCE`].
    pub fn distance(&self, i: usize) -> f64 {
        let (x, y) = self.positions[i];
        x.hypot(y).max(MIN_DISTANCE)
    }

    pub fn angle(&self, i: usize) -> f64 {
        let (x, y) = self.positions[i];
        y.atan2(x)
    }
}

/// Everything drawn for one cell, kept for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct CellRealization {
    pub placement: MsPlacement,
    pub shadowing: JointShadowing,
    pub budgets: Vec<LinkBudget>,
    pub rate_c: Vec<f64>,
    pub rate_m: Vec<f64>,
    pub dataset: Dataset,
}

/// Draws positions and shadowing for one cell and labels every MS by
/// comparing the Shannon rates of the two bands.
pub fn generate_cell_realization(cfg: &CellConfig, seed: u64) -> Result<CellRealization> {
    cfg.validate()?;
    let placement = MsPlacement::uniform(
        cfg.n_points,
        cfg.cell_side,
        derive_seed(seed, Stream::Placement, 0),
    );
    let sampler = ShadowingSampler::new(&placement, cfg)?;
    let shadowing = sampler.sample(&mut rng_from_seed(derive_seed(seed, Stream::Shadowing, 0)));

    let n = placement.len();
    let mut budgets = Vec::with_capacity(n);
    let mut rate_c = Vec::with_capacity(n);
    let mut rate_m = Vec::with_capacity(n);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let d = placement.distance(i);
        let lb = link_budget(d, cfg)?;
        let (sc, sm) = (shadowing.s_c[i], shadowing.s_m[i]);
        let rc = rate(Band::Cm, &lb, sc, cfg);
        let rm = rate(Band::Mm, &lb, sm, cfg);
        let features = FeatureVector {
            d: Some(d),
            theta: Some(placement.angle(i)),
            cm_power: Some(snr_db(Band::Cm, d, sc, cfg)?),
            ..Default::default()
        };
        examples.push(Example::new(features, u8::from(rm > rc))?);
        budgets.push(lb);
        rate_c.push(rc);
        rate_m.push(rm);
    }
    Ok(CellRealization {
        placement,
        shadowing,
        budgets,
        rate_c,
        rate_m,
        dataset: Dataset::new(examples)?,
    })
}

/// One cell as a dataset with features `d`, `theta`, `cm_power` (SNR^c, dB).
pub fn generate_cell(cfg: &CellConfig, seed: u64) -> Result<Dataset> {
    Ok(generate_cell_realization(cfg, seed)?.dataset)
}

/// Seed of cell `index` under `master`.
pub fn cell_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, Stream::Cell, index as u64)
}
