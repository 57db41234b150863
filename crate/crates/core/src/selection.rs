//! Monte-Carlo cross-validation, grid search and hardening-threshold choice.
//!
//! Structure and `alpha` are chosen on mean validation cross-entropy; the
//! hardening threshold `gamma_l` on mean validation error. Nothing here
//! takes a test set.

use crate::dataset::{apply_scaler, fit_scaler, split_two, Dataset, FeatureCombo, FeatureMatrix, Scaler};
use crate::error::{Error, Result};
use crate::learners::{
    cross_entropy, error_metric, harden, train, validate_layout, ModelKind, ModelSpec, TrainConfig, TrainedModel,
};
use crate::rng::{derive_seed, Stream};

/// Absolute slack under which two averaged criteria count as tied.
pub const TIE_EPS: f64 = 1e-12;

/// Candidate grids and the number of CV repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub layouts: Vec<Vec<usize>>,
    pub alphas: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub cv_repeats: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            layouts: vec![vec![50], vec![50, 50], vec![40, 30, 30], vec![25, 25, 25, 25]],
            alphas: vec![0.05, 0.1, 0.15, 0.3, 0.5],
            gamma_grid: gamma_grid(0.05),
            cv_repeats: 5,
        }
    }
}

impl SearchSpace {
    pub fn new(layouts: Vec<Vec<usize>>, alphas: Vec<f64>, gamma_grid: Vec<f64>, cv_repeats: usize) -> Result<Self> {
        let s = SearchSpace {
            layouts,
            alphas,
            gamma_grid,
            cv_repeats,
        };
        s.validate()?;
        Ok(s)
    }

    /// A single `(layout, alpha)` candidate with one CV repeat.
    pub fn fixed(layout: &[usize], alpha: f64, gamma_step: f64) -> Result<Self> {
        Self::new(vec![layout.to_vec()], vec![alpha], gamma_grid(gamma_step), 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layouts.is_empty() || self.alphas.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::InvalidConfig("search grids must be non-empty".into()));
        }
        if self.cv_repeats == 0 {
            return Err(Error::InvalidConfig("cv_repeats must be at least 1".into()));
        }
        for l in &self.layouts {
            validate_layout(l)?;
        }
        if let Some(&a) = self.alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::OutOfRange { what: "alpha", value: a });
        }
        if let Some(&g) = self.gamma_grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::OutOfRange {
                what: "gamma_l",
                value: g,
            });
        }
        Ok(())
    }

    /// Candidate specs for `kind`; layouts only apply to networks.
    pub fn candidates(&self, kind: ModelKind, seed: u64) -> Vec<ModelSpec> {
        let layouts: Vec<Vec<usize>> = match kind {
            ModelKind::Nn => self.layouts.clone(),
            _ => vec![Vec::new()],
        };
        let mut out = Vec::new();
        for layout in &layouts {
            for &alpha in &self.alphas {
                out.push(ModelSpec {
                    kind,
                    hidden_layout: layout.clone(),
                    alpha,
                    seed,
                });
            }
        }
        out
    }
}

/// `0, step, 2 step, ...` up to 1 inclusive.
pub fn gamma_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step).min(1.0)).collect()
}

/// How the training block is re-split and whether the winner is refit.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub space: SearchSpace,
    pub train: TrainConfig,
    /// Share of the training block held out for validation.
    pub validation_fraction: f64,
    /// Refit the chosen candidate on a fresh split of the whole block;
    /// otherwise keep the first CV repeat's model.
    pub refit: bool,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            space: SearchSpace::default(),
            train: TrainConfig::default(),
            validation_fraction: 0.2,
            refit: true,
        }
    }
}

/// Averages of one candidate over its CV repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub mean_ce: f64,
    /// Mean validation error at each point of the gamma grid.
    pub error_curve: Vec<f64>,
    pub completed: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub spec: ModelSpec,
    pub outcome: CvOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub spec: ModelSpec,
    pub gamma_l: f64,
    pub gamma_grid: Vec<f64>,
    /// Candidates that completed at least one repeat.
    pub candidates: Vec<CandidateScore>,
    /// Repeats that diverged, over all candidates.
    pub diverged: usize,
}

impl SelectionResult {
    pub fn chosen(&self) -> &CandidateScore {
        self.candidates
            .iter()
            .find(|c| c.spec == self.spec)
            .expect("chosen candidate is listed")
    }
}

/// Fits the scaler on `fit_part` and standardizes both parts.
fn prepare(
    ds: &Dataset,
    fit_part: &[usize],
    other: &[usize],
    combo: &FeatureCombo,
) -> Result<(Scaler, FeatureMatrix, FeatureMatrix)> {
    let a = ds.subset(fit_part)?;
    let b = ds.subset(other)?;
    let scaler = fit_scaler(&a, combo)?;
    let ma = apply_scaler(&scaler, &a)?;
    let mb = apply_scaler(&scaler, &b)?;
    Ok((scaler, ma, mb))
}

fn error_curve(labels: &[u8], softs: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&g| {
            let d: Vec<u8> = softs.iter().map(|&s| harden(s, g)).collect();
            error_metric(labels, &d)
        })
        .collect()
}

/// CV of one candidate; also hands back the model of the first completed
/// repeat so callers can skip a refit.
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    train_set: &Dataset,
    combo: &FeatureCombo,
    validation_fraction: f64,
    repeats: usize,
    grid: &[f64],
    seed: u64,
) -> Result<(CvOutcome, Option<TrainedModel>)> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let mut ce_sum = 0.0;
    let mut curve_sum = vec![0.0; grid.len()];
    let mut completed = 0;
    let mut diverged = 0;
    let mut first = None;
    for r in 0..repeats {
        let (tr, va) = split_two(
            train_set.len(),
            validation_fraction,
            derive_seed(seed, Stream::CrossValidation, r as u64),
        )?;
        let (scaler, mtr, mva) = prepare(train_set, &tr, &va, combo)?;
        let run_cfg = cfg.with_seed(derive_seed(seed, Stream::Shuffle, r as u64));
        let model = match train(spec, &run_cfg, &scaler, &mtr, &mva) {
            Ok(m) => m,
            Err(Error::Divergence { .. }) => {
                diverged += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let softs = model.soft_batch(&mva)?;
        ce_sum += cross_entropy(mva.labels(), &softs)?;
        for (acc, e) in curve_sum.iter_mut().zip(error_curve(mva.labels(), &softs, grid)?) {
            *acc += e;
        }
        completed += 1;
        if first.is_none() {
            first = Some(model);
        }
    }
    let k = completed.max(1) as f64;
    let outcome = CvOutcome {
        mean_ce: if completed == 0 { f64::INFINITY } else { ce_sum / k },
        error_curve: curve_sum.into_iter().map(|e| e / k).collect(),
        completed,
        diverged,
    };
    Ok((outcome, first))
}

/// Repeated random re-splitting of the training block into fit and
/// validation parts; averages validation CE and the error-vs-`gamma_l`
/// curve over the repeats that did not diverge.
#[allow(clippy::too_many_arguments)]
pub fn mc_cross_validate(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    train_set: &Dataset,
    combo: &FeatureCombo,
    validation_fraction: f64,
    repeats: usize,
    grid: &[f64],
    seed: u64,
) -> Result<CvOutcome> {
    cross_validate(spec, cfg, train_set, combo, validation_fraction, repeats, grid, seed).map(|(o, _)| o)
}

/// Ordering used to break ties between candidates with equal mean CE.
fn simplicity(spec: &ModelSpec) -> (usize, usize, f64) {
    (spec.total_hidden_nodes(), spec.hidden_layout.len(), spec.alpha)
}

fn pick_candidate(scores: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in scores.iter().enumerate() {
        let Some(b) = best else {
            best = Some(i);
            continue;
        };
        let (ce, best_ce) = (c.outcome.mean_ce, scores[b].outcome.mean_ce);
        let better = if (ce - best_ce).abs() <= TIE_EPS {
            simplicity(&c.spec).partial_cmp(&simplicity(&scores[b].spec)) == Some(std::cmp::Ordering::Less)
        } else {
            ce < best_ce
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Grid value with the smallest error; ties go to the value closest to
/// 0.5, then to the smaller value.
pub fn select_gamma_l(grid: &[f64], errors: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if grid.len() != errors.len() {
        return Err(Error::LengthMismatch {
            left: grid.len(),
            right: errors.len(),
        });
    }
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best: Option<f64> = None;
    for (&g, &e) in grid.iter().zip(errors) {
        if e > min + TIE_EPS {
            continue;
        }
        best = Some(match best {
            None => g,
            Some(b) => {
                let (dg, db) = ((g - 0.5).abs(), (b - 0.5).abs());
                if dg < db - TIE_EPS || ((dg - db).abs() <= TIE_EPS && g < b) {
                    g
                } else {
                    b
                }
            }
        });
    }
    best.ok_or(Error::SelectionFailed)
}

fn search(
    kind: ModelKind,
    protocol: &Protocol,
    train_set: &Dataset,
    combo: &FeatureCombo,
    seed: u64,
) -> Result<(SelectionResult, Option<TrainedModel>)> {
    protocol.space.validate()?;
    let space = &protocol.space;
    let mut scores = Vec::new();
    let mut firsts = Vec::new();
    let mut diverged = 0;
    // one model seed per (kind, seed); candidates differ in structure only
    let model_seed = derive_seed(seed, Stream::Init, kind as u64);
    for spec in space.candidates(kind, model_seed) {
        let (outcome, first) = cross_validate(
            &spec,
            &protocol.train,
            train_set,
            combo,
            protocol.validation_fraction,
            space.cv_repeats,
            &space.gamma_grid,
            seed,
        )?;
        diverged += outcome.diverged;
        if outcome.completed > 0 {
            scores.push(CandidateScore { spec, outcome });
            firsts.push(first);
        }
    }
    let i = pick_candidate(&scores).ok_or(Error::SelectionFailed)?;
    let chosen = &scores[i];
    let gamma_l = select_gamma_l(&space.gamma_grid, &chosen.outcome.error_curve)?;
    let result = SelectionResult {
        spec: chosen.spec.clone(),
        gamma_l,
        gamma_grid: space.gamma_grid.clone(),
        candidates: scores,
        diverged,
    };
    Ok((result, firsts.swap_remove(i)))
}

/// Chooses `(layout, alpha)` on mean validation CE (ties: fewer nodes,
/// fewer layers, smaller alpha), then `gamma_l` on the winner's mean
/// validation error curve.
pub fn grid_search(
    kind: ModelKind,
    protocol: &Protocol,
    train_set: &Dataset,
    combo: &FeatureCombo,
    seed: u64,
) -> Result<SelectionResult> {
    search(kind, protocol, train_set, combo, seed).map(|(r, _)| r)
}

/// Retrains `spec` on the whole training block (scaler on the whole block,
/// a fresh fit/validation split for early stopping) and attaches `gamma_l`.
pub fn fit_full(
    spec: &ModelSpec,
    gamma_l: f64,
    cfg: &TrainConfig,
    train_set: &Dataset,
    combo: &FeatureCombo,
    validation_fraction: f64,
    seed: u64,
) -> Result<TrainedModel> {
    let scaler = fit_scaler(train_set, combo)?;
    let model = if spec.kind == ModelKind::Linear {
        let m = apply_scaler(&scaler, train_set)?;
        train(spec, cfg, &scaler, &m, &m)?
    } else {
        let (tr, va) = split_two(
            train_set.len(),
            validation_fraction,
            derive_seed(seed, Stream::Refit, 0),
        )?;
        let mtr = apply_scaler(&scaler, &train_set.subset(&tr)?)?;
        let mva = apply_scaler(&scaler, &train_set.subset(&va)?)?;
        let run_cfg = cfg.with_seed(derive_seed(seed, Stream::Refit, 1));
        train(spec, &run_cfg, &scaler, &mtr, &mva)?
    };
    model.with_gamma_l(gamma_l)
}

/// Grid search followed by the final fit: a refit on the whole block, or
/// the first CV repeat's model when the protocol disables refitting.
pub fn select_and_fit(
    kind: ModelKind,
    protocol: &Protocol,
    train_set: &Dataset,
    combo: &FeatureCombo,
    seed: u64,
) -> Result<(TrainedModel, SelectionResult)> {
    let (result, first) = search(kind, protocol, train_set, combo, seed)?;
    let model = match (protocol.refit, first) {
        (false, Some(m)) => m.with_gamma_l(result.gamma_l)?,
        _ => fit_full(
            &result.spec,
            result.gamma_l,
            &protocol.train,
            train_set,
            combo,
            protocol.validation_fraction,
            seed,
        )?,
    };
    Ok((model, result))
}

/// Selection against a fixed validation set: every candidate is trained
/// once on `train_set` (early stopping on `validation_set`) and scored on
/// it; the winner is kept as trained, with `gamma_l` from its error curve.
pub fn select_on_fixed_split(
    kind: ModelKind,
    protocol: &Protocol,
    train_set: &Dataset,
    validation_set: &Dataset,
    combo: &FeatureCombo,
    seed: u64,
) -> Result<(TrainedModel, SelectionResult)> {
    protocol.space.validate()?;
    let space = &protocol.space;
    let scaler = fit_scaler(train_set, combo)?;
    let mtr = apply_scaler(&scaler, train_set)?;
    let mva = apply_scaler(&scaler, validation_set)?;
    let run_cfg = protocol.train.with_seed(derive_seed(seed, Stream::Shuffle, 0));
    let model_seed = derive_seed(seed, Stream::Init, kind as u64);
    let mut scores = Vec::new();
    let mut models = Vec::new();
    let mut diverged = 0;
    for spec in space.candidates(kind, model_seed) {
        let model = match train(&spec, &run_cfg, &scaler, &mtr, &mva) {
            Ok(m) => m,
            Err(Error::Divergence { .. }) => {
                diverged += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let softs = model.soft_batch(&mva)?;
        let outcome = CvOutcome {
            mean_ce: cross_entropy(mva.labels(), &softs)?,
            error_curve: error_curve(mva.labels(), &softs, &space.gamma_grid)?,
            completed: 1,
            diverged: 0,
        };
        scores.push(CandidateScore { spec, outcome });
        models.push(model);
    }
    let i = pick_candidate(&scores).ok_or(Error::SelectionFailed)?;
    let gamma_l = select_gamma_l(&space.gamma_grid, &scores[i].outcome.error_curve)?;
    let result = SelectionResult {
        spec: scores[i].spec.clone(),
        gamma_l,
        gamma_grid: space.gamma_grid.clone(),
        candidates: scores,
        diverged,
    };
    let model = models.swap_remove(i).with_gamma_l(gamma_l)?;
    Ok((model, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_space_is_valid() {
        let s = SearchSpace::default();
        s.validate().unwrap();
        assert_eq!(s.gamma_grid.len(), 21);
        assert_eq!(s.gamma_grid[20], 1.0);
        assert_eq!(s.candidates(ModelKind::Nn, 0).len(), 20);
        assert_eq!(s.candidates(ModelKind::Logistic, 0).len(), 5);
    }

    #[test]
    fn oversized_layout_is_rejected() {
        let r = SearchSpace::new(vec![vec![60, 60]], vec![0.1], gamma_grid(0.05), 1);
        assert!(r.is_err());
        assert!(SearchSpace::new(vec![vec![50]], vec![], gamma_grid(0.05), 1).is_err());
        assert!(SearchSpace::new(vec![vec![50]], vec![0.1], vec![1.5], 1).is_err());
        assert!(SearchSpace::new(vec![vec![50]], vec![0.1], gamma_grid(0.05), 0).is_err());
    }

    #[test]
    fn gamma_all_zero_labels_tie_rule() {
        // all-zero validation labels: every gamma at or above the largest
        // soft output is optimal; the one closest to 0.5 wins
        let grid = gamma_grid(0.05);
        let softs = [0.1, 0.2, 0.3];
        let errors = error_curve(&[0, 0, 0], &softs, &grid).unwrap();
        assert_eq!(select_gamma_l(&grid, &errors).unwrap(), 0.5);
        let softs = [0.1, 0.62, 0.3];
        let errors = error_curve(&[0, 0, 0], &softs, &grid).unwrap();
        assert_eq!(select_gamma_l(&grid, &errors).unwrap(), 0.65);
    }

    #[test]
    fn gamma_tie_prefers_smaller_at_equal_distance() {
        let grid = [0.4, 0.6];
        assert_eq!(select_gamma_l(&grid, &[0.1, 0.1]).unwrap(), 0.4);
    }

    #[test]
    fn monotone_curve_picks_endpoint() {
        let grid = gamma_grid(0.1);
        let rising: Vec<f64> = (0..grid.len()).map(|i| i as f64).collect();
        assert_eq!(select_gamma_l(&grid, &rising).unwrap(), 0.0);
        let falling: Vec<f64> = rising.iter().rev().copied().collect();
        assert_eq!(select_gamma_l(&grid, &falling).unwrap(), 1.0);
    }

    #[test]
    fn calibrated_softs_choose_gamma_near_half() {
        use crate::rng::rng_from_seed;
        use rand::RngExt;
        let mut rng = rng_from_seed(3);
        let mut labels = Vec::new();
        let mut softs = Vec::new();
        for _ in 0..20_000 {
            let s: f64 = rng.random_range(0.0..1.0);
            softs.push(s);
            labels.push(u8::from(rng.random_range(0.0..1.0) < s));
        }
        let grid = gamma_grid(0.05);
        let g = select_gamma_l(&grid, &error_curve(&labels, &softs, &grid).unwrap()).unwrap();
        assert!((0.4..=0.6).contains(&g), "{g}");
    }

    #[test]
    fn candidate_ties_prefer_simpler() {
        let outcome = |ce| CvOutcome {
            mean_ce: ce,
            error_curve: vec![],
            completed: 1,
            diverged: 0,
        };
        let mk = |layout: &[usize], alpha, ce| CandidateScore {
            spec: ModelSpec::nn(layout, alpha, 0).unwrap(),
            outcome: outcome(ce),
        };
        let scores = vec![
            mk(&[50, 50], 0.1, 0.3),
            mk(&[25, 25], 0.3, 0.3),
            mk(&[50], 0.1, 0.3),
            mk(&[50], 0.05, 0.3),
            mk(&[40, 30, 30], 0.1, 0.31),
        ];
        assert_eq!(pick_candidate(&scores), Some(3));
        let mut scores = scores;
        scores[4].outcome.mean_ce = 0.29;
        assert_eq!(pick_candidate(&scores), Some(4));
    }
}
