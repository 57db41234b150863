//! Mini-batch training with early stopping, and the closed-form ridge fit.

use rand::seq::SliceRandom;

use super::network::{batch_logits, loss_and_gradient_into, Dense, NnParams, Workspace};
use super::{cross_entropy, sigmoid, ModelKind, ModelSpec, TrainedModel};
use crate::dataset::{FeatureMatrix, Scaler};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::rng::{derive_seed, rng_from_seed, Stream};
use crate::scalar::Real;

/// Parameter update rule. Both scale the summed gradient by the batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Plain gradient descent with a fixed step.
    Sgd,
    /// Adam with the usual bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs without a validation improvement larger than `tolerance`
    /// before training stops.
    pub patience: usize,
    pub tolerance: f64,
    /// When false every epoch runs and the final parameters are kept.
    pub early_stopping: bool,
    pub optimizer: Optimizer,
    /// Seeds the batch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 500,
            learning_rate: 3e-2,
            batch_size: 200,
            patience: 30,
            tolerance: 1e-4,
            early_stopping: true,
            optimizer: Optimizer::adam(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig(
                "max_epochs, batch_size and patience must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::OutOfRange {
                what: "learning_rate",
                value: self.learning_rate,
            });
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::OutOfRange {
                what: "tolerance",
                value: self.tolerance,
            });
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            let unit = |b: f64| (0.0..1.0).contains(&b);
            if !(unit(beta1) && unit(beta2) && eps > 0.0) {
                return Err(Error::InvalidConfig("Adam moments must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TrainConfig { seed, ..self }
    }
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    /// `(sum CE + alpha/2 ||W||^2) / n` accumulated over the epoch's batches
    /// at the parameters each batch saw; exact for full-batch training.
    pub train_loss: Vec<f64>,
    /// Mean validation cross-entropy after each epoch.
    pub validation_ce: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
}

/// Trains `spec` on standardized data. The returned model carries the
/// placeholder `gamma_l = 0.5`.
pub fn train<F: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    scaler: &Scaler,
    train: &FeatureMatrix<F>,
    validation: &FeatureMatrix<F>,
) -> Result<TrainedModel<F>> {
    train_traced(spec, cfg, scaler, train, validation).map(|(m, _)| m)
}

/// [`train`], also returning the per-epoch trace.
pub fn train_traced<F: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    scaler: &Scaler,
    train: &FeatureMatrix<F>,
    validation: &FeatureMatrix<F>,
) -> Result<(TrainedModel<F>, TrainingTrace)> {
    spec.validate()?;
    cfg.validate()?;
    for m in [train, validation] {
        if m.combo() != scaler.combo() {
            return Err(Error::FeatureMismatch {
                expected: scaler.combo().to_string(),
                found: m.combo().to_string(),
            });
        }
    }
    if train.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (params, trace) = match spec.kind {
        ModelKind::Linear => (fit_ridge(train, F::lit(spec.alpha))?, TrainingTrace::default()),
        ModelKind::Nn | ModelKind::Logistic => {
            if validation.n_rows() == 0 {
                return Err(Error::EmptyDataset);
            }
            descend(spec, cfg, train, validation)?
        }
    };
    let model = TrainedModel::new(spec.clone(), params, scaler.clone(), F::lit(0.5))?;
    Ok((model, trace))
}

fn validation_ce<F: Real>(params: &NnParams<F>, m: &FeatureMatrix<F>, ws: &mut Workspace<F>) -> Result<F> {
    let softs: Vec<F> = batch_logits(params, m.values(), m.n_rows(), ws)
        .into_iter()
        .map(sigmoid)
        .collect();
    cross_entropy(m.labels(), &softs)
}

fn descend<F: Real>(
    spec: &ModelSpec,
    cfg: &TrainConfig,
    train: &FeatureMatrix<F>,
    validation: &FeatureMatrix<F>,
) -> Result<(NnParams<F>, TrainingTrace)> {
    let n_in = train.n_cols();
    let mut init_rng = rng_from_seed(derive_seed(spec.seed, Stream::Init, 0));
    let mut params = NnParams::random(n_in, &spec.hidden_layout, &mut init_rng);
    let mut grad = NnParams::zeros(n_in, &spec.hidden_layout);
    let mut opt = OptimizerState::new(cfg, params.n_params());
    let mut shuffle_rng = rng_from_seed(derive_seed(cfg.seed, Stream::Shuffle, 0));
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut ws = Workspace::new();
    let mut x_batch = Vec::with_capacity(cfg.batch_size * n_in);
    let mut y_batch = Vec::with_capacity(cfg.batch_size);

    let alpha = F::lit(spec.alpha);
    let n = F::lit(train.n_rows() as f64);
    let mut best = (params.clone(), F::infinity(), 0usize);
    let mut trace = TrainingTrace::default();
    let mut stale = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = F::zero();
        for chunk in order.chunks(cfg.batch_size) {
            x_batch.clear();
            y_batch.clear();
            for &i in chunk {
                x_batch.extend_from_slice(train.row(i));
                y_batch.push(train.labels()[i]);
            }
            let b = F::lit(chunk.len() as f64);
            // each batch carries its share of the penalty, so one epoch
            // descends on sum CE + alpha/2 ||W||^2 over the whole set
            let batch_alpha = alpha * b / n;
            epoch_loss += loss_and_gradient_into(&params, &x_batch, &y_batch, batch_alpha, &mut ws, &mut grad);
            opt.step(&mut params, &grad, F::lit(cfg.learning_rate), b);
        }
        let epoch_loss = epoch_loss / n;
        if !epoch_loss.is_finite() || !params.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let val = validation_ce(&params, validation, &mut ws)?;
        trace.train_loss.push(epoch_loss.to_f64_lossy());
        trace.validation_ce.push(val.to_f64_lossy());
        if !cfg.early_stopping {
            best = (params.clone(), val, epoch);
            continue;
        }
        if val < best.1 - F::lit(cfg.tolerance) {
            best = (params.clone(), val, epoch);
            stale = 0;
        } else {
            if val < best.1 {
                // small gains still update the kept parameters
                best = (params.clone(), val, epoch);
            }
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    trace.best_epoch = best.2;
    Ok((best.0, trace))
}

struct OptimizerState<F> {
    rule: Optimizer,
    t: i32,
    m: Vec<F>,
    v: Vec<F>,
}

impl<F: Real> OptimizerState<F> {
    fn new(cfg: &TrainConfig, n_params: usize) -> Self {
        let n = match cfg.optimizer {
            Optimizer::Sgd => 0,
            Optimizer::Adam { .. } => n_params,
        };
        OptimizerState {
            rule: cfg.optimizer,
            t: 0,
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
        }
    }

    fn step(&mut self, params: &mut NnParams<F>, grad: &NnParams<F>, lr: F, batch: F) {
        self.t += 1;
        let pairs = params
            .layers
            .iter_mut()
            .zip(&grad.layers)
            .flat_map(|(p, g): (&mut Dense<F>, &Dense<F>)| {
                p.weights
                    .iter_mut()
                    .zip(&g.weights)
                    .chain(p.bias.iter_mut().zip(&g.bias))
            });
        match self.rule {
            Optimizer::Sgd => {
                let k = lr / batch;
                for (p, &g) in pairs {
                    *p -= k * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let (b1, b2, eps) = (F::lit(beta1), F::lit(beta2), F::lit(eps));
                let one = F::one();
                let step = lr * (one - b2.powi(self.t)).sqrt() / (one - b1.powi(self.t));
                for ((p, &g), (m, v)) in pairs.zip(self.m.iter_mut().zip(self.v.iter_mut())) {
                    let g = g / batch;
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    *p -= step * *m / (v.sqrt() + eps);
                }
            }
        }
    }
}

/// Ridge regression on `[X, 1]` with `alpha` added to the diagonal of the
/// weight block; the intercept is not penalized.
fn fit_ridge<F: Real>(train: &FeatureMatrix<F>, alpha: F) -> Result<NnParams<F>> {
    let p = train.n_cols();
    let dim = p + 1;
    let mut a = vec![F::zero(); dim * dim];
    let mut rhs = vec![F::zero(); dim];
    let mut z = vec![F::one(); dim];
    for r in 0..train.n_rows() {
        z[..p].copy_from_slice(train.row(r));
        let y = F::lit(f64::from(train.labels()[r]));
        for i in 0..dim {
            rhs[i] += z[i] * y;
            for j in 0..=i {
                a[i * dim + j] += z[i] * z[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            a[j * dim + i] = a[i * dim + j];
        }
    }
    for i in 0..p {
        a[i * dim + i] += alpha;
    }
    let coef = solve_spd(&a, &rhs)?;
    let mut params = NnParams::zeros(p, &[]);
    params.layers[0].weights.copy_from_slice(&coef[..p]);
    params.layers[0].bias[0] = coef[p];
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{apply_scaler, fit_scaler, Dataset, Example, FeatureCombo, FeatureVector};
    use crate::learners::error_metric;
    use crate::rng::SimRng;
    use rand::RngExt;
    use rand_distr::{Distribution, Normal};

    fn point(d: f64, cm_power: f64, label: u8) -> Example {
        Example::new(
            FeatureVector {
                d: Some(d),
                cm_power: Some(cm_power),
                ..Default::default()
            },
            label,
        )
        .unwrap()
    }

    /// Gaussian blobs around each center. The first coordinate is stored as
    /// `d = 10^x` so that the log-scaled distance feature recovers `x`.
    fn blobs(centers: &[((f64, f64), u8)], per: usize, spread: f64, seed: u64) -> Dataset {
        let mut rng: SimRng = rng_from_seed(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut ex = Vec::new();
        for _ in 0..per {
            for &((cx, cy), label) in centers {
                let x: f64 = cx + noise.sample(&mut rng);
                let y: f64 = cy + noise.sample(&mut rng);
                ex.push(point(10f64.powf(x), y, label));
            }
        }
        Dataset::new(ex).unwrap()
    }

    fn matrices(ds: &Dataset) -> (Scaler, FeatureMatrix) {
        let combo = FeatureCombo::parse("d+cm_power").unwrap();
        let scaler = fit_scaler(ds, &combo).unwrap();
        let m = apply_scaler(&scaler, ds).unwrap();
        (scaler, m)
    }

    fn training_error(model: &TrainedModel, m: &FeatureMatrix) -> f64 {
        error_metric(m.labels(), &model.decide_batch(m).unwrap()).unwrap()
    }

    fn separable() -> Dataset {
        blobs(&[((5.0, 5.0), 1), ((-5.0, -5.0), 0)], 40, 0.5, 1)
    }

    fn xor() -> Dataset {
        blobs(
            &[((2.0, 2.0), 0), ((-2.0, -2.0), 0), ((2.0, -2.0), 1), ((-2.0, 2.0), 1)],
            25,
            0.3,
            2,
        )
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 2000,
            learning_rate: 0.01,
            batch_size: 32,
            patience: 50,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_all_kinds_perfect() {
        let (scaler, m) = matrices(&separable());
        for spec in [
            ModelSpec::nn(&[8], 1e-4, 3).unwrap(),
            ModelSpec::logistic(1e-4, 3).unwrap(),
            ModelSpec::linear(1e-4).unwrap(),
        ] {
            let model = train(&spec, &cfg(), &scaler, &m, &m).unwrap();
            assert_eq!(training_error(&model, &m), 0.0, "{}", spec.kind);
        }
    }

    #[test]
    fn xor_needs_hidden_units() {
        let (scaler, m) = matrices(&xor());
        let nn = train(&ModelSpec::nn(&[8, 8], 1e-4, 5).unwrap(), &cfg(), &scaler, &m, &m).unwrap();
        assert_eq!(training_error(&nn, &m), 0.0);
        let lg = train(&ModelSpec::logistic(1e-4, 5).unwrap(), &cfg(), &scaler, &m, &m).unwrap();
        assert!(training_error(&lg, &m) >= 0.25);
        let ln = train(&ModelSpec::linear(1e-4).unwrap(), &cfg(), &scaler, &m, &m).unwrap();
        assert!(training_error(&ln, &m) >= 0.25);
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        // Exhaustive over a grid of separating lines through the four
        // cluster centers: some cluster is always on the wrong side.
        let centers = [((1.0, 1.0), 0u8), ((-1.0, -1.0), 0), ((1.0, -1.0), 1), ((-1.0, 1.0), 1)];
        for i in 0..72 {
            let ang = i as f64 * std::f64::consts::PI / 36.0;
            let (wx, wy) = (ang.cos(), ang.sin());
            for j in -40..=40 {
                let b = j as f64 * 0.1;
                let wrong = centers
                    .iter()
                    .filter(|((x, y), l)| u8::from(wx * x + wy * y + b > 0.0) != *l)
                    .count();
                assert!(wrong >= 1);
            }
        }
    }

    #[test]
    fn heavy_regularization_flattens_outputs() {
        let (scaler, m) = matrices(&separable());
        for spec in [ModelSpec::nn(&[8], 1e6, 3).unwrap(), ModelSpec::logistic(1e6, 3).unwrap()] {
            let free = train(&spec_with_alpha(&spec, 1e-4), &cfg(), &scaler, &m, &m).unwrap();
            let run_out = TrainConfig {
                early_stopping: false,
                max_epochs: 300,
                ..cfg()
            };
            let model = train(&spec, &run_out, &scaler, &m, &m).unwrap();
            let (w2, w2_free) = (model.params.weight_norm2(), free.params.weight_norm2());
            assert!(w2 < 1e-2 * w2_free, "{} weights {w2} vs {w2_free}", spec.kind);
            for s in model.soft_batch(&m).unwrap() {
                assert!((s - 0.5).abs() < 0.05, "{s}");
            }
        }
    }

    fn spec_with_alpha(spec: &ModelSpec, alpha: f64) -> ModelSpec {
        ModelSpec { alpha, ..spec.clone() }
    }

    #[test]
    fn sgd_loss_is_non_increasing() {
        for (ds, spec) in [
            (separable(), ModelSpec::nn(&[8], 0.1, 7).unwrap()),
            (xor(), ModelSpec::nn(&[8, 8], 0.1, 7).unwrap()),
            (xor(), ModelSpec::logistic(0.1, 7).unwrap()),
        ] {
            let (scaler, m) = matrices(&ds);
            let cfg = TrainConfig {
                max_epochs: 300,
                learning_rate: 1e-3,
                batch_size: m.n_rows(),
                patience: 1000,
                tolerance: 0.0,
                early_stopping: false,
                optimizer: Optimizer::Sgd,
                seed: 1,
            };
            let (_, trace) = train_traced(&spec, &cfg, &scaler, &m, &m).unwrap();
            assert_eq!(trace.train_loss.len(), 300);
            for w in trace.train_loss.windows(2) {
                assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (scaler, m) = matrices(&xor());
        let spec = ModelSpec::nn(&[6, 4], 0.05, 11).unwrap();
        let a = train(&spec, &cfg(), &scaler, &m, &m).unwrap();
        let b = train(&spec, &cfg(), &scaler, &m, &m).unwrap();
        assert_eq!(a.params.flat(), b.params.flat());
        let c = train(&spec.with_seed(12), &cfg(), &scaler, &m, &m).unwrap();
        assert_ne!(a.params.flat(), c.params.flat());
    }

    #[test]
    fn ridge_matches_normal_equations_oracle() {
        // one feature: slope = Sxy / (Sxx + alpha), intercept from the means
        let mut rng = rng_from_seed(4);
        let ex: Vec<Example> = (0..50)
            .map(|_| {
                let theta: f64 = rng.random_range(-1.0..1.0);
                point(1.0, theta, u8::from(theta + rng.random_range(-0.5..0.5) > 0.0))
            })
            .collect();
        let ds = Dataset::new(ex).unwrap();
        let combo = FeatureCombo::parse("cm_power").unwrap();
        let scaler = fit_scaler(&ds, &combo).unwrap();
        let m = apply_scaler::<f64>(&scaler, &ds).unwrap();
        let alpha = 2.5;
        let model = train(&ModelSpec::linear(alpha).unwrap(), &cfg(), &scaler, &m, &m).unwrap();
        let n = m.n_rows() as f64;
        let xs: Vec<f64> = (0..m.n_rows()).map(|r| m.row(r)[0]).collect();
        let ys: Vec<f64> = m.labels().iter().map(|&l| l as f64).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / (sxx + alpha);
        let intercept = my - slope * mx;
        assert!((model.params.layers[0].weights[0] - slope).abs() < 1e-10);
        assert!((model.params.layers[0].bias[0] - intercept).abs() < 1e-10);
    }

    #[test]
    fn divergence_is_reported() {
        let (scaler, m) = matrices(&separable());
        let cfg = TrainConfig {
            learning_rate: 1e300,
            optimizer: Optimizer::Sgd,
            batch_size: 1,
            ..cfg()
        };
        let err = train(&ModelSpec::nn(&[8], 1e6, 3).unwrap(), &cfg, &scaler, &m, &m).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 0 }), "{err:?}");
    }

    #[test]
    fn f32_training_runs() {
        let ds = separable();
        let combo = FeatureCombo::parse("d+cm_power").unwrap();
        let scaler = fit_scaler(&ds, &combo).unwrap();
        let m = apply_scaler::<f32>(&scaler, &ds).unwrap();
        let model = train(&ModelSpec::logistic(1e-3, 1).unwrap(), &cfg(), &scaler, &m, &m).unwrap();
        let d = model.decide_batch(&m).unwrap();
        assert_eq!(error_metric(m.labels(), &d).unwrap(), 0.0);
    }
}
