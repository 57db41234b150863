mod common;

use common::{noisy, small_train, xor};
use dualband::channel::{generate_cell, CellConfig};
use dualband::dataset::{apply_scaler, fit_scaler, split_indices, split_two, Dataset, FeatureCombo, SplitSpec};
use dualband::learners::{cross_entropy, error_metric, train, ModelKind, ModelSpec, TrainedModel};
use dualband::rng::{derive_seed, Stream};
use dualband::selection::{
    fit_full, gamma_grid, grid_search, mc_cross_validate, select_and_fit, Protocol, SearchSpace,
};

fn combo() -> FeatureCombo {
    FeatureCombo::parse("d+cm_power").unwrap()
}

/// One CV repeat done by hand: returns (training CE, validation CE).
fn manual_repeat(spec: &ModelSpec, ds: &Dataset, vf: f64, seed: u64, r: u64) -> (f64, f64) {
    let (tr, va) = split_two(ds.len(), vf, derive_seed(seed, Stream::CrossValidation, r)).unwrap();
    let fit = ds.subset(&tr).unwrap();
    let scaler = fit_scaler(&fit, &combo()).unwrap();
    let mtr = apply_scaler(&scaler, &fit).unwrap();
    let mva = apply_scaler(&scaler, &ds.subset(&va).unwrap()).unwrap();
    let cfg = small_train().with_seed(derive_seed(seed, Stream::Shuffle, r));
    let model = train(spec, &cfg, &scaler, &mtr, &mva).unwrap();
    let ce = |m: &dualband::dataset::FeatureMatrix| cross_entropy(m.labels(), &model.soft_batch(m).unwrap()).unwrap();
    (ce(&mtr), ce(&mva))
}

#[test]
fn xor_selects_hidden_layers() {
    let space = SearchSpace::new(vec![vec![1], vec![8, 8]], vec![1e-4], gamma_grid(0.05), 2).unwrap();
    let protocol = Protocol {
        space,
        train: small_train(),
        ..Protocol::default()
    };
    let result = grid_search(ModelKind::Nn, &protocol, &xor(40, 1), &combo(), 9).unwrap();
    assert_eq!(result.spec.hidden_layout, vec![8, 8]);
    let ce: Vec<f64> = result.candidates.iter().map(|c| c.outcome.mean_ce).collect();
    assert!(ce[1] < ce[0], "{ce:?}");
}

#[test]
fn single_repeat_equals_one_train_validate_run() {
    let ds = noisy(100, 4);
    let spec = ModelSpec::nn(&[10], 0.1, 3).unwrap();
    let grid = gamma_grid(0.1);
    let cv = mc_cross_validate(&spec, &small_train(), &ds, &combo(), 0.2, 1, &grid, 17).unwrap();
    let (_, val_ce) = manual_repeat(&spec, &ds, 0.2, 17, 0);
    assert_eq!(cv.mean_ce, val_ce);
    assert_eq!(cv.completed, 1);
    assert_eq!(cv.error_curve.len(), grid.len());
}

#[test]
fn duplicated_halves_validation_matches_training() {
    // every validation example also sits in the fit part with high probability
    let half = noisy(150, 5);
    let ds = Dataset::concat([&half, &half]).unwrap();
    let spec = ModelSpec::logistic(0.1, 2).unwrap();
    let cv = mc_cross_validate(&spec, &small_train(), &ds, &combo(), 0.2, 3, &gamma_grid(0.1), 23).unwrap();
    let train_ce: f64 = (0..3).map(|r| manual_repeat(&spec, &ds, 0.2, 23, r).0).sum::<f64>() / 3.0;
    assert!((cv.mean_ce - train_ce).abs() < 0.05, "{} vs {train_ce}", cv.mean_ce);
}

#[test]
fn fixed_seed_reproduces_curves() {
    let ds = noisy(80, 6);
    let space = SearchSpace::new(vec![vec![5], vec![5, 5]], vec![0.05, 0.3], gamma_grid(0.05), 2).unwrap();
    let protocol = Protocol {
        space,
        train: small_train(),
        ..Protocol::default()
    };
    let a = grid_search(ModelKind::Nn, &protocol, &ds, &combo(), 31).unwrap();
    let b = grid_search(ModelKind::Nn, &protocol, &ds, &combo(), 31).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.candidates.len(), 4);
}

#[test]
fn single_candidate_is_chosen() {
    let protocol = Protocol {
        space: SearchSpace::fixed(&[7, 3], 0.15, 0.05).unwrap(),
        train: small_train(),
        ..Protocol::default()
    };
    let r = grid_search(ModelKind::Nn, &protocol, &noisy(60, 7), &combo(), 1).unwrap();
    assert_eq!(r.spec.hidden_layout, vec![7, 3]);
    assert_eq!(r.spec.alpha, 0.15);
    assert_eq!(r.candidates.len(), 1);
}

#[test]
fn refit_is_deterministic_and_keeps_gamma() {
    let ds = noisy(80, 8);
    let spec = ModelSpec::nn(&[6], 0.1, 4).unwrap();
    let fit = |g| fit_full(&spec, g, &small_train(), &ds, &combo(), 0.2, 11).unwrap();
    let a: TrainedModel = fit(0.35);
    assert_eq!(a, fit(0.35));
    assert_eq!(a.gamma_l, 0.35);
    let lin = fit_full(&ModelSpec::linear(0.1).unwrap(), 0.6, &small_train(), &ds, &combo(), 0.2, 11).unwrap();
    assert_eq!(lin.gamma_l, 0.6);
}

#[test]
fn refit_no_worse_than_single_fold_on_benchmark_cells() {
    let cell = CellConfig::default();
    let combo = FeatureCombo::parse("cm_power").unwrap();
    let fold = Protocol {
        space: SearchSpace::fixed(&[50, 50], 0.1, 0.05).unwrap(),
        refit: false,
        ..Protocol::default()
    };
    let refit = Protocol {
        refit: true,
        ..fold.clone()
    };
    let split = SplitSpec::new(0.65, 0.2, 0).unwrap();
    let (mut e_fold, mut e_refit) = (0.0, 0.0);
    let cells = 50;
    for i in 0..cells {
        let ds = generate_cell(&cell, 1000 + i).unwrap();
        let idx = split_indices(ds.len(), &split.with_seed(i)).unwrap();
        let train_set = ds.subset(&idx.train_block()).unwrap();
        let test = ds.subset(&idx.test).unwrap();
        let err = |p: &Protocol| {
            let (m, _) = select_and_fit(ModelKind::Nn, p, &train_set, &combo, i).unwrap();
            let mt = apply_scaler(&m.scaler, &test).unwrap();
            error_metric(mt.labels(), &m.decide_batch(&mt).unwrap()).unwrap()
        };
        e_fold += err(&fold);
        e_refit += err(&refit);
    }
    let (e_fold, e_refit) = (e_fold / cells as f64, e_refit / cells as f64);
    assert!(e_refit <= e_fold + 0.05, "refit {e_refit} vs fold {e_fold}");
}
