//! Backpropagation against central finite differences.

use dualband::dataset::{Feature, FeatureCombo, FeatureMatrix};
use dualband::learners::{loss_gradient, regularized_loss, NnParams};
use dualband::rng::rng_from_seed;
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

const STEP: f64 = 1e-6;
const REL_TOL: f64 = 1e-5;
const POINTS: usize = 100;

fn batch(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
    let mut rng = rng_from_seed(seed);
    let combo = FeatureCombo::new(&Feature::ALL[..cols]).unwrap();
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let labels = (0..rows).map(|_| rng.random_range(0..2u8)).collect();
    FeatureMatrix::from_rows(combo, &data, labels).unwrap()
}

fn loss_at(params: &mut NnParams, theta: &[f64], b: &FeatureMatrix, alpha: f64) -> f64 {
    params.set_flat(theta);
    regularized_loss(params, b, alpha)
}

fn check_layout(hidden: &[usize], seed: u64) {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for point in 0..POINTS {
        let cols = 1 + point % 3;
        let b = batch(6, cols, seed * 1000 + point as u64);
        let mut params = NnParams::<f64>::random(cols, hidden, &mut rng);
        let alpha = rng.random_range(0.0..0.5);
        let theta = params.flat();
        let (_, grad) = loss_gradient(&params, &b, alpha);
        let g = grad.flat();

        // random direction through every parameter
        let v: Vec<f64> = (0..theta.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let shift = |s: f64| -> Vec<f64> { theta.iter().zip(&v).map(|(t, d)| t + s * d).collect() };
        let fd = (loss_at(&mut params, &shift(STEP), &b, alpha) - loss_at(&mut params, &shift(-STEP), &b, alpha))
            / (2.0 * STEP);
        let analytic: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs());
        worst = worst.max(rel);

        // the ten largest coordinates individually
        let mut idx: Vec<usize> = (0..g.len()).collect();
        idx.sort_by(|&i, &j| g[j].abs().total_cmp(&g[i].abs()));
        for &i in idx.iter().take(10) {
            let mut t = theta.clone();
            t[i] += STEP;
            let up = loss_at(&mut params, &t, &b, alpha);
            t[i] -= 2.0 * STEP;
            let down = loss_at(&mut params, &t, &b, alpha);
            let fd = (up - down) / (2.0 * STEP);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()));
        }
    }
    assert!(worst < REL_TOL, "layout {hidden:?}: worst relative error {worst:e}");
}

#[test]
fn logistic_gradient() {
    check_layout(&[], 1);
}

#[test]
fn one_hidden_layer_gradient() {
    check_layout(&[50], 2);
}

#[test]
fn two_hidden_layers_gradient() {
    check_layout(&[50, 50], 3);
}

#[test]
fn three_hidden_layers_gradient() {
    check_layout(&[40, 30, 30], 4);
}

#[test]
fn four_hidden_layers_gradient() {
    check_layout(&[25, 25, 25, 25], 5);
}
