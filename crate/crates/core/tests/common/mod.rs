#![allow(dead_code)]

use dualband::dataset::{Dataset, Example, FeatureVector};
use dualband::learners::TrainConfig;
use dualband::rng::rng_from_seed;
use rand_distr::{Distribution, Normal};

pub fn point(d: f64, cm_power: f64, label: u8) -> Example {
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

/// Gaussian blobs in (log10 d, cm_power).
pub fn blobs(centers: &[((f64, f64), u8)], per: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
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

pub fn xor(per: usize, seed: u64) -> Dataset {
    blobs(
        &[((2.0, 2.0), 0), ((-2.0, -2.0), 0), ((2.0, -2.0), 1), ((-2.0, 2.0), 1)],
        per,
        0.3,
        seed,
    )
}

/// Two overlapping classes: learnable but not separable.
pub fn noisy(per: usize, seed: u64) -> Dataset {
    blobs(&[((0.0, 0.0), 0), ((1.0, 1.0), 1)], per, 0.8, seed)
}

pub fn small_train() -> TrainConfig {
    TrainConfig {
        max_epochs: 2000,
        learning_rate: 0.01,
        batch_size: 32,
        patience: 50,
        ..TrainConfig::default()
    }
}
