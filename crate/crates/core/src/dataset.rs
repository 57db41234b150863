//! Examples, feature combinations, standardization and random splits.

use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Real;

/// One of the five observable features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    /// BS to MS distance, meters.
    Distance,
    /// Angular position of the MS, radians.
    Angle,
    /// cmWave SNR (dB) or received power (dBm).
    CmPower,
    /// Propagation delay of the main multipath component, seconds.
    Delay,
    /// Power of the main multipath component, dBm.
    MpcPower,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Distance,
        Feature::Angle,
        Feature::CmPower,
        Feature::Delay,
        Feature::MpcPower,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Distance => "d",
            Feature::Angle => "theta",
            Feature::CmPower => "cm_power",
            Feature::Delay => "delay",
            Feature::MpcPower => "mpc_power",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Distance-like features are standardized on a base-10 log scale;
    /// dB/dBm quantities are already logarithmic.
    pub fn log_scaled(self) -> bool {
        matches!(self, Feature::Distance | Feature::Delay)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Observable features of one MS. Absent features are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureVector {
    pub d: Option<f64>,
    pub theta: Option<f64>,
    pub cm_power: Option<f64>,
    pub delay: Option<f64>,
    pub mpc_power: Option<f64>,
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        match feature {
            Feature::Distance => self.d,
            Feature::Angle => self.theta,
            Feature::CmPower => self.cm_power,
            Feature::Delay => self.delay,
            Feature::MpcPower => self.mpc_power,
        }
    }

    pub fn set(&mut self, feature: Feature, value: Option<f64>) {
        let slot = match feature {
            Feature::Distance => &mut self.d,
            Feature::Angle => &mut self.theta,
            Feature::CmPower => &mut self.cm_power,
            Feature::Delay => &mut self.delay,
            Feature::MpcPower => &mut self.mpc_power,
        };
        *slot = value;
    }

    /// Features that carry a value.
    pub fn present(&self) -> FeatureCombo {
        let mut mask = 0u8;
        for f in Feature::ALL {
            if self.get(f).is_some() {
                mask |= 1 << f.index();
            }
        }
        FeatureCombo { mask }
    }

    pub fn validate(&self) -> Result<()> {
        for f in Feature::ALL {
            if let Some(v) = self.get(f) {
                if !v.is_finite() {
                    return Err(Error::OutOfRange {
                        what: f.name(),
                        value: v,
                    });
                }
            }
        }
        if let Some(d) = self.d {
            if d <= 0.0 {
                return Err(Error::OutOfRange { what: "d", value: d });
            }
        }
        if let Some(theta) = self.theta {
            if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&theta) {
                return Err(Error::OutOfRange {
                    what: "theta",
                    value: theta,
                });
            }
        }
        if let Some(delay) = self.delay {
            if delay <= 0.0 {
                return Err(Error::OutOfRange {
                    what: "delay",
                    value: delay,
                });
            }
        }
        if self.present().is_empty() {
            return Err(Error::InvalidConfig(
                "feature vector has no features".into(),
            ));
        }
        Ok(())
    }
}

/// A features/label pair. Label 1 means the mmWave rate is larger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub label: u8,
}

impl Example {
    pub fn new(features: FeatureVector, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::OutOfRange {
                what: "label",
                value: f64::from(label),
            });
        }
        features.validate()?;
        Ok(Example { features, label })
    }
}

/// Non-empty ordered collection of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset { examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Examples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.examples[i]).collect())
    }

    /// Concatenation of several datasets, in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset>) -> Result<Dataset> {
        let examples = parts
            .into_iter()
            .flat_map(|d| d.examples.iter().copied())
            .collect();
        Dataset::new(examples)
    }

    /// Features present in every example.
    pub fn common_features(&self) -> FeatureCombo {
        let mask = self
            .examples
            .iter()
            .fold(0x1f, |m, e| m & e.features.present().mask);
        FeatureCombo { mask }
    }
}

/// A non-empty subset of the five features.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureCombo {
    mask: u8,
}

/// Feature columns of the stochastic study, c-1 to c-7.
const STOCHASTIC_COMBOS: [&[Feature]; 7] = [
    &[Feature::Distance, Feature::Angle],
    &[Feature::Distance, Feature::Angle, Feature::CmPower],
    &[Feature::Angle, Feature::CmPower],
    &[Feature::Distance, Feature::CmPower],
    &[Feature::Distance],
    &[Feature::CmPower],
    &[Feature::Angle],
];

/// Feature columns of the external (ray-traced) study, c-1 to c-8. The
/// fifth column carries the main-MPC power observed through the AoD.
const EXTERNAL_COMBOS: [&[Feature]; 8] = [
    &[Feature::Distance, Feature::Angle],
    &[Feature::Distance, Feature::Angle, Feature::CmPower],
    &[Feature::Distance, Feature::CmPower],
    &[Feature::CmPower, Feature::Delay],
    &[Feature::CmPower],
    &[Feature::Distance],
    &[Feature::CmPower, Feature::Delay, Feature::MpcPower],
    &[Feature::Delay, Feature::MpcPower],
];

impl FeatureCombo {
    pub fn new(features: &[Feature]) -> Result<Self> {
        let combo = Self::from_iter_unchecked(features.iter().copied());
        if combo.is_empty() {
            return Err(Error::InvalidConfig("feature combination is empty".into()));
        }
        Ok(combo)
    }

    fn from_iter_unchecked(features: impl IntoIterator<Item = Feature>) -> Self {
        let mask = features
            .into_iter()
            .fold(0u8, |m, f| m | (1 << f.index()));
        FeatureCombo { mask }
    }

    pub fn all() -> Self {
        FeatureCombo { mask: 0x1f }
    }

    /// Stochastic-study combination `c-<n>`, `n` in 1..=7.
    pub fn stochastic(n: usize) -> Option<Self> {
        STOCHASTIC_COMBOS
            .get(n.checked_sub(1)?)
            .map(|fs| Self::from_iter_unchecked(fs.iter().copied()))
    }

    /// External-study combination `c-<n>`, `n` in 1..=8.
    pub fn external(n: usize) -> Option<Self> {
        EXTERNAL_COMBOS
            .get(n.checked_sub(1)?)
            .map(|fs| Self::from_iter_unchecked(fs.iter().copied()))
    }

    /// Parses `d+theta+cm_power`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut features = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            features.push(Feature::from_name(part).ok_or_else(|| {
                Error::InvalidConfig(format!("unknown feature `{part}` in combination `{s}`"))
            })?);
        }
        Self::new(&features)
    }

    pub fn contains(&self, feature: Feature) -> bool {
        self.mask & (1 << feature.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_subset_of(&self, other: &FeatureCombo) -> bool {
        self.mask & !other.mask == 0
    }

    /// Included features in canonical order.
    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        Feature::ALL.into_iter().filter(|f| self.contains(*f))
    }
}

impl fmt::Display for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.features().map(Feature::name).collect();
        f.write_str(&names.join("+"))
    }
}

impl fmt::Debug for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureCombo({self})")
    }
}

/// Keeps exactly the `combo` features of every example.
pub fn select_features(ds: &Dataset, combo: &FeatureCombo) -> Result<Dataset> {
    let mut out = Vec::with_capacity(ds.len());
    for (index, ex) in ds.examples.iter().enumerate() {
        let mut fv = FeatureVector::default();
        for feature in combo.features() {
            let v = ex
                .features
                .get(feature)
                .ok_or(Error::MissingFeature { feature, index })?;
            fv.set(feature, Some(v));
        }
        out.push(Example {
            features: fv,
            label: ex.label,
        });
    }
    Dataset::new(out)
}

/// Affine standardization of one feature, optionally after `log10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScale {
    pub feature: Feature,
    pub log10: bool,
    pub offset: f64,
    pub scale: f64,
}

impl FeatureScale {
    pub fn apply(&self, raw: f64) -> f64 {
        let v = if self.log10 { raw.log10() } else { raw };
        (v - self.offset) / self.scale
    }
}

/// Per-feature standardization fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    combo: FeatureCombo,
    params: Vec<FeatureScale>,
}

impl Scaler {
    /// Builds a scaler from explicit parameters, in canonical feature order.
    pub fn from_params(params: Vec<FeatureScale>) -> Result<Self> {
        let combo = FeatureCombo::new(&params.iter().map(|p| p.feature).collect::<Vec<_>>())?;
        if combo.len() != params.len() {
            return Err(Error::InvalidConfig("duplicate feature in scaler".into()));
        }
        if let Some(p) = params.iter().find(|p| !(p.scale > 0.0) || !p.offset.is_finite()) {
            return Err(Error::DegenerateScale { feature: p.feature });
        }
        let mut params = params;
        params.sort_by_key(|p| p.feature);
        Ok(Scaler { combo, params })
    }

    pub fn combo(&self) -> FeatureCombo {
        self.combo
    }

    pub fn params(&self) -> &[FeatureScale] {
        &self.params
    }

    pub fn transform(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(self.params.len());
        self.transform_into(fv, &mut row)?;
        Ok(row)
    }

    fn transform_into(&self, fv: &FeatureVector, row: &mut Vec<f64>) -> Result<()> {
        for p in &self.params {
            let raw = fv.get(p.feature).ok_or_else(|| Error::FeatureMismatch {
                expected: self.combo.to_string(),
                found: fv.present().to_string(),
            })?;
            row.push(p.apply(raw));
        }
        Ok(())
    }
}

/// Fits offsets (means) and scales (sample standard deviations) of the
/// `combo` features, after the log transform where applicable.
pub fn fit_scaler(ds: &Dataset, combo: &FeatureCombo) -> Result<Scaler> {
    let n = ds.len();
    let mut params = Vec::with_capacity(combo.len());
    for feature in combo.features() {
        let log10 = feature.log_scaled();
        let mut values = Vec::with_capacity(n);
        for (index, ex) in ds.examples.iter().enumerate() {
            let raw = ex
                .features
                .get(feature)
                .ok_or(Error::MissingFeature { feature, index })?;
            values.push(if log10 { raw.log10() } else { raw });
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        // relative to the column magnitude so rounding noise on a constant
        // column is still reported as degenerate
        if !(std > 1e-12 * mean.abs().max(1e-300)) {
            return Err(Error::DegenerateScale { feature });
        }
        params.push(FeatureScale {
            feature,
            log10,
            offset: mean,
            scale: std,
        });
    }
    Ok(Scaler {
        combo: *combo,
        params,
    })
}

/// Dense row-major design matrix of standardized features plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F = f64> {
    combo: FeatureCombo,
    n_cols: usize,
    values: Vec<F>,
    labels: Vec<u8>,
}

impl<F: Real> FeatureMatrix<F> {
    pub fn from_rows(combo: FeatureCombo, rows: &[Vec<F>], labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let n_cols = combo.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            combo,
            n_cols,
            values,
            labels,
        })
    }

    pub fn combo(&self) -> FeatureCombo {
        self.combo
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Rows at `indices`, in the given order.
    pub fn gather(&self, indices: &[usize]) -> FeatureMatrix<F> {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureMatrix {
            combo: self.combo,
            n_cols: self.n_cols,
            values,
            labels,
        }
    }
}

/// Standardizes the scaler's features of every example. Not idempotent:
/// the transform is affine in the (log-)raw value, so applying it to
/// already standardized values shifts and rescales them again.
pub fn apply_scaler<F: Real>(scaler: &Scaler, ds: &Dataset) -> Result<FeatureMatrix<F>> {
    let n_cols = scaler.params.len();
    let mut values = Vec::with_capacity(ds.len() * n_cols);
    let mut row = Vec::with_capacity(n_cols);
    for ex in &ds.examples {
        row.clear();
        scaler.transform_into(&ex.features, &mut row)?;
        values.extend(row.iter().map(|&v| F::lit(v)));
    }
    Ok(FeatureMatrix {
        combo: scaler.combo,
        n_cols,
        values,
        labels: ds.labels(),
    })
}

/// Fractions for the train / validation / test partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction_of_train: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, validation_fraction_of_train: f64, seed: u64) -> Result<Self> {
        for (what, v) in [
            ("train_fraction", train_fraction),
            ("validation_fraction_of_train", validation_fraction_of_train),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        Ok(SplitSpec {
            train_fraction,
            validation_fraction_of_train,
            seed,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SplitSpec { seed, ..self }
    }
}

/// Index partition produced by [`split_indices`]; each part ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Training plus validation indices, ascending.
    pub fn train_block(&self) -> Vec<usize> {
        let mut all = [self.train.as_slice(), self.validation.as_slice()].concat();
        all.sort_unstable();
        all
    }
}

/// `floor(x + 1/2)`, tolerant of representation error in `x`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Part sizes `(train, validation, test)` for `n` examples.
pub fn split_sizes(n: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let block = round_half_up(spec.train_fraction * n as f64).min(n);
    let validation = round_half_up(spec.validation_fraction_of_train * block as f64).min(block);
    (block - validation, validation, n - block)
}

pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    let (train, validation, test) = split_sizes(n, spec);
    if train == 0 || validation == 0 || test == 0 {
        return Err(Error::SplitTooSmall {
            n,
            train,
            validation,
            test,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(spec.seed));
    let part = |range: std::ops::Range<usize>| {
        let mut v = order[range].to_vec();
        v.sort_unstable();
        v
    };
    Ok(SplitIndices {
        train: part(0..train),
        validation: part(train..train + validation),
        test: part(train + validation..n),
    })
}

/// Random two-way partition: `round_half_up(fraction * n)` indices in the
/// second part, the rest in the first. Both parts ascending.
pub fn split_two(n: usize, second_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let second = round_half_up(second_fraction * n as f64).min(n);
    if second == 0 || second == n {
        return Err(Error::SplitTooSmall {
            n,
            train: n - second,
            validation: second,
            test: 0,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let (a, b) = order.split_at(n - second);
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    Ok((a, b))
}

pub fn split_random(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = split_indices(ds.len(), spec)?;
    Ok((
        ds.subset(&idx.train)?,
        ds.subset(&idx.validation)?,
        ds.subset(&idx.test)?,
    ))
}

/// Error of always assigning the cmWave band: the fraction of label-1
/// examples.
pub fn majority_baseline_error(ds: &Dataset) -> f64 {
    let ones = ds.examples.iter().filter(|e| e.label == 1).count();
    ones as f64 / ds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(d: f64, theta: f64, p: f64, label: u8) -> Example {
        Example::new(
            FeatureVector {
                d: Some(d),
                theta: Some(theta),
                cm_power: Some(p),
                ..Default::default()
            },
            label,
        )
        .unwrap()
    }

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| ex(10.0 + i as f64, -1.0 + 0.01 * i as f64, 3.0 * i as f64, (i % 3 == 0) as u8))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn select_projects_and_keeps_labels() {
        let ds = toy(10);
        let combo = FeatureCombo::stochastic(2).unwrap();
        let out = select_features(&ds, &combo).unwrap();
        assert_eq!(out.labels(), ds.labels());
        assert!(out.examples().iter().all(|e| e.features.present() == combo));

        let only_d = select_features(&ds, &FeatureCombo::stochastic(5).unwrap()).unwrap();
        assert_eq!(only_d.examples()[3].features.d, Some(13.0));
        assert_eq!(only_d.examples()[3].features.theta, None);
    }

    #[test]
    fn select_all_present_is_identity() {
        let ds = toy(5);
        assert_eq!(select_features(&ds, &ds.common_features()).unwrap(), ds);
    }

    #[test]
    fn select_missing_feature_names_it() {
        let ds = toy(4);
        let combo = FeatureCombo::new(&[Feature::Delay]).unwrap();
        match select_features(&ds, &combo) {
            Err(Error::MissingFeature { feature, index }) => {
                assert_eq!(feature, Feature::Delay);
                assert_eq!(index, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let ds = Dataset::new((0..5).map(|i| ex(20.0, 0.1 * i as f64, 1.0, 0)).collect()).unwrap();
        let err = fit_scaler(&ds, &FeatureCombo::new(&[Feature::Distance]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateScale { feature: Feature::Distance }));
    }

    #[test]
    fn symmetric_pair_scale() {
        let x = 1.7;
        let ds = Dataset::new(vec![ex(5.0, 0.0, x, 0), ex(5.0, 0.0, -x, 1)]).unwrap();
        let s = fit_scaler(&ds, &FeatureCombo::new(&[Feature::CmPower]).unwrap()).unwrap();
        let p = s.params()[0];
        assert_eq!(p.offset, 0.0);
        // sample std of {x, -x} is x * sqrt(2)
        assert!((p.scale - x * 2f64.sqrt()).abs() < 1e-15);
        assert!(!p.log10);
    }

    #[test]
    fn standardized_columns() {
        let ds = toy(40);
        let combo = FeatureCombo::stochastic(2).unwrap();
        let s = fit_scaler(&ds, &combo).unwrap();
        let m: FeatureMatrix = apply_scaler(&s, &ds).unwrap();
        for c in 0..m.n_cols() {
            let col: Vec<f64> = (0..m.n_rows()).map(|r| m.row(r)[c]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
        assert_eq!(m.labels(), ds.labels().as_slice());
    }

    #[test]
    fn transform_is_not_idempotent() {
        let ds = toy(12);
        let combo = FeatureCombo::new(&[Feature::CmPower]).unwrap();
        let s = fit_scaler(&ds, &combo).unwrap();
        let once = s.transform(&ds.examples()[11].features).unwrap()[0];
        let twice = s.params()[0].apply(once);
        assert!((once - twice).abs() > 1e-3);
    }

    #[test]
    fn apply_with_disjoint_combo_is_mismatch() {
        let ds = toy(6);
        let s = fit_scaler(&ds, &FeatureCombo::new(&[Feature::CmPower]).unwrap()).unwrap();
        let other = select_features(&ds, &FeatureCombo::new(&[Feature::Angle]).unwrap()).unwrap();
        let err = apply_scaler::<f64>(&s, &other).unwrap_err();
        assert!(matches!(err, Error::FeatureMismatch { .. }));
    }

    #[test]
    fn split_sizes_round_half_up() {
        let spec = SplitSpec::new(0.65, 0.2, 1).unwrap();
        assert_eq!(split_sizes(100, &spec), (52, 13, 35));
        // exhaustive count on the realized partition
        let idx = split_indices(100, &spec).unwrap();
        assert_eq!((idx.train.len(), idx.validation.len(), idx.test.len()), (52, 13, 35));
        // 0.5 boundaries round up: 0.5*5 = 2.5 -> 3, 0.5*3 = 1.5 -> 2
        let half = SplitSpec::new(0.5, 0.5, 1).unwrap();
        assert_eq!(split_sizes(5, &half), (1, 2, 2));
    }

    #[test]
    fn split_rejects_empty_part() {
        let spec = SplitSpec::new(0.99, 0.2, 1).unwrap();
        assert!(matches!(split_indices(10, &spec), Err(Error::SplitTooSmall { .. })));
        assert!(SplitSpec::new(1.0, 0.2, 1).is_err());
    }

    #[test]
    fn split_is_seed_deterministic() {
        let spec = SplitSpec::new(0.65, 0.2, 99).unwrap();
        assert_eq!(split_indices(57, &spec).unwrap(), split_indices(57, &spec).unwrap());
        assert_ne!(
            split_indices(57, &spec).unwrap(),
            split_indices(57, &spec.with_seed(100)).unwrap()
        );
    }

    #[test]
    fn split_random_partitions_exhaustively() {
        // every seed and size up to 30 that admits a split
        for n in 3..=30 {
            for seed in 0..20 {
                let spec = SplitSpec::new(0.65, 0.2, seed).unwrap();
                let Ok(idx) = split_indices(n, &spec) else { continue };
                let mut all: Vec<usize> = idx
                    .train
                    .iter()
                    .chain(&idx.validation)
                    .chain(&idx.test)
                    .copied()
                    .collect();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>(), "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn baseline_error_counts_ones() {
        let zeros = Dataset::new((0..4).map(|i| ex(1.0 + i as f64, 0.0, 0.0, 0)).collect()).unwrap();
        assert_eq!(majority_baseline_error(&zeros), 0.0);
        assert!((majority_baseline_error(&toy(9)) - 3.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn combo_tables_and_parse() {
        assert_eq!(FeatureCombo::stochastic(2).unwrap().to_string(), "d+theta+cm_power");
        assert_eq!(FeatureCombo::stochastic(7).unwrap().to_string(), "theta");
        assert_eq!(FeatureCombo::external(8).unwrap().to_string(), "delay+mpc_power");
        assert!(FeatureCombo::stochastic(8).is_none());
        assert!(FeatureCombo::stochastic(0).is_none());
        assert_eq!(
            FeatureCombo::parse("cm_power+d").unwrap(),
            FeatureCombo::stochastic(4).unwrap()
        );
        assert!(FeatureCombo::parse("aod").is_err());
        assert!(FeatureCombo::new(&[]).is_err());
    }

    #[test]
    fn example_invariants() {
        let fv = FeatureVector {
            d: Some(-1.0),
            ..Default::default()
        };
        assert!(Example::new(fv, 0).is_err());
        let fv = FeatureVector {
            theta: Some(4.0),
            ..Default::default()
        };
        assert!(Example::new(fv, 0).is_err());
        assert!(Example::new(FeatureVector::default(), 0).is_err());
        let fv = FeatureVector {
            cm_power: Some(3.0),
            ..Default::default()
        };
        assert!(Example::new(fv, 2).is_err());
        assert!(Dataset::new(vec![]).is_err());
    }
}
