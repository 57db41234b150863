//! The per-cell stochastic benchmark, the cross-cell generalization study
//! and the single-dataset pipeline, each summarized as an
//! [`ExperimentReport`].
//!
//! Cells and groups are independent units evaluated in parallel; every unit
//! draws from seeds derived from the master seed and its index, and results
//! are collected in unit order, so parallel and sequential runs agree
//! bit-for-bit.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channel::{cell_seed, generate_cell_realization, CellConfig, CellRealization};
use crate::dataset::{majority_baseline_error, split_indices, split_two, Dataset, FeatureCombo, SplitSpec};
use crate::error::{Error, Result};
use crate::learners::{error_metric, ModelKind, TrainedModel};
use crate::rng::{derive_seed, Stream};
use crate::selection::{select_and_fit, select_on_fixed_split, Protocol, SearchSpace};
use crate::tbba::{TbbaRule, DEFAULT_GAMMA_T};

/// A band-assignment method evaluated by the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Learner(ModelKind),
    Tbba,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Learner(ModelKind::Nn),
        Method::Learner(ModelKind::Logistic),
        Method::Learner(ModelKind::Linear),
        Method::Tbba,
    ];

    pub const LEARNERS: [Method; 3] = [
        Method::Learner(ModelKind::Nn),
        Method::Learner(ModelKind::Logistic),
        Method::Learner(ModelKind::Linear),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Learner(k) => k.label(),
            Method::Tbba => "TBBA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("tbba") {
            Ok(Method::Tbba)
        } else {
            s.parse().map(Method::Learner)
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A feature combination with its table label ("c-1", ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedCombo {
    pub label: String,
    pub combo: FeatureCombo,
}

impl NamedCombo {
    pub fn new(label: impl Into<String>, combo: FeatureCombo) -> Self {
        NamedCombo {
            label: label.into(),
            combo,
        }
    }
}

/// c-1 ... c-7 of the stochastic study.
pub fn stochastic_combos() -> Vec<NamedCombo> {
    (1..=7)
        .map(|i| NamedCombo::new(format!("c-{i}"), FeatureCombo::stochastic(i).expect("table combo")))
        .collect()
}

/// c-1 ... c-8 of the external-data study.
pub fn external_combos() -> Vec<NamedCombo> {
    (1..=8)
        .map(|i| NamedCombo::new(format!("c-{i}"), FeatureCombo::external(i).expect("table combo")))
        .collect()
}

/// Looks up combos by label in `table`; `"all"` selects every entry.
pub fn pick_combos(table: &[NamedCombo], labels: &[String]) -> Result<Vec<NamedCombo>> {
    if labels.iter().any(|l| l == "all") {
        return Ok(table.to_vec());
    }
    labels
        .iter()
        .map(|l| {
            table
                .iter()
                .find(|c| &c.label == l)
                .cloned()
                .ok_or_else(|| Error::InvalidConfig(format!("unknown combo `{l}`")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticBenchmarkSpec {
    pub n_cells: usize,
    pub cell: CellConfig,
    pub combos: Vec<NamedCombo>,
    pub methods: Vec<Method>,
    /// Train/test split of every cell; its seed is replaced per cell and its
    /// validation fraction drives cross-validation inside the training block.
    pub split: SplitSpec,
    pub protocol: Protocol,
    pub gamma_t: f64,
    pub master_seed: u64,
}

impl StochasticBenchmarkSpec {
    pub fn new(n_cells: usize, master_seed: u64) -> Self {
        StochasticBenchmarkSpec {
            n_cells,
            cell: CellConfig::default(),
            combos: stochastic_combos(),
            methods: Method::ALL.to_vec(),
            split: SplitSpec::new(0.65, 0.2, 0).expect("valid split"),
            protocol: Protocol::default(),
            gamma_t: DEFAULT_GAMMA_T,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells == 0 {
            return Err(Error::InvalidConfig("n_cells must be at least 1".into()));
        }
        self.cell.validate()?;
        validate_common(&self.combos, &self.methods, &self.protocol)
    }
}

fn validate_common(combos: &[NamedCombo], methods: &[Method], protocol: &Protocol) -> Result<()> {
    if combos.is_empty() || methods.is_empty() {
        return Err(Error::InvalidConfig("combos and methods must be non-empty".into()));
    }
    protocol.space.validate()?;
    protocol.train.validate()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationSpec {
    pub group_size: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_groups: usize,
    pub cell: CellConfig,
    pub combos: Vec<NamedCombo>,
    pub methods: Vec<Method>,
    pub protocol: Protocol,
    pub gamma_t: f64,
    pub master_seed: u64,
}

impl GeneralizationSpec {
    pub fn new(n_groups: usize, master_seed: u64) -> Self {
        let table = stochastic_combos();
        GeneralizationSpec {
            group_size: 50,
            n_train: 30,
            n_validation: 5,
            n_test: 15,
            n_groups,
            cell: CellConfig::default(),
            combos: vec![table[0].clone(), table[5].clone()],
            methods: Method::ALL.to_vec(),
            protocol: Protocol::default(),
            gamma_t: DEFAULT_GAMMA_T,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train + self.n_validation + self.n_test != self.group_size {
            return Err(Error::InvalidConfig(format!(
                "train/validation/test counts {}+{}+{} do not sum to the group size {}",
                self.n_train, self.n_validation, self.n_test, self.group_size
            )));
        }
        if self.n_groups == 0 || self.n_train == 0 || self.n_validation == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("group counts must be positive".into()));
        }
        self.cell.validate()?;
        validate_common(&self.combos, &self.methods, &self.protocol)
    }

    /// Cell index (under the master seed) of member `j` of group `g`.
    pub fn cell_index(&self, g: usize, j: usize) -> usize {
        g * self.group_size + j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSpec {
    pub combos: Vec<NamedCombo>,
    pub methods: Vec<Method>,
    pub train_fraction: f64,
    pub protocol: Protocol,
    pub seed: u64,
}

impl ExternalSpec {
    pub fn new(seed: u64) -> Self {
        ExternalSpec {
            combos: external_combos(),
            methods: Method::LEARNERS.to_vec(),
            train_fraction: 0.3,
            protocol: Protocol::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.contains(&Method::Tbba) {
            return Err(Error::InvalidConfig(
                "the threshold rule needs a cell configuration and is not run on external data".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::OutOfRange {
                what: "train_fraction",
                value: self.train_fraction,
            });
        }
        validate_common(&self.combos, &self.methods, &self.protocol)
    }
}

/// Test errors of one unit (cell, group or dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitResult {
    pub unit: usize,
    /// `(method label, combo label) -> test error`.
    pub errors: BTreeMap<(String, String), f64>,
    /// Majority-class error of the unit's test set.
    pub baseline: f64,
    /// Indices of the test examples within the unit's dataset.
    pub test_indices: Vec<usize>,
}

/// Summary statistics of one `(method, combo)` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub combo: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub title: String,
    pub methods: Vec<String>,
    pub combos: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub baseline: ReportRow,
    /// Ordered key/value pairs sufficient to replay the run.
    pub metadata: Vec<(String, String)>,
    /// Units that failed, with the reason.
    pub excluded: Vec<(usize, String)>,
}

impl ExperimentReport {
    pub fn row(&self, method: &str, combo: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.combo == combo)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Aggregates unit results into rows (mean, sample std, count) for every
/// requested `(method, combo)`, plus the majority-baseline row. Units are
/// sorted by index first, so the input order does not matter.
pub fn make_report_rows(
    title: &str,
    methods: &[String],
    combos: &[String],
    units: &[UnitResult],
) -> Result<ExperimentReport> {
    if units.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut sorted: Vec<&UnitResult> = units.iter().collect();
    sorted.sort_by_key(|u| u.unit);
    let mut rows = Vec::with_capacity(methods.len() * combos.len());
    for m in methods {
        for c in combos {
            let key = (m.clone(), c.clone());
            let values: Vec<f64> = sorted.iter().filter_map(|u| u.errors.get(&key).copied()).collect();
            if values.is_empty() {
                return Err(Error::InvalidConfig(format!("no results for {m} / {c}")));
            }
            let (mean, std) = mean_std(&values);
            rows.push(ReportRow {
                method: m.clone(),
                combo: c.clone(),
                mean,
                std,
                n: values.len(),
            });
        }
    }
    let base: Vec<f64> = sorted.iter().map(|u| u.baseline).collect();
    let (mean, std) = mean_std(&base);
    Ok(ExperimentReport {
        title: title.to_string(),
        methods: methods.to_vec(),
        combos: combos.to_vec(),
        rows,
        baseline: ReportRow {
            method: "baseline".into(),
            combo: "all".into(),
            mean,
            std,
            n: base.len(),
        },
        metadata: Vec::new(),
        excluded: Vec::new(),
    })
}

/// Hex SHA-256 of a canonical rendering of a configuration.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn protocol_metadata(p: &Protocol, out: &mut Vec<(String, String)>) {
    let s = &p.space;
    let layouts: Vec<String> = s
        .layouts
        .iter()
        .map(|l| l.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x"))
        .collect();
    out.push(("layouts".into(), layouts.join(" ")));
    out.push(("alphas".into(), join(&s.alphas)));
    out.push(("gamma_l_grid_points".into(), s.gamma_grid.len().to_string()));
    out.push(("cv_repeats".into(), s.cv_repeats.to_string()));
    out.push(("validation_fraction".into(), p.validation_fraction.to_string()));
    out.push(("refit".into(), p.refit.to_string()));
    let t = &p.train;
    out.push(("learning_rate".into(), t.learning_rate.to_string()));
    out.push(("batch_size".into(), t.batch_size.to_string()));
    out.push(("max_epochs".into(), t.max_epochs.to_string()));
    out.push(("patience".into(), t.patience.to_string()));
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn labels(combos: &[NamedCombo], methods: &[Method]) -> (Vec<String>, Vec<String>) {
    (
        methods.iter().map(|m| m.label().to_string()).collect(),
        combos.iter().map(|c| c.label.clone()).collect(),
    )
}

/// Splits unit outcomes into successes and `(unit, reason)` exclusions.
fn partition(outcomes: Vec<Result<UnitResult>>) -> (Vec<UnitResult>, Vec<(usize, String)>) {
    let mut ok = Vec::new();
    let mut excluded = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(u) => ok.push(u),
            Err(e) => excluded.push((i, e.to_string())),
        }
    }
    (ok, excluded)
}

fn test_error(model: &TrainedModel, test: &Dataset) -> Result<f64> {
    let m = crate::dataset::apply_scaler(&model.scaler, test)?;
    error_metric(m.labels(), &model.decide_batch(&m)?)
}

fn tbba_error(cell: &CellConfig, gamma_t: f64, test: &Dataset) -> Result<f64> {
    let rule = TbbaRule::new(*cell, gamma_t);
    error_metric(&test.labels(), &rule.decide_dataset(test)?)
}

/// Evaluates one cell of the stochastic benchmark.
pub fn stochastic_unit(spec: &StochasticBenchmarkSpec, index: usize, cell: &CellRealization) -> Result<UnitResult> {
    let seed = cell_seed(spec.master_seed, index);
    let ds = &cell.dataset;
    let idx = split_indices(ds.len(), &spec.split.with_seed(derive_seed(seed, Stream::Split, 0)))?;
    let block = ds.subset(&idx.train_block())?;
    let test = ds.subset(&idx.test)?;
    let protocol = Protocol {
        validation_fraction: spec.split.validation_fraction_of_train,
        ..spec.protocol.clone()
    };
    let mut errors = BTreeMap::new();
    for (ci, nc) in spec.combos.iter().enumerate() {
        let combo_seed = derive_seed(seed, Stream::CrossValidation, ci as u64);
        for m in &spec.methods {
            if let Method::Learner(kind) = m {
                let (model, _) = select_and_fit(*kind, &protocol, &block, &nc.combo, combo_seed)?;
                errors.insert((m.label().to_string(), nc.label.clone()), test_error(&model, &test)?);
            }
        }
    }
    if spec.methods.contains(&Method::Tbba) {
        // training-free and combo-independent: one evaluation fills every column
        let e = tbba_error(&spec.cell, spec.gamma_t, &test)?;
        for nc in &spec.combos {
            errors.insert((Method::Tbba.label().to_string(), nc.label.clone()), e);
        }
    }
    Ok(UnitResult {
        unit: index,
        errors,
        baseline: majority_baseline_error(&test),
        test_indices: idx.test,
    })
}

/// Draws cell `index` of the benchmark.
pub fn benchmark_cell(spec: &StochasticBenchmarkSpec, index: usize) -> Result<CellRealization> {
    generate_cell_realization(&spec.cell, cell_seed(spec.master_seed, index))
}

/// Runs the benchmark on pre-generated cells; `cells[i]` must be cell `i`
/// of `spec` (see [`benchmark_cell`]).
pub fn run_stochastic_on_cells(spec: &StochasticBenchmarkSpec, cells: &[CellRealization]) -> Result<ExperimentReport> {
    spec.validate()?;
    let outcomes: Vec<Result<UnitResult>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| stochastic_unit(spec, i, c))
        .collect();
    finish_stochastic(spec, cells.len(), outcomes)
}

fn finish_stochastic(
    spec: &StochasticBenchmarkSpec,
    n_units: usize,
    outcomes: Vec<Result<UnitResult>>,
) -> Result<ExperimentReport> {
    let (units, excluded) = partition(outcomes);
    let (methods, combos) = labels(&spec.combos, &spec.methods);
    let mut report = make_report_rows("stochastic benchmark", &methods, &combos, &units)?;
    let mut meta = vec![
        ("study".into(), "stochastic".into()),
        ("master_seed".into(), spec.master_seed.to_string()),
        ("cells".into(), n_units.to_string()),
        ("config_hash".into(), config_hash(&format!("{spec:?}"))),
        ("train_fraction".into(), spec.split.train_fraction.to_string()),
        ("gamma_t".into(), spec.gamma_t.to_string()),
    ];
    protocol_metadata(&spec.protocol, &mut meta);
    meta.push(("excluded_units".into(), excluded.len().to_string()));
    report.metadata = meta;
    report.excluded = excluded;
    Ok(report)
}

/// Per cell: draw the cell, split 65/35, select and train every learner on
/// the training block, test on the rest; the threshold rule is evaluated on
/// the same test split with the true link budget. Averages over cells.
pub fn run_stochastic_benchmark(spec: &StochasticBenchmarkSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let outcomes: Vec<Result<UnitResult>> = (0..spec.n_cells)
        .into_par_iter()
        .map(|i| benchmark_cell(spec, i).and_then(|c| stochastic_unit(spec, i, &c)))
        .collect();
    finish_stochastic(spec, spec.n_cells, outcomes)
}

/// Evaluates one group from pooled training, validation and test cells.
pub fn generalization_unit(
    spec: &GeneralizationSpec,
    index: usize,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
) -> Result<UnitResult> {
    let seed = derive_seed(spec.master_seed, Stream::Group, index as u64);
    let mut errors = BTreeMap::new();
    for (ci, nc) in spec.combos.iter().enumerate() {
        let combo_seed = derive_seed(seed, Stream::CrossValidation, ci as u64);
        for m in &spec.methods {
            if let Method::Learner(kind) = m {
                let (model, _) = select_on_fixed_split(*kind, &spec.protocol, train, validation, &nc.combo, combo_seed)?;
                errors.insert((m.label().to_string(), nc.label.clone()), test_error(&model, test)?);
            }
        }
    }
    if spec.methods.contains(&Method::Tbba) {
        let e = tbba_error(&spec.cell, spec.gamma_t, test)?;
        for nc in &spec.combos {
            errors.insert((Method::Tbba.label().to_string(), nc.label.clone()), e);
        }
    }
    Ok(UnitResult {
        unit: index,
        errors,
        baseline: majority_baseline_error(test),
        test_indices: (0..test.len()).collect(),
    })
}

/// Pools of one group drawn from `cells`, where `cells[j]` is member `j`.
pub fn group_pools(spec: &GeneralizationSpec, cells: &[&Dataset]) -> Result<(Dataset, Dataset, Dataset)> {
    if cells.len() != spec.group_size {
        return Err(Error::LengthMismatch {
            left: cells.len(),
            right: spec.group_size,
        });
    }
    let (tr, rest) = cells.split_at(spec.n_train);
    let (va, te) = rest.split_at(spec.n_validation);
    Ok((
        Dataset::concat(tr.iter().copied())?,
        Dataset::concat(va.iter().copied())?,
        Dataset::concat(te.iter().copied())?,
    ))
}

/// Runs the generalization study on pre-generated cells, where
/// `cells[i]` is cell `i` under the master seed and groups take
/// consecutive runs of `group_size` cells.
pub fn run_generalization_on_cells(spec: &GeneralizationSpec, cells: &[&Dataset]) -> Result<ExperimentReport> {
    spec.validate()?;
    if cells.len() < spec.n_groups * spec.group_size {
        return Err(Error::LengthMismatch {
            left: cells.len(),
            right: spec.n_groups * spec.group_size,
        });
    }
    let outcomes: Vec<Result<UnitResult>> = (0..spec.n_groups)
        .into_par_iter()
        .map(|g| {
            let members = &cells[g * spec.group_size..(g + 1) * spec.group_size];
            let (tr, va, te) = group_pools(spec, members)?;
            generalization_unit(spec, g, &tr, &va, &te)
        })
        .collect();
    finish_generalization(spec, outcomes)
}

fn finish_generalization(spec: &GeneralizationSpec, outcomes: Vec<Result<UnitResult>>) -> Result<ExperimentReport> {
    let (units, excluded) = partition(outcomes);
    let (methods, combos) = labels(&spec.combos, &spec.methods);
    let mut report = make_report_rows("generalization across cells", &methods, &combos, &units)?;
    let mut meta = vec![
        ("study".into(), "generalization".into()),
        ("master_seed".into(), spec.master_seed.to_string()),
        ("groups".into(), spec.n_groups.to_string()),
        (
            "group".into(),
            format!(
                "{} = {} train + {} validation + {} test",
                spec.group_size, spec.n_train, spec.n_validation, spec.n_test
            ),
        ),
        ("config_hash".into(), config_hash(&format!("{spec:?}"))),
        ("gamma_t".into(), spec.gamma_t.to_string()),
    ];
    protocol_metadata(&spec.protocol, &mut meta);
    meta.push(("excluded_units".into(), excluded.len().to_string()));
    report.metadata = meta;
    report.excluded = excluded;
    Ok(report)
}

/// Groups of `group_size` consecutive cells; training cells are pooled into
/// one training set, validation cells select the model and `gamma_l`, test
/// cells are pooled for the error. Averages over groups.
pub fn run_generalization(spec: &GeneralizationSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let outcomes: Vec<Result<UnitResult>> = (0..spec.n_groups)
        .into_par_iter()
        .map(|g| {
            let cells = (0..spec.group_size)
                .map(|j| {
                    crate::channel::generate_cell(&spec.cell, cell_seed(spec.master_seed, spec.cell_index(g, j)))
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Dataset> = cells.iter().collect();
            let (tr, va, te) = group_pools(spec, &refs)?;
            generalization_unit(spec, g, &tr, &va, &te)
        })
        .collect();
    finish_generalization(spec, outcomes)
}

/// Single-dataset pipeline: a random `train_fraction` of the examples is
/// the training block (cross-validated with the protocol's validation
/// share), the remainder is the test set.
pub fn run_external(dataset: &Dataset, spec: &ExternalSpec) -> Result<ExperimentReport> {
    run_external_with_models(dataset, spec).map(|(report, _)| report)
}

/// A trained model with the method and combo labels it was reported under.
pub type LabelledModel = (String, String, TrainedModel);

/// [`run_external`] that also returns the fitted models.
pub fn run_external_with_models(dataset: &Dataset, spec: &ExternalSpec) -> Result<(ExperimentReport, Vec<LabelledModel>)> {
    spec.validate()?;
    let available = dataset.common_features();
    for nc in &spec.combos {
        if let Some(f) = nc.combo.features().find(|f| !available.contains(*f)) {
            let index = dataset
                .examples()
                .iter()
                .position(|e| e.features.get(f).is_none())
                .unwrap_or(0);
            return Err(Error::MissingFeature { feature: f, index });
        }
    }
    let (test_idx, train_idx) = split_two(
        dataset.len(),
        spec.train_fraction,
        derive_seed(spec.seed, Stream::Split, 0),
    )?;
    let train = dataset.subset(&train_idx)?;
    let test = dataset.subset(&test_idx)?;
    let mut errors = BTreeMap::new();
    let mut models = Vec::new();
    for (ci, nc) in spec.combos.iter().enumerate() {
        let combo_seed = derive_seed(spec.seed, Stream::CrossValidation, ci as u64);
        for m in &spec.methods {
            if let Method::Learner(kind) = m {
                let (model, _) = select_and_fit(*kind, &spec.protocol, &train, &nc.combo, combo_seed)?;
                errors.insert((m.label().to_string(), nc.label.clone()), test_error(&model, &test)?);
                models.push((m.label().to_string(), nc.label.clone(), model));
            }
        }
    }
    let unit = UnitResult {
        unit: 0,
        errors,
        baseline: majority_baseline_error(&test),
        test_indices: test_idx,
    };
    let (methods, combos) = labels(&spec.combos, &spec.methods);
    let mut report = make_report_rows("external dataset", &methods, &combos, &[unit])?;
    let mut meta = vec![
        ("study".into(), "external".into()),
        ("seed".into(), spec.seed.to_string()),
        ("examples".into(), dataset.len().to_string()),
        ("train_fraction".into(), spec.train_fraction.to_string()),
        ("config_hash".into(), config_hash(&format!("{spec:?}"))),
    ];
    protocol_metadata(&spec.protocol, &mut meta);
    report.metadata = meta;
    Ok((report, models))
}

/// The reduced protocol used for acceptance runs: one candidate
/// (`[50, 50]`, `alpha = 0.1`), one CV repeat, no refit.
pub fn acceptance_protocol() -> Protocol {
    Protocol {
        space: SearchSpace::fixed(&[50, 50], 0.1, 0.05).expect("valid fixed space"),
        refit: false,
        ..Protocol::default()
    }
}
