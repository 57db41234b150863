//! Dataset CSV files, `key = value` run configurations, reports and model
//! files. Every write goes to a temporary file in the target directory that
//! is renamed into place, so a failed run never leaves a truncated output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::channel::CellConfig;
use crate::dataset::{Dataset, Example, Feature, FeatureVector};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentReport, Method, ReportRow};
use crate::learners::{model_from_bytes, model_to_bytes, TrainConfig, TrainedModel};
use crate::selection::{gamma_grid, SearchSpace};
use crate::tbba::DEFAULT_GAMMA_T;

/// Column names of a dataset file, in feature order, then the label.
pub const DATASET_COLUMNS: [&str; 6] = ["d_m", "theta_rad", "cm_power_db", "delay_s", "mpc_power_dbm", "label"];

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a dataset file. Empty cells mark absent features.
pub fn parse_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_str(&text, path)
}

/// [`parse_dataset_csv`] on in-memory text; `path` only labels errors.
pub fn parse_dataset_str(text: &str, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let mut columns = [usize::MAX; 6];
    for (slot, name) in columns.iter_mut().zip(DATASET_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(path, 1, format!("missing header column `{name}`")))?;
    }
    if let Some(extra) = header.iter().find(|h| !DATASET_COLUMNS.contains(h)) {
        return Err(parse_err(path, 1, format!("unknown column `{extra}`")));
    }
    let mut examples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut fv = FeatureVector::default();
        for (f, &col) in Feature::ALL.iter().zip(&columns[..5]) {
            let cell = record.get(col).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(path, line, format!("malformed number `{cell}` in column `{}`", DATASET_COLUMNS[f.index()]))
            })?;
            fv.set(*f, Some(v));
        }
        let label = match record.get(columns[5]).unwrap_or("") {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(path, line, format!("label must be 0 or 1, found `{other}`"))),
        };
        let ex = Example::new(fv, label).map_err(|e| parse_err(path, line, e.to_string()))?;
        examples.push(ex);
    }
    Dataset::new(examples).map_err(|e| parse_err(path, 2, e.to_string()))
}

/// Renders a dataset in the file schema.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = DATASET_COLUMNS.join(",");
    out.push('\n');
    for ex in ds.examples() {
        for f in Feature::ALL {
            if let Some(v) = ex.features.get(f) {
                out.push_str(&format_f64(v));
            }
            out.push(',');
        }
        out.push_str(if ex.label == 1 { "1" } else { "0" });
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_csv(ds).as_bytes())
}

/// Settings of a run: cell parameters, search grids, training and study
/// sizes. Defaults are the reference configuration and the full protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cell: CellConfig,
    pub space: SearchSpace,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub external_train_fraction: f64,
    pub refit: bool,
    pub cells: usize,
    pub groups: usize,
    pub seed: u64,
    pub gamma_t: f64,
    pub combos: Vec<String>,
    pub methods: Vec<Method>,
    /// `(key, value)` pairs that were set explicitly, in file order.
    pub overrides: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cell: CellConfig::default(),
            space: SearchSpace::default(),
            train: TrainConfig::default(),
            train_fraction: 0.65,
            validation_fraction: 0.2,
            external_train_fraction: 0.3,
            refit: true,
            cells: 1000,
            groups: 20,
            seed: 0,
            gamma_t: DEFAULT_GAMMA_T,
            combos: vec!["all".into()],
            methods: Method::ALL.to_vec(),
            overrides: Vec::new(),
        }
    }
}

/// Keys accepted by [`parse_run_config`].
pub const RUN_CONFIG_KEYS: &[&str] = &[
    "f_c",
    "f_m",
    "w_c",
    "w_m",
    "p_tx_c",
    "p_tx_m",
    "eps",
    "d_break",
    "d_dcor_c",
    "d_dcor_m",
    "sigma_c",
    "sigma_m",
    "rho",
    "noise_psd",
    "cell_side",
    "n_points",
    "layouts",
    "alphas",
    "gamma_step",
    "cv_repeats",
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "train_fraction",
    "validation_fraction",
    "external_train_fraction",
    "refit",
    "cells",
    "groups",
    "seed",
    "gamma_t",
    "combos",
    "methods",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        let c = &mut self.cell;
        match key {
            "f_c" => c.f_c = num(value)?,
            "f_m" => c.f_m = num(value)?,
            "w_c" => c.w_c = num(value)?,
            "w_m" => c.w_m = num(value)?,
            "p_tx_c" => c.p_tx_c = num(value)?,
            "p_tx_m" => c.p_tx_m = num(value)?,
            "eps" => c.eps = num(value)?,
            "d_break" => c.d_break = num(value)?,
            "d_dcor_c" => c.d_dcor_c = num(value)?,
            "d_dcor_m" => c.d_dcor_m = num(value)?,
            "sigma_c" => c.sigma_c = num(value)?,
            "sigma_m" => c.sigma_m = num(value)?,
            "rho" => c.rho = num(value)?,
            "noise_psd" => c.noise_psd = num(value)?,
            "cell_side" => c.cell_side = num(value)?,
            "n_points" => c.n_points = num(value)?,
            "layouts" => {
                // e.g. "50, 50x50, 40x30x30"
                self.space.layouts = list(value)
                    .map(|l| l.split('x').map(|w| num::<usize>(w.trim())).collect())
                    .collect::<std::result::Result<_, _>>()?;
            }
            "alphas" => self.space.alphas = list(value).map(num).collect::<std::result::Result<_, _>>()?,
            "gamma_step" => {
                let step: f64 = num(value)?;
                if !(step > 0.0 && step <= 1.0) {
                    return Err(format!("gamma_step must lie in (0, 1], got {step}"));
                }
                self.space.gamma_grid = gamma_grid(step);
            }
            "cv_repeats" => self.space.cv_repeats = num(value)?,
            "learning_rate" => self.train.learning_rate = num(value)?,
            "batch_size" => self.train.batch_size = num(value)?,
            "max_epochs" => self.train.max_epochs = num(value)?,
            "patience" => self.train.patience = num(value)?,
            "train_fraction" => self.train_fraction = num(value)?,
            "validation_fraction" => self.validation_fraction = num(value)?,
            "external_train_fraction" => self.external_train_fraction = num(value)?,
            "refit" => self.refit = num(value)?,
            "cells" => self.cells = num(value)?,
            "groups" => self.groups = num(value)?,
            "seed" => self.seed = num(value)?,
            "gamma_t" => self.gamma_t = num(value)?,
            "combos" => self.combos = list(value).map(str::to_string).collect(),
            "methods" => {
                self.methods = list(value)
                    .map(|m| Method::parse(m).map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        self.space.validate()?;
        self.train.validate()?;
        for (what, v) in [
            ("train_fraction", self.train_fraction),
            ("validation_fraction", self.validation_fraction),
            ("external_train_fraction", self.external_train_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if !(0.0..=1.0).contains(&self.gamma_t) {
            return Err(Error::OutOfRange {
                what: "gamma_t",
                value: self.gamma_t,
            });
        }
        if self.cells == 0 || self.groups == 0 {
            return Err(Error::InvalidConfig("cells and groups must be positive".into()));
        }
        if self.combos.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidConfig("combos and methods must be non-empty".into()));
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated
/// keys are errors naming the line.
pub fn parse_run_config_str(text: &str, path: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(path, line, format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if cfg.overrides.iter().any(|(k, _)| k == key) {
            return Err(parse_err(path, line, format!("key `{key}` set twice")));
        }
        cfg.set(key, value).map_err(|msg| parse_err(path, line, msg))?;
        cfg.overrides.push((key.to_string(), value.to_string()));
    }
    cfg.validate().map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn parse_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_config_str(&text, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    /// Markdown for `.md`, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("md") | Some("markdown") => ReportFormat::Markdown,
            _ => ReportFormat::Csv,
        }
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Long format: `#`-prefixed metadata lines, then
/// `method,combo,mean,std,n` rows and a final baseline row.
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# title={}", one_line(&report.title));
    for (k, v) in &report.metadata {
        let _ = writeln!(out, "# {k}={}", one_line(v));
    }
    for (unit, reason) in &report.excluded {
        let _ = writeln!(out, "# excluded={unit}: {}", one_line(reason));
    }
    out.push_str("method,combo,mean,std,n\n");
    for r in report.rows.iter().chain(std::iter::once(&report.baseline)) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method,
            r.combo,
            format_f64(r.mean),
            format_f64(r.std),
            r.n
        );
    }
    out
}

/// Methods as rows, combos as columns, then the baseline and metadata.
pub fn report_to_markdown(report: &ExperimentReport) -> String {
    let mut out = format!("## {}\n\n", report.title);
    out.push_str("| Model |");
    for c in &report.combos {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(report.combos.len()));
    out.push('\n');
    for m in &report.methods {
        let _ = write!(out, "| {m} |");
        for c in &report.combos {
            match report.row(m, c) {
                Some(r) => {
                    let _ = write!(out, " {:.3} ± {:.3} |", r.mean, r.std);
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    let n = report.rows.first().map_or(0, |r| r.n);
    let _ = writeln!(
        out,
        "\nMajority baseline error: {:.3} ± {:.3} (n = {}). Entries are mean ± sample std over n = {} units.\n",
        report.baseline.mean, report.baseline.std, report.baseline.n, n
    );
    for (k, v) in &report.metadata {
        let _ = writeln!(out, "- {k}: {v}");
    }
    for (unit, reason) in &report.excluded {
        let _ = writeln!(out, "- excluded unit {unit}: {}", one_line(reason));
    }
    out
}

pub fn write_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let text = match format {
        ReportFormat::Csv => report_to_csv(report),
        ReportFormat::Markdown => report_to_markdown(report),
    };
    write_atomic(path, text.as_bytes())
}

/// Parses the CSV written by [`write_report`].
pub fn parse_report_csv_str(text: &str, path: &Path) -> Result<ExperimentReport> {
    let mut title = String::new();
    let mut metadata = Vec::new();
    let mut excluded = Vec::new();
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| parse_err(path, ln, "metadata line without `=`"))?;
            match k {
                "title" => title = v.to_string(),
                "excluded" => {
                    let (u, reason) = v.split_once(": ").unwrap_or((v, ""));
                    let u = u.parse().map_err(|_| parse_err(path, ln, "bad excluded unit"))?;
                    excluded.push((u, reason.to_string()));
                }
                _ => metadata.push((k.to_string(), v.to_string())),
            }
            continue;
        }
        if !header_seen {
            if line != "method,combo,mean,std,n" {
                return Err(parse_err(path, ln, "missing report header"));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(path, ln, format!("expected 5 fields, found {}", f.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| parse_err(path, ln, format!("malformed number `{s}`")));
        rows.push(ReportRow {
            method: f[0].to_string(),
            combo: f[1].to_string(),
            mean: float(f[2])?,
            std: float(f[3])?,
            n: f[4].parse().map_err(|_| parse_err(path, ln, format!("malformed count `{}`", f[4])))?,
        });
    }
    let baseline = match rows.pop() {
        Some(b) if b.method == "baseline" => b,
        _ => return Err(parse_err(path, text.lines().count(), "missing baseline row")),
    };
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut methods: Vec<String> = Vec::new();
    let mut combos: Vec<String> = Vec::new();
    for r in &rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        if !combos.contains(&r.combo) {
            combos.push(r.combo.clone());
        }
    }
    Ok(ExperimentReport {
        title,
        methods,
        combos,
        rows,
        baseline,
        metadata,
        excluded,
    })
}

pub fn parse_report_csv(path: &Path) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_csv_str(&text, path)
}

pub fn write_model(model: &TrainedModel, path: &Path) -> Result<()> {
    write_atomic(path, &model_to_bytes(model))
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|e| match e {
        Error::ModelFormat(msg) => Error::ModelFormat(format!("{}: {msg}", path.display())),
        other => other,
    })
}
