use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualband::channel::cell_seed;
use dualband::dataset::{majority_baseline_error, Dataset, SplitSpec};
use dualband::error::{Error, Result};
use dualband::experiments::{
    acceptance_protocol, benchmark_cell, external_combos, pick_combos, run_external_with_models,
    run_generalization, run_stochastic_benchmark, stochastic_combos, stochastic_unit, ExperimentReport, ExternalSpec,
    GeneralizationSpec, Method, StochasticBenchmarkSpec,
};
use dualband::io::{self, ReportFormat, RunConfig};
use dualband::learners::error_metric;
use dualband::selection::Protocol;
use dualband::tbba::TbbaRule;

/// Cells in an acceptance-mode stochastic run.
const ACCEPTANCE_CELLS: usize = 200;

#[derive(Parser)]
#[command(name = "dualband", version, about = "Dual-band (cmWave/mmWave) band-assignment simulator")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `key = value` run configuration; unset keys keep the reference values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the configuration)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (`.md` for markdown, CSV otherwise) or directory for gen-stochastic
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Number of cells to generate or evaluate
    #[arg(long, global = true)]
    cells: Option<usize>,
    /// Fixed [50, 50] network with alpha = 0.1, one CV repeat, no refit; 200 cells by default
    #[arg(long, global = true)]
    acceptance_mode: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate cells and write each as a dataset CSV (cell_00000.csv, ...)
    GenStochastic,
    /// Per-cell train/test benchmark of every method and feature combination
    RunStochastic,
    /// Train on pooled cells, test on unseen cells of the same group
    RunGeneralization {
        /// Number of 50-cell groups; `--cells` may be given instead
        #[arg(long)]
        groups: Option<usize>,
    },
    /// Run the learners on a dataset CSV
    RunExternal {
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        /// Write every fitted model to this directory
        #[arg(long, value_name = "DIR")]
        save_models: Option<PathBuf>,
    },
    /// Error of the threshold rule on generated cells or a dataset CSV
    EvalTbba {
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Print the contents of a model file
    InspectModel {
        #[arg(value_name = "FILE")]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() || e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => io::parse_run_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::GenStochastic => gen_stochastic(g, &cfg),
        Command::RunStochastic => {
            let spec = stochastic_spec(g, &cfg)?;
            let report = run_stochastic_benchmark(&spec)?;
            emit(report, g, &cfg)
        }
        Command::RunGeneralization { groups } => {
            let spec = generalization_spec(g, &cfg, groups)?;
            let report = run_generalization(&spec)?;
            emit(report, g, &cfg)
        }
        Command::RunExternal { data, save_models } => {
            let ds = io::parse_dataset_csv(&data)?;
            let spec = external_spec(g, &cfg)?;
            let (report, models) = run_external_with_models(&ds, &spec)?;
            if let Some(dir) = save_models {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                for (method, combo, model) in &models {
                    io::write_model(model, &dir.join(format!("{}_{combo}.model", method.to_lowercase())))?;
                }
            }
            emit(report, g, &cfg)
        }
        Command::EvalTbba { data } => eval_tbba(g, &cfg, data.as_deref()),
        Command::InspectModel { model } => {
            print!("{}", describe_model(&io::read_model(&model)?));
            Ok(())
        }
    }
}

fn overridden(cfg: &RunConfig, key: &str) -> bool {
    cfg.overrides.iter().any(|(k, _)| k == key)
}

fn cell_count(g: &Global, cfg: &RunConfig, default: usize) -> Result<usize> {
    let n = g.cells.unwrap_or(if overridden(cfg, "cells") { cfg.cells } else { default });
    if n == 0 {
        return Err(Error::InvalidConfig("--cells must be at least 1".into()));
    }
    Ok(n)
}

fn protocol(g: &Global, cfg: &RunConfig) -> Protocol {
    if g.acceptance_mode {
        Protocol {
            train: cfg.train,
            ..acceptance_protocol()
        }
    } else {
        Protocol {
            space: cfg.space.clone(),
            train: cfg.train,
            validation_fraction: cfg.validation_fraction,
            refit: cfg.refit,
        }
    }
}

fn stochastic_spec(g: &Global, cfg: &RunConfig) -> Result<StochasticBenchmarkSpec> {
    let default = if g.acceptance_mode { ACCEPTANCE_CELLS } else { cfg.cells };
    let mut spec = StochasticBenchmarkSpec::new(cell_count(g, cfg, default)?, cfg.seed);
    spec.cell = cfg.cell;
    spec.combos = pick_combos(&stochastic_combos(), &cfg.combos)?;
    spec.methods = cfg.methods.clone();
    spec.split = SplitSpec::new(cfg.train_fraction, cfg.validation_fraction, 0)?;
    spec.protocol = protocol(g, cfg);
    spec.gamma_t = cfg.gamma_t;
    spec.validate()?;
    Ok(spec)
}

fn generalization_spec(g: &Global, cfg: &RunConfig, groups: Option<usize>) -> Result<GeneralizationSpec> {
    let mut spec = GeneralizationSpec::new(cfg.groups, cfg.seed);
    if let Some(n) = g.cells {
        if n % spec.group_size != 0 || n == 0 {
            return Err(Error::InvalidConfig(format!(
                "--cells {n} is not a positive multiple of the group size {}",
                spec.group_size
            )));
        }
        spec.n_groups = n / spec.group_size;
    }
    if let Some(n) = groups {
        spec.n_groups = n;
    }
    spec.cell = cfg.cell;
    if overridden(cfg, "combos") {
        spec.combos = pick_combos(&stochastic_combos(), &cfg.combos)?;
    }
    spec.methods = cfg.methods.clone();
    spec.protocol = protocol(g, cfg);
    spec.gamma_t = cfg.gamma_t;
    spec.validate()?;
    Ok(spec)
}

fn external_spec(g: &Global, cfg: &RunConfig) -> Result<ExternalSpec> {
    let mut spec = ExternalSpec::new(cfg.seed);
    spec.combos = pick_combos(&external_combos(), &cfg.combos)?;
    if overridden(cfg, "methods") {
        spec.methods = cfg.methods.clone();
    }
    spec.train_fraction = cfg.external_train_fraction;
    spec.protocol = protocol(g, cfg);
    spec.validate()?;
    Ok(spec)
}

fn finalize(mut report: ExperimentReport, g: &Global, cfg: &RunConfig) -> ExperimentReport {
    let mode = if g.acceptance_mode { "acceptance" } else { "full" };
    report.metadata.push(("mode".into(), mode.into()));
    for (k, v) in &cfg.overrides {
        report.metadata.push((format!("override.{k}"), v.clone()));
    }
    report
}

/// Writes the report to `--out`, or prints markdown when no path is given.
fn emit(report: ExperimentReport, g: &Global, cfg: &RunConfig) -> Result<()> {
    let report = finalize(report, g, cfg);
    match &g.out {
        Some(path) => {
            io::write_report(&report, ReportFormat::from_path(path), path)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", io::report_to_markdown(&report)),
    }
    Ok(())
}

fn gen_stochastic(g: &Global, cfg: &RunConfig) -> Result<()> {
    let n = cell_count(g, cfg, 1)?;
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("cells"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
    cfg.cell.validate()?;
    for i in 0..n {
        let ds = dualband::channel::generate_cell(&cfg.cell, cell_seed(cfg.seed, i))?;
        io::write_dataset_csv(&ds, &dir.join(format!("cell_{i:05}.csv")))?;
    }
    eprintln!("wrote {n} cells to {}", dir.display());
    Ok(())
}

/// Per-unit series `unit,examples,tbba_error,baseline_error` to `--out`,
/// summary on stdout.
fn eval_tbba(g: &Global, cfg: &RunConfig, data: Option<&Path>) -> Result<()> {
    let mut series = String::from("unit,examples,tbba_error,baseline_error\n");
    let mut errors = Vec::new();
    match data {
        Some(path) => {
            let ds: Dataset = io::parse_dataset_csv(path)?;
            cfg.cell.validate()?;
            let decisions = TbbaRule::new(cfg.cell, cfg.gamma_t).decide_dataset(&ds)?;
            let e = error_metric(&ds.labels(), &decisions)?;
            let b = majority_baseline_error(&ds);
            let _ = writeln!(series, "0,{},{},{}", ds.len(), io::format_f64(e), io::format_f64(b));
            errors.push((e, b));
        }
        None => {
            let mut spec = stochastic_spec(g, cfg)?;
            spec.n_cells = cell_count(g, cfg, ACCEPTANCE_CELLS)?;
            spec.methods = vec![Method::Tbba];
            spec.combos.truncate(1);
            let units = (0..spec.n_cells)
                .map(|i| benchmark_cell(&spec, i).and_then(|c| stochastic_unit(&spec, i, &c)))
                .collect::<Result<Vec<_>>>()?;
            for u in &units {
                let e = report_value(&u.errors);
                let _ = writeln!(
                    series,
                    "{},{},{},{}",
                    u.unit,
                    u.test_indices.len(),
                    io::format_f64(e),
                    io::format_f64(u.baseline)
                );
                errors.push((e, u.baseline));
            }
        }
    }
    let n = errors.len() as f64;
    let mean_e = errors.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_b = errors.iter().map(|p| p.1).sum::<f64>() / n;
    println!("units={} tbba_error={mean_e:.4} baseline_error={mean_b:.4}", errors.len());
    if let Some(path) = &g.out {
        io::write_atomic(path, series.as_bytes())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn report_value(errors: &std::collections::BTreeMap<(String, String), f64>) -> f64 {
    errors.values().next().copied().unwrap_or(f64::NAN)
}

fn describe_model(model: &dualband::learners::TrainedModel) -> String {
    let mut out = String::new();
    let s = &model.spec;
    let _ = writeln!(out, "kind: {} ({})", s.kind.name(), s.kind.label());
    let layout: Vec<String> = s.hidden_layout.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "hidden layout: [{}]", layout.join(", "));
    let _ = writeln!(out, "alpha: {}", s.alpha);
    let _ = writeln!(out, "seed: {}", s.seed);
    let _ = writeln!(out, "gamma_l: {}", model.gamma_l);
    let _ = writeln!(out, "features: {}", model.scaler.combo());
    for p in model.scaler.params() {
        let _ = writeln!(
            out,
            "  {}: log10={} offset={} scale={}",
            p.feature.name(),
            p.log10,
            p.offset,
            p.scale
        );
    }
    let _ = writeln!(out, "parameters: {}", model.params.n_params());
    out
}
