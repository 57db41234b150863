use std::collections::BTreeMap;
use std::path::Path;

use dualband::channel::{generate_cell, CellConfig};
use dualband::dataset::{fit_scaler, Dataset, Example, FeatureCombo, FeatureVector};
use dualband::error::Error;
use dualband::experiments::{make_report_rows, UnitResult};
use dualband::io::{self, ReportFormat};
use dualband::learners::{ModelSpec, NnParams, TrainedModel};
use dualband::rng::rng_from_seed;
use proptest::prelude::*;

fn report(methods: &[&str], combos: &[&str], units: usize) -> dualband::experiments::ExperimentReport {
    let methods: Vec<String> = methods.iter().map(|s| s.to_string()).collect();
    let combos: Vec<String> = combos.iter().map(|s| s.to_string()).collect();
    let units: Vec<UnitResult> = (0..units)
        .map(|u| {
            let mut errors = BTreeMap::new();
            for (i, m) in methods.iter().enumerate() {
                for (j, c) in combos.iter().enumerate() {
                    errors.insert((m.clone(), c.clone()), 0.1 + 0.01 * (i * 7 + j) as f64 + 0.003 * u as f64);
                }
            }
            UnitResult {
                unit: u,
                errors,
                baseline: 0.49 + 0.001 * u as f64,
                test_indices: vec![],
            }
        })
        .collect();
    let mut r = make_report_rows("stochastic benchmark", &methods, &combos, &units).unwrap();
    r.metadata = vec![("master_seed".into(), "7".into()), ("override.rho".into(), "0.5".into())];
    r.excluded = vec![(3, "training diverged at epoch 0".into())];
    r
}

#[test]
fn generated_cell_round_trips_byte_for_byte() {
    let ds = generate_cell(&CellConfig::default(), 42).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cell.csv");
    io::write_dataset_csv(&ds, &p).unwrap();
    let back = io::parse_dataset_csv(&p).unwrap();
    assert_eq!(back, ds);
    let first = std::fs::read(&p).unwrap();
    io::write_dataset_csv(&back, &p).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), first);
    // stochastic cells carry geometry and cm power only
    let line = String::from_utf8(first).unwrap().lines().nth(1).unwrap().to_string();
    assert!(line.ends_with(",,,0") || line.ends_with(",,,1"), "{line}");
}

#[test]
fn absent_delay_fails_combo_later() {
    let text = "d_m,theta_rad,cm_power_db,delay_s,mpc_power_dbm,label\n10,0.1,5,,,1\n20,0.2,-5,,,0\n";
    let ds = io::parse_dataset_str(text, Path::new("x.csv")).unwrap();
    assert_eq!(ds.examples()[0].features.delay, None);
    let combo = FeatureCombo::parse("cm_power+delay").unwrap();
    assert!(matches!(fit_scaler(&ds, &combo), Err(Error::MissingFeature { .. })));
}

#[test]
fn report_csv_reparses_exactly() {
    let r = report(&["NN", "GR", "LR", "TBBA"], &["c-1", "c-2", "c-3"], 3);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    io::write_report(&r, ReportFormat::Csv, &p).unwrap();
    let back = io::parse_report_csv(&p).unwrap();
    assert_eq!(back, r);
}

#[test]
fn markdown_is_model_by_combo_table() {
    let combos = ["c-1", "c-2", "c-3", "c-4", "c-5", "c-6", "c-7"];
    let r = report(&["NN", "GR", "LR", "TBBA"], &combos, 2);
    let md = io::report_to_markdown(&r);
    let table: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
    assert_eq!(table.len(), 2 + 4);
    assert_eq!(table[0], "| Model | c-1 | c-2 | c-3 | c-4 | c-5 | c-6 | c-7 |");
    for (line, m) in table[2..].iter().zip(["NN", "GR", "LR", "TBBA"]) {
        assert!(line.starts_with(&format!("| {m} |")));
        assert_eq!(line.matches(" ± ").count(), 7);
    }
    assert!(table[2].contains(" 0.102 ± 0.002 |"), "{}", table[2]);
    assert!(md.contains("Majority baseline error: 0.49"));
    assert!(md.contains("- override.rho: 0.5"));
}

#[test]
fn empty_report_leaves_no_file() {
    let mut r = report(&["NN"], &["c-1"], 1);
    r.rows.clear();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    assert!(matches!(io::write_report(&r, ReportFormat::Csv, &p), Err(Error::EmptyReport)));
    assert!(!p.exists());
}

#[test]
fn failed_write_leaves_previous_contents() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    std::fs::write(&p, "old").unwrap();
    let missing = dir.path().join("no/such/dir/r.csv");
    let err = io::write_atomic(&missing, b"new").unwrap_err();
    assert!(err.to_string().contains("no/such/dir"), "{err}");
    io::write_atomic(&p, b"new").unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "new");
    // only the target remains in the directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn format_is_chosen_by_extension() {
    assert_eq!(ReportFormat::from_path(Path::new("a.md")), ReportFormat::Markdown);
    assert_eq!(ReportFormat::from_path(Path::new("a.csv")), ReportFormat::Csv);
    assert_eq!(ReportFormat::from_path(Path::new("a")), ReportFormat::Csv);
}

#[test]
fn model_file_round_trip() {
    let ds = generate_cell(&CellConfig::default(), 5).unwrap();
    let combo = FeatureCombo::parse("d+cm_power").unwrap();
    let scaler = fit_scaler(&ds, &combo).unwrap();
    let mut rng = rng_from_seed(1);
    let spec = ModelSpec::nn(&[5, 4], 0.1, 2).unwrap();
    let params = NnParams::random(2, &[5, 4], &mut rng);
    let model = TrainedModel::new(spec, params, scaler, 0.45).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.model");
    io::write_model(&model, &p).unwrap();
    assert_eq!(io::read_model(&p).unwrap(), model);
    std::fs::write(&p, b"DBMODEL\0junk").unwrap();
    let err = io::read_model(&p).unwrap_err();
    assert!(err.to_string().contains("m.model"), "{err}");
}

fn maybe(range: std::ops::Range<f64>) -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), range.prop_map(Some)]
}

prop_compose! {
    fn example()(
        d in maybe(1e-3..1e4),
        theta in maybe(-3.1..3.1),
        cm in maybe(-200.0..200.0),
        delay in maybe(1e-12..1e-3),
        mpc in maybe(-200.0..50.0),
        fallback in -100.0f64..100.0,
        label in 0u8..2,
    ) -> Example {
        let mut fv = FeatureVector { d, theta, cm_power: cm, delay, mpc_power: mpc };
        if fv.present().is_empty() {
            fv.cm_power = Some(fallback);
        }
        Example::new(fv, label).unwrap()
    }
}

proptest! {
    #[test]
    fn arbitrary_datasets_round_trip(examples in prop::collection::vec(example(), 1..40)) {
        let ds = Dataset::new(examples).unwrap();
        let text = io::dataset_to_csv(&ds);
        let back = io::parse_dataset_str(&text, Path::new("p.csv")).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(io::dataset_to_csv(&back), text);
    }
}
