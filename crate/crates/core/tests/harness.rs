//! End-to-end checks of configuration loading, runs, file output and sweeps.

use std::path::PathBuf;

use cascade_core::harness::{self, apply_overrides, read_trace, sweep, validate, write_sweep, Axis, ExperimentConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL: &str = r#"
shape = "constant"
a0 = 1.0
geometry = "line"
N = 1
r_lo = -20.0
r_hi = 20.0
h = 0.2
eps = 0.1
delta = 0.05
t0 = 10.0
lambda = 0.3
u0 = { gaussian = { amp = 1.0, width = 1.0 } }
u1 = { gaussian = { amp = 0.5, width = 1.0 } }
T = 30.0
dt = 0.1
fit_window = [3.0, 30.0]
"#;

#[test]
fn shipped_configs_validate() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("cfg") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        validate(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 7, "expected the shipped configs, found {count}");
}

#[test]
fn zero_data_passes_vacuously() {
    let cfg = ExperimentConfig::load(&configs_dir().join("zero_data.cfg")).unwrap();
    let out = harness::run_experiment(&validate(&cfg).unwrap()).unwrap();
    assert!(out.summary.all_pass, "{}", out.summary.render());
    assert!(!out.summary.rates.is_empty());
    assert!(out.summary.rates.iter().all(|r| r.vacuous && r.pass));
    for (name, col) in &out.traces.columns {
        assert!(col.iter().all(|v| *v == 0.0), "{name} is not identically zero");
    }
}

#[test]
fn runs_are_byte_reproducible() {
    let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    let v = validate(&cfg).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    harness::run_and_write(&v, Some(a.path())).unwrap();
    harness::run_and_write(&v, Some(b.path())).unwrap();
    for file in ["traces.csv", "summary.json", "manifest.json", "traces/l2_V0.csv", "traces/W_0_0.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty(), "{file} is empty");
        assert_eq!(x, y, "{file} differs between identical runs");
    }
    let (t, v0, _) = read_trace(&a.path().join("traces.csv"), Some("l2_V0")).unwrap();
    assert_eq!(t.len(), v0.len());
    assert_eq!(t[0], 0.0);
}

#[test]
fn lambda_sweep_orders_rows_and_reports_errors() {
    let base = ExperimentConfig::from_toml(SMALL).unwrap();
    let axes = vec!["lambda=0.3,0.1,0.2,0.4".parse::<Axis>().unwrap()];
    let rows = sweep(&base, &axes);
    let lambdas: Vec<&str> = rows.iter().map(|r| r.params[0].1.as_str()).collect();
    assert_eq!(lambdas, ["0.1", "0.2", "0.3", "0.4"]);
    // 0.4 lies above the admissible interval for these parameters.
    assert!(rows[3].error.is_some() && rows[3].all_pass.is_none());
    let theory: Vec<f64> = rows[..3].iter().map(|r| r.theoretical["l2_V0"]).collect();
    assert!(theory.windows(2).all(|w| w[1] < w[0]), "{theory:?}");
    for r in &rows[..3] {
        assert!(r.error.is_none());
        assert!(r.slopes.contains_key("l2_V0") && r.slopes.contains_key("res_0"));
    }

    let dir = tempfile::tempdir().unwrap();
    write_sweep(dir.path(), &axes, &rows).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.iter().take(3).collect::<Vec<_>>(), ["lambda", "all_pass", "error"]);
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 4);
    assert!(!records[3][2].is_empty());
}

#[test]
fn empty_sweep_is_a_single_run() {
    let base = ExperimentConfig::from_toml(SMALL).unwrap();
    let rows = sweep(&base, &[]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].params.is_empty() && rows[0].error.is_none());
}

#[test]
fn heat_oracle_error_is_second_order_in_h() {
    let base = ExperimentConfig::load(&configs_dir().join("heat_oracle.cfg")).unwrap();
    let errors: Vec<f64> = [0.4, 0.2]
        .iter()
        .map(|h| {
            let cfg = apply_overrides(
                &base,
                &[("h".into(), h.to_string()), ("dt".into(), "0.002".into()), ("T".into(), "2.0".into())],
            )
            .unwrap();
            harness::run_experiment(&validate(&cfg).unwrap()).unwrap().summary.metrics["max_error"]
        })
        .collect();
    let ratio = errors[0] / errors[1];
    assert!((3.4..4.6).contains(&ratio), "errors {errors:?}, ratio {ratio}");
}
