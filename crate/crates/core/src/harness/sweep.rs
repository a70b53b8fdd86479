use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{validate, ExperimentConfig};
use super::output::{fmt17, write_json};
use super::run::run_experiment;
use crate::error::{Error, Result};

/// One sweep axis, `key=v1,v2,…`; `key` may be a dotted path into nested tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, vals) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("axis '{s}' must look like key=v1,v2,...")))?;
        let key = key.trim().to_string();
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.is_empty() || values.is_empty() {
            return Err(Error::Parse(format!("axis '{s}' needs a key and at least one value")));
        }
        Ok(Self { key, values })
    }
}

/// One experiment of a sweep. Failed rows carry only the error.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub params: Vec<(String, String)>,
    pub slopes: BTreeMap<String, f64>,
    pub theoretical: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub metrics: BTreeMap<String, f64>,
    pub all_pass: Option<bool>,
    pub error: Option<String>,
}

fn parse_scalar(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(root: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut table = root;
    for p in path {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("axis key '{key}': '{p}' is not a table")))?;
    }
    let mut value = parse_scalar(raw);
    if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (table.get(*last), &value) {
        value = toml::Value::Float(*i as f64);
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Applies `key = value` overrides to a configuration.
pub fn apply_overrides(base: &ExperimentConfig, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut table = toml::Table::try_from(base).map_err(|e| Error::Parse(e.to_string()))?;
    for (k, v) in overrides {
        set_path(&mut table, k, v)?;
    }
    table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
}

fn cmp_value(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn cmp_params(a: &[(String, String)], b: &[(String, String)]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|((_, x), (_, y))| cmp_value(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Cartesian product of the axes, sorted by parameter tuple.
pub fn combinations(axes: &[Axis]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out.sort_by(|a, b| cmp_params(a, b));
    out
}

fn run_row(base: &ExperimentConfig, params: Vec<(String, String)>) -> SweepRow {
    let mut row = SweepRow {
        params,
        slopes: BTreeMap::new(),
        theoretical: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        metrics: BTreeMap::new(),
        all_pass: None,
        error: None,
    };
    let result = apply_overrides(base, &row.params).and_then(|mut cfg| {
        cfg.out_dir = None;
        run_experiment(&validate(&cfg)?)
    });
    match result {
        Ok(out) => {
            let s = out.summary;
            for r in &s.rates {
                let key = r.name.trim_start_matches("slope ").to_string();
                if let Some(slope) = r.slope() {
                    row.slopes.insert(key.clone(), slope);
                }
                row.theoretical.insert(key.clone(), r.theoretical);
                row.verdicts.insert(r.name.clone(), r.pass);
            }
            for c in &s.checks {
                row.verdicts.insert(c.name.clone(), c.pass);
            }
            row.metrics = s.metrics;
            row.all_pass = Some(s.all_pass);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every combination concurrently; rows come back in sorted parameter order.
pub fn sweep(base: &ExperimentConfig, axes: &[Axis]) -> Vec<SweepRow> {
    combinations(axes)
        .into_par_iter()
        .map(|params| run_row(base, params))
        .collect()
}

/// Writes `sweep.csv` (one row per experiment) and `sweep.json`.
pub fn write_sweep(dir: &Path, axes: &[Axis], rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut slope_keys = BTreeSet::new();
    let mut verdict_keys = BTreeSet::new();
    let mut metric_keys = BTreeSet::new();
    for r in rows {
        slope_keys.extend(r.theoretical.keys().cloned());
        verdict_keys.extend(r.verdicts.keys().cloned());
        metric_keys.extend(r.metrics.keys().cloned());
    }
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.push("all_pass".into());
    header.push("error".into());
    for k in &slope_keys {
        header.push(format!("slope:{k}"));
        header.push(format!("theory:{k}"));
    }
    header.extend(verdict_keys.iter().map(|k| format!("pass:{k}")));
    header.extend(metric_keys.iter().map(|k| format!("metric:{k}")));

    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record(&header)?;
    let num = |v: Option<&f64>| v.map(|x| fmt17(*x)).unwrap_or_default();
    for r in rows {
        let mut rec: Vec<String> = r.params.iter().map(|(_, v)| v.clone()).collect();
        rec.push(r.all_pass.map(|b| b.to_string()).unwrap_or_default());
        rec.push(r.error.clone().unwrap_or_default());
        for k in &slope_keys {
            rec.push(num(r.slopes.get(k)));
            rec.push(num(r.theoretical.get(k)));
        }
        rec.extend(verdict_keys.iter().map(|k| r.verdicts.get(k).map(|b| b.to_string()).unwrap_or_default()));
        rec.extend(metric_keys.iter().map(|k| num(r.metrics.get(k))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_json(&dir.join("sweep.json"), &rows)
}
