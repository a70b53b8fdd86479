use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (lossless round trip).
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Named time series sharing one time axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceTable {
    pub times: Vec<f64>,
    /// Written both to the combined table and as standalone files.
    pub columns: Vec<(String, Vec<f64>)>,
    /// Written only as standalone files.
    pub extra: Vec<(String, Vec<f64>)>,
}

impl TraceTable {
    pub fn new(times: Vec<f64>) -> Self {
        Self {
            times,
            ..Self::default()
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.times.len());
        self.columns.push((name.into(), values));
    }

    pub fn push_extra(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.times.len());
        self.extra.push((name.into(), values));
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .chain(&self.extra)
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Writes `t` plus the given columns.
pub fn write_columns(path: &Path, times: &[f64], cols: &[(&str, &[f64])]) -> Result<()> {
    let mut all = vec![("t", times)];
    all.extend_from_slice(cols);
    write_table(path, &all)
}

/// Writes equal-length named columns.
pub fn write_table(path: &Path, cols: &[(&str, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(cols.iter().map(|(n, _)| *n))?;
    let rows = cols.first().map_or(0, |(_, v)| v.len());
    for i in 0..rows {
        w.write_record(cols.iter().map(|(_, v)| fmt17(v[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV with a `t` column; returns the times and the named (or second) column.
pub fn read_trace(path: &Path, column: Option<&str>) -> Result<(Vec<f64>, Vec<f64>, String)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let t_idx = header
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| Error::Parse(format!("{}: no 't' column", path.display())))?;
    let v_idx = match column {
        Some(c) => header
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::Parse(format!("{}: no column '{c}'", path.display())))?,
        None => (0..header.len())
            .find(|&i| i != t_idx)
            .ok_or_else(|| Error::Parse(format!("{}: no value column", path.display())))?,
    };
    let name = header[v_idx].to_string();
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
        };
        ts.push(parse(t_idx)?);
        vs.push(parse(v_idx)?);
    }
    Ok((ts, vs, name))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    table: &'a str,
    columns: Vec<&'a str>,
    traces: BTreeMap<&'a str, String>,
    summary: &'a str,
}

/// Writes `traces.csv`, one two-column file per series under `traces/`, `manifest.json` and
/// `summary.json`.
pub fn write_run<S: Serialize>(dir: &Path, table: &TraceTable, summary: &S) -> Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    let cols: Vec<(&str, &[f64])> = table.columns.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    write_columns(&dir.join("traces.csv"), &table.times, &cols)?;
    let mut traces = BTreeMap::new();
    for (name, values) in table.columns.iter().chain(&table.extra) {
        let rel = format!("traces/{}.csv", file_stem(name));
        write_columns(&dir.join(&rel), &table.times, &[(name.as_str(), values.as_slice())])?;
        traces.insert(name.as_str(), rel);
    }
    let manifest = Manifest {
        table: "traces.csv",
        columns: table.names(),
        traces,
        summary: "summary.json",
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    write_json(&dir.join("summary.json"), summary)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt17(f64::NAN), "NaN");
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = TraceTable::new(vec![0.0, 1.0, 2.0]);
        t.push("l2_u", vec![1.0, 0.5, 0.25]);
        t.push_extra("W_0_0", vec![3.0, 2.0, 1.0]);
        write_run(dir.path(), &t, &serde_json::json!({"ok": true})).unwrap();
        let (ts, vs, name) = read_trace(&dir.path().join("traces.csv"), Some("l2_u")).unwrap();
        assert_eq!(ts, vec![0.0, 1.0, 2.0]);
        assert_eq!(vs, vec![1.0, 0.5, 0.25]);
        assert_eq!(name, "l2_u");
        let (_, vs, _) = read_trace(&dir.path().join("traces/W_0_0.csv"), None).unwrap();
        assert_eq!(vs, vec![3.0, 2.0, 1.0]);
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("traces/W_0_0.csv"));
    }
}
