// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! Configuration files, run manifests and dataset emission.
//!
//! A configuration is a JSON object
//!
//! ```json
//! { "schema_version": 1, "scenario": "tqd", "seed": 1, "params": { ... } }
//! ```
//!
//! Frequencies are given in Hz (`omega / 2 pi`) and converted to rad/s when a
//! scenario is built. Unknown keys anywhere in the tree are rejected.

use crate::error::{invalid, Error, Result};
use crate::experiments::{Config, ScenarioName, ScenarioParams, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    /// Row-major values.
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Dataset { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn with_columns(name: impl Into<String>, columns: &[&str]) -> Self {
        Self::new(name, columns.iter().map(|s| s.to_string()).collect())
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(invalid(format!(
                "dataset {}: row has {} values for {} columns",
                self.name,
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// First non-finite entry, if any.
    pub fn check_finite(&self) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { column: self.columns[c].clone(), row: r });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

/// 17 significant digits, always enough to recover the exact binary value.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serialise a dataset to a string.
pub fn dataset_to_string(ds: &Dataset, format: Format) -> Result<String> {
    ds.check_finite()?;
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
            let csv_err = |e: csv::Error| invalid(format!("csv: {e}"));
            w.write_record(&ds.columns).map_err(csv_err)?;
            for row in &ds.rows {
                w.write_record(row.iter().map(|v| format_float(*v))).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| invalid(format!("csv: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Json => Ok(serde_json::to_string_pretty(ds).expect("finite dataset serialises")),
    }
}

/// Write `ds` to `path`; NaN and infinities are rejected before anything is
/// written.
pub fn emit_dataset(ds: &Dataset, format: Format, path: &Path) -> Result<PathBuf> {
    let text = dataset_to_string(ds, format)?;
    fs::write(path, text).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

/// Parse a CSV written by [`emit_dataset`].
pub fn parse_csv(name: &str, text: &str) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| invalid(format!("csv header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut ds = Dataset::new(name, columns);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("csv row {i}: {e}")))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| invalid(format!("csv row {i}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        ds.push(row)?;
    }
    Ok(ds)
}

/// Read a dataset back from a CSV or JSON file.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    match path.extension().and_then(|s| s.to_str()) {
        Some("json") => from_json_str(&text),
        _ => parse_csv(stem, &text),
    }
}

fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    from_value(value, "")
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
}

/// Typed view of a JSON tree; errors carry the key path below `prefix`.
fn from_value<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        Error::Schema { path, msg: e.into_inner().to_string() }
    })
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<Config> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    config_from_value(value)
}

/// Validate a configuration tree (e.g. after applying overrides).
pub fn config_from_value(value: Value) -> Result<Config> {
    let Value::Object(mut map) = value else {
        return Err(Error::Schema { path: ".".into(), msg: "configuration must be a JSON object".into() });
    };
    for key in map.keys() {
        if !["schema_version", "scenario", "seed", "params"].contains(&key.as_str()) {
            return Err(Error::Schema { path: key.clone(), msg: "unknown field".into() });
        }
    }
    let take = |map: &mut Map<String, Value>, key: &str| {
        map.remove(key).ok_or_else(|| Error::Schema { path: key.into(), msg: "missing field".into() })
    };
    let version: u32 = from_value(take(&mut map, "schema_version")?, "schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: "schema_version".into(),
            msg: format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        });
    }
    let scenario: ScenarioName = from_value(take(&mut map, "scenario")?, "scenario")?;
    let seed: u64 = match map.remove("seed") {
        Some(v) => from_value(v, "seed")?,
        None => 0,
    };
    let params = ScenarioParams::from_value(scenario, take(&mut map, "params")?)?;
    let cfg = Config { schema_version: version, scenario, seed, params };
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn typed<T: serde::de::DeserializeOwned>(v: Value, prefix: &str) -> Result<T> {
    from_value(v, prefix)
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config(&text)
}

/// Apply `key.path=value` to a configuration tree. The value is read as JSON
/// when it parses, otherwise as a string; array elements are addressed by
/// index (`params.species.3=mg24`).
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(invalid("override with empty key"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = tree;
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| invalid(format!("`{part}` in `{key}` is not an index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| invalid(format!("index {idx} in `{key}` out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(invalid(format!("`{key}`: cannot descend into a scalar at `{part}`"))),
        };
    }
    unreachable!("loop returns on the last key")
}

/// Comparison of one dataset column against predicted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub name: String,
    pub column: String,
    pub rel_tol: f64,
    /// Denominator floor: errors are `|x - y| / max(|y|, abs_floor)`.
    pub abs_floor: f64,
    pub values: Vec<f64>,
    pub expected: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: ScenarioName,
    /// Full configuration tree as run.
    pub input: Value,
    pub seeds: BTreeMap<String, u64>,
    /// Derived physical quantities, SI units (rad/s, vibrons/s, m).
    pub derived: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    /// s
    pub timings: BTreeMap<String, f64>,
    pub datasets: Vec<DatasetInfo>,
    pub comparisons: Vec<ComparisonReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub name: String,
    pub columns: Vec<String>,
    pub n_rows: usize,
}

impl RunManifest {
    pub fn new(cfg: &Config) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: cfg.scenario,
            input: cfg.to_value(),
            seeds: BTreeMap::new(),
            derived: BTreeMap::new(),
            residuals: BTreeMap::new(),
            timings: BTreeMap::new(),
            datasets: Vec::new(),
            comparisons: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        let maps = [("derived", &self.derived), ("residuals", &self.residuals), ("timings", &self.timings)];
        for (what, map) in maps {
            if let Some((k, _)) = map.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite { column: format!("{what}.{k}"), row: 0 });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.check_finite()?;
        serde_json::to_string_pretty(self).map_err(|e| invalid(format!("manifest: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: RunManifest = from_json_str(text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                path: "schema_version".into(),
                msg: format!("unsupported version {}, expected {SCHEMA_VERSION}", m.schema_version),
            });
        }
        Ok(m)
    }
}

/// Datasets plus manifest of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub datasets: Vec<Dataset>,
    pub manifest: RunManifest,
}

static WRITE_LOCK: Mutex<()> = Mutex::new(());

/// Write every dataset as `<name>.csv` and `<name>.json` plus `manifest.json`
/// into `dir` (created if missing). Returns the written paths.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    let _guard = WRITE_LOCK.lock().unwrap_or_else(|p| p.into_inner());
    for ds in &out.datasets {
        ds.check_finite()?;
    }
    let manifest = out.manifest.to_json()?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for ds in &out.datasets {
        for f in [Format::Csv, Format::Json] {
            let p = dir.join(format!("{}.{}", ds.name, f.extension()));
            written.push(emit_dataset(ds, f, &p)?);
        }
    }
    let p = dir.join("manifest.json");
    fs::write(&p, manifest).map_err(|e| io_err(&p, e))?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Dataset {
        let mut d = Dataset::with_columns("t", &["x", "y, quoted"]);
        d.push(vec![0.1, -1.0 / 3.0]).unwrap();
        d.push(vec![1e-300, 6.02214076e23]).unwrap();
        d
    }

    #[test]
    fn one_row_csv_has_two_lines() {
        let mut d = Dataset::with_columns("one", &["a"]);
        d.push(vec![1.5]).unwrap();
        let s = dataset_to_string(&d, Format::Csv).unwrap();
        assert_eq!(s, "a\r\n1.5000000000000000e0\r\n");
    }

    #[test]
    fn csv_quotes_header_and_round_trips() {
        let d = table();
        let s = dataset_to_string(&d, Format::Csv).unwrap();
        assert!(s.starts_with("x,\"y, quoted\"\r\n"));
        let back = parse_csv("t", &s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn nan_is_rejected() {
        let mut d = table();
        d.rows[1][0] = f64::NAN;
        assert!(matches!(dataset_to_string(&d, Format::Json), Err(Error::NonFinite { row: 1, .. })));
        assert!(matches!(dataset_to_string(&d, Format::Csv), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let mut d = Dataset::with_columns("r", &["a", "b"]);
        assert!(d.push(vec![1.0]).is_err());
    }

    #[test]
    fn empty_and_malformed_configs_give_positions() {
        match parse_config("") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 0)),
            other => panic!("{other:?}"),
        }
        match parse_config("{\n  \"schema_version\": 1,\n  \"scenario\": ]\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_create_and_replace() {
        let mut v: Value = serde_json::json!({"a": {"b": [1, 2]}, "c": "x"});
        apply_override(&mut v, "a.b.1=5.5").unwrap();
        apply_override(&mut v, "c=hello").unwrap();
        apply_override(&mut v, "d.e=true").unwrap();
        assert_eq!(v, serde_json::json!({"a": {"b": [1, 5.5]}, "c": "hello", "d": {"e": true}}));
        assert!(apply_override(&mut v, "a.b.7=1").is_err());
        assert!(apply_override(&mut v, "c.x=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }
}
