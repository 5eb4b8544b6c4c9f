//! Config-driven experiments with per-trial rows and a summary.
//!
//! Trial `t` of a run draws all of its randomness from
//! `derive_seed(master_seed, t)`, and rows are collected in trial order, so
//! the output does not depend on the number of worker threads.

pub mod config;
mod experiments;
pub mod random;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};

/// Version of the row and summary layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    /// Not applicable for this row.
    Missing,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::UInt(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Missing => Ok(()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => s.serialize_i64(*v),
            Value::UInt(v) => s.serialize_u64(*v),
            Value::Float(v) => s.serialize_f64(*v),
            Value::Bool(v) => s.serialize_bool(*v),
            Value::Text(v) => s.serialize_str(v),
            Value::Missing => s.serialize_none(),
        }
    }
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(v) => Some(v as f64),
            Value::UInt(v) => Some(v as f64),
            Value::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(v) => Some(v),
            _ => None,
        }
    }
}

macro_rules! value_from {
    ($($t:ty => $variant:ident as $as:ty),*) => {
        $(impl From<$t> for Value {
            fn from(v: $t) -> Self {
                Value::$variant(v as $as)
            }
        })*
    };
}

value_from!(i64 => Int as i64, u64 => UInt as u64, usize => UInt as u64, u32 => UInt as u64, f64 => Float as f64);

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

/// One output row: a trial, or one point of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub fields: Vec<(&'static str, Value)>,
}

impl TrialReport {
    pub fn new(trial: usize, seed: u64) -> Self {
        TrialReport {
            trial,
            seed,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, name: &'static str, value: impl Into<Value>) -> Self {
        self.fields.push((name, value.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }

    /// Column names in output order.
    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["schema_version", "trial", "seed"];
        h.extend(self.fields.iter().map(|(n, _)| *n));
        h
    }
}

impl Serialize for TrialReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.fields.len() + 3))?;
        map.serialize_entry("schema_version", &SCHEMA_VERSION)?;
        map.serialize_entry("trial", &self.trial)?;
        map.serialize_entry("seed", &self.seed)?;
        for (k, v) in &self.fields {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Aggregate outcome. `threshold` is `required_fraction - 3·sigma`, with
/// `sigma = sqrt(p(1-p)/trials)` at `p = required_fraction`, and `passed`
/// needs the success fraction to reach it and every entry of `checks` to
/// hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub required_fraction: f64,
    pub sigma: f64,
    pub threshold: f64,
    pub passed: bool,
    pub checks: BTreeMap<String, bool>,
    pub stats: BTreeMap<String, Value>,
    pub metadata: BTreeMap<String, String>,
}

/// `p - 3·sqrt(p(1-p)/trials)`.
pub fn three_sigma_floor(p: f64, trials: usize) -> f64 {
    p - 3.0 * binomial_sigma(p, trials)
}

pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

impl Summary {
    pub(crate) fn new(
        config: &ExperimentConfig,
        rows: &[TrialReport],
        required_fraction: f64,
    ) -> Result<Self> {
        let trials = rows.len();
        let successes = rows
            .iter()
            .filter(|r| r.get("success").and_then(Value::as_bool) == Some(true))
            .count();
        let success_fraction = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        let sigma = binomial_sigma(required_fraction, trials.max(1));
        let threshold = required_fraction - 3.0 * sigma;
        let mut metadata = BTreeMap::new();
        metadata.insert("crate_version".into(), env!("CARGO_PKG_VERSION").into());
        metadata.insert("config".into(), config.to_toml()?);
        Ok(Summary {
            schema_version: SCHEMA_VERSION,
            kind: config.kind()?,
            master_seed: config.master_seed(),
            trials,
            successes,
            success_fraction,
            required_fraction,
            sigma,
            threshold,
            passed: success_fraction >= threshold,
            checks: BTreeMap::new(),
            stats: BTreeMap::new(),
            metadata,
        })
    }

    pub(crate) fn check(mut self, name: &str, holds: bool) -> Self {
        self.checks.insert(name.to_string(), holds);
        self.passed &= holds;
        self
    }

    pub(crate) fn meta(mut self, name: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(name.to_string(), value.into());
        self
    }

    pub(crate) fn stat(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.stats.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub summary: Summary,
    pub rows: Vec<TrialReport>,
}

/// Validates `config` and runs it on a pool of `config.workers` threads.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers())
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| experiments::dispatch(config))
}

/// Rows as CSV with a header line.
pub fn write_csv<W: Write>(rows: &[TrialReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        w.write_record(first.header()).map_err(csv_error)?;
    }
    for row in rows {
        let mut record = vec![
            SCHEMA_VERSION.to_string(),
            row.trial.to_string(),
            row.seed.to_string(),
        ];
        record.extend(row.fields.iter().map(|(_, v)| v.to_string()));
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn summary_json(summary: &Summary) -> Result<String> {
    serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))
}

pub fn output_json(output: &ExperimentOutput) -> Result<String> {
    serde_json::to_string_pretty(output).map_err(|e| Error::Io(e.to_string()))
}
