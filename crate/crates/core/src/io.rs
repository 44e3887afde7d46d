//! On-disk formats: dataset and sample NDJSON, checkpoint and report JSON.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which reads back to the identical `f64`. Object keys come out sorted, so
//! equal values always produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{DatasetKind, DatasetSpec, TrajectoryRecord, UnitSystem};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::neural::MlpParams;
use crate::relativity::PhysicsConfig;
use crate::sampling::SamplePath;
use crate::training::{ForceInput, Method, TrainConfig, TrainedModel, TrainingMeta};

pub const SCHEMA_VERSION: u32 = 1;

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => {
                let _ = write!(out, "{u}");
            }
            (None, Some(i), _) => {
                let _ = write!(out, "{i}");
            }
            (None, None, Some(f)) => {
                let _ = write!(out, "{f:.16e}");
            }
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
    }
}

/// Serializes `value` as one line of JSON in the canonical float format.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&tree, &mut out);
    Ok(out)
}

fn parse_line<T: DeserializeOwned>(line: &str, number: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse { line: number, msg: e.to_string() })
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub kind: DatasetKind,
    pub n_points: usize,
    pub n_steps: usize,
    pub duration: f64,
    pub seed: u64,
    pub unit_system: UnitSystem,
    pub physics: PhysicsConfig,
    /// Full generator parameters, so the initial-velocity rule can be
    /// reapplied at sampling time.
    pub generator: DatasetSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub trajectories: Vec<TrajectoryRecord>,
}

impl DatasetFile {
    pub fn new(spec: &DatasetSpec, units: UnitSystem, physics: PhysicsConfig, trajectories: Vec<TrajectoryRecord>) -> Self {
        Self {
            header: DatasetHeader {
                schema_version: SCHEMA_VERSION,
                kind: spec.kind,
                n_points: spec.n_points,
                n_steps: spec.n_steps,
                duration: spec.duration,
                seed: spec.seed,
                unit_system: units,
                physics,
                generator: spec.clone(),
            },
            trajectories,
        }
    }

    pub fn to_ndjson(&self) -> Result<String> {
        let mut out = to_canonical_json(&self.header)?;
        out.push('\n');
        for r in &self.trajectories {
            out.push_str(&to_canonical_json(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut it = lines(text);
        let (first, header_line) = it.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let header: DatasetHeader = parse_line(header_line, first)?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse { line: first, msg: format!("unsupported schema_version {}", header.schema_version) });
        }
        let mut seen = vec![false; header.n_points];
        let mut trajectories = Vec::with_capacity(header.n_points);
        let mut last_line = first;
        for (number, line) in it {
            last_line = number;
            let record: TrajectoryRecord = parse_line(line, number)?;
            let bad = |msg: String| Error::Parse { line: number, msg };
            if record.index >= header.n_points {
                return Err(bad(format!("trajectory index {} out of range", record.index)));
            }
            if std::mem::replace(&mut seen[record.index], true) {
                return Err(bad(format!("duplicate trajectory index {}", record.index)));
            }
            if record.steps.len() != header.n_steps + 1 {
                return Err(bad(format!("expected {} steps, found {}", header.n_steps + 1, record.steps.len())));
            }
            trajectories.push(record);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse { line: last_line, msg: format!("trajectory {missing} missing") });
        }
        trajectories.sort_by_key(|r| r.index);
        Ok(Self { header, trajectories })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_ndjson()?)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_ndjson(&fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub schema_version: u32,
    pub method: Method,
    /// `u1`, `u2` and/or `F`.
    pub heads: BTreeMap<String, MlpParams>,
    pub physics: PhysicsConfig,
    pub unit_system: UnitSystem,
    pub train_config: TrainConfig,
    pub final_loss: f64,
    pub seed: u64,
    pub duration: f64,
    pub force_input: ForceInput,
    pub dataset_kind: Option<DatasetKind>,
    pub loss_curve: Vec<f64>,
}

impl From<&TrainedModel> for CheckpointFile {
    fn from(m: &TrainedModel) -> Self {
        let mut heads = BTreeMap::new();
        for (name, head) in [("u1", &m.velocity), ("u2", &m.acceleration), ("F", &m.force)] {
            if let Some(p) = head {
                heads.insert(name.to_string(), p.clone());
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            method: m.method,
            heads,
            physics: m.physics,
            unit_system: m.units.clone(),
            train_config: m.config.clone(),
            final_loss: m.meta.final_loss,
            seed: m.config.seed,
            duration: m.duration,
            force_input: m.force_input,
            dataset_kind: m.meta.dataset_kind,
            loss_curve: m.meta.loss_curve.clone(),
        }
    }
}

impl CheckpointFile {
    pub fn into_model(mut self) -> Result<TrainedModel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported schema_version {}", self.schema_version)));
        }
        let model = TrainedModel {
            method: self.method,
            velocity: self.heads.remove("u1"),
            acceleration: self.heads.remove("u2"),
            force: self.heads.remove("F"),
            force_input: self.force_input,
            physics: self.physics,
            units: self.unit_system,
            duration: self.duration,
            config: self.train_config,
            meta: TrainingMeta { loss_curve: self.loss_curve, final_loss: self.final_loss, dataset_kind: self.dataset_kind },
        };
        if let Some(name) = self.heads.keys().next() {
            return Err(Error::InvalidConfig(format!("unknown head `{name}`")));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(to_canonical_json(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_line(text, 1)
    }
}

pub fn write_checkpoint(model: &TrainedModel, path: &Path) -> Result<()> {
    Ok(fs::write(path, CheckpointFile::from(model).to_json()?)?)
}

pub fn read_checkpoint(path: &Path) -> Result<TrainedModel> {
    CheckpointFile::from_json(&fs::read_to_string(path)?)?.into_model()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub schema_version: u32,
    pub method: Method,
    pub dataset_kind: Option<DatasetKind>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub x0: Vec<f64>,
    pub endpoint: Vec<f64>,
    /// Full path, when requested.
    pub path: Option<SamplePath>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleFile {
    pub header: SampleHeader,
    pub samples: Vec<SampleRecord>,
}

impl SampleFile {
    pub fn to_ndjson(&self) -> Result<String> {
        let mut out = to_canonical_json(&self.header)?;
        out.push('\n');
        for s in &self.samples {
            out.push_str(&to_canonical_json(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut it = lines(text);
        let (first, header_line) = it.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let header: SampleHeader = parse_line(header_line, first)?;
        let mut samples = Vec::with_capacity(header.n);
        for (number, line) in it {
            let record: SampleRecord = parse_line(line, number)?;
            if record.index != samples.len() {
                return Err(Error::Parse { line: number, msg: format!("expected sample {}, found {}", samples.len(), record.index) });
            }
            samples.push(record);
        }
        if samples.len() != header.n {
            return Err(Error::Parse { line: first, msg: format!("header promises {} samples, found {}", header.n, samples.len()) });
        }
        Ok(Self { header, samples })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_ndjson()?)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_ndjson(&fs::read_to_string(path)?)
    }
}

pub fn report_to_json(report: &EvalReport) -> Result<String> {
    Ok(to_canonical_json(report)? + "\n")
}

pub fn report_from_json(text: &str) -> Result<EvalReport> {
    parse_line(text, 1)
}
