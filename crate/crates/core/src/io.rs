//! File formats.
//!
//! * Extremal coefficients: `{"m": 3, "labels": [..], "theta": {"0": 1.0, "0,1": 1.5, ..}}`
//!   with one key per non-empty subset; `labels` is optional.
//! * Weights: same layout with `"tau"`; absent subsets carry weight 0.
//! * Storm shapes: `{"d": 1, "cells": [[0], [1], [2]], "spacing": [1.0]}`;
//!   `spacing` is optional.
//! * Samples: CSV with a header of location labels and one replicate per
//!   row, plus a `<stem>.meta.json` sidecar carrying `n`, `seed` and the
//!   model digest.
//!
//! JSON output is canonical: object keys sorted, floats with 17 significant
//! digits, two-space indentation, trailing newline.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::error::{file_err, Error, Result};
use crate::maxlinear::{SampleBatch, TauTable};
use crate::numeric::format_g17;
use crate::setfun::{EcfTable, GroundSet, SetFunction, Subset};
use crate::stationary::Cell;

struct CanonicalFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for CanonicalFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Canonical JSON text of any serializable value. Non-finite floats become
/// `null`.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // Going through `Value` sorts object keys.
    let v = serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter(PrettyFormatter::new()));
    v.serialize(&mut ser)
        .map_err(|e| Error::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn read_json_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: malformed JSON: {e}", path.display())))
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| fmt_err(format!("missing key \"{key}\"")))
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| fmt_err(format!("\"{what}\" must be a JSON object")))
}

fn ground_from_json(obj: &Map<String, Value>, cap: usize) -> Result<GroundSet> {
    let m = field(obj, "m")?
        .as_u64()
        .ok_or_else(|| fmt_err("key \"m\" must be a positive integer"))? as usize;
    match obj.get("labels") {
        None | Some(Value::Null) => GroundSet::with_cap(m, cap),
        Some(Value::Array(items)) => {
            let labels = items
                .iter()
                .map(|l| {
                    l.as_str()
                        .map(str::to_owned)
                        .ok_or_else(|| fmt_err("key \"labels\" must be an array of strings"))
                })
                .collect::<Result<Vec<_>>>()?;
            if labels.len() != m {
                return Err(fmt_err(format!(
                    "key \"labels\" has {} entries, \"m\" is {m}",
                    labels.len()
                )));
            }
            GroundSet::with_labels(labels, cap)
        }
        Some(_) => Err(fmt_err("key \"labels\" must be an array of strings")),
    }
}

fn ground_to_json(g: &GroundSet, obj: &mut Map<String, Value>) {
    obj.insert("m".into(), json!(g.len()));
    if let Some(labels) = g.labels() {
        obj.insert("labels".into(), json!(labels));
    }
}

/// Reads a subset-keyed table; every key must name a non-empty subset of
/// the ground set. With `complete`, all `2^m - 1` keys are required.
fn subset_table(
    obj: &Map<String, Value>,
    name: &str,
    ground: &GroundSet,
    complete: bool,
) -> Result<Vec<f64>> {
    let table = as_object(field(obj, name)?, name)?;
    let mut values = vec![0.0; ground.table_len()];
    let mut seen = BTreeSet::new();
    for (key, v) in table {
        let s = Subset::parse_key(key)
            .map_err(|_| fmt_err(format!("key \"{key}\" in \"{name}\" is not a subset key")))?;
        if s.is_empty() {
            return Err(fmt_err(format!(
                "key \"{key}\" in \"{name}\": the empty set is implicit"
            )));
        }
        if ground.check(s).is_err() {
            return Err(fmt_err(format!(
                "key \"{key}\" in \"{name}\" is outside the ground set of size {}",
                ground.len()
            )));
        }
        if !seen.insert(s.mask()) {
            return Err(fmt_err(format!("key \"{key}\" in \"{name}\" repeats a subset")));
        }
        values[s.mask() as usize] = v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| fmt_err(format!("key \"{key}\" in \"{name}\" must be a finite number")))?;
    }
    if complete {
        if let Some(missing) = ground.nonempty_subsets().find(|s| !seen.contains(&s.mask())) {
            return Err(fmt_err(format!(
                "key \"{}\" missing from \"{name}\"",
                missing.key()
            )));
        }
    }
    Ok(values)
}

fn table_to_json(ground: &GroundSet, name: &str, values: &[f64]) -> Value {
    let mut obj = Map::new();
    ground_to_json(ground, &mut obj);
    let table: Map<String, Value> = ground
        .nonempty_subsets()
        .map(|s| (s.key(), json!(values[s.mask() as usize])))
        .collect();
    obj.insert(name.into(), Value::Object(table));
    Value::Object(obj)
}

pub fn ecf_to_json(theta: &EcfTable) -> Value {
    table_to_json(theta.ground(), "theta", theta.values())
}

pub fn ecf_from_json(v: &Value, cap: usize) -> Result<EcfTable> {
    let obj = as_object(v, "ecf")?;
    let ground = ground_from_json(obj, cap)?;
    let values = subset_table(obj, "theta", &ground, true)?;
    EcfTable::from_values(ground, values)
}

pub fn tau_to_json(tau: &TauTable) -> Value {
    table_to_json(tau.ground(), "tau", tau.values())
}

pub fn tau_from_json(v: &Value, cap: usize) -> Result<TauTable> {
    let obj = as_object(v, "tau file")?;
    let ground = ground_from_json(obj, cap)?;
    let values = subset_table(obj, "tau", &ground, false)?;
    TauTable::from_values(ground, values)
}

pub fn read_ecf(path: &Path, cap: usize) -> Result<EcfTable> {
    ecf_from_json(&read_json_file(path)?, cap)
        .map_err(|e| with_path(path, e))
}

pub fn read_tau(path: &Path, cap: usize) -> Result<TauTable> {
    tau_from_json(&read_json_file(path)?, cap).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Storm shape cells and per-axis spacing (unit when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFile {
    pub d: usize,
    pub cells: Vec<Cell>,
    pub spacing: Vec<f64>,
}

pub fn shape_from_json(v: &Value) -> Result<ShapeFile> {
    let obj = as_object(v, "shape")?;
    let d = field(obj, "d")?
        .as_u64()
        .filter(|d| *d >= 1)
        .ok_or_else(|| fmt_err("key \"d\" must be a positive integer"))? as usize;
    let cells = field(obj, "cells")?
        .as_array()
        .ok_or_else(|| fmt_err("key \"cells\" must be an array"))?
        .iter()
        .map(|c| {
            let coords = c
                .as_array()
                .filter(|c| c.len() == d)
                .ok_or_else(|| fmt_err(format!("key \"cells\": every cell needs {d} coordinates")))?;
            coords
                .iter()
                .map(|x| {
                    x.as_i64()
                        .ok_or_else(|| fmt_err("key \"cells\": coordinates must be integers"))
                })
                .collect::<Result<Cell>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let spacing = match obj.get("spacing") {
        None | Some(Value::Null) => vec![1.0; d],
        Some(Value::Array(xs)) if xs.len() == d => xs
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| fmt_err("key \"spacing\" must hold numbers"))
            })
            .collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(fmt_err(format!("key \"spacing\" must be an array of {d} numbers"))),
    };
    Ok(ShapeFile { d, cells, spacing })
}

pub fn read_shape(path: &Path) -> Result<ShapeFile> {
    shape_from_json(&read_json_file(path)?).map_err(|e| with_path(path, e))
}

/// `samples.csv` → `samples.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.meta.json"))
}

/// Writes the CSV and its sidecar.
pub fn write_samples(path: &Path, batch: &SampleBatch) -> Result<()> {
    let mut out = String::with_capacity(batch.values.len() * 24);
    out.push_str(&batch.labels.join(","));
    out.push('\n');
    for row in batch.rows() {
        let cells: Vec<String> = row.iter().map(|v| format_g17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(file_err(path))?;
    let meta = json!({
        "n": batch.n,
        "seed": batch.seed,
        "model_digest": batch.model_digest,
        "labels": batch.labels,
    });
    let meta_file = meta_path(path);
    std::fs::write(&meta_file, to_canonical_json(&meta)?).map_err(file_err(&meta_file))?;
    Ok(())
}

/// Reads a sample CSV. Without a sidecar the seed is 0 and the digest empty.
pub fn read_samples(path: &Path) -> Result<SampleBatch> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| fmt_err(format!("{}: empty sample file", path.display())))?;
    let labels: Vec<String> = header.split(',').map(|s| s.trim().to_owned()).collect();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != labels.len() {
            return Err(fmt_err(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                i + 1,
                row.len(),
                labels.len()
            )));
        }
        for f in row {
            values.push(f.trim().parse::<f64>().map_err(|_| {
                fmt_err(format!("{}: row {}: bad number {f:?}", path.display(), i + 1))
            })?);
        }
    }
    let (seed, digest) = match std::fs::read_to_string(meta_path(path)) {
        Ok(text) => {
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| fmt_err(format!("{}: {e}", meta_path(path).display())))?;
            (
                v.get("seed").and_then(Value::as_u64).unwrap_or(0),
                v.get("model_digest")
                    .and_then(Value::as_str)
                    .unwrap_or("")
                    .to_owned(),
            )
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => (0, String::new()),
        Err(e) => return Err(e.into()),
    };
    SampleBatch::new(labels, values, seed, digest).map_err(|e| match e {
        Error::InvalidArgument(msg) => fmt_err(format!("{}: {msg}", path.display())),
        other => other,
    })
}
