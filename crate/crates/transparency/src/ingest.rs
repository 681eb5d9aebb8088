//! JSON Lines readers for instances, predictions and the per-instance
//! signal files. Every error carries the file path and 1-based line number.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use transparency_core::data::ClassProbabilities;
use transparency_core::features::{PerplexityRecord, PviRecord, TraceRecord};
use transparency_core::{Dataset, Dimension, Instance, PredictionSet, TaskKind};

use crate::error::{CliError, Result};

/// Non-blank lines of a JSONL file with their line numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_line<T: DeserializeOwned>(path: &Path, line_no: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| CliError::parse(path, line_no, e.to_string()))
}

/// Parses every non-blank line as `T`.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| Ok((n, parse_line(path, n, &line)?)))
        .collect()
}

fn check_unique<'a>(path: &Path, ids: impl Iterator<Item = (usize, &'a str)>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (line, id) in ids {
        if !seen.insert(id) {
            return Err(CliError::parse(path, line, format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct InstanceLine {
    id: String,
    text_a: String,
    #[serde(default)]
    text_b: String,
    gold: Vec<String>,
    #[serde(default)]
    annotator_labels: Vec<String>,
}

/// Dataset named after the file stem, in file order.
pub fn parse_instances(path: &Path, task_kind: TaskKind) -> Result<Dataset> {
    let rows: Vec<(usize, InstanceLine)> = read_jsonl(path)?;
    if rows.is_empty() {
        log::warn!("{}: no instances", path.display());
    }
    check_unique(path, rows.iter().map(|(n, r)| (*n, r.id.as_str())))?;
    let mut instances = Vec::with_capacity(rows.len());
    for (n, r) in rows {
        let inst = Instance {
            id: r.id,
            task_kind,
            text_a: r.text_a,
            text_b: r.text_b,
            gold: r.gold,
            annotator_labels: r.annotator_labels,
        };
        inst.validate()
            .map_err(|e| CliError::parse(path, n, e.to_string()))?;
        instances.push(inst);
    }
    Ok(Dataset::new(file_stem(path), task_kind, instances)?)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Deserialize)]
struct PredictionLine {
    id: Option<String>,
    model_id: Option<String>,
    prediction: Option<String>,
    probabilities: Option<ClassProbabilities>,
}

/// Model id comes from a leading `{"model_id": ...}` line when there is one,
/// otherwise from the file stem.
pub fn parse_predictions(path: &Path) -> Result<PredictionSet> {
    let mut rows: Vec<(usize, PredictionLine)> = read_jsonl(path)?;
    let mut model_id = file_stem(path);
    if let Some((_, first)) = rows.first() {
        if first.id.is_none() {
            if let Some(m) = &first.model_id {
                model_id = m.clone();
                rows.remove(0);
            }
        }
    }
    let mut predictions = BTreeMap::new();
    let mut probabilities = BTreeMap::new();
    for (n, r) in rows {
        let id =
            r.id.ok_or_else(|| CliError::parse(path, n, "missing field `id`"))?;
        let prediction = r
            .prediction
            .ok_or_else(|| CliError::parse(path, n, "missing field `prediction`"))?;
        if let Some(p) = r.probabilities {
            transparency_core::data::check_probabilities(&id, &p)
                .map_err(|e| CliError::parse(path, n, e.to_string()))?;
            probabilities.insert(id.clone(), p);
        }
        if predictions.insert(id.clone(), prediction).is_some() {
            return Err(CliError::parse(path, n, format!("duplicate id `{id}`")));
        }
    }
    let set = PredictionSet::new(model_id, predictions);
    Ok(if probabilities.is_empty() {
        set
    } else {
        set.with_probabilities(probabilities)?
    })
}

/// Every `*.jsonl` file in `dir`, sorted by file name.
pub fn parse_predictions_dir(dir: &Path) -> Result<Vec<PredictionSet>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::format(dir, "no *.jsonl prediction files"));
    }
    paths.iter().map(|p| parse_predictions(p)).collect()
}

#[derive(Deserialize)]
struct TraceLine {
    id: String,
    gold_conf: Vec<f64>,
}

#[derive(Deserialize)]
struct PviLine {
    id: String,
    p_full: f64,
    p_null: f64,
}

#[derive(Deserialize)]
struct PerplexityLine {
    id: String,
    token_logprobs: Vec<f64>,
}

fn parse_records<L: DeserializeOwned, R>(
    path: &Path,
    id_of: impl Fn(&L) -> &str,
    build: impl Fn(L) -> transparency_core::Result<R>,
) -> Result<Vec<R>> {
    let rows: Vec<(usize, L)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(n, r)| (*n, id_of(r))))?;
    rows.into_iter()
        .map(|(n, r)| build(r).map_err(|e| CliError::parse(path, n, e.to_string())))
        .collect()
}

pub fn parse_traces(path: &Path) -> Result<Vec<TraceRecord>> {
    parse_records(
        path,
        |l: &TraceLine| &l.id,
        |l| TraceRecord::new(l.id, l.gold_conf),
    )
}

pub fn parse_pvi(path: &Path) -> Result<Vec<PviRecord>> {
    parse_records(
        path,
        |l: &PviLine| &l.id,
        |l| PviRecord::new(l.id, l.p_full, l.p_null),
    )
}

pub fn parse_perplexity(path: &Path) -> Result<Vec<PerplexityRecord>> {
    parse_records(
        path,
        |l: &PerplexityLine| &l.id,
        |l| PerplexityRecord::new(l.id, l.token_logprobs),
    )
}

/// Externally computed feature values: `{"id", "<dimension>": value, ...}`
/// per line. Returns each dimension that appears, keyed by id.
pub fn parse_precomputed(path: &Path) -> Result<BTreeMap<Dimension, BTreeMap<String, f64>>> {
    let rows: Vec<(usize, serde_json::Map<String, Value>)> = read_jsonl(path)?;
    let mut out: BTreeMap<Dimension, BTreeMap<String, f64>> = BTreeMap::new();
    for (n, row) in rows {
        let id = row
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::parse(path, n, "missing string field `id`"))?;
        for (key, value) in &row {
            if key == "id" {
                continue;
            }
            let dim: Dimension = key
                .parse()
                .map_err(|_| CliError::parse(path, n, format!("unknown dimension `{key}`")))?;
            let v = value.as_f64().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::parse(path, n, format!("`{key}` is not a finite number"))
            })?;
            if out
                .entry(dim)
                .or_default()
                .insert(id.to_string(), v)
                .is_some()
            {
                return Err(CliError::parse(path, n, format!("duplicate id `{id}`")));
            }
        }
    }
    Ok(out)
}
