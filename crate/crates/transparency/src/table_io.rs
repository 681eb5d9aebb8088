//! `features.jsonl`, its scaler side-car, and CSV export.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use transparency_core::features::{FeatureColumn, Provenance, ScalerParams};
use transparency_core::{Dimension, FeatureTable};

use crate::error::{CliError, Result};
use crate::ingest::read_jsonl;
use crate::report::SCHEMA_VERSION;

/// `features.jsonl` -> `features.scaler.json`.
pub fn sidecar_path(features: &Path) -> PathBuf {
    features.with_extension("scaler.json")
}

#[derive(Serialize, Deserialize)]
struct SidecarColumn {
    clip_lo: f64,
    clip_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report values serialize");
    out.push(b'\n');
    out
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &json_bytes(value))
}

/// Writes the table and its side-car next to it.
pub fn write_feature_table(table: &FeatureTable, path: &Path, seed: u64) -> Result<()> {
    let mut out = Vec::new();
    for (row, id) in table.ids().iter().enumerate() {
        let mut line = Map::new();
        line.insert("version".into(), SCHEMA_VERSION.into());
        line.insert("id".into(), id.as_str().into());
        for dim in Dimension::ALL {
            line.insert(format!("{dim}_raw"), table.raw(dim)[row].into());
            line.insert(format!("{dim}_scaled"), table.scaled(dim)[row].into());
        }
        serde_json::to_writer(&mut out, &line).expect("feature rows serialize");
        out.push(b'\n');
    }
    write_file(path, &out)?;

    let mut sidecar = Map::new();
    sidecar.insert("version".into(), SCHEMA_VERSION.into());
    sidecar.insert("seed".into(), seed.into());
    for dim in Dimension::ALL {
        let col = table.column(dim);
        let entry = SidecarColumn {
            clip_lo: col.scaler.clip_lo,
            clip_hi: col.scaler.clip_hi,
            min: Some(col.scaler.min),
            max: Some(col.scaler.max),
            provenance: Some(col.provenance.name().into()),
        };
        sidecar.insert(
            dim.name().into(),
            serde_json::to_value(entry).expect("scaler serializes"),
        );
    }
    write_json(&sidecar_path(path), &sidecar)
}

fn number(path: &Path, line: usize, row: &Map<String, Value>, key: &str) -> Result<f64> {
    match row.get(key) {
        None => Err(CliError::parse(
            path,
            line,
            format!("missing column `{key}`"),
        )),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| CliError::parse(path, line, format!("`{key}` is not a number"))),
    }
}

fn check_version(path: &Path, line: usize, found: Option<&Value>) -> Result<()> {
    match found.and_then(Value::as_str) {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(CliError::parse(
            path,
            line,
            format!("unsupported version `{other}` (expected `{SCHEMA_VERSION}`)"),
        )),
        None => Err(CliError::parse(path, line, "missing column `version`")),
    }
}

fn read_sidecar(path: &Path) -> Result<Option<Map<String, Value>>> {
    let side = sidecar_path(path);
    if !side.exists() {
        log::warn!("{}: no scaler side-car; refitting scalers", side.display());
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
    let map: Map<String, Value> =
        serde_json::from_str(&text).map_err(|e| CliError::format(&side, e.to_string()))?;
    if let Some(v) = map.get("version") {
        check_version(&side, 1, Some(v))?;
    }
    Ok(Some(map))
}

pub fn read_feature_table(path: &Path) -> Result<FeatureTable> {
    let rows: Vec<(usize, Map<String, Value>)> = read_jsonl(path)?;
    let sidecar = read_sidecar(path)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut raw: [Vec<f64>; 6] = Default::default();
    let mut scaled: [Vec<f64>; 6] = Default::default();
    for (n, row) in &rows {
        check_version(path, *n, row.get("version"))?;
        let id = row
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::parse(path, *n, "missing column `id`"))?;
        ids.push(id.to_string());
        for dim in Dimension::ALL {
            raw[dim.index()].push(number(path, *n, row, &format!("{dim}_raw"))?);
            scaled[dim.index()].push(number(path, *n, row, &format!("{dim}_scaled"))?);
        }
    }

    let side = sidecar_path(path);
    let mut columns = Vec::with_capacity(6);
    for dim in Dimension::ALL {
        let raw = std::mem::take(&mut raw[dim.index()]);
        let scaled = std::mem::take(&mut scaled[dim.index()]);
        let column = match &sidecar {
            None => {
                let mut fitted = FeatureColumn::fit(raw, Provenance::Ingested)?;
                fitted.scaled = scaled;
                fitted
            }
            Some(map) => {
                let entry = map
                    .get(dim.name())
                    .ok_or_else(|| CliError::format(&side, format!("missing column `{dim}`")))?;
                let entry: SidecarColumn = serde_json::from_value(entry.clone())
                    .map_err(|e| CliError::format(&side, format!("{dim}: {e}")))?;
                let clipped = raw.iter().map(|v| v.clamp(entry.clip_lo, entry.clip_hi));
                let scaler = ScalerParams {
                    clip_lo: entry.clip_lo,
                    clip_hi: entry.clip_hi,
                    min: entry
                        .min
                        .unwrap_or_else(|| clipped.clone().fold(f64::INFINITY, f64::min)),
                    max: entry
                        .max
                        .unwrap_or_else(|| clipped.fold(f64::NEG_INFINITY, f64::max)),
                };
                let provenance = match entry.provenance.as_deref() {
                    None => Provenance::Computed,
                    Some(p) => p
                        .parse()
                        .map_err(|e| CliError::format(&side, format!("{dim}: {e}")))?,
                };
                FeatureColumn {
                    raw,
                    scaled,
                    provenance,
                    scaler,
                }
            }
        };
        columns.push(column);
    }
    let columns: [FeatureColumn; 6] = columns
        .try_into()
        .unwrap_or_else(|_| unreachable!("six dimensions"));
    FeatureTable::new(ids, columns).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn write_features_csv(table: &FeatureTable, path: &Path, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["version".to_string(), "seed".into(), "id".into()];
    for dim in Dimension::ALL {
        header.push(format!("{dim}_raw"));
        header.push(format!("{dim}_scaled"));
    }
    w.write_record(&header)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    for (row, id) in table.ids().iter().enumerate() {
        let mut record = vec![SCHEMA_VERSION.to_string(), seed.to_string(), id.clone()];
        for dim in Dimension::ALL {
            record.push(float(table.raw(dim)[row]));
            record.push(float(table.scaled(dim)[row]));
        }
        w.write_record(&record)
            .map_err(|e| CliError::format(path, e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::format(path, e.to_string()))?;
    write_file(path, &bytes)
}

/// Shortest round-trip decimal, as in the JSON outputs.
pub(crate) fn float(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}

pub(crate) fn write_csv_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::format(path, e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::format(path, e.to_string()))?;
    write_file(path, &bytes)
}
