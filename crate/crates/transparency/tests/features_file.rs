use std::fs;

use tempfile::TempDir;
use transparency::table_io::{
    read_feature_table, sidecar_path, write_feature_table, write_features_csv,
};
use transparency_core::features::Provenance;
use transparency_core::{Dimension, FeatureTable};

fn awkward_table(n: usize) -> FeatureTable {
    let ids = (0..n).map(|i| format!("id-{i}")).collect();
    let raw = Dimension::ALL.map(|d| {
        let v: Vec<f64> = (0..n)
            .map(|i| {
                ((i as f64 + 0.1) * std::f64::consts::PI / (d.index() + 3) as f64).sin() * 1e3 / 7.0
            })
            .collect();
        let prov = if d == Dimension::Discriminability {
            Provenance::Ingested
        } else {
            Provenance::Computed
        };
        (v, prov)
    });
    FeatureTable::from_raw(ids, raw).unwrap()
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.jsonl");
    for n in [3, 120] {
        let table = awkward_table(n);
        write_feature_table(&table, &path, 11).unwrap();
        let back = read_feature_table(&path).unwrap();
        assert_eq!(back, table);
        for d in Dimension::ALL {
            let same = back
                .raw(d)
                .iter()
                .zip(table.raw(d))
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same);
        }
        assert_eq!(
            back.column(Dimension::Discriminability).provenance,
            Provenance::Ingested
        );
    }
}

#[test]
fn line_shape() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.jsonl");
    write_feature_table(&awkward_table(4), &path, 11).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let first: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first.len(), 14);
    assert_eq!(first["version"], "1");
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(side["seed"], 11);
    assert!(side["noise"]["clip_lo"].is_number());
}

#[test]
fn version_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.jsonl");
    write_feature_table(&awkward_table(4), &path, 1).unwrap();
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("\"version\":\"1\"", "\"version\":\"2\"");
    fs::write(&path, text).unwrap();
    let err = read_feature_table(&path).unwrap_err().to_string();
    assert!(err.contains("version `2`"), "{err}");
}

#[test]
fn missing_column_is_named() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.jsonl");
    write_feature_table(&awkward_table(4), &path, 1).unwrap();
    let text: String = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut row: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(l).unwrap();
            row.remove("noise_raw");
            format!("{}\n", serde_json::Value::Object(row))
        })
        .collect();
    fs::write(&path, text).unwrap();
    let err = read_feature_table(&path).unwrap_err().to_string();
    assert!(err.contains("noise_raw"), "{err}");
}

#[test]
fn minimal_sidecar_and_missing_sidecar() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.jsonl");
    let table = awkward_table(60);
    write_feature_table(&table, &path, 1).unwrap();
    let mut minimal = serde_json::Map::new();
    for d in Dimension::ALL {
        let s = table.column(d).scaler;
        minimal.insert(
            d.name().into(),
            serde_json::json!({"clip_lo": s.clip_lo, "clip_hi": s.clip_hi}),
        );
    }
    fs::write(
        sidecar_path(&path),
        serde_json::Value::Object(minimal).to_string(),
    )
    .unwrap();
    let back = read_feature_table(&path).unwrap();
    for d in Dimension::ALL {
        assert_eq!(back.column(d).scaler, table.column(d).scaler);
    }
    fs::remove_file(sidecar_path(&path)).unwrap();
    let refit = read_feature_table(&path).unwrap();
    assert_eq!(refit.raw(Dimension::Length), table.raw(Dimension::Length));
}

#[test]
fn csv_export_has_all_columns() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("features.csv");
    write_features_csv(&awkward_table(5), &path, 3).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 15);
    assert_eq!(lines.count(), 5);
}
