//! Serializable report shapes. Every file carries `version` and `seed`.

use std::collections::BTreeMap;

use serde::Serialize;
use transparency_core::ood::{input_names, FoldResult, OodReport};
use transparency_core::sampling::Split;
use transparency_core::similarity::SimilarityVector;
use transparency_core::stats::{
    BinDelta, CurvePoint, DimensionReport, MetricDeltaReport, RandomBaseline, RankReport,
};
use transparency_core::{Dimension, FeatureTable};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct ModelRow {
    pub model_id: String,
    pub split_scores: Vec<f64>,
    pub sigma: f64,
    pub range: f64,
    pub significant_count: usize,
}

#[derive(Debug, Serialize)]
pub struct DimensionRow {
    pub dimension: String,
    pub per_model: Vec<ModelRow>,
    pub mean_sigma: f64,
    pub pct_significant: f64,
    pub bounds_source: String,
}

#[derive(Debug, Serialize)]
pub struct ModelBounds {
    pub model_id: String,
    pub full_score: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Serialize)]
pub struct RandomRow {
    pub trials: usize,
    pub fraction: f64,
    pub mean_sigma: f64,
    pub pct_significant: f64,
    pub per_model: Vec<ModelBounds>,
}

#[derive(Debug, Serialize)]
pub struct MetricDeltaModel {
    pub model_id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub delta: f64,
}

#[derive(Debug, Serialize)]
pub struct MetricDeltaRow {
    pub metric_a: String,
    pub metric_b: String,
    /// How `mean` and `sigma` aggregate the per-model deltas.
    pub aggregation: &'static str,
    pub mean: f64,
    pub sigma: f64,
    pub per_model: Vec<MetricDeltaModel>,
}

impl From<&MetricDeltaReport> for MetricDeltaRow {
    fn from(r: &MetricDeltaReport) -> Self {
        MetricDeltaRow {
            metric_a: r.metric_a.clone(),
            metric_b: r.metric_b.clone(),
            aggregation: "mean and population sd of |score_a - score_b| over models",
            mean: r.mean,
            sigma: r.sigma,
            per_model: r
                .per_model
                .iter()
                .map(|m| MetricDeltaModel {
                    model_id: m.model_id.clone(),
                    score_a: m.score_a,
                    score_b: m.score_b,
                    delta: m.delta,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BootstrapReportFile {
    pub version: &'static str,
    pub seed: u64,
    pub metric: String,
    pub bins: usize,
    pub random: RandomRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_delta: Option<MetricDeltaRow>,
    pub dimensions: Vec<DimensionRow>,
}

pub fn bounds_source(trials: usize) -> String {
    format!("random_{trials}")
}

pub fn random_row(
    baseline: &RandomBaseline,
    model_ids: &[String],
    full_scores: &[f64],
    fraction: f64,
) -> RandomRow {
    RandomRow {
        trials: baseline.bounds.first().map_or(0, |b| b.trial_scores.len()),
        fraction,
        mean_sigma: baseline.mean_sigma,
        pct_significant: baseline.pct_significant,
        per_model: baseline
            .bounds
            .iter()
            .zip(model_ids)
            .zip(full_scores)
            .map(|((b, id), full)| ModelBounds {
                model_id: id.clone(),
                full_score: *full,
                lower: b.lower,
                upper: b.upper,
            })
            .collect(),
    }
}

pub fn dimension_row(report: &DimensionReport, trials: usize) -> DimensionRow {
    DimensionRow {
        dimension: report.label.clone(),
        per_model: report
            .per_model
            .iter()
            .map(|m| ModelRow {
                model_id: m.model_id.clone(),
                split_scores: m.split_scores.clone(),
                sigma: m.sigma,
                range: m.range,
                significant_count: m.significant_count,
            })
            .collect(),
        mean_sigma: report.mean_sigma,
        pct_significant: report.pct_significant,
        bounds_source: bounds_source(trials),
    }
}

#[derive(Debug, Serialize)]
pub struct RankRandomRow {
    pub tau_lower: f64,
    pub tau_upper: f64,
    /// Expected significant rankings out of `bins` under random sampling.
    pub expected_significant: f64,
}

#[derive(Debug, Serialize)]
pub struct RankDimensionRow {
    pub dimension: String,
    pub taus: Vec<f64>,
    pub significant_count: usize,
    pub bins: usize,
}

#[derive(Debug, Serialize)]
pub struct RankReportFile {
    pub version: &'static str,
    pub seed: u64,
    pub metric: String,
    pub model_ids: Vec<String>,
    pub reference_ranking: Vec<f64>,
    pub bounds_source: String,
    pub random: RankRandomRow,
    pub dimensions: Vec<RankDimensionRow>,
}

pub fn rank_report_file(
    report: &RankReport,
    seed: u64,
    metric: &str,
    bins: usize,
    trials: usize,
) -> RankReportFile {
    RankReportFile {
        version: SCHEMA_VERSION,
        seed,
        metric: metric.into(),
        model_ids: report.model_ids.clone(),
        reference_ranking: report.baseline.reference_ranking.clone(),
        bounds_source: bounds_source(trials),
        random: RankRandomRow {
            tau_lower: report.baseline.tau_bounds.lower,
            tau_upper: report.baseline.tau_bounds.upper,
            expected_significant: report.baseline.random_significant_fraction * bins as f64,
        },
        dimensions: report
            .dimensions
            .iter()
            .map(|d| RankDimensionRow {
                dimension: d.label.clone(),
                significant_count: d.significant_count,
                bins: d.taus.len(),
                taus: d.taus.clone(),
            })
            .collect(),
    }
}

pub const CURVE_HEADER: [&str; 9] = [
    "version",
    "seed",
    "dimension",
    "bin_index",
    "size",
    "mean_score",
    "score_sd",
    "random_lower",
    "random_upper",
];

pub fn curve_rows(dimension: &str, points: &[CurvePoint], seed: u64) -> Vec<Vec<String>> {
    use crate::table_io::float;
    points
        .iter()
        .map(|p| {
            vec![
                SCHEMA_VERSION.into(),
                seed.to_string(),
                dimension.into(),
                p.bin_index.to_string(),
                p.size.to_string(),
                float(p.mean_score),
                float(p.score_sd),
                float(p.random_lower),
                float(p.random_upper),
            ]
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SimilarityFile {
    pub version: &'static str,
    pub seed: u64,
    pub a: String,
    pub b: String,
    pub smd: BTreeMap<String, f64>,
    pub avg_abs: f64,
}

pub fn similarity_file(a: &str, b: &str, v: &SimilarityVector, seed: u64) -> SimilarityFile {
    SimilarityFile {
        version: SCHEMA_VERSION,
        seed,
        a: a.into(),
        b: b.into(),
        smd: Dimension::ALL
            .iter()
            .map(|d| (d.name().to_string(), v.get(*d)))
            .collect(),
        avg_abs: v.avg_abs,
    }
}

#[derive(Debug, Serialize)]
pub struct OodFoldRow {
    pub held_out_pairs: Vec<[String; 2]>,
    pub n_train: usize,
    pub n_test: usize,
    pub mad: f64,
    pub r2: Option<f64>,
    pub baseline_mad: f64,
    pub baseline_r2: Option<f64>,
    pub weights: BTreeMap<String, f64>,
    pub bias: f64,
    pub importance: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
pub struct OodAggregate {
    pub mad: f64,
    pub r2: Option<f64>,
    pub baseline_mad: f64,
    pub baseline_r2: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OodReportFile {
    pub version: &'static str,
    pub seed: u64,
    pub holdout: usize,
    pub repeats: usize,
    pub ridge: f64,
    pub n_instances: usize,
    pub folds: Vec<OodFoldRow>,
    pub aggregate: OodAggregate,
    /// Mean of the fold importances, rescaled so the largest is 1.
    pub importance: BTreeMap<String, f64>,
}

fn importance_map(values: &[f64; 6]) -> BTreeMap<String, f64> {
    Dimension::ALL
        .iter()
        .map(|d| (d.name().to_string(), values[d.index()]))
        .collect()
}

fn fold_row(f: &FoldResult) -> OodFoldRow {
    OodFoldRow {
        held_out_pairs: f
            .held_out
            .iter()
            .map(|p| [p.source.clone(), p.target.clone()])
            .collect(),
        n_train: f.n_train,
        n_test: f.n_test,
        mad: f.fitted.mad,
        r2: f.fitted.r2,
        baseline_mad: f.baseline.mad,
        baseline_r2: f.baseline.r2,
        weights: input_names().into_iter().zip(f.model.weights).collect(),
        bias: f.model.bias,
        importance: importance_map(&f.importance),
    }
}

pub struct OodSettings {
    pub seed: u64,
    pub holdout: usize,
    pub repeats: usize,
    pub ridge: f64,
    pub n_instances: usize,
}

pub fn ood_report_file(report: &OodReport, s: &OodSettings) -> OodReportFile {
    OodReportFile {
        version: SCHEMA_VERSION,
        seed: s.seed,
        holdout: s.holdout,
        repeats: s.repeats,
        ridge: s.ridge,
        n_instances: s.n_instances,
        folds: report.folds.iter().map(fold_row).collect(),
        aggregate: OodAggregate {
            mad: report.mean_mad,
            r2: report.mean_r2,
            baseline_mad: report.baseline_mean_mad,
            baseline_r2: report.baseline_mean_r2,
        },
        importance: importance_map(&report.importance),
    }
}

#[derive(Debug, Serialize)]
pub struct CompareBinRow {
    pub bin_index: usize,
    pub size: usize,
    pub delta: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareModelsFile {
    pub version: &'static str,
    pub seed: u64,
    pub metric: String,
    pub dimension: String,
    pub model_a: String,
    pub model_b: String,
    pub full_delta: f64,
    pub bins: Vec<CompareBinRow>,
}

pub fn compare_bins(deltas: &[BinDelta]) -> Vec<CompareBinRow> {
    deltas
        .iter()
        .map(|d| CompareBinRow {
            bin_index: d.bin_index,
            size: d.size,
            delta: d.delta,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct CorrelationFile {
    pub version: &'static str,
    pub seed: u64,
    pub values: &'static str,
    pub dimensions: Vec<&'static str>,
    /// Pearson correlation; `null` where a column is constant.
    pub pearson: Vec<Vec<Option<f64>>>,
}

pub fn correlation_file(table: &FeatureTable, seed: u64) -> CorrelationFile {
    CorrelationFile {
        version: SCHEMA_VERSION,
        seed,
        values: "scaled",
        dimensions: Dimension::ALL.iter().map(|d| d.name()).collect(),
        pearson: table
            .correlation_matrix()
            .iter()
            .map(|r| r.to_vec())
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct SplitLine<'a> {
    pub version: &'static str,
    pub seed: u64,
    pub label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_index: Option<usize>,
    pub instance_ids: &'a [String],
}

pub fn split_line(split: &Split, seed: u64) -> SplitLine<'_> {
    SplitLine {
        version: SCHEMA_VERSION,
        seed,
        label: &split.label,
        dimension: split.dimension.map(Dimension::name),
        bin_index: split.bin_index,
        instance_ids: &split.instance_ids,
    }
}
