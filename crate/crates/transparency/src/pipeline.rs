//! The subcommands as plain functions of (input files, [`RunConfig`]).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use transparency_core::data::{aggregate_score, build_score_matrix, score_instances};
use transparency_core::features::{
    compute_ambiguity, compute_difficulty, compute_length, compute_noise, compute_perplexity,
    Provenance,
};
use transparency_core::irt::{discriminability_column, fit_2pl, IrtConfig, ResponseMatrix};
use transparency_core::metrics::cls_macro_f1;
use transparency_core::ood::{build_ood_instances, run_ood, DatasetPair, ScoreTable};
use transparency_core::sampling::{random_samples, stratified_deciles_degenerate, Split};
use transparency_core::similarity::{similarity_vector, SimilarityVector};
use transparency_core::stats::{
    compare_models, decile_curve, f1_variance_report, metric_delta_report, random_baseline,
    rank_variance_report,
};
use transparency_core::{
    Dataset, Dimension, Error, FeatureTable, MetricKind, PredictionSet, ScoreMatrix, TaskKind,
};

use crate::error::{CliError, Result};
use crate::ingest::{
    file_stem, parse_instances, parse_perplexity, parse_precomputed, parse_predictions_dir,
    parse_pvi, parse_traces, read_jsonl,
};
use crate::report::{self, SCHEMA_VERSION};
use crate::table_io::{
    read_feature_table, write_csv_rows, write_feature_table, write_features_csv, write_json,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: TaskKind,
    pub instances: Option<PathBuf>,
    pub predictions_dir: Option<PathBuf>,
    pub traces: Option<PathBuf>,
    pub pvi: Option<PathBuf>,
    pub ppl: Option<PathBuf>,
    pub features: Option<PathBuf>,
    /// `{"id", "<dimension>": value}` lines for dimensions computed elsewhere.
    pub precomputed: Option<PathBuf>,
    pub metric: Option<MetricKind>,
    pub bins: usize,
    pub trials: usize,
    pub fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(task: TaskKind, seed: u64, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            task,
            instances: None,
            predictions_dir: None,
            traces: None,
            pvi: None,
            ppl: None,
            features: None,
            precomputed: None,
            metric: None,
            bins: transparency_core::sampling::DEFAULT_BINS,
            trials: transparency_core::sampling::DEFAULT_TRIALS,
            fraction: transparency_core::sampling::DEFAULT_FRACTION,
            seed,
            out: out.into(),
            format: OutputFormat::Json,
        }
    }

    /// Every path the config names must exist before any work starts.
    pub fn check_paths(&self) -> Result<()> {
        let named = [
            &self.instances,
            &self.predictions_dir,
            &self.traces,
            &self.pvi,
            &self.ppl,
            &self.features,
            &self.precomputed,
        ];
        for path in named.into_iter().flatten() {
            if !path.exists() {
                return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
            }
        }
        Ok(())
    }

    fn required<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| CliError::Usage(format!("--{flag} is required for this command")))
    }

    fn dataset(&self) -> Result<Dataset> {
        parse_instances(self.required(&self.instances, "instances")?, self.task)
    }

    fn predictions(&self) -> Result<Vec<PredictionSet>> {
        parse_predictions_dir(self.required(&self.predictions_dir, "predictions-dir")?)
    }

    /// The requested metric, or token F1 / accuracy by task.
    pub fn metric(&self) -> MetricKind {
        self.metric.unwrap_or(match self.task {
            TaskKind::ExtractiveQa => MetricKind::QaTokenF1,
            TaskKind::Classification => MetricKind::ClsAccuracy,
        })
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Binary correctness used for IRT responses.
pub fn response_metric(task: TaskKind) -> MetricKind {
    match task {
        TaskKind::ExtractiveQa => MetricKind::QaExact,
        TaskKind::Classification => MetricKind::ClsAccuracy,
    }
}

/// Values keyed by id, reordered to the dataset. Ids the dataset lacks are
/// ignored with a warning.
fn align(dataset: &Dataset, values: &BTreeMap<String, f64>, source: &Path) -> Result<Vec<f64>> {
    let extra = values.keys().filter(|id| dataset.get(id).is_none()).count();
    if extra > 0 {
        log::warn!(
            "{}: {extra} records for unknown instances ignored",
            source.display()
        );
    }
    dataset
        .ids()
        .map(|id| {
            values
                .get(id)
                .copied()
                .ok_or_else(|| CliError::format(source, format!("no record for instance `{id}`")))
        })
        .collect()
}

fn computed_column(config: &RunConfig, dataset: &Dataset, dim: Dimension) -> Result<Vec<f64>> {
    let unavailable = || {
        CliError::Core(Error::DimensionUnavailable {
            dimension: dim.name(),
        })
    };
    match dim {
        Dimension::Length => Ok(dataset
            .instances()
            .iter()
            .map(|i| compute_length(i) as f64)
            .collect()),
        Dimension::Noise => {
            if dataset
                .instances()
                .iter()
                .any(|i| i.annotator_labels.len() < 2)
            {
                return Err(unavailable());
            }
            Ok(dataset
                .instances()
                .iter()
                .map(compute_noise)
                .collect::<transparency_core::Result<Vec<_>>>()?)
        }
        Dimension::Ambiguity => {
            let path = config.traces.as_deref().ok_or_else(unavailable)?;
            let values = parse_traces(path)?
                .iter()
                .map(|r| (r.id().to_string(), compute_ambiguity(r)))
                .collect();
            align(dataset, &values, path)
        }
        Dimension::Difficulty => {
            let path = config.pvi.as_deref().ok_or_else(unavailable)?;
            let values = parse_pvi(path)?
                .iter()
                .map(|r| (r.id().to_string(), compute_difficulty(r)))
                .collect();
            align(dataset, &values, path)
        }
        Dimension::Perplexity => {
            let path = config.ppl.as_deref().ok_or_else(unavailable)?;
            let values = parse_perplexity(path)?
                .iter()
                .map(|r| (r.id().to_string(), compute_perplexity(r)))
                .collect();
            align(dataset, &values, path)
        }
        Dimension::Discriminability => {
            if config.predictions_dir.is_none() {
                return Err(unavailable());
            }
            let preds = config.predictions()?;
            let matrix = build_score_matrix(dataset, &preds, response_metric(dataset.task_kind()))?;
            let responses = ResponseMatrix::from_scores(&matrix)?;
            let irt = IrtConfig {
                seed: config.seed,
                ..IrtConfig::default()
            };
            let fit = fit_2pl(&responses, &irt)?;
            log::info!(
                "IRT: objective {:.3} -> {:.3} (best at iteration {})",
                fit.initial_objective,
                fit.objective,
                fit.best_iteration
            );
            Ok(discriminability_column(&fit.params))
        }
    }
}

/// Builds the feature table. A dimension present in the precomputed file is
/// ingested as is; every other one is computed from its source.
pub fn build_features(config: &RunConfig, dataset: &Dataset) -> Result<FeatureTable> {
    let precomputed = match &config.precomputed {
        Some(path) => parse_precomputed(path)?,
        None => BTreeMap::new(),
    };
    let mut raw = Vec::with_capacity(6);
    for dim in Dimension::ALL {
        let column = match precomputed.get(&dim) {
            Some(values) => {
                let path = config.precomputed.as_deref().expect("precomputed path");
                (align(dataset, values, path)?, Provenance::Ingested)
            }
            None => (computed_column(config, dataset, dim)?, Provenance::Computed),
        };
        raw.push(column);
    }
    let raw: [(Vec<f64>, Provenance); 6] = raw
        .try_into()
        .unwrap_or_else(|_| unreachable!("six dimensions"));
    Ok(FeatureTable::from_raw(
        dataset.ids().map(String::from).collect(),
        raw,
    )?)
}

/// Writes `features.jsonl`, its scaler side-car and `correlations.json`
/// (plus `features.csv` with `--format csv`).
pub fn cmd_features(config: &RunConfig) -> Result<FeatureTable> {
    config.check_paths()?;
    let dataset = config.dataset()?;
    let table = build_features(config, &dataset)?;
    write_feature_table(&table, &config.out_file("features.jsonl"), config.seed)?;
    write_json(
        &config.out_file("correlations.json"),
        &report::correlation_file(&table, config.seed),
    )?;
    if config.format == OutputFormat::Csv {
        write_features_csv(&table, &config.out_file("features.csv"), config.seed)?;
    }
    Ok(table)
}

/// Dataset, feature table (covering exactly the dataset) and score matrix.
fn load_scored(
    config: &RunConfig,
) -> Result<(Dataset, FeatureTable, Vec<PredictionSet>, ScoreMatrix)> {
    let dataset = config.dataset()?;
    let features_path = config.required(&config.features, "features")?;
    let table = read_feature_table(features_path)?;
    table
        .check_against(&dataset)
        .map_err(|e| CliError::format(features_path, e.to_string()))?;
    if table.len() != dataset.len() {
        return Err(CliError::format(
            features_path,
            format!("{} rows for a dataset of {}", table.len(), dataset.len()),
        ));
    }
    let preds = config.predictions()?;
    let matrix = build_score_matrix(&dataset, &preds, config.metric())?;
    Ok((dataset, table, preds, matrix))
}

/// The paired metric for the "metric" row: token F1 vs exact match for QA,
/// accuracy vs macro-F1 for classification.
fn metric_pair(task: TaskKind) -> (MetricKind, MetricKind) {
    match task {
        TaskKind::ExtractiveQa => (MetricKind::QaTokenF1, MetricKind::QaExact),
        TaskKind::Classification => (MetricKind::ClsAccuracy, MetricKind::ClsMacroF1),
    }
}

fn full_scores(
    dataset: &Dataset,
    preds: &[PredictionSet],
    metric: MetricKind,
) -> Result<Vec<(String, f64)>> {
    preds
        .iter()
        .map(|p| {
            let score = if metric == MetricKind::ClsMacroF1 {
                // validates the join before reading predictions in dataset order
                score_instances(dataset, p, MetricKind::ClsAccuracy)?;
                let predicted: Vec<&str> = dataset
                    .ids()
                    .map(|id| p.get(id).unwrap_or_default())
                    .collect();
                let gold: Vec<&str> = dataset
                    .instances()
                    .iter()
                    .map(|i| i.gold[0].as_str())
                    .collect();
                cls_macro_f1(&predicted, &gold)? * 100.0
            } else {
                aggregate_score(&score_instances(dataset, p, metric)?)?
            };
            Ok((p.model_id().to_string(), score))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Skipped {
    dimension: &'static str,
    reason: String,
}

#[derive(Debug, Serialize)]
struct AnalyzeFile {
    #[serde(flatten)]
    bootstrap: report::BootstrapReportFile,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<Skipped>,
}

/// Stratified splits per dimension; dimensions that cannot be binned are
/// returned separately with the reason.
type DimensionSplits = Vec<(Dimension, Vec<Split>)>;

fn dimension_splits(table: &FeatureTable, bins: usize) -> Result<(DimensionSplits, Vec<Skipped>)> {
    let mut splits = Vec::new();
    let mut skipped = Vec::new();
    for dim in Dimension::ALL {
        match stratified_deciles_degenerate(table, dim, bins) {
            Ok(s) => splits.push((dim, s)),
            Err(Error::DegenerateSplit(reason)) => {
                log::warn!("skipping {dim}: {reason}");
                skipped.push(Skipped {
                    dimension: dim.name(),
                    reason,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((splits, skipped))
}

/// Writes `bootstrap_report.json`, `rank_report.json` (two or more models)
/// and `decile_curves.csv`.
pub fn cmd_analyze(config: &RunConfig) -> Result<()> {
    config.check_paths()?;
    let (dataset, table, preds, matrix) = load_scored(config)?;
    let random = random_samples(
        matrix.instance_ids(),
        config.fraction,
        config.trials,
        config.seed,
    )?;
    let baseline = random_baseline(&matrix, &random)?;
    let (splits, skipped) = dimension_splits(&table, config.bins)?;

    let mut dimensions = Vec::new();
    let mut curves = Vec::new();
    for (dim, s) in &splits {
        let r = f1_variance_report(&matrix, s, &baseline.bounds, dim.name())?;
        dimensions.push(report::dimension_row(&r, config.trials));
        curves.extend(report::curve_rows(
            dim.name(),
            &decile_curve(&matrix, s, &baseline.bounds)?,
            config.seed,
        ));
    }

    let (metric_a, metric_b) = metric_pair(dataset.task_kind());
    let delta = metric_delta_report(
        metric_a.name(),
        &full_scores(&dataset, &preds, metric_a)?,
        metric_b.name(),
        &full_scores(&dataset, &preds, metric_b)?,
    )?;
    let full: Vec<f64> = (0..matrix.n_models())
        .map(|m| matrix.full_score(m))
        .collect::<transparency_core::Result<_>>()?;

    let file = AnalyzeFile {
        bootstrap: report::BootstrapReportFile {
            version: SCHEMA_VERSION,
            seed: config.seed,
            metric: matrix.metric_name().into(),
            bins: config.bins,
            random: report::random_row(&baseline, matrix.model_ids(), &full, config.fraction),
            metric_delta: Some((&delta).into()),
            dimensions,
        },
        skipped,
    };
    write_json(&config.out_file("bootstrap_report.json"), &file)?;
    write_csv_rows(
        &config.out_file("decile_curves.csv"),
        &report::CURVE_HEADER,
        &curves,
    )?;

    if matrix.n_models() >= 2 {
        let labelled: Vec<(String, Vec<Split>)> = splits
            .iter()
            .map(|(d, s)| (d.name().to_string(), s.clone()))
            .collect();
        let rank = rank_variance_report(&matrix, &random, &labelled)?;
        write_json(
            &config.out_file("rank_report.json"),
            &report::rank_report_file(
                &rank,
                config.seed,
                matrix.metric_name(),
                config.bins,
                config.trials,
            ),
        )?;
    } else {
        log::warn!("ranking consistency needs two or more models; rank_report.json not written");
    }
    Ok(())
}

/// Signed SMD vector of `a` against `b`, written to `similarity.json`.
pub fn cmd_compare(
    config: &RunConfig,
    a: &Path,
    b: &Path,
    names: (Option<String>, Option<String>),
) -> Result<SimilarityVector> {
    for p in [a, b] {
        if !p.exists() {
            return Err(CliError::io(p, std::io::ErrorKind::NotFound.into()));
        }
    }
    let v = similarity_vector(&read_feature_table(a)?, &read_feature_table(b)?)?;
    let name_a = names.0.unwrap_or_else(|| dataset_name(a));
    let name_b = names.1.unwrap_or_else(|| dataset_name(b));
    write_json(
        &config.out_file("similarity.json"),
        &report::similarity_file(&name_a, &name_b, &v, config.seed),
    )?;
    Ok(v)
}

/// File stem, or the parent directory name for the generic `features`.
fn dataset_name(path: &Path) -> String {
    let stem = file_stem(path);
    if stem != "features" {
        return stem;
    }
    path.parent()
        .and_then(Path::file_name)
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or(stem)
}

#[derive(Deserialize)]
struct ScoreLine {
    model_id: String,
    dataset: String,
    score: f64,
}

/// One line of a pairs file; the same shape `similarity.json` uses.
#[derive(Deserialize)]
struct PairLine {
    a: String,
    b: String,
    smd: BTreeMap<String, f64>,
}

pub struct OodOptions {
    pub scores: PathBuf,
    pub pairs: PathBuf,
    pub holdout: usize,
    pub repeats: usize,
    pub ridge: f64,
}

fn read_scores(path: &Path) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for (n, line) in read_jsonl::<ScoreLine>(path)? {
        if table.get(&line.model_id, &line.dataset).is_some() {
            return Err(CliError::parse(
                path,
                n,
                format!("duplicate score for {} on {}", line.model_id, line.dataset),
            ));
        }
        table
            .insert(&line.model_id, &line.dataset, line.score)
            .map_err(|e| CliError::parse(path, n, e.to_string()))?;
    }
    Ok(table)
}

fn read_pairs(path: &Path) -> Result<(Vec<DatasetPair>, BTreeMap<DatasetPair, SimilarityVector>)> {
    let mut pairs = Vec::new();
    let mut sims = BTreeMap::new();
    for (n, line) in read_jsonl::<PairLine>(path)? {
        let mut components = [0.0; 6];
        for dim in Dimension::ALL {
            components[dim.index()] = *line.smd.get(dim.name()).ok_or_else(|| {
                CliError::parse(path, n, format!("missing smd component `{dim}`"))
            })?;
        }
        let pair = DatasetPair::new(line.a, line.b);
        if sims
            .insert(pair.clone(), SimilarityVector::from_components(components))
            .is_some()
        {
            return Err(CliError::parse(
                path,
                n,
                format!("duplicate pair {} -> {}", pair.source, pair.target),
            ));
        }
        pairs.push(pair);
    }
    Ok((pairs, sims))
}

/// Fits and evaluates the OOD predictor; writes `ood_report.json`.
pub fn cmd_predict_ood(config: &RunConfig, options: &OodOptions) -> Result<report::OodReportFile> {
    for p in [&options.scores, &options.pairs] {
        if !p.exists() {
            return Err(CliError::io(p, std::io::ErrorKind::NotFound.into()));
        }
    }
    let scores = read_scores(&options.scores)?;
    let (pairs, sims) = read_pairs(&options.pairs)?;
    let instances = build_ood_instances(&scores, &pairs, &sims)?;
    let result = run_ood(
        &instances,
        options.holdout,
        options.repeats,
        options.ridge,
        config.seed,
    )?;
    let file = report::ood_report_file(
        &result,
        &report::OodSettings {
            seed: config.seed,
            holdout: options.holdout,
            repeats: options.repeats,
            ridge: options.ridge,
            n_instances: instances.len(),
        },
    );
    write_json(&config.out_file("ood_report.json"), &file)?;
    Ok(file)
}

/// Per-bin score difference of two models along one dimension.
pub fn cmd_compare_models(
    config: &RunConfig,
    model_a: &str,
    model_b: &str,
    dim: Dimension,
) -> Result<report::CompareModelsFile> {
    config.check_paths()?;
    let (_, table, _, matrix) = load_scored(config)?;
    let splits = stratified_deciles_degenerate(&table, dim, config.bins)?;
    let deltas = compare_models(&matrix, &splits, model_a, model_b)?;
    let index = |m: &str| {
        matrix
            .model_index(m)
            .ok_or_else(|| Error::UnknownModel(m.into()))
    };
    let full_delta = matrix.full_score(index(model_a)?)? - matrix.full_score(index(model_b)?)?;
    let file = report::CompareModelsFile {
        version: SCHEMA_VERSION,
        seed: config.seed,
        metric: matrix.metric_name().into(),
        dimension: dim.name().into(),
        model_a: model_a.into(),
        model_b: model_b.into(),
        full_delta,
        bins: report::compare_bins(&deltas),
    };
    match config.format {
        OutputFormat::Json => write_json(&config.out_file("compare_models.json"), &file)?,
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = file
                .bins
                .iter()
                .map(|b| {
                    vec![
                        SCHEMA_VERSION.into(),
                        config.seed.to_string(),
                        file.dimension.clone(),
                        b.bin_index.to_string(),
                        b.size.to_string(),
                        crate::table_io::float(b.delta),
                    ]
                })
                .collect();
            write_csv_rows(
                &config.out_file("compare_models.csv"),
                &["version", "seed", "dimension", "bin_index", "size", "delta"],
                &rows,
            )?;
        }
    }
    Ok(file)
}

/// Writes `splits.jsonl`: the random samples, then each dimension's bins.
pub fn cmd_sample(config: &RunConfig) -> Result<usize> {
    config.check_paths()?;
    let features_path = config.required(&config.features, "features")?;
    let table = read_feature_table(features_path)?;
    let mut all = random_samples(table.ids(), config.fraction, config.trials, config.seed)?;
    let (splits, _) = dimension_splits(&table, config.bins)?;
    all.extend(splits.into_iter().flat_map(|(_, s)| s));
    let mut out = Vec::new();
    for s in &all {
        serde_json::to_writer(&mut out, &report::split_line(s, config.seed))
            .expect("splits serialize");
        out.push(b'\n');
    }
    let path = config.out_file("splits.jsonl");
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    fs::write(&path, out).map_err(|e| CliError::io(&path, e))?;
    Ok(all.len())
}
