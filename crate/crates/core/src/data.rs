//! Datasets, prediction sets and the per-instance score matrix that every
//! bootstrap analysis runs on.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Classification,
    ExtractiveQa,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Classification => "classification",
            TaskKind::ExtractiveQa => "extractive_qa",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(TaskKind::Classification),
            "extractive_qa" => Ok(TaskKind::ExtractiveQa),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown task kind `{other}`"
            ))),
        }
    }
}

/// One evaluation item. `text_a` is the context or premise, `text_b` the
/// question or hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub task_kind: TaskKind,
    pub text_a: String,
    pub text_b: String,
    /// Classification: exactly one label. QA: every acceptable answer.
    pub gold: Vec<String>,
    pub annotator_labels: Vec<String>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidInstance("empty id".into()));
        }
        if self.gold.is_empty() {
            return Err(Error::InvalidInstance(alloc::format!(
                "`{}` has no gold answer",
                self.id
            )));
        }
        if self.task_kind == TaskKind::Classification && self.gold.len() != 1 {
            return Err(Error::InvalidInstance(alloc::format!(
                "`{}`: classification instances take exactly one gold label",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    task_kind: TaskKind,
    domain_tag: Option<String>,
    instances: Vec<Instance>,
    index: BTreeMap<String, usize>,
}

impl Dataset {
    /// Builds a dataset, keeping insertion order and rejecting duplicate ids,
    /// invalid instances and mixed task kinds.
    pub fn new(
        name: impl Into<String>,
        task_kind: TaskKind,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, inst) in instances.iter().enumerate() {
            inst.validate()?;
            if inst.task_kind != task_kind {
                return Err(Error::InvalidInstance(alloc::format!(
                    "`{}` is {} but the dataset is {}",
                    inst.id,
                    inst.task_kind,
                    task_kind
                )));
            }
            if index.insert(inst.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            task_kind,
            domain_tag: None,
            instances,
            index,
        })
    }

    pub fn with_domain_tag(mut self, tag: impl Into<String>) -> Self {
        self.domain_tag = Some(tag.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn domain_tag(&self) -> Option<&str> {
        self.domain_tag.as_deref()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.index.get(id).map(|&i| &self.instances[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|i| i.id.as_str())
    }

    /// A new dataset restricted to `ids`, in the order given.
    pub fn subset(&self, name: impl Into<String>, ids: &[String]) -> Result<Dataset> {
        let instances = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownId(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(name, self.task_kind, instances)
    }
}

pub type ClassProbabilities = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    model_id: String,
    predictions: BTreeMap<String, String>,
    class_probabilities: Option<BTreeMap<String, ClassProbabilities>>,
}

/// Probability maps must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;

impl PredictionSet {
    pub fn new(model_id: impl Into<String>, predictions: BTreeMap<String, String>) -> Self {
        PredictionSet {
            model_id: model_id.into(),
            predictions,
            class_probabilities: None,
        }
    }

    pub fn with_probabilities(
        mut self,
        probabilities: BTreeMap<String, ClassProbabilities>,
    ) -> Result<Self> {
        for (id, probs) in &probabilities {
            check_probabilities(id, probs)?;
        }
        self.class_probabilities = Some(probabilities);
        Ok(self)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn predictions(&self) -> &BTreeMap<String, String> {
        &self.predictions
    }

    pub fn class_probabilities(&self) -> Option<&BTreeMap<String, ClassProbabilities>> {
        self.class_probabilities.as_ref()
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.predictions.get(id).map(String::as_str)
    }
}

pub fn check_probabilities(id: &str, probs: &ClassProbabilities) -> Result<()> {
    if probs.values().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidRecord {
            id: id.into(),
            reason: "probability outside [0, 1]".into(),
        });
    }
    let sum: f64 = probs.values().sum();
    if crate::math::abs(sum - 1.0) > PROBABILITY_TOLERANCE {
        return Err(Error::ProbabilitySum { id: id.into(), sum });
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinReport {
    pub missing: Vec<String>,
    pub extraneous: Vec<String>,
}

impl JoinReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty() && self.extraneous.is_empty()
    }
}

/// Ids the dataset has but the predictions lack (in dataset order), and ids
/// the predictions carry that the dataset does not know (sorted).
pub fn validate_join(dataset: &Dataset, preds: &PredictionSet) -> JoinReport {
    let missing = dataset
        .ids()
        .filter(|id| !preds.predictions.contains_key(*id))
        .map(String::from)
        .collect();
    let extraneous = preds
        .predictions
        .keys()
        .filter(|id| dataset.get(id).is_none())
        .cloned()
        .collect();
    JoinReport {
        missing,
        extraneous,
    }
}

fn require_join(dataset: &Dataset, preds: &PredictionSet) -> Result<()> {
    let report = validate_join(dataset, preds);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::IncompleteJoin {
            model: preds.model_id.clone(),
            missing: report.missing,
            extraneous: report.extraneous,
        })
    }
}

/// One score in [0, 1] per instance, in dataset order.
pub fn score_instances(
    dataset: &Dataset,
    preds: &PredictionSet,
    metric: MetricKind,
) -> Result<Vec<f64>> {
    let metric = metric.resolve_for(dataset.task_kind())?;
    require_join(dataset, preds)?;
    Ok(dataset
        .instances()
        .iter()
        .map(|inst| metric.score(&preds.predictions[&inst.id], &inst.gold))
        .collect())
}

/// Mean score on the 0-100 scale.
pub fn aggregate_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("cannot aggregate an empty score vector"));
    }
    Ok(crate::math::mean(scores) * 100.0)
}

/// Dense model x instance matrix of per-instance scores in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    model_ids: Vec<String>,
    instance_ids: Vec<String>,
    scores: Vec<f64>,
    metric_name: String,
    column_lookup: BTreeMap<String, usize>,
}

impl ScoreMatrix {
    /// `rows[m]` holds model `m`'s scores, one per instance.
    pub fn from_rows(
        model_ids: Vec<String>,
        instance_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        metric_name: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != model_ids.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: model_ids.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for m in &model_ids {
            if !seen.insert(m.as_str()) {
                return Err(Error::DuplicateModel(m.clone()));
            }
        }
        let mut column_lookup = BTreeMap::new();
        for (i, id) in instance_ids.iter().enumerate() {
            if column_lookup.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let mut scores = Vec::with_capacity(rows.len() * instance_ids.len());
        for row in rows {
            if row.len() != instance_ids.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: instance_ids.len(),
                });
            }
            if let Some(bad) = row.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "score {bad} outside [0, 1]"
                )));
            }
            scores.extend(row);
        }
        Ok(ScoreMatrix {
            model_ids,
            instance_ids,
            scores,
            metric_name: metric_name.into(),
            column_lookup,
        })
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn row(&self, model: usize) -> &[f64] {
        let n = self.n_instances();
        &self.scores[model * n..(model + 1) * n]
    }

    pub fn model_index(&self, model_id: &str) -> Option<usize> {
        self.model_ids.iter().position(|m| m == model_id)
    }

    /// Maps instance ids to column indices.
    pub fn columns_of(&self, ids: &[String]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.column_lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownId(id.clone()))
            })
            .collect()
    }

    /// Aggregate (0-100) score of `model` on the given columns.
    pub fn subset_score(&self, model: usize, columns: &[usize]) -> Result<f64> {
        if columns.is_empty() {
            return Err(Error::Empty("cannot score an empty split"));
        }
        let row = self.row(model);
        let sum: f64 = columns.iter().map(|&c| row[c]).sum();
        Ok(sum / columns.len() as f64 * 100.0)
    }

    pub fn full_score(&self, model: usize) -> Result<f64> {
        aggregate_score(self.row(model))
    }
}

/// One row per prediction set, in the given order; columns follow the dataset.
pub fn build_score_matrix(
    dataset: &Dataset,
    all_preds: &[PredictionSet],
    metric: MetricKind,
) -> Result<ScoreMatrix> {
    let mut seen = BTreeSet::new();
    for p in all_preds {
        if !seen.insert(p.model_id()) {
            return Err(Error::DuplicateModel(p.model_id.clone()));
        }
    }
    let rows = all_preds
        .iter()
        .map(|p| score_instances(dataset, p, metric))
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::from_rows(
        all_preds.iter().map(|p| p.model_id.clone()).collect(),
        dataset.ids().map(String::from).collect(),
        rows,
        metric.resolve_for(dataset.task_kind())?.name(),
    )
}
