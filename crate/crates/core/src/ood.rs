//! Out-of-distribution score prediction: a linear map from a model's source
//! score and the source/target similarity vector to its target score.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::Dimension;
use crate::math;
use crate::sampling::trial_rng;
use crate::similarity::SimilarityVector;

/// Source score followed by the six signed SMD components.
pub const N_INPUTS: usize = 7;
pub const DEFAULT_RIDGE: f64 = 1e-8;
pub const DEFAULT_REPEATS: usize = 5;

/// Input column names, in `x` order.
pub fn input_names() -> [String; N_INPUTS] {
    let mut names: [String; N_INPUTS] = Default::default();
    names[0] = "source_score".into();
    for dim in Dimension::ALL {
        names[1 + dim.index()] = format!("smd_{}", dim.name());
    }
    names
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DatasetPair {
    pub source: String,
    pub target: String,
}

impl DatasetPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        DatasetPair {
            source: source.into(),
            target: target.into(),
        }
    }
}

/// Every ordered pair of distinct datasets.
pub fn all_ordered_pairs(datasets: &[String]) -> Vec<DatasetPair> {
    let mut pairs = Vec::new();
    for a in datasets {
        for b in datasets {
            if a != b {
                pairs.push(DatasetPair::new(a.clone(), b.clone()));
            }
        }
    }
    pairs
}

/// Aggregate scores (0 to 100) keyed by model then dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: &str, dataset: &str, score: f64) -> Result<()> {
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::InvalidParameter(format!(
                "score {score} for {model} on {dataset} outside [0, 100]"
            )));
        }
        self.scores
            .entry(model.into())
            .or_default()
            .insert(dataset.into(), score);
        Ok(())
    }

    pub fn get(&self, model: &str, dataset: &str) -> Option<f64> {
        self.scores.get(model)?.get(dataset).copied()
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodInstance {
    pub model_id: String,
    pub pair: DatasetPair,
    pub x: [f64; N_INPUTS],
    pub y: f64,
}

/// One instance per (model, pair), models in table order then pairs in the
/// given order.
pub fn build_ood_instances(
    scores: &ScoreTable,
    pairs: &[DatasetPair],
    similarity: &BTreeMap<DatasetPair, SimilarityVector>,
) -> Result<Vec<OodInstance>> {
    let mut out = Vec::with_capacity(pairs.len() * scores.scores.len());
    for model in scores.models() {
        for pair in pairs {
            let sim = similarity.get(pair).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no similarity vector for {} -> {}",
                    pair.source, pair.target
                ))
            })?;
            let score = |dataset: &str| {
                scores.get(model, dataset).ok_or_else(|| {
                    Error::InvalidParameter(format!("no score for {model} on {dataset}"))
                })
            };
            let mut x = [0.0; N_INPUTS];
            x[0] = score(&pair.source)?;
            x[1..].copy_from_slice(&sim.components);
            out.push(OodInstance {
                model_id: model.into(),
                pair: pair.clone(),
                x,
                y: score(&pair.target)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub held_out: Vec<DatasetPair>,
    pub train: Vec<OodInstance>,
    pub test: Vec<OodInstance>,
}

/// `repeats` folds, each holding out `holdout` randomly chosen pairs.
pub fn split_by_pairs(
    instances: &[OodInstance],
    holdout: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<Fold>> {
    let pairs: Vec<DatasetPair> = instances
        .iter()
        .map(|i| i.pair.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if holdout == 0 || holdout >= pairs.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot hold out {holdout} of {} pairs",
            pairs.len()
        )));
    }
    let folds = (0..repeats)
        .map(|r| {
            let mut rng = trial_rng(seed, r as u64);
            let mut picked = rand::seq::index::sample(&mut rng, pairs.len(), holdout).into_vec();
            picked.sort_unstable();
            let held_out: Vec<DatasetPair> = picked.iter().map(|&k| pairs[k].clone()).collect();
            let (test, train) = instances
                .iter()
                .cloned()
                .partition(|inst| held_out.contains(&inst.pair));
            Fold {
                held_out,
                train,
                test,
            }
        })
        .collect();
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodModel {
    pub weights: [f64; N_INPUTS],
    pub bias: f64,
    /// Per-input mean and population deviation of the training rows.
    pub input_means: [f64; N_INPUTS],
    pub input_sds: [f64; N_INPUTS],
    pub train_pairs: Vec<DatasetPair>,
    pub seed: u64,
}

impl OodModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != N_INPUTS {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: N_INPUTS,
            });
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }
}

/// Predicts the source score unchanged.
pub fn baseline_identity(x: &[f64]) -> Result<f64> {
    if x.len() != N_INPUTS {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: N_INPUTS,
        });
    }
    Ok(x[0])
}

/// Least squares on centered inputs with `ridge` added to the diagonal of
/// the normal equations. The intercept is recovered from the means, so it is
/// not shrunk.
pub fn fit_ols(train: &[OodInstance], ridge: f64, seed: u64) -> Result<OodModel> {
    if train.len() <= N_INPUTS {
        return Err(Error::TooFew {
            needed: N_INPUTS + 1,
            got: train.len(),
        });
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ridge {ridge} must be >= 0"
        )));
    }
    let n = train.len() as f64;
    let mut means = [0.0; N_INPUTS];
    for inst in train {
        for (m, v) in means.iter_mut().zip(&inst.x) {
            *m += v / n;
        }
    }
    let y_mean = train.iter().map(|i| i.y).sum::<f64>() / n;

    let mut gram = [[0.0; N_INPUTS]; N_INPUTS];
    let mut rhs = [0.0; N_INPUTS];
    for inst in train {
        let centered: [f64; N_INPUTS] = core::array::from_fn(|k| inst.x[k] - means[k]);
        let dy = inst.y - y_mean;
        for r in 0..N_INPUTS {
            rhs[r] += centered[r] * dy;
            for c in 0..N_INPUTS {
                gram[r][c] += centered[r] * centered[c];
            }
        }
    }
    let mut sds = [0.0; N_INPUTS];
    for k in 0..N_INPUTS {
        sds[k] = math::sqrt(gram[k][k] / n);
        gram[k][k] += ridge;
    }
    let weights = solve(gram, rhs)?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite regression weights".into(),
        ));
    }
    let bias = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
    let train_pairs = train
        .iter()
        .map(|i| i.pair.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(OodModel {
        weights,
        bias,
        input_means: means,
        input_sds: sds,
        train_pairs,
        seed,
    })
}

// Gaussian elimination with partial pivoting.
fn solve(mut a: [[f64; N_INPUTS]; N_INPUTS], mut b: [f64; N_INPUTS]) -> Result<[f64; N_INPUTS]> {
    let names = input_names();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(math::abs(*v)));
    for col in 0..N_INPUTS {
        let pivot = (col..N_INPUTS)
            .max_by(|&i, &j| math::abs(a[i][col]).total_cmp(&math::abs(a[j][col])))
            .unwrap_or(col);
        if math::abs(a[pivot][col]) <= scale * 1e-15 || a[pivot][col] == 0.0 {
            return Err(Error::Singular {
                column: names[col].clone(),
            });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N_INPUTS {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; N_INPUTS];
    for row in (0..N_INPUTS).rev() {
        let tail: f64 = (row + 1..N_INPUTS).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub mad: f64,
    /// `None` when the targets are constant.
    pub r2: Option<f64>,
}

pub fn evaluate(predictions: &[f64], targets: &[f64]) -> Result<Evaluation> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::Empty("nothing to evaluate"));
    }
    let n = targets.len() as f64;
    let mad = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| math::abs(p - y))
        .sum::<f64>()
        / n;
    let y_mean = math::mean(targets);
    let ss_tot: f64 = targets.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let ss_res: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(Evaluation { mad, r2 })
}

/// `|w|` divided by the largest entry. All-zero input stays all zero.
pub fn normalize_importance(weights: &[f64; 6]) -> [f64; 6] {
    let max = weights.iter().fold(0.0f64, |acc, w| acc.max(math::abs(*w)));
    if max == 0.0 {
        log::warn!("all similarity weights are zero; importance is undefined");
        return [0.0; 6];
    }
    weights.map(|w| math::abs(w) / max)
}

/// Normalized importance of the six SMD inputs, using the weights the model
/// would have on standardized inputs (`w_k * sd_k`).
pub fn feature_importance(model: &OodModel) -> [f64; 6] {
    let standardized: [f64; 6] =
        core::array::from_fn(|k| model.weights[k + 1] * model.input_sds[k + 1]);
    normalize_importance(&standardized)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub held_out: Vec<DatasetPair>,
    pub n_train: usize,
    pub n_test: usize,
    pub model: OodModel,
    pub fitted: Evaluation,
    pub baseline: Evaluation,
    pub importance: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodReport {
    pub folds: Vec<FoldResult>,
    pub mean_mad: f64,
    /// Mean over folds with a defined R2.
    pub mean_r2: Option<f64>,
    pub baseline_mean_mad: f64,
    pub baseline_mean_r2: Option<f64>,
    /// Fold importances averaged, then rescaled so the largest is 1.
    pub importance: [f64; 6],
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| math::mean(&defined))
}

pub fn evaluate_fold(fold: &Fold, ridge: f64, seed: u64) -> Result<FoldResult> {
    let model = fit_ols(&fold.train, ridge, seed)?;
    let targets: Vec<f64> = fold.test.iter().map(|i| i.y).collect();
    let predicted = fold
        .test
        .iter()
        .map(|i| model.predict(&i.x))
        .collect::<Result<Vec<_>>>()?;
    let identity = fold
        .test
        .iter()
        .map(|i| baseline_identity(&i.x))
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldResult {
        held_out: fold.held_out.clone(),
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        fitted: evaluate(&predicted, &targets)?,
        baseline: evaluate(&identity, &targets)?,
        importance: feature_importance(&model),
        model,
    })
}

/// Split, fit and score `repeats` folds, each holding out `holdout` pairs.
pub fn run_ood(
    instances: &[OodInstance],
    holdout: usize,
    repeats: usize,
    ridge: f64,
    seed: u64,
) -> Result<OodReport> {
    if repeats == 0 {
        return Err(Error::InvalidParameter(
            "at least one repeat is needed".into(),
        ));
    }
    let folds = split_by_pairs(instances, holdout, repeats, seed)?
        .iter()
        .enumerate()
        .map(|(r, fold)| evaluate_fold(fold, ridge, crate::sampling::child_seed(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut importance = [0.0; 6];
    for f in &folds {
        for (acc, v) in importance.iter_mut().zip(&f.importance) {
            *acc += v / folds.len() as f64;
        }
    }
    let mad: Vec<f64> = folds.iter().map(|f| f.fitted.mad).collect();
    let baseline_mad: Vec<f64> = folds.iter().map(|f| f.baseline.mad).collect();
    Ok(OodReport {
        mean_mad: math::mean(&mad),
        mean_r2: mean_defined(folds.iter().map(|f| f.fitted.r2)),
        baseline_mean_mad: math::mean(&baseline_mad),
        baseline_mean_r2: mean_defined(folds.iter().map(|f| f.baseline.r2)),
        importance: normalize_importance(&importance),
        folds,
    })
}
