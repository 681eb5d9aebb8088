//! Expected random variance of absolute scores and per-split significance.

use alloc::string::String;
use alloc::vec::Vec;

use super::{percentile, LOWER_PERCENTILE, UPPER_PERCENTILE};
use crate::data::ScoreMatrix;
use crate::error::{Error, Result};
use crate::features::Dimension;
use crate::math;
use crate::sampling::Split;

/// Below this many trials the 2.5/97.5 percentiles are too unstable to trust.
pub const MIN_STABLE_TRIALS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapBounds {
    pub lower: f64,
    pub upper: f64,
    pub trial_scores: Vec<f64>,
}

impl BootstrapBounds {
    /// Strictly outside the closed band.
    pub fn is_significant(&self, score: f64) -> bool {
        score < self.lower || score > self.upper
    }
}

/// Band between the 2.5th and 97.5th percentile of the trial scores.
pub fn bootstrap_bounds(trial_scores: &[f64]) -> Result<BootstrapBounds> {
    if trial_scores.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: trial_scores.len(),
        });
    }
    if trial_scores.len() < MIN_STABLE_TRIALS {
        log::warn!(
            "only {} bootstrap trials; percentile bounds are unstable below {MIN_STABLE_TRIALS}",
            trial_scores.len()
        );
    }
    Ok(BootstrapBounds {
        lower: percentile(trial_scores, LOWER_PERCENTILE)?,
        upper: percentile(trial_scores, UPPER_PERCENTILE)?,
        trial_scores: trial_scores.to_vec(),
    })
}

pub(crate) fn resolve(matrix: &ScoreMatrix, splits: &[Split]) -> Result<Vec<Vec<usize>>> {
    splits
        .iter()
        .map(|s| matrix.columns_of(&s.instance_ids))
        .collect()
}

/// Aggregate (0-100) score of `model` on every split.
pub fn split_scores(matrix: &ScoreMatrix, model: usize, splits: &[Split]) -> Result<Vec<f64>> {
    resolve(matrix, splits)?
        .iter()
        .map(|cols| matrix.subset_score(model, cols))
        .collect()
}

fn score_grid(matrix: &ScoreMatrix, columns: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
    (0..matrix.n_models())
        .map(|m| {
            columns
                .iter()
                .map(|cols| matrix.subset_score(m, cols))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn range(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Per-model bounds from the random splits, plus the "random" reference row:
/// mean standard deviation of trial scores and the share of trial scores
/// outside their own model's band.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomBaseline {
    pub bounds: Vec<BootstrapBounds>,
    pub mean_sigma: f64,
    pub pct_significant: f64,
}

pub fn random_baseline(matrix: &ScoreMatrix, random_splits: &[Split]) -> Result<RandomBaseline> {
    if matrix.n_models() == 0 {
        return Err(Error::Empty("score matrix has no models"));
    }
    let columns = resolve(matrix, random_splits)?;
    let grid = score_grid(matrix, &columns)?;
    let bounds = grid
        .iter()
        .map(|scores| bootstrap_bounds(scores))
        .collect::<Result<Vec<_>>>()?;
    let sigmas: Vec<f64> = grid.iter().map(|s| math::pop_sd(s)).collect();
    let outside: usize = grid
        .iter()
        .zip(&bounds)
        .map(|(scores, b)| scores.iter().filter(|&&s| b.is_significant(s)).count())
        .sum();
    let total = grid.len() * random_splits.len();
    Ok(RandomBaseline {
        bounds,
        mean_sigma: math::mean(&sigmas),
        pct_significant: 100.0 * outside as f64 / total as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSplitResult {
    pub model_id: String,
    pub split_scores: Vec<f64>,
    /// Population standard deviation of the split scores.
    pub sigma: f64,
    pub range: f64,
    pub significant_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub label: String,
    pub dimension: Option<Dimension>,
    pub per_model: Vec<ModelSplitResult>,
    pub mean_sigma: f64,
    /// Percent of all (model, split) scores outside the random band.
    pub pct_significant: f64,
}

/// Scores every model on every split and counts the split scores that fall
/// outside that model's random band.
pub fn f1_variance_report(
    matrix: &ScoreMatrix,
    splits: &[Split],
    bounds: &[BootstrapBounds],
    label: &str,
) -> Result<DimensionReport> {
    if bounds.len() != matrix.n_models() {
        return Err(Error::LengthMismatch {
            left: bounds.len(),
            right: matrix.n_models(),
        });
    }
    if splits.is_empty() {
        return Err(Error::Empty("no splits to evaluate"));
    }
    let columns = resolve(matrix, splits)?;
    let grid = score_grid(matrix, &columns)?;
    let per_model: Vec<ModelSplitResult> = grid
        .into_iter()
        .zip(bounds)
        .zip(matrix.model_ids())
        .map(|((scores, b), id)| ModelSplitResult {
            model_id: id.clone(),
            sigma: math::pop_sd(&scores),
            range: range(&scores),
            significant_count: scores.iter().filter(|&&s| b.is_significant(s)).count(),
            split_scores: scores,
        })
        .collect();
    let sigmas: Vec<f64> = per_model.iter().map(|m| m.sigma).collect();
    let significant: usize = per_model.iter().map(|m| m.significant_count).sum();
    Ok(DimensionReport {
        label: label.into(),
        dimension: splits[0].dimension,
        mean_sigma: math::mean(&sigmas),
        pct_significant: 100.0 * significant as f64 / (per_model.len() * splits.len()) as f64,
        per_model,
    })
}

/// One point of a per-dimension curve: scores across models on one bin, with
/// the random band averaged over models.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub bin_index: usize,
    pub size: usize,
    pub mean_score: f64,
    pub score_sd: f64,
    pub random_lower: f64,
    pub random_upper: f64,
}

pub fn decile_curve(
    matrix: &ScoreMatrix,
    splits: &[Split],
    bounds: &[BootstrapBounds],
) -> Result<Vec<CurvePoint>> {
    if matrix.n_models() == 0 {
        return Err(Error::Empty("score matrix has no models"));
    }
    let lows: Vec<f64> = bounds.iter().map(|b| b.lower).collect();
    let highs: Vec<f64> = bounds.iter().map(|b| b.upper).collect();
    let (random_lower, random_upper) = (math::mean(&lows), math::mean(&highs));
    let columns = resolve(matrix, splits)?;
    columns
        .iter()
        .enumerate()
        .map(|(k, cols)| {
            let scores = (0..matrix.n_models())
                .map(|m| matrix.subset_score(m, cols))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurvePoint {
                bin_index: k,
                size: cols.len(),
                mean_score: math::mean(&scores),
                score_sd: math::pop_sd(&scores),
                random_lower,
                random_upper,
            })
        })
        .collect()
}

/// Per-bin score difference between two models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinDelta {
    pub bin_index: usize,
    pub size: usize,
    pub delta: f64,
}

pub fn compare_models(
    matrix: &ScoreMatrix,
    splits: &[Split],
    model_a: &str,
    model_b: &str,
) -> Result<Vec<BinDelta>> {
    let a = matrix
        .model_index(model_a)
        .ok_or_else(|| Error::UnknownModel(model_a.into()))?;
    let b = matrix
        .model_index(model_b)
        .ok_or_else(|| Error::UnknownModel(model_b.into()))?;
    resolve(matrix, splits)?
        .iter()
        .enumerate()
        .map(|(k, cols)| {
            Ok(BinDelta {
                bin_index: k,
                size: cols.len(),
                delta: matrix.subset_score(a, cols)? - matrix.subset_score(b, cols)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDelta {
    pub model_id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDeltaReport {
    pub metric_a: String,
    pub metric_b: String,
    pub per_model: Vec<MetricDelta>,
    /// Mean of the absolute per-model deltas.
    pub mean: f64,
    /// Population standard deviation of the absolute per-model deltas.
    pub sigma: f64,
}

/// `|score_a - score_b|` per model on the full dataset. Both inputs must
/// list the same models in the same order.
pub fn metric_delta_report(
    metric_a: &str,
    scores_a: &[(String, f64)],
    metric_b: &str,
    scores_b: &[(String, f64)],
) -> Result<MetricDeltaReport> {
    if scores_a.is_empty() {
        return Err(Error::Empty("no models to compare"));
    }
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    let per_model = scores_a
        .iter()
        .zip(scores_b)
        .map(|((ma, sa), (mb, sb))| {
            if ma != mb {
                return Err(Error::UnknownModel(mb.clone()));
            }
            Ok(MetricDelta {
                model_id: ma.clone(),
                score_a: *sa,
                score_b: *sb,
                delta: math::abs(sa - sb),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = per_model.iter().map(|d| d.delta).collect();
    Ok(MetricDeltaReport {
        metric_a: metric_a.into(),
        metric_b: metric_b.into(),
        mean: math::mean(&deltas),
        sigma: math::pop_sd(&deltas),
        per_model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn matrix(rows: Vec<Vec<f64>>) -> ScoreMatrix {
        let n = rows[0].len();
        ScoreMatrix::from_rows(
            (0..rows.len()).map(|m| format!("m{m}")).collect(),
            (0..n).map(|i| format!("i{i}")).collect(),
            rows,
            "qa_exact",
        )
        .unwrap()
    }

    fn split(ids: &[usize]) -> Split {
        Split {
            label: "s".into(),
            instance_ids: ids.iter().map(|i| format!("i{i}")).collect(),
            dimension: None,
            bin_index: None,
        }
    }

    #[test]
    fn bounds_examples() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        let b = bootstrap_bounds(&v).unwrap();
        assert!((b.lower - 5.975).abs() < 1e-12);
        assert!((b.upper - 195.025).abs() < 1e-12);
        let b = bootstrap_bounds(&[42.0; 200]).unwrap();
        assert_eq!((b.lower, b.upper), (42.0, 42.0));
        assert!(bootstrap_bounds(&[1.0]).is_err());
        // warns but still computes
        assert!(bootstrap_bounds(&[1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn significance_is_strict() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        let b = bootstrap_bounds(&v).unwrap();
        let hits = [3.0, 100.0, 198.0]
            .iter()
            .filter(|&&s| b.is_significant(s))
            .count();
        assert_eq!(hits, 2);
        assert!(!b.is_significant(b.lower));
        assert!(!b.is_significant(b.upper));
    }

    #[test]
    fn report_counts_and_sigma() {
        // one model, 4 instances; splits {0,1} -> 50, {2,3} -> 100
        let m = matrix(vec![vec![1.0, 0.0, 1.0, 1.0]]);
        let bounds = vec![BootstrapBounds {
            lower: 60.0,
            upper: 90.0,
            trial_scores: vec![60.0, 90.0],
        }];
        let r =
            f1_variance_report(&m, &[split(&[0, 1]), split(&[2, 3])], &bounds, "length").unwrap();
        let pm = &r.per_model[0];
        assert_eq!(pm.split_scores, vec![50.0, 100.0]);
        assert_eq!(pm.significant_count, 2);
        assert_eq!(pm.sigma, 25.0);
        assert_eq!(pm.range, 50.0);
        assert_eq!(r.pct_significant, 100.0);

        let bad = vec![Split {
            instance_ids: vec!["nope".into()],
            ..split(&[])
        }];
        assert!(f1_variance_report(&m, &bad, &bounds, "x").is_err());
    }

    #[test]
    fn metric_deltas() {
        let a = vec![("m".into(), 91.2)];
        let b = vec![("m".into(), 88.4)];
        let r = metric_delta_report("qa_token_f1", &a, "qa_exact", &b).unwrap();
        assert!((r.per_model[0].delta - 2.8).abs() < 1e-9);
        let r = metric_delta_report("x", &a, "x", &a).unwrap();
        assert_eq!(r.mean, 0.0);
        let c = vec![("other".into(), 88.4)];
        assert!(metric_delta_report("x", &a, "y", &c).is_err());
    }

    #[test]
    fn compare_models_deltas() {
        let m = matrix(vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0, 1.0]]);
        let splits = [split(&[0, 1]), split(&[2, 3])];
        let d = compare_models(&m, &splits, "m0", "m1").unwrap();
        assert_eq!(
            d.iter().map(|x| x.delta).collect::<Vec<_>>(),
            vec![50.0, -50.0]
        );
        let same = compare_models(&m, &splits, "m0", "m0").unwrap();
        assert!(same.iter().all(|x| x.delta == 0.0));
        assert!(compare_models(&m, &splits, "m0", "zz").is_err());
    }
}
