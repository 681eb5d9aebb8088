//! Ranking consistency: how far model rankings on stratified splits move
//! from the mean ranking over random splits.

use alloc::string::String;
use alloc::vec::Vec;

use super::bootstrap::{bootstrap_bounds, resolve, BootstrapBounds};
use super::{average_ranks, kendall_tau};
use crate::data::ScoreMatrix;
use crate::error::{Error, Result};
use crate::features::Dimension;
use crate::sampling::Split;

/// Ranks of aggregate scores: 1 is the best (highest) score, ties share the
/// mean of their positions.
pub fn rank_scores(scores: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    average_ranks(&negated)
}

fn ranking_on(matrix: &ScoreMatrix, columns: &[usize]) -> Result<Vec<f64>> {
    let scores = (0..matrix.n_models())
        .map(|m| matrix.subset_score(m, columns))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_scores(&scores))
}

/// Tau against the reference; a split on which every model ties carries no
/// ranking information and counts as tau 0.
fn tau_vs(reference: &[f64], ranking: &[f64]) -> Result<f64> {
    match kendall_tau(ranking, reference) {
        Err(Error::UndefinedTau) => {
            log::warn!("constant ranking on a split; treating tau as 0");
            Ok(0.0)
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankBaseline {
    /// Mean rank of each model over the random splits.
    pub reference_ranking: Vec<f64>,
    /// Tau of each random-split ranking against the reference, with its band.
    pub tau_bounds: BootstrapBounds,
    /// Expected number of significant rankings out of `bins` under random
    /// sampling: `bins` times the share of random taus outside the band.
    pub random_significant_fraction: f64,
}

pub fn rank_baseline(matrix: &ScoreMatrix, random_splits: &[Split]) -> Result<RankBaseline> {
    if matrix.n_models() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: matrix.n_models(),
        });
    }
    if random_splits.is_empty() {
        return Err(Error::Empty("no random splits"));
    }
    let rankings = resolve(matrix, random_splits)?
        .iter()
        .map(|cols| ranking_on(matrix, cols))
        .collect::<Result<Vec<_>>>()?;
    let mut reference = alloc::vec![0.0; matrix.n_models()];
    for r in &rankings {
        for (acc, v) in reference.iter_mut().zip(r) {
            *acc += v;
        }
    }
    for v in &mut reference {
        *v /= rankings.len() as f64;
    }
    let taus = rankings
        .iter()
        .map(|r| tau_vs(&reference, r))
        .collect::<Result<Vec<_>>>()?;
    let tau_bounds = bootstrap_bounds(&taus)?;
    let outside = taus
        .iter()
        .filter(|&&t| tau_bounds.is_significant(t))
        .count();
    Ok(RankBaseline {
        reference_ranking: reference,
        random_significant_fraction: outside as f64 / taus.len() as f64,
        tau_bounds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankDimensionReport {
    pub label: String,
    pub dimension: Option<Dimension>,
    pub taus: Vec<f64>,
    pub significant_count: usize,
}

pub fn rank_dimension(
    matrix: &ScoreMatrix,
    baseline: &RankBaseline,
    splits: &[Split],
    label: &str,
) -> Result<RankDimensionReport> {
    let taus = resolve(matrix, splits)?
        .iter()
        .map(|cols| tau_vs(&baseline.reference_ranking, &ranking_on(matrix, cols)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankDimensionReport {
        label: label.into(),
        dimension: splits.first().and_then(|s| s.dimension),
        significant_count: taus
            .iter()
            .filter(|&&t| baseline.tau_bounds.is_significant(t))
            .count(),
        taus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub model_ids: Vec<String>,
    pub baseline: RankBaseline,
    pub dimensions: Vec<RankDimensionReport>,
}

/// Ranking consistency for each labelled group of stratified splits.
pub fn rank_variance_report(
    matrix: &ScoreMatrix,
    random_splits: &[Split],
    stratified: &[(String, Vec<Split>)],
) -> Result<RankReport> {
    let baseline = rank_baseline(matrix, random_splits)?;
    let dimensions = stratified
        .iter()
        .map(|(label, splits)| rank_dimension(matrix, &baseline, splits, label))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankReport {
        model_ids: matrix.model_ids().to_vec(),
        baseline,
        dimensions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn rank_direction_and_ties() {
        assert_eq!(rank_scores(&[90.0, 70.0, 80.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(rank_scores(&[50.0, 50.0, 10.0]), vec![1.5, 1.5, 3.0]);
    }

    // Three models with constant, well-separated per-instance scores and one
    // block of instances where the order flips.
    fn setup() -> (ScoreMatrix, Vec<Split>, Split) {
        let n = 40;
        let mut rows = vec![vec![0.9; n], vec![0.6; n], vec![0.3; n]];
        rows[0][30..].fill(0.1);
        rows[2][30..].fill(1.0);
        let ids: Vec<String> = (0..n).map(|i| format!("i{i:02}")).collect();
        let matrix = ScoreMatrix::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            ids.clone(),
            rows,
            "qa_token_f1",
        )
        .unwrap();
        let random: Vec<Split> = (0..20)
            .map(|t| Split {
                label: format!("random_{t}"),
                instance_ids: ids[t..t + 10].to_vec(),
                dimension: None,
                bin_index: None,
            })
            .collect();
        let flipped = Split {
            label: "noise_9".into(),
            instance_ids: ids[30..40].to_vec(),
            dimension: Some(Dimension::Noise),
            bin_index: Some(9),
        };
        (matrix, random, flipped)
    }

    #[test]
    fn stable_ranking_is_not_significant() {
        let (matrix, random, _) = setup();
        let base = rank_baseline(&matrix, &random).unwrap();
        assert_eq!(base.reference_ranking, vec![1.0, 2.0, 3.0]);
        assert_eq!((base.tau_bounds.lower, base.tau_bounds.upper), (1.0, 1.0));
        let same = rank_dimension(&matrix, &base, &random[..3], "x").unwrap();
        assert_eq!(same.significant_count, 0);
    }

    #[test]
    fn reversed_ranking_is_significant() {
        let (matrix, random, flipped) = setup();
        let base = rank_baseline(&matrix, &random).unwrap();
        let r = rank_dimension(&matrix, &base, &[flipped], "noise").unwrap();
        // scores on the flipped block: a=10, b=60, c=100 -> exact reversal
        assert_eq!(r.taus, vec![-1.0]);
        assert_eq!(r.significant_count, 1);
    }

    #[test]
    fn needs_two_models() {
        let m = ScoreMatrix::from_rows(vec!["a".into()], vec!["i".into()], vec![vec![1.0]], "x")
            .unwrap();
        let s = Split {
            label: "r".into(),
            instance_ids: vec!["i".into()],
            dimension: None,
            bin_index: None,
        };
        assert!(rank_baseline(&m, &[s]).is_err());
    }
}
