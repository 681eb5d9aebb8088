//! Bootstrap significance of score and ranking variance across stratified
//! splits, plus the descriptive statistics they rely on.

mod bootstrap;
mod kendall;
mod rank;

use alloc::vec::Vec;

pub use bootstrap::{
    bootstrap_bounds, compare_models, decile_curve, f1_variance_report, metric_delta_report,
    random_baseline, split_scores, BinDelta, BootstrapBounds, CurvePoint, DimensionReport,
    MetricDelta, MetricDeltaReport, ModelSplitResult, RandomBaseline, MIN_STABLE_TRIALS,
};
pub use kendall::kendall_tau;
pub use rank::{
    rank_baseline, rank_dimension, rank_scores, rank_variance_report, RankBaseline,
    RankDimensionReport, RankReport,
};

use crate::error::{Error, Result};
use crate::math;

/// Lower and upper percentiles of the two-tailed p < 0.05 band.
pub const LOWER_PERCENTILE: f64 = 2.5;
pub const UPPER_PERCENTILE: f64 = 97.5;

/// Percentile with linear interpolation between closest ranks: the 1-based
/// position `1 + q / 100 * (n - 1)` of the ascending sort.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of no values"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidParameter(alloc::format!(
            "percentile {q} outside [0, 100]"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("percentile of NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Pearson correlation; fails on mismatched lengths or a constant input.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: a.len(),
        });
    }
    let (ma, mb) = (math::mean(a), math::mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InvalidParameter(
            "correlation with a constant input".into(),
        ));
    }
    Ok(sab / math::sqrt(saa * sbb))
}

/// Ascending ranks starting at 1, ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("standard deviation of no values"));
    }
    Ok(math::pop_sd(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[10.0, 20.0, 30.0, 40.0], 50.0).unwrap(), 25.0);
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert!((percentile(&v, 2.5).unwrap() - 5.975).abs() < 1e-12);
        assert!((percentile(&v, 97.5).unwrap() - 195.025).abs() < 1e-12);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 100.0).unwrap(), 3.0);
        assert_eq!(percentile(&[7.0], 40.0).unwrap(), 7.0);
        assert!(percentile(&[], 50.0).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 5.0]),
            vec![2.0, 3.5, 3.5, 1.0]
        );
    }

    #[test]
    fn spearman_of_monotone_map() {
        let a = [1.0, 5.0, 2.0, 9.0];
        let b = [2.0, 50.0, 3.0, 1000.0];
        assert!((spearman(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn percentile_monotone_in_q(
            values in prop::collection::vec(-1e3f64..1e3, 1..60),
            q1 in 0.0f64..100.0,
            q2 in 0.0f64..100.0,
        ) {
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(percentile(&values, lo).unwrap() <= percentile(&values, hi).unwrap());
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(percentile(&values, 0.0).unwrap(), min);
            prop_assert_eq!(percentile(&values, 100.0).unwrap(), max);
        }
    }
}
