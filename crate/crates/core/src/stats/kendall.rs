use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

/// Kendall's tau-b between two rankings of the same models:
///
/// `(C - D) / sqrt((n0 - n1) * (n0 - n2))`
///
/// where `n0 = n (n - 1) / 2`, and `n1`, `n2` count the pairs tied in the
/// first and second ranking. Pairwise enumeration; model counts are small.
pub fn kendall_tau(rank_a: &[f64], rank_b: &[f64]) -> Result<f64> {
    if rank_a.len() != rank_b.len() {
        return Err(Error::LengthMismatch {
            left: rank_a.len(),
            right: rank_b.len(),
        });
    }
    let n = rank_a.len();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_a, mut ties_b) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = rank_a[i].partial_cmp(&rank_a[j]);
            let db = rank_b[i].partial_cmp(&rank_b[j]);
            let (Some(da), Some(db)) = (da, db) else {
                return Err(Error::InvalidParameter("NaN in ranking".into()));
            };
            if da == Ordering::Equal {
                ties_a += 1;
            }
            if db == Ordering::Equal {
                ties_b += 1;
            }
            if da != Ordering::Equal && db != Ordering::Equal {
                if da == db {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - ties_a) * (n0 - ties_b)) as f64;
    if denom == 0.0 {
        return Err(Error::UndefinedTau);
    }
    Ok((concordant - discordant) as f64 / math::sqrt(denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t - 4.0 / 6.0).abs() < 1e-12);
        assert!(kendall_tau(&x, &x[..3]).is_err());
        assert_eq!(kendall_tau(&x, &[1.0; 4]), Err(Error::UndefinedTau));
    }

    #[test]
    fn tie_corrected() {
        // pairs: (0,1) tie in a; others concordant -> C = 5, D = 0
        // tau_b = 5 / sqrt((6 - 1) * 6)
        let t = kendall_tau(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((t - 5.0 / (30.0f64).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            pairs in prop::collection::vec((0u8..6, 0u8..6), 2..25)
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let b: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            if let Ok(t) = kendall_tau(&a, &b) {
                prop_assert!((-1.0..=1.0).contains(&t));
                prop_assert_eq!(t, kendall_tau(&b, &a).unwrap());
            }
        }

        #[test]
        fn reversed_distinct_is_minus_one(n in 2usize..40) {
            let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let r: Vec<f64> = a.iter().rev().copied().collect();
            prop_assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
            prop_assert_eq!(kendall_tau(&a, &r).unwrap(), -1.0);
        }
    }
}
