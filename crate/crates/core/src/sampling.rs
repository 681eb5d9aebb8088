//! Disproportionate stratified decile splits and uniform random subsamples.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{Dimension, FeatureTable};
use crate::math;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_FRACTION: f64 = 0.10;

/// Deterministic child seed for trial `index` under master seed `seed`
/// (SplitMix64 over the seed xor the mixed index).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    math::child_seed(seed, index)
}

pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub label: String,
    pub instance_ids: Vec<String>,
    pub dimension: Option<Dimension>,
    pub bin_index: Option<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_ids.is_empty()
    }
}

/// Sizes of `bins` contiguous chunks of `n` items; the first `n % bins`
/// chunks take one extra item.
pub fn chunk_sizes(n: usize, bins: usize) -> Vec<usize> {
    let (base, extra) = (n / bins, n % bins);
    (0..bins).map(|k| base + usize::from(k < extra)).collect()
}

fn sorted_order(table: &FeatureTable, dim: Dimension) -> Vec<usize> {
    let raw = table.raw(dim);
    let ids = table.ids();
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then_with(|| ids[a].cmp(&ids[b])));
    order
}

fn check_bins(n: usize, bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    if n < bins {
        return Err(Error::TooFew {
            needed: bins,
            got: n,
        });
    }
    Ok(())
}

fn cut(table: &FeatureTable, dim: Dimension, order: &[usize], sizes: Vec<usize>) -> Vec<Split> {
    let ids = table.ids();
    let mut splits = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for (k, size) in sizes.into_iter().enumerate() {
        splits.push(Split {
            label: format!("{dim}_{k}"),
            instance_ids: order[start..start + size]
                .iter()
                .map(|&i| ids[i].clone())
                .collect(),
            dimension: Some(dim),
            bin_index: Some(k),
        });
        start += size;
    }
    splits
}

/// Equal-size bins of increasing raw value for `dim`: instances sorted by
/// (raw value, id) and cut into `bins` contiguous chunks.
pub fn stratified_deciles(table: &FeatureTable, dim: Dimension, bins: usize) -> Result<Vec<Split>> {
    check_bins(table.len(), bins)?;
    let order = sorted_order(table, dim);
    Ok(cut(table, dim, &order, chunk_sizes(table.len(), bins)))
}

/// Whether so many instances share the minimum value of `dim` that equal-size
/// bins would repeat the same distribution: at least `2 * n / bins` of them.
pub fn has_degenerate_mass(table: &FeatureTable, dim: Dimension, bins: usize) -> bool {
    let raw = table.raw(dim);
    let Some(min) = raw.iter().copied().min_by(f64::total_cmp) else {
        return false;
    };
    let at_min = raw.iter().filter(|&&v| v == min).count();
    at_min as f64 >= 2.0 * table.len() as f64 / bins as f64
}

/// Stratified bins that put every minimum-valued instance into bin 0 and
/// chunk the rest into `bins - 1` bins when [`has_degenerate_mass`] holds;
/// otherwise identical to [`stratified_deciles`].
pub fn stratified_deciles_degenerate(
    table: &FeatureTable,
    dim: Dimension,
    bins: usize,
) -> Result<Vec<Split>> {
    check_bins(table.len(), bins)?;
    if !has_degenerate_mass(table, dim, bins) {
        return stratified_deciles(table, dim, bins);
    }
    let n = table.len();
    let raw = table.raw(dim);
    let order = sorted_order(table, dim);
    let min = raw[order[0]];
    let at_min = order.iter().take_while(|&&i| raw[i] == min).count();
    let rest = n - at_min;
    if rest < bins - 1 {
        return Err(Error::DegenerateSplit(format!(
            "{dim}: {at_min} of {n} instances share the minimum value, leaving empty bins"
        )));
    }
    let mut sizes = Vec::with_capacity(bins);
    sizes.push(at_min);
    sizes.extend(chunk_sizes(rest, bins - 1));
    Ok(cut(table, dim, &order, sizes))
}

/// Size of a random subsample: `floor(n * fraction)`.
pub fn sample_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let k = math::floor(n as f64 * fraction) as usize;
    if k == 0 {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    Ok(k.min(n))
}

/// `trials` independent uniform subsamples without replacement. Trial `t`
/// draws from [`trial_rng`]`(seed, t)`; ids keep their order in `ids`.
pub fn random_samples(
    ids: &[String],
    fraction: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<Split>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let k = sample_size(ids.len(), fraction)?;
    let splits = (0..trials)
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let mut picked = rand::seq::index::sample(&mut rng, ids.len(), k).into_vec();
            picked.sort_unstable();
            Split {
                label: format!("random_{t:03}"),
                instance_ids: picked.into_iter().map(|i| ids[i].clone()).collect(),
                dimension: None,
                bin_index: None,
            }
        })
        .collect();
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Provenance;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use proptest::prelude::*;

    fn table_with(values: Vec<f64>) -> FeatureTable {
        let n = values.len();
        let ids: Vec<String> = (0..n).map(|i| format!("i{i:04}")).collect();
        let raw = Dimension::ALL.map(|_| (values.clone(), Provenance::Computed));
        FeatureTable::from_raw(ids, raw).unwrap()
    }

    fn bin_values(table: &FeatureTable, split: &Split) -> Vec<f64> {
        let raw = table.raw(Dimension::Noise);
        split
            .instance_ids
            .iter()
            .map(|id| raw[table.ids().iter().position(|x| x == id).unwrap()])
            .collect()
    }

    #[test]
    fn hundred_distinct_values() {
        // reversed so the sort actually has work to do
        let t = table_with((0..100).rev().map(f64::from).collect());
        let s = stratified_deciles(&t, Dimension::Noise, 10).unwrap();
        let first = bin_values(&t, &s[0]);
        let last = bin_values(&t, &s[9]);
        assert_eq!(first, (0..10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(last, (90..100).map(f64::from).collect::<Vec<_>>());
        assert_eq!(s[3].label, "noise_3");
    }

    #[test]
    fn remainder_goes_to_first_bins() {
        let t = table_with((0..23).map(f64::from).collect());
        let s = stratified_deciles(&t, Dimension::Length, 10).unwrap();
        let sizes: Vec<usize> = s.iter().map(Split::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn ties_ordered_by_id() {
        let t = table_with(vec![1.0; 20]);
        let s = stratified_deciles(&t, Dimension::Noise, 10).unwrap();
        assert!(s.iter().all(|b| b.len() == 2));
        assert_eq!(s[0].instance_ids, vec!["i0000", "i0001"]);
        assert_eq!(s[9].instance_ids, vec!["i0018", "i0019"]);
        // the automatic rule refuses: all mass at the minimum leaves nine empty bins
        assert!(matches!(
            stratified_deciles_degenerate(&t, Dimension::Noise, 10),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn degenerate_noise_mass() {
        let mut v = vec![0.0; 50];
        v.extend((1..=50).map(f64::from));
        let t = table_with(v);
        let s = stratified_deciles_degenerate(&t, Dimension::Noise, 10).unwrap();
        let sizes: Vec<usize> = s.iter().map(Split::len).collect();
        assert_eq!(sizes, vec![50, 6, 6, 6, 6, 6, 5, 5, 5, 5]);

        let mut v = vec![0.0; 15];
        v.extend((1..=85).map(f64::from));
        let t = table_with(v);
        assert!(!has_degenerate_mass(&t, Dimension::Noise, 10));
        let s = stratified_deciles_degenerate(&t, Dimension::Noise, 10).unwrap();
        assert!(s.iter().all(|b| b.len() == 10));
    }

    #[test]
    fn too_few_instances() {
        let t = table_with((0..5).map(f64::from).collect());
        assert!(matches!(
            stratified_deciles(&t, Dimension::Noise, 10),
            Err(Error::TooFew { .. })
        ));
    }

    #[test]
    fn random_sample_sizes_and_determinism() {
        let ids: Vec<String> = (0..100).map(|i| format!("i{i}")).collect();
        let a = random_samples(&ids, 0.1, 200, 7).unwrap();
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|s| s.len() == 10));
        assert_eq!(a, random_samples(&ids, 0.1, 200, 7).unwrap());
        assert_ne!(a, random_samples(&ids, 0.1, 200, 8).unwrap());
        assert_eq!(sample_size(10_570, 0.1).unwrap(), 1057);
        assert!(random_samples(&ids[..5], 0.1, 3, 1).is_err());
    }

    proptest! {
        #[test]
        fn deciles_partition_in_order(values in prop::collection::vec(0u8..20, 10..200)) {
            let t = table_with(values.iter().map(|&v| f64::from(v)).collect());
            let Ok(splits) = stratified_deciles_degenerate(&t, Dimension::Noise, 10) else {
                return Ok(());
            };
            let mut all = BTreeSet::new();
            let mut total = 0;
            let mut prev_max = f64::NEG_INFINITY;
            for s in &splits {
                total += s.len();
                all.extend(s.instance_ids.iter().cloned());
                let vals = bin_values(&t, s);
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(prev_max <= lo);
                prev_max = hi;
            }
            prop_assert_eq!(total, t.len());
            prop_assert_eq!(all.len(), t.len());
        }

        #[test]
        fn random_splits_have_exact_size(n in 10usize..300, seed in any::<u64>()) {
            let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
            let splits = random_samples(&ids, 0.1, 5, seed).unwrap();
            for s in splits {
                let unique: BTreeSet<_> = s.instance_ids.iter().collect();
                prop_assert_eq!(s.len(), n / 10);
                prop_assert_eq!(unique.len(), s.len());
            }
        }
    }
}
