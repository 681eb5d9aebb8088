//! Dataset similarity vectors: one standardized mean difference per data
//! dimension, computed on raw feature values.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{Dimension, FeatureTable};
use crate::math;
use crate::sampling::random_samples;

/// `(mean_a - mean_b) / sqrt((s_a^2 + s_b^2) / 2)` with sample variances.
pub fn smd(values_a: &[f64], values_b: &[f64]) -> Result<f64> {
    for side in [values_a, values_b] {
        if side.len() < 2 {
            return Err(Error::TooFew {
                needed: 2,
                got: side.len(),
            });
        }
    }
    // Both sides are measured from a common origin, so a shift that is exact
    // in floating point leaves every intermediate value unchanged.
    let origin = (values_a[0] + values_b[0]) / 2.0;
    let a: Vec<f64> = values_a.iter().map(|v| v - origin).collect();
    let b: Vec<f64> = values_b.iter().map(|v| v - origin).collect();
    let diff = math::mean(&a) - math::mean(&b);
    let pooled = math::sqrt((math::sample_var(&a) + math::sample_var(&b)) / 2.0);
    if pooled == 0.0 {
        return if diff == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::ZeroPooledDeviation)
        };
    }
    Ok(diff / pooled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityVector {
    /// Signed SMD per dimension, indexed by [`Dimension::index`].
    pub components: [f64; 6],
    pub avg_abs: f64,
}

impl SimilarityVector {
    pub fn from_components(components: [f64; 6]) -> Self {
        let avg_abs = components.iter().map(|c| math::abs(*c)).sum::<f64>() / 6.0;
        SimilarityVector {
            components,
            avg_abs,
        }
    }

    pub fn get(&self, dim: Dimension) -> f64 {
        self.components[dim.index()]
    }
}

/// SMD of table `a` against table `b` over every dimension's raw values.
pub fn similarity_vector(a: &FeatureTable, b: &FeatureTable) -> Result<SimilarityVector> {
    let mut components = [0.0; 6];
    for dim in Dimension::ALL {
        components[dim.index()] = smd(a.raw(dim), b.raw(dim))?;
    }
    Ok(SimilarityVector::from_components(components))
}

/// Mean `avg_abs` between the full table and `trials` uniform subsamples.
pub fn subsample_consistency(
    table: &FeatureTable,
    fraction: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let samples = random_samples(table.ids(), fraction, trials, seed)?;
    if samples[0].len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: samples[0].len(),
        });
    }
    let scores = samples
        .iter()
        .map(|s| Ok(similarity_vector(table, &table.subset(&s.instance_ids)?)?.avg_abs))
        .collect::<Result<Vec<_>>>()?;
    Ok(math::mean(&scores))
}
