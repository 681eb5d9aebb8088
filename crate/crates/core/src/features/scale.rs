use crate::error::{Error, Result};
use crate::stats::percentile;

/// Percentile clipping is skipped below this many values.
pub const MIN_CLIP_N: usize = 50;

const CLIP_LO_PERCENTILE: f64 = 2.0;
const CLIP_HI_PERCENTILE: f64 = 98.0;

/// Clipped min-max scaler for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalerParams {
    pub clip_lo: f64,
    pub clip_hi: f64,
    /// Smallest value after clipping.
    pub min: f64,
    /// Largest value after clipping.
    pub max: f64,
}

impl ScalerParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.clip_lo, self.clip_hi, self.min, self.max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.clip_lo > self.clip_hi || self.min > self.max {
            return Err(Error::InvalidParameter(alloc::format!(
                "inconsistent scaler {self:?}"
            )));
        }
        Ok(())
    }
}

/// Clips at the 2nd/98th percentile (only when there are at least
/// [`MIN_CLIP_N`] values) and records the clipped range.
pub fn fit_scaler(raw: &[f64]) -> Result<ScalerParams> {
    if raw.is_empty() {
        return Err(Error::Empty("cannot fit a scaler on no values"));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite raw value".into()));
    }
    let (clip_lo, clip_hi) = if raw.len() >= MIN_CLIP_N {
        (
            percentile(raw, CLIP_LO_PERCENTILE)?,
            percentile(raw, CLIP_HI_PERCENTILE)?,
        )
    } else {
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let clipped = raw.iter().map(|v| v.clamp(clip_lo, clip_hi));
    let min = clipped.clone().fold(f64::INFINITY, f64::min);
    let max = clipped.fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalerParams {
        clip_lo,
        clip_hi,
        min,
        max,
    })
}

/// Maps `raw` into [0, 1]; a degenerate range maps everything to 0.5.
pub fn scale(raw: f64, params: &ScalerParams) -> f64 {
    if params.max <= params.min {
        return 0.5;
    }
    let v = raw.clamp(params.clip_lo, params.clip_hi);
    ((v - params.min) / (params.max - params.min)).clamp(0.0, 1.0)
}
