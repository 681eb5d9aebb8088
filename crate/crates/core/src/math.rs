// Float helpers for no_std builds; everything routes through libm so results
// do not depend on which platform intrinsics are available.

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Logistic function, stable for large |x|.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without underflow.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -ln_1p(exp(-x))
    } else {
        x - ln_1p(exp(x))
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// Sum of squared deviations, two-pass with the rounding error of the mean
// folded back in, so constant inputs give exactly zero.
fn sum_sq_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    let mut ss = 0.0;
    let mut drift = 0.0;
    for v in values {
        let d = v - m;
        ss += d * d;
        drift += d;
    }
    (ss - drift * drift / values.len() as f64).max(0.0)
}

/// Population standard deviation (divide by n).
pub(crate) fn pop_sd(values: &[f64]) -> f64 {
    sqrt(sum_sq_dev(values) / values.len() as f64)
}

/// Sample variance (divide by n - 1). Caller guarantees n >= 2.
pub(crate) fn sample_var(values: &[f64]) -> f64 {
    sum_sq_dev(values) / (values.len() - 1) as f64
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for trial `index` of a run seeded with `seed`.
pub(crate) fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}
