//! The ipps threshold: the unique `tau` with `sum_i min(1, w_i / tau) = k`.

use crate::error::{check_weight, Error, Result};

/// Threshold for sampling `k` items out of `weights` with inclusion
/// probabilities proportional to size. Returns 0 when `k >= n`.
///
/// Computed in closed form: with weights sorted ascending and prefix sums
/// `S_t`, the light items are the longest prefix `t` whose largest weight is
/// at most `S_t / (t - (n - k))`, and that ratio is the threshold.
pub fn ipps_threshold(weights: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    for &w in weights {
        check_weight(w)?;
    }
    if k >= weights.len() {
        return Ok(0.0);
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(threshold_of_sorted(&sorted, k).0)
}

/// Threshold and number of light items for ascending `sorted` with
/// `k < sorted.len()`.
pub(crate) fn threshold_of_sorted(sorted: &[f64], k: usize) -> (f64, usize) {
    let n = sorted.len();
    debug_assert!(k < n);
    let excess = n - k;
    // The first `excess` items are always light: their inclusion
    // probabilities must absorb the whole deficit.
    let mut prefix: f64 = sorted[..excess].iter().sum();
    let mut light = excess;
    for (i, &w) in sorted.iter().enumerate().skip(excess) {
        let candidate = prefix + w;
        let denom = (i + 1 - excess) as f64;
        if candidate >= denom * w {
            prefix = candidate;
            light = i + 1;
        } else {
            break;
        }
    }
    // The item at position `excess` always qualifies, so the divisor is >= 1.
    (prefix / (light - excess) as f64, light)
}

/// `min(1, weight / tau)`, with `tau = 0` meaning everything is included.
pub fn inclusion_probability(weight: f64, tau: f64) -> Result<f64> {
    check_weight(weight)?;
    if !(tau >= 0.0) {
        return Err(Error::domain(format!("threshold must be nonnegative, got {tau}")));
    }
    if tau == 0.0 || weight >= tau {
        Ok(1.0)
    } else {
        Ok(weight / tau)
    }
}
