//! Finite-sample empirical quantiles of conformity scores.

use super::ConformalError;

// Absolute guard against floating error in (1 - alpha) * (n + 1): the
// product can land a few ulp above an exact integer (e.g. alpha = 0.2,
// n = 9), which would otherwise push ceil one order statistic too high.
// Any alpha whose true index is within 1e-9 of an integer from above is
// treated as that integer.
const INDEX_GUARD: f64 = 1e-9;

/// 1-based order-statistic index `k = ceil((1 - alpha) * (n + 1))`. May
/// exceed `n`, in which case the quantile is the infinite sentinel.
pub(crate) fn quantile_index(n: usize, alpha: f64) -> usize {
    let t = (1.0 - alpha) * (n as f64 + 1.0);
    let k = (t - INDEX_GUARD).ceil();
    if k < 1.0 {
        1
    } else {
        k as usize
    }
}

/// `k`-th smallest (1-based) without sorting the whole slice.
pub(crate) fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

fn check_alpha(alpha: f64) -> Result<(), ConformalError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ConformalError::BadAlpha(alpha))
    }
}

/// Upper empirical quantile: the `k = ceil((1-alpha)(n+1))`-th smallest
/// element, or `+inf` when `k > n`.
pub fn empirical_quantile_hi(values: &[f64], alpha: f64) -> Result<f64, ConformalError> {
    check_alpha(alpha)?;
    if values.is_empty() {
        return Err(ConformalError::EmptyScores);
    }
    let k = quantile_index(values.len(), alpha);
    if k > values.len() {
        return Ok(f64::INFINITY);
    }
    let mut buf = values.to_vec();
    Ok(kth_smallest(&mut buf, k))
}

/// Lower empirical quantile, defined by symmetry as the negated upper
/// quantile of the negated values; `-inf` on index overflow.
pub fn empirical_quantile_lo(values: &[f64], alpha: f64) -> Result<f64, ConformalError> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    Ok(-empirical_quantile_hi(&negated, alpha)?)
}
