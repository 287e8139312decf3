//! Truncated positive series.

use crate::LatticeError;

pub const SERIES_REL_TOL: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 1_000_000;
const GROWTH_GRACE: usize = 1_000;

/// Sum `f(1) + f(2) + ...` of nonnegative terms.
///
/// Stops once a term falls below `SERIES_REL_TOL` times the running sum
/// while the terms are decreasing. Terms that still grow after
/// 1000 steps, or a non-finite term, are reported as non-convergence.
pub fn sum_series(mut f: impl FnMut(usize) -> f64) -> Result<f64, LatticeError> {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for i in 1..=SERIES_MAX_TERMS {
        let t = f(i);
        if !t.is_finite() || t < 0.0 {
            return Err(LatticeError::NonConvergent { terms: i, last: t });
        }
        sum += t;
        let decreasing = t <= prev;
        if decreasing && t <= SERIES_REL_TOL * sum {
            return Ok(sum);
        }
        if !decreasing && i > GROWTH_GRACE {
            return Err(LatticeError::NonConvergent { terms: i, last: t });
        }
        prev = t;
    }
    Err(LatticeError::NonConvergent { terms: SERIES_MAX_TERMS, last: prev })
}
