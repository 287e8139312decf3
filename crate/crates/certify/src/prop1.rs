//! Gap between the best linear cost and the signaling cost on the scaling
//! family `q = 1, r1 = a, r2 = 0, sv1 = 0, sv2^2 = a`.

use crate::CertifyError;
use lqgduet_upper::{scaling_family_upper, LogBase};
use serde::{Deserialize, Serialize};

/// Smallest `a` for which the linear lower bound `a^3 / 66` holds.
pub const PROP1_LINEAR_MIN_A: f64 = 1e4;
/// Smallest `a` for which the nonlinear bound `3297 a^2 ln a` holds.
pub const PROP1_NONLINEAR_MIN_A: f64 = 2e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1Row {
    pub a: f64,
    pub linear_lb: f64,
    pub nonlinear_ub: f64,
    pub ratio: f64,
    /// `a` is at or above [`PROP1_NONLINEAR_MIN_A`].
    pub nonlinear_valid: bool,
}

/// Table for `a_values`, rejecting any `a < min_a`.
pub fn prop1_table(a_values: &[f64], min_a: f64) -> Result<Vec<Prop1Row>, CertifyError> {
    a_values
        .iter()
        .map(|&a| {
            if !(a >= min_a) || !a.is_finite() {
                return Err(CertifyError::BelowThreshold { a, min: min_a });
            }
            let la = a.ln();
            let log_ratio = la - 66f64.ln() - 3297f64.ln() - la.ln();
            Ok(Prop1Row {
                a,
                linear_lb: a * a * a / 66.0,
                nonlinear_ub: scaling_family_upper(a, LogBase::Natural),
                ratio: log_ratio.exp(),
                nonlinear_valid: a >= PROP1_NONLINEAR_MIN_A,
            })
        })
        .collect()
}

/// Table restricted to `a` where both bounds are valid.
pub fn prop1_divergence(a_values: &[f64]) -> Result<Vec<Prop1Row>, CertifyError> {
    prop1_table(a_values, PROP1_NONLINEAR_MIN_A)
}

pub fn strictly_increasing(rows: &[Prop1Row]) -> bool {
    rows.windows(2).all(|w| w[1].ratio > w[0].ratio)
}
