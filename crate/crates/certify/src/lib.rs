//! Constant-ratio certification.
//!
//! [`ratio_transfer_check`] tests the hypothesis `D_U(c x) <= c D_L(x)` that
//! turns a tradeoff comparison into a weighted-cost ratio. [`region_checks`]
//! runs it region by region with the closed-form region bounds,
//! [`certify_point`] and [`certify_grid`] compare the two cost optimizers
//! directly, and [`prop1_divergence`] tabulates the linear/nonlinear gap.

use lqgduet_core::{CoreError, TradeoffPoint};
use lqgduet_lower::LowerError;
use lqgduet_upper::UpperError;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

mod cases;
mod point;
mod prop1;

pub use cases::{region_checks, case_label, weak_case, strong_case, RegionOutcome};
pub use point::{certify_grid, certify_point, default_cap, CertGrid, CertReport, GridReport, RegimeFilter};
pub use prop1::{prop1_divergence, prop1_table, strictly_increasing, Prop1Row, PROP1_LINEAR_MIN_A, PROP1_NONLINEAR_MIN_A};

/// Ratio constant of the weakly degraded case analysis.
pub const WEAK_CASE_CONSTANT: f64 = 1200.0;
/// Ratio constant of the strongly degraded case analysis: the largest of
/// `832/0.2541, 63/0.066, 80000, 6656/0.0457, 564/0.0113`.
pub const STRONG_CASE_CONSTANT: f64 = 6656.0 / 0.0457;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("lower bound is zero (upper = {upper}); the ratio is undefined")]
    Degenerate { upper: f64 },
    #[error("a = {a} is below the table threshold {min}")]
    BelowThreshold { a: f64, min: f64 },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Upper(#[from] UpperError),
}

/// Region of the `(P1~, P2~)` quadrant in the case analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
    V,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
            Case::IV => "iv",
            Case::V => "v",
        };
        f.write_str(s)
    }
}

/// Which case analysis applies, and which of its regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Weakly degraded analysis, regions (i)-(iii).
    Weak(Case),
    /// Strongly degraded analysis, regions (i)-(v).
    Strong(Case),
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseLabel::Weak(c) => write!(f, "weak({c})"),
            CaseLabel::Strong(c) => write!(f, "strong({c})"),
        }
    }
}

/// Achievable region given by finitely many `(D, P1, P2)` triples.
#[derive(Debug, Clone, Default)]
pub struct SampledTradeoff {
    points: Vec<TradeoffPoint>,
}

impl SampledTradeoff {
    pub fn new(points: Vec<TradeoffPoint>) -> Self {
        SampledTradeoff { points }
    }

    pub fn points(&self) -> &[TradeoffPoint] {
        &self.points
    }

    /// Smallest `D` among the triples affordable with powers `(x1, x2)`;
    /// infinite if none is.
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.points
            .iter()
            .filter(|t| t.p1 <= x1 && t.p2 <= x2)
            .map(|t| t.d)
            .fold(f64::INFINITY, f64::min)
    }
}

/// True iff `du(c x1, c x2) <= c dl(x1, x2)` at every grid point.
///
/// An infinite `dl` is satisfied by anything. `c < 1` is never accepted.
pub fn ratio_transfer_check<U, L>(du: U, dl: L, c: f64, grid: &[(f64, f64)]) -> bool
where
    U: Fn(f64, f64) -> f64,
    L: Fn(f64, f64) -> f64,
{
    if !(c >= 1.0) {
        return false;
    }
    grid.iter().all(|&(x1, x2)| {
        let lo = dl(x1, x2);
        if lo == f64::INFINITY {
            return true;
        }
        du(c * x1, c * x2) <= c * lo
    })
}
