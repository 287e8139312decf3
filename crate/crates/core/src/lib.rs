//! Problem description for the scalar two-controller LQG problem.
//!
//! The canonical form is
//!
//! ```text
//! x[n+1] = a x[n] + u1[n] + u2[n] + w[n],   w ~ N(0, 1)
//! y_i[n] = x[n] + v_i[n],                   v_i ~ N(0, sv_i^2)
//! ```
//!
//! with controller 1 always the less noisy one. [`normalize`] maps any
//! [`RawParams`] onto this form while keeping the weighted cost unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lower limit on `|a|` for the bounds machinery.
pub const DEFAULT_A_THRESHOLD: f64 = 2.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("parameter `{name}` is invalid: {reason}")]
    InvalidParams { name: &'static str, reason: String },
    #[error("|a| = {0} is below the supported threshold {1}")]
    BelowThreshold(f64, f64),
    #[error("sv1^2 = {0} exceeds sv2^2 = {1}; normalize first")]
    NotOrdered(f64, f64),
}

/// Problem in its original units, before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub sigma0_sq: f64,
    pub sigmaw_sq: f64,
    pub sigmav1_sq: f64,
    pub sigmav2_sq: f64,
}

/// Canonical problem: unit input and output gains, unit process noise,
/// `sigmav1_sq <= sigmav2_sq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub a: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    #[serde(default)]
    pub sigma0_sq: f64,
    pub sigmav1_sq: f64,
    pub sigmav2_sq: f64,
}

/// A `(D, P1, P2)` tradeoff point: state cost and the two input powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub d: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    WeaklyDegraded,
    StronglyDegraded { s: u32 },
}

/// How a raw problem was mapped to canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub params: ProblemParams,
    /// Controllers were exchanged so that controller 1 is the better observer.
    pub swapped: bool,
    /// Multiply canonical input `i` by this to get the raw input of the
    /// controller that ends up in slot `i`.
    pub input_scale: [f64; 2],
    /// Multiply the raw state by this to get the canonical state.
    pub state_scale: f64,
}

fn check(name: &'static str, v: f64, ok: bool, reason: &str) -> Result<(), CoreError> {
    if v.is_finite() && ok {
        Ok(())
    } else {
        Err(CoreError::InvalidParams { name, reason: format!("{reason} (got {v})") })
    }
}

impl ProblemParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        check("a", self.a, true, "must be finite")?;
        check("q", self.q, self.q >= 0.0, "must be >= 0")?;
        check("r1", self.r1, self.r1 >= 0.0, "must be >= 0")?;
        check("r2", self.r2, self.r2 >= 0.0, "must be >= 0")?;
        check("sigma0_sq", self.sigma0_sq, self.sigma0_sq >= 0.0, "must be >= 0")?;
        check("sigmav1_sq", self.sigmav1_sq, self.sigmav1_sq >= 0.0, "must be >= 0")?;
        check("sigmav2_sq", self.sigmav2_sq, self.sigmav2_sq >= 0.0, "must be >= 0")?;
        if self.sigmav1_sq > self.sigmav2_sq {
            return Err(CoreError::NotOrdered(self.sigmav1_sq, self.sigmav2_sq));
        }
        Ok(())
    }

    pub fn abs_a(&self) -> f64 {
        self.a.abs()
    }

    /// `max(1, a^2 sv1^2)`: the estimation error floor of controller 1.
    pub fn m_floor(&self) -> f64 {
        (self.a * self.a * self.sigmav1_sq).max(1.0)
    }

    /// Weighted cost of a tradeoff point, with `0 * inf = 0`.
    pub fn weighted(&self, t: &TradeoffPoint) -> f64 {
        weighted_sum(&[(self.q, t.d), (self.r1, t.p1), (self.r2, t.p2)])
    }
}

/// `sum w_i x_i` where a zero weight silences an infinite term.
pub fn weighted_sum(terms: &[(f64, f64)]) -> f64 {
    terms
        .iter()
        .map(|&(w, x)| if w == 0.0 { 0.0 } else { w * x })
        .sum()
}

impl RawParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        check("a", self.a, true, "must be finite")?;
        for (name, v) in [("b1", self.b1), ("b2", self.b2), ("c1", self.c1), ("c2", self.c2)] {
            check(name, v, v != 0.0, "must be nonzero")?;
        }
        for (name, v) in [
            ("q", self.q),
            ("r1", self.r1),
            ("r2", self.r2),
            ("sigma0_sq", self.sigma0_sq),
            ("sigmav1_sq", self.sigmav1_sq),
            ("sigmav2_sq", self.sigmav2_sq),
        ] {
            check(name, v, v >= 0.0, "must be >= 0")?;
        }
        check("sigmaw_sq", self.sigmaw_sq, self.sigmaw_sq > 0.0, "must be > 0")?;
        Ok(())
    }

    /// Raw problem that is already canonical.
    pub fn from_canonical(p: &ProblemParams) -> Self {
        RawParams {
            a: p.a,
            b1: 1.0,
            b2: 1.0,
            c1: 1.0,
            c2: 1.0,
            q: p.q,
            r1: p.r1,
            r2: p.r2,
            sigma0_sq: p.sigma0_sq,
            sigmaw_sq: 1.0,
            sigmav1_sq: p.sigmav1_sq,
            sigmav2_sq: p.sigmav2_sq,
        }
    }
}

/// Map a raw problem to canonical form.
pub fn normalize(raw: &RawParams) -> Result<ProblemParams, CoreError> {
    normalize_with_map(raw).map(|n| n.params)
}

/// Like [`normalize`] but also returns the change of variables.
///
/// With `x' = x / sw`, `u_i' = b_i u_i / sw` and `y_i' = y_i / (c_i sw)`
/// the weights become `q sw^2` and `r_i sw^2 / b_i^2`, so every strategy has
/// the same weighted cost in both coordinates.
pub fn normalize_with_map(raw: &RawParams) -> Result<Normalization, CoreError> {
    raw.validate()?;
    let sw2 = raw.sigmaw_sq;
    let sw = sw2.sqrt();
    let v1 = raw.sigmav1_sq / (raw.c1 * raw.c1 * sw2);
    let v2 = raw.sigmav2_sq / (raw.c2 * raw.c2 * sw2);
    let r1 = raw.r1 * sw2 / (raw.b1 * raw.b1);
    let r2 = raw.r2 * sw2 / (raw.b2 * raw.b2);
    let swapped = v1 > v2;
    let (sv1, sv2, r1, r2, s1, s2) = if swapped {
        (v2, v1, r2, r1, sw / raw.b2, sw / raw.b1)
    } else {
        (v1, v2, r1, r2, sw / raw.b1, sw / raw.b2)
    };
    let params = ProblemParams {
        a: raw.a,
        q: raw.q * sw2,
        r1,
        r2,
        sigma0_sq: raw.sigma0_sq / sw2,
        sigmav1_sq: sv1,
        sigmav2_sq: sv2,
    };
    params.validate()?;
    Ok(Normalization { params, swapped, input_scale: [s1, s2], state_scale: 1.0 / sw })
}

/// Stage count `s = ceil((ln sv2^2 - ln max(1, a^2 sv1^2)) / (2 ln|a|))`.
///
/// Returns `None` in the weakly degraded case.
pub fn stage_count(p: &ProblemParams) -> Option<u32> {
    let m = p.m_floor();
    if p.sigmav2_sq <= m {
        return None;
    }
    let ratio = (p.sigmav2_sq.ln() - m.ln()) / (2.0 * p.abs_a().ln());
    let mut s = ratio.ceil().max(1.0);
    // pin s to the exact bracket a^{2(s-1)} M < sv2^2 <= a^{2s} M
    let a2 = p.a * p.a;
    while s > 1.0 && a2.powf(s - 1.0) * m >= p.sigmav2_sq {
        s -= 1.0;
    }
    while a2.powf(s) * m < p.sigmav2_sq {
        s += 1.0;
    }
    Some(s as u32)
}

/// Classify the observation asymmetry. Requires `|a| > 1`.
pub fn classify(p: &ProblemParams) -> Result<Regime, CoreError> {
    p.validate()?;
    if !(p.abs_a() > 1.0) {
        return Err(CoreError::BelowThreshold(p.abs_a(), 1.0));
    }
    Ok(match stage_count(p) {
        None => Regime::WeaklyDegraded,
        Some(s) => Regime::StronglyDegraded { s },
    })
}

/// Reject `|a|` below `threshold` (the bounds machinery uses
/// [`DEFAULT_A_THRESHOLD`]).
pub fn require_threshold(p: &ProblemParams, threshold: f64) -> Result<(), CoreError> {
    if p.abs_a() < threshold {
        return Err(CoreError::BelowThreshold(p.abs_a(), threshold));
    }
    Ok(())
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::WeaklyDegraded => write!(f, "weak"),
            Regime::StronglyDegraded { s } => write!(f, "strong(s={s})"),
        }
    }
}
