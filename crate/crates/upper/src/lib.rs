//! Achievable `(D, P1, P2)` triples and the upper bound on the optimal cost.
//!
//! Powers of `|a|` go through `exp(k ln|a|)` so that `|a|` up to `1e6` with
//! `s` up to 20 stays finite.

use lqgduet_core::{classify, require_threshold, CoreError, ProblemParams, Regime, TradeoffPoint, DEFAULT_A_THRESHOLD};
use lqgduet_lattice::{q_tail, sum_series, LatticeError};
use lqgduet_strategies::StrategySpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpperError {
    #[error("infeasible signaling design: {0}")]
    Infeasible(String),
    #[error("power {p} outside the valid bracket [{lo}, {hi}]")]
    OutOfBracket { p: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Series(#[from] LatticeError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Parameters of an `s`-stage signaling design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigDesign {
    pub s: u32,
    pub d: f64,
    pub w1: f64,
}

/// `|a|^e` computed in log space.
pub fn apow(a: f64, e: f64) -> f64 {
    (e * a.abs().ln()).exp()
}

/// `Q(num / den)` with the limits `den -> 0+` made explicit.
fn q_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        q_tail(num / den)
    } else if num > 0.0 {
        0.0
    } else if num == 0.0 {
        0.5
    } else {
        1.0
    }
}

struct Shape {
    a2: f64,
    outer: f64,
    width: f64,
}

fn shape(p: &ProblemParams, dz: &SigDesign) -> Shape {
    let aa = p.abs_a();
    let s = dz.s as f64;
    Shape {
        a2: aa * aa,
        outer: apow(aa, s) * dz.d,
        width: apow(aa, s - 1.0) * dz.d * aa / (aa - 1.0) + dz.w1,
    }
}

/// Check `d > 0`, `w1 > 0` and `|a|^s d > |a|^{s-1} d |a|/(|a|-1) + w1`.
pub fn check_design(p: &ProblemParams, dz: &SigDesign) -> Result<(), UpperError> {
    if !(p.abs_a() > 1.0) {
        return Err(UpperError::Infeasible(format!("|a| = {} must exceed 1", p.abs_a())));
    }
    if dz.s == 0 {
        return Err(UpperError::Infeasible("s must be >= 1".into()));
    }
    if !(dz.d > 0.0 && dz.d.is_finite()) {
        return Err(UpperError::Infeasible(format!("d > 0 violated (d = {})", dz.d)));
    }
    if !(dz.w1 > 0.0 && dz.w1.is_finite()) {
        return Err(UpperError::Infeasible(format!("w1 > 0 violated (w1 = {})", dz.w1)));
    }
    let sh = shape(p, dz);
    if !(sh.outer - sh.width > 0.0) {
        return Err(UpperError::Infeasible(format!(
            "|a|^s d - (|a|^(s-1) d |a|/(|a|-1) + w1) > 0 violated ({} <= {})",
            sh.outer, sh.width
        )));
    }
    Ok(())
}

/// State-cost bound `D_U,1(d, w1)` of `s`-stage signaling.
pub fn du1_value(p: &ProblemParams, dz: &SigDesign) -> Result<f64, UpperError> {
    check_design(p, dz)?;
    let aa = p.abs_a();
    let s = dz.s as f64;
    let Shape { a2, outer, width } = shape(p, dz);
    let sv2 = p.sigmav2_sq.sqrt();
    let half_d = dz.d / 2.0;
    let head = 2.0
        * apow(aa, 2.0 * s)
        * (2.0 * half_d * half_d / (1.0 - 1.0 / aa).powi(2) + 2.0 / (1.0 - 1.0 / a2) + 2.0 * a2 * p.sigmav1_sq);
    let inlier = sum_series(|i| {
        let i = i as f64;
        4.0 * a2 * (i * outer + width / 2.0).powi(2) * q_ratio((2.0 * i - 1.0) * outer - width, 2.0 * sv2)
    })?;
    let var = apow(aa, 2.0 * (s - 1.0)) * a2 / (a2 - 1.0) + apow(aa, 2.0 * s) * p.sigmav1_sq;
    let q_out = q_tail(dz.w1 / (2.0 * var.sqrt()));
    let outlier = if q_out > 0.0 {
        8.0 * a2 * q_out * sum_series(|i| {
            let i = i as f64;
            (i * outer + outer / 2.0).powi(2) * q_ratio((i - 1.0) * outer, sv2)
        })?
    } else {
        0.0
    };
    Ok(head + inlier + outlier + 2.0 * a2 * half_d * half_d + 1.0)
}

/// Full signaling triple
/// `(D_U,1, a^2 d^2 / 4, 8 a^2 D_U,1 + 3.5 a^{2(s+1)} d^2 + 4 a^2 sv2^2)`.
pub fn du1(p: &ProblemParams, dz: &SigDesign) -> Result<TradeoffPoint, UpperError> {
    let d = du1_value(p, dz)?;
    let a2 = p.a * p.a;
    Ok(TradeoffPoint {
        d,
        p1: a2 * dz.d * dz.d / 4.0,
        p2: 8.0 * a2 * d + 3.5 * apow(p.a, 2.0 * (dz.s as f64 + 1.0)) * dz.d * dz.d + 4.0 * a2 * p.sigmav2_sq,
    })
}

/// Linear bang-bang triple for the given active controller.
pub fn linbb_bound(p: &ProblemParams, controller: u8) -> TradeoffPoint {
    let a2 = p.a * p.a;
    let sv = if controller == 1 { p.sigmav1_sq } else { p.sigmav2_sq };
    let d = a2 * sv + 1.0;
    let pw = a2 * a2 * sv + a2 * sv + a2;
    if controller == 1 {
        TradeoffPoint { d, p1: pw, p2: 0.0 }
    } else {
        TradeoffPoint { d, p1: 0.0, p2: pw }
    }
}

/// Design used by the simplified bound: `d = sqrt(320000 P / a^2)`,
/// `w1 = |a|^s d / 6`.
pub fn bracket_design(p: &ProblemParams, s: u32, power: f64) -> SigDesign {
    let d = (320_000.0 * power / (p.a * p.a)).sqrt();
    SigDesign { s, d, w1: apow(p.a, s as f64) * d / 6.0 }
}

/// Power range `[sv2^2 / (70 a^{2(s-1)}), max(a^2, a^4 sv1^2) / 20000]` of the
/// simplified bound.
pub fn simplified_bracket(p: &ProblemParams, s: u32) -> (f64, f64) {
    let a2 = p.a * p.a;
    let lo = p.sigmav2_sq / (70.0 * apow(p.a, 2.0 * (s as f64 - 1.0)));
    let hi = a2.max(a2 * a2 * p.sigmav1_sq) / 20_000.0;
    (lo, hi)
}

/// Closed-form loosening of the signaling triple at the bracket design.
pub fn simplified_upper(p: &ProblemParams, s: u32, power: f64) -> Result<TradeoffPoint, UpperError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    let (lo, hi) = simplified_bracket(p, s);
    if !(power >= lo && power <= hi) {
        return Err(UpperError::OutOfBracket { p: power, lo, hi });
    }
    Ok(simplified_upper_unchecked(p, s, power))
}

/// [`simplified_upper`] without the threshold and bracket checks.
pub fn simplified_upper_unchecked(p: &ProblemParams, s: u32, power: f64) -> TradeoffPoint {
    let sf = s as f64;
    let m = p.m_floor();
    let e = (-50.0 * apow(p.a, 2.0 * (sf - 1.0)) * power / p.sigmav2_sq).exp();
    let a2s = apow(p.a, 2.0 * sf);
    let a2s1 = apow(p.a, 2.0 * (sf + 1.0));
    TradeoffPoint {
        d: 832.0 * a2s * power * e + 63.0 * a2s * m,
        p1: 80_000.0 * power,
        p2: 6656.0 * a2s1 * power * e + 564.0 * a2s1 * m,
    }
}

/// One achievable point together with the strategy achieving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub spec: StrategySpec,
    pub design: Option<SigDesign>,
    pub point: TradeoffPoint,
}

/// Best candidate for a particular weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperChoice {
    pub cost: f64,
    pub candidate: Candidate,
}

pub const D_GRID_POINTS: usize = 200;
const W1_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const BRACKET_POINTS: usize = 40;

/// All achievable points considered by the optimizer for one problem. The
/// set does not depend on the weights, so it can be reused across
/// `(q, r1, r2)`.
#[derive(Debug, Clone)]
pub struct UpperFrontier {
    pub candidates: Vec<Candidate>,
}

impl UpperFrontier {
    pub fn new(p: &ProblemParams) -> Result<Self, UpperError> {
        require_threshold(p, DEFAULT_A_THRESHOLD)?;
        let mut candidates: Vec<Candidate> = (1..=2)
            .map(|c| Candidate { spec: StrategySpec::LinBB { controller: c }, design: None, point: linbb_bound(p, c) })
            .collect();
        if let Regime::StronglyDegraded { s } = classify(p)? {
            candidates.extend(sig_candidates(p, s));
        }
        Ok(UpperFrontier { candidates })
    }

    pub fn best(&self, p: &ProblemParams) -> UpperChoice {
        let mut best = UpperChoice { cost: f64::INFINITY, candidate: self.candidates[0] };
        for c in &self.candidates {
            let cost = p.weighted(&c.point);
            if cost < best.cost {
                best = UpperChoice { cost, candidate: *c };
            }
        }
        best
    }
}

fn push_design(p: &ProblemParams, dz: SigDesign, out: &mut Vec<Candidate>) {
    if let Ok(point) = du1(p, &dz) {
        out.push(Candidate { spec: StrategySpec::Sig { s: dz.s, d: dz.d }, design: Some(dz), point });
    }
}

/// Signaling designs on the `(d, w1)` search grid plus the bracket designs
/// across the simplified-bound bracket. Designs whose bound fails to
/// evaluate are skipped.
pub fn sig_candidates(p: &ProblemParams, s: u32) -> Vec<Candidate> {
    let aa = p.abs_a();
    let base = p.sigmav2_sq.sqrt() / apow(aa, s as f64);
    let mut out = Vec::new();
    for k in 0..D_GRID_POINTS {
        let d = base * 10f64.powf(-4.0 + 8.0 * k as f64 / (D_GRID_POINTS - 1) as f64);
        let outer = apow(aa, s as f64) * d;
        push_design(p, SigDesign { s, d, w1: outer / 6.0 }, &mut out);
        let room = outer - apow(aa, s as f64 - 1.0) * d * aa / (aa - 1.0);
        for f in W1_FRACTIONS {
            push_design(p, SigDesign { s, d, w1: room * f }, &mut out);
        }
    }
    let (lo, hi) = simplified_bracket(p, s);
    if lo <= hi {
        for k in 0..BRACKET_POINTS {
            let power = lo * (hi / lo).powf(k as f64 / (BRACKET_POINTS - 1) as f64);
            push_design(p, bracket_design(p, s, power), &mut out);
        }
    }
    out
}

/// Minimize `q D + r1 P1 + r2 P2` over the candidate set.
pub fn optimize_upper(p: &ProblemParams) -> Result<UpperChoice, UpperError> {
    Ok(UpperFrontier::new(p)?.best(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// `3297 a^2 log a`: the nonlinear upper bound on the cost of the scaling
/// family `q = 1, r1 = a, r2 = 0, sv1 = 0, sv2^2 = a`.
pub fn scaling_family_upper(a: f64, base: LogBase) -> f64 {
    3297.0 * a * a * base.log(a)
}
