//! Controller families as step functions.
//!
//! * [`StrategySpec::LinBB`]: one controller cancels the state from its own
//!   observation, the other stays silent.
//! * [`StrategySpec::LinKal`]: one controller applies `-k` times its Kalman
//!   estimate.
//! * [`StrategySpec::Sig`]: `s`-stage signaling. Controller 1 pushes the state
//!   onto a lattice of spacing `d`; controller 2 reads the lattice point
//!   through its noisier observation, compensating for its own past inputs.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use lqgduet_core::{classify, ProblemParams, Regime};
use lqgduet_lattice::split_unchecked;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("invalid strategy: {0}")]
    Invalid(String),
    #[error("problem is weakly degraded; no signaling stage count")]
    WeakRegime,
    #[error(transparent)]
    Core(#[from] lqgduet_core::CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StrategySpec {
    #[serde(rename = "zero")]
    ZeroInput,
    LinBB { controller: u8 },
    LinKal { controller: u8, k: f64 },
    Sig { s: u32, d: f64 },
}

impl StrategySpec {
    pub fn validate(&self) -> Result<(), StrategyError> {
        let bad = |m: String| Err(StrategyError::Invalid(m));
        match *self {
            StrategySpec::ZeroInput => Ok(()),
            StrategySpec::LinBB { controller } | StrategySpec::LinKal { controller, .. }
                if controller != 1 && controller != 2 =>
            {
                bad(format!("controller must be 1 or 2, got {controller}"))
            }
            StrategySpec::LinKal { k, .. } if !k.is_finite() => bad(format!("k must be finite, got {k}")),
            StrategySpec::Sig { s, .. } if s == 0 => bad("s must be >= 1".into()),
            StrategySpec::Sig { d, .. } if !(d > 0.0 && d.is_finite()) => bad(format!("d must be positive, got {d}")),
            _ => Ok(()),
        }
    }

    /// Family label used in reports: `zero`, `linbb1`, `linbb2`, `linkal1`,
    /// `linkal2` or `sig`.
    pub fn label(&self) -> String {
        match self {
            StrategySpec::ZeroInput => "zero".into(),
            StrategySpec::LinBB { controller } => format!("linbb{controller}"),
            StrategySpec::LinKal { controller, .. } => format!("linkal{controller}"),
            StrategySpec::Sig { .. } => "sig".into(),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::LinKal { controller, k } => write!(f, "linkal{controller}(k={k})"),
            StrategySpec::Sig { s, d } => write!(f, "sig(s={s},d={d})"),
            other => f.write_str(&other.label()),
        }
    }
}

/// Accepts `zero`, `linbb1`, `linbb2`, `linkal1:K`, `linkal2:K` and `sig:S:D`.
impl FromStr for StrategySpec {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|e| StrategyError::Invalid(format!("{t}: {e}")));
        let spec = match parts.as_slice() {
            ["zero"] => StrategySpec::ZeroInput,
            ["linbb1"] => StrategySpec::LinBB { controller: 1 },
            ["linbb2"] => StrategySpec::LinBB { controller: 2 },
            ["linkal1", k] => StrategySpec::LinKal { controller: 1, k: num(k)? },
            ["linkal2", k] => StrategySpec::LinKal { controller: 2, k: num(k)? },
            ["sig", st, d] => StrategySpec::Sig {
                s: st.parse().map_err(|e| StrategyError::Invalid(format!("{st}: {e}")))?,
                d: num(d)?,
            },
            _ => return Err(StrategyError::Invalid(format!("unrecognized strategy `{s}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Linear bang-bang: the active controller outputs `-a y`.
pub fn linbb_step(a: f64, controller: u8, y: f64) -> (f64, f64) {
    let u = -a * y;
    if controller == 1 {
        (u, 0.0)
    } else {
        (0.0, u)
    }
}

/// Past `u2` values, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct SigState {
    u2_history: VecDeque<f64>,
}

impl SigState {
    pub fn new(s: u32) -> Self {
        SigState { u2_history: std::iter::repeat(0.0).take(s as usize).collect() }
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.u2_history.iter().copied()
    }

    /// `sum_{i=1..s} a^{i-1} u2[n-i]`.
    pub fn weighted_sum(&self, a: f64) -> f64 {
        self.u2_history.iter().rev().fold(0.0, |acc, &u| acc * a + u)
    }
}

/// Lattice spacing `|a|^s d` seen by controller 2.
pub fn sig_outer_step(a: f64, s: u32, d: f64) -> f64 {
    a.abs().powi(s as i32) * d
}

/// Compensation term `m = R_{|a|^s d}(sum_{i=1..s} a^{i-1} u2[n-i])`.
pub fn sig_compensation(a: f64, s: u32, d: f64, state: &SigState) -> f64 {
    split_unchecked(sig_outer_step(a, s, d), state.weighted_sum(a)).1
}

/// One step of `s`-stage signaling. Updates `state` with the new `u2`.
pub fn sig_step(a: f64, s: u32, d: f64, y1: f64, y2: f64, state: &mut SigState) -> (f64, f64) {
    let outer = sig_outer_step(a, s, d);
    let m = split_unchecked(outer, state.weighted_sum(a)).1;
    let u1 = -a * split_unchecked(d, y1).1;
    let u2 = -a * (split_unchecked(outer, y2 - m).0 + m);
    state.u2_history.pop_back();
    state.u2_history.push_front(u2);
    (u1, u2)
}

/// Scalar Kalman filter state.
///
/// Before the first observation `(xhat, p)` hold the prior of `x[0]`;
/// afterwards they hold the posterior of the latest state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub xhat: f64,
    pub p: f64,
    primed: bool,
}

impl KalmanState {
    pub fn new(sigma0_sq: f64) -> Self {
        KalmanState { xhat: 0.0, p: sigma0_sq, primed: false }
    }
}

/// Predict with the previous total input, correct with `y`, return `-k xhat`.
pub fn kalman_step(a: f64, k: f64, sigmav_sq: f64, y: f64, state: &mut KalmanState, u_prev: f64) -> f64 {
    let (xm, pm) = if state.primed {
        (a * state.xhat + u_prev, a * a * state.p + 1.0)
    } else {
        (state.xhat, state.p)
    };
    let denom = pm + sigmav_sq;
    let g = if denom > 0.0 { pm / denom } else { 1.0 };
    state.xhat = xm + g * (y - xm);
    state.p = (1.0 - g) * pm;
    state.primed = true;
    -k * state.xhat
}

/// Stationary posterior variance: fixed point of
/// `p = sv^2 (a^2 p + 1) / (a^2 p + 1 + sv^2)`.
pub fn stationary_error_variance(a: f64, sigmav_sq: f64) -> f64 {
    if sigmav_sq == 0.0 {
        return 0.0;
    }
    // a^2 p^2 + (1 + sv^2 - a^2 sv^2) p - sv^2 = 0
    let a2 = a * a;
    let b = 1.0 + sigmav_sq - a2 * sigmav_sq;
    let disc = (b * b + 4.0 * a2 * sigmav_sq).sqrt();
    if b > 0.0 {
        2.0 * sigmav_sq / (b + disc)
    } else {
        (disc - b) / (2.0 * a2)
    }
}

/// LQR gain for `x' = a x + u` with stage cost `q x^2 + r u^2`.
pub fn lqr_gain(a: f64, q: f64, r: f64) -> f64 {
    if r == 0.0 {
        return a;
    }
    if q == 0.0 && a.abs() < 1.0 {
        return 0.0;
    }
    // S = q + a^2 r S / (S + r)  =>  S^2 + (r - q - a^2 r) S - q r = 0
    let b = r - q - a * a * r;
    let s = (-b + (b * b + 4.0 * q * r).sqrt()) / 2.0;
    a * s / (s + r)
}

/// Signaling stage count of a strongly degraded problem.
pub fn select_stage(p: &ProblemParams) -> Result<u32, StrategyError> {
    match classify(p)? {
        Regime::StronglyDegraded { s } => Ok(s),
        Regime::WeaklyDegraded => Err(StrategyError::WeakRegime),
    }
}

/// Running controller pair for one trajectory.
#[derive(Debug, Clone)]
pub struct Controller {
    a: f64,
    spec: StrategySpec,
    sigmav1_sq: f64,
    sigmav2_sq: f64,
    sig: Option<SigState>,
    kalman: Option<KalmanState>,
    last_u: f64,
}

impl Controller {
    pub fn new(p: &ProblemParams, spec: StrategySpec) -> Result<Self, StrategyError> {
        spec.validate()?;
        Ok(Controller {
            a: p.a,
            spec,
            sigmav1_sq: p.sigmav1_sq,
            sigmav2_sq: p.sigmav2_sq,
            sig: match spec {
                StrategySpec::Sig { s, .. } => Some(SigState::new(s)),
                _ => None,
            },
            kalman: match spec {
                StrategySpec::LinKal { .. } => Some(KalmanState::new(p.sigma0_sq)),
                _ => None,
            },
            last_u: 0.0,
        })
    }

    pub fn spec(&self) -> StrategySpec {
        self.spec
    }

    pub fn sig_state(&self) -> Option<&SigState> {
        self.sig.as_ref()
    }

    /// Inputs for the current observations.
    pub fn step(&mut self, y1: f64, y2: f64) -> (f64, f64) {
        let a = self.a;
        let (u1, u2) = match self.spec {
            StrategySpec::ZeroInput => (0.0, 0.0),
            StrategySpec::LinBB { controller } => linbb_step(a, controller, if controller == 1 { y1 } else { y2 }),
            StrategySpec::LinKal { controller, k } => {
                let (y, sv) = if controller == 1 { (y1, self.sigmav1_sq) } else { (y2, self.sigmav2_sq) };
                let st = self.kalman.as_mut().expect("kalman state");
                let u = kalman_step(a, k, sv, y, st, self.last_u);
                if controller == 1 {
                    (u, 0.0)
                } else {
                    (0.0, u)
                }
            }
            StrategySpec::Sig { s, d } => sig_step(a, s, d, y1, y2, self.sig.as_mut().expect("sig state")),
        };
        self.last_u = u1 + u2;
        (u1, u2)
    }
}
