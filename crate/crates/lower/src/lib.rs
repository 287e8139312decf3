//! Converse bounds on the optimal cost.
//!
//! The envelopes `D_L,1..4` bound the state disturbance reachable with
//! geometrically weighted input powers `(P1~, P2~)`; [`LowerModel`] turns
//! them into a bound on the weighted cost.

use lqgduet_core::{require_threshold, CoreError, ProblemParams, DEFAULT_A_THRESHOLD};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2, PI};
use thiserror::Error;

mod model;

pub use model::{lower_weighted_cost, LowerConfig, LowerEnvelope, LowerModel, LowerResult, Reach};

/// Geometric slicing rate.
pub const SLICE_RATE: f64 = 2.5;
pub(crate) const SLICE_KEEP: f64 = 1.0 - 1.0 / SLICE_RATE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerError {
    #[error("geometric weight condition violated: 1/(a^2 w) = {0}")]
    Geometric(f64),
    #[error("invalid slice parameters: {0}")]
    InvalidSlice(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn invalid(msg: impl Into<String>) -> LowerError {
    LowerError::InvalidSlice(msg.into())
}

/// `x / y` with `0 / y = 0` for every `y`.
fn ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / y
    }
}

/// `sqrt(c x)` with a zero coefficient silencing an infinite `x`.
pub(crate) fn root(c: f64, x: f64) -> f64 {
    if c == 0.0 || x == 0.0 {
        0.0
    } else {
        (c * x).sqrt()
    }
}

pub(crate) fn pos_sq(x: f64) -> f64 {
    if x > 0.0 {
        x * x
    } else {
        0.0
    }
}

/// `sum_{0 <= i < n} r^i`.
pub(crate) fn geo(r: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else if r == 1.0 {
        n as f64
    } else {
        (1.0 - r.powi(n as i32)) / (1.0 - r)
    }
}

/// `sum_{0 <= i < n} (2.5 / a^2)^i`, or its limit when `n` is `None`.
pub(crate) fn slice_geo(a2: f64, n: Option<u32>) -> f64 {
    let r = SLICE_RATE / a2;
    match n {
        Some(n) => geo(r, n),
        None => 1.0 / (1.0 - r),
    }
}

/// MMSE variance with `obs` observation pairs, scaled to time `k`.
fn info_raw(a: f64, sv1: f64, sv2: f64, obs: u32, k: u32) -> f64 {
    if sv1 == 0.0 {
        return 0.0;
    }
    if obs > 0 && sv2 == 0.0 {
        return 0.0;
    }
    let a2 = a * a;
    // numerator and denominator divided by a^{2(k-1)}
    let g = if obs == 0 { 0.0 } else { a2.powi(obs as i32 - k as i32) * geo(1.0 / a2, obs) };
    sv1 / ((1.0 + ratio(sv1, sv2)) * g + sv1 * a2.powi(1 - k as i32))
}

/// Error variance of `a^{k-1} w[0]` from `k1` observation pairs of both
/// controllers.
pub fn info_mmse(a: f64, sigmav1_sq: f64, sigmav2_sq: f64, k1: u32, k: u32) -> Result<f64, LowerError> {
    if k1 < 1 || k < 1 {
        return Err(invalid("k1 and k must be >= 1"));
    }
    Ok(info_raw(a, sigmav1_sq, sigmav2_sq, k1, k))
}

/// Largest admissible `Sigma` for a given `k1`.
pub fn sigma_cap(a: f64, sigmav1_sq: f64, sigmav2_sq: f64, k1: u32) -> f64 {
    if k1 <= 1 {
        1.0
    } else {
        info_raw(a, sigmav1_sq, sigmav2_sq, k1 - 1, k1)
    }
}

/// `D_L,3`: the estimation floor at time `k1`.
pub fn dl3(p: &ProblemParams, k1: u32) -> f64 {
    let k1 = k1.max(1);
    info_raw(p.a, p.sigmav1_sq, p.sigmav2_sq, k1 - 1, k1).max(1.0)
}

/// Cauchy-Schwarz cap on `E[(sum a^{n-1-i} X_i)^2]` given `E[X_i^2]`.
pub fn power_expand(a: f64, b: f64, powers: &[f64]) -> Result<f64, LowerError> {
    let r = 1.0 / (a * a * b);
    if !(r.abs() < 1.0) {
        return Err(LowerError::Geometric(r));
    }
    let n = powers.len();
    if n == 0 {
        return Ok(0.0);
    }
    let pref = (a * a).powi(n as i32 - 1) * geo(r, n as u32);
    let mut w = 1.0;
    let mut sum = 0.0;
    for &x in powers {
        sum += w * x;
        w *= b;
    }
    Ok(pref * sum)
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

fn check_weight(a: f64, w: f64) -> Result<f64, LowerError> {
    if !(w > 0.0 && w < 1.0) {
        return Err(invalid(format!("weight w must lie in (0, 1), got {w}")));
    }
    let r = 1.0 / (a * a * w);
    if !(r.abs() < 1.0) {
        return Err(LowerError::Geometric(r));
    }
    Ok(r)
}

fn ik_nats(a: f64, s0: f64, sv: f64, k: u32, w: f64, p: f64, r: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let a2 = a * a;
    let kf = k as f64;
    let inv = 1.0 - 1.0 / a2;
    let sig = 2.0 * a2.powi(k as i32 - 1) * s0 / inv + 2.0 * a2.powi(k as i32 - 2) / inv * p / ((1.0 - r) * (1.0 - w));
    0.5 * kf * ratio(sig, kf * sv).ln_1p()
}

fn ik_prime_nats(a: f64, s0: f64, sv: f64, k: u32, w: f64, p: f64, svl: f64, r: f64) -> f64 {
    let a2 = a * a;
    let last = 2.0 * a2.powi(k as i32 - 1) * s0 + 2.0 * a2.powi(k as i32 - 2) / (1.0 - r) * p / (1.0 - w);
    ik_nats(a, s0, sv, k - 1, w, p, r) + 0.5 * ratio(last, svl).ln_1p()
}

/// `I_k` in bits: information about `x[0]` in `k` noisy observations of a
/// plant driven by a power-limited first controller.
pub fn mutual_info_ik(a: f64, sigma0_sq: f64, sigmav_sq: f64, k: u32, w: f64, p: f64) -> Result<f64, LowerError> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    let r = check_weight(a, w)?;
    Ok(ik_nats(a, sigma0_sq, sigmav_sq, k, w, p, r) / LN_2)
}

/// `I_k'` in bits: as [`mutual_info_ik`] with the last observation noise
/// variance replaced by `sigmav_last_sq`.
pub fn mutual_info_ik_prime(
    a: f64,
    sigma0_sq: f64,
    sigmav_sq: f64,
    k: u32,
    w: f64,
    p: f64,
    sigmav_last_sq: f64,
) -> Result<f64, LowerError> {
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    let r = check_weight(a, w)?;
    Ok(ik_prime_nats(a, sigma0_sq, sigmav_sq, k, w, p, sigmav_last_sq, r) / LN_2)
}

/// `I_k''` in bits: uniform last-observation noise.
pub fn mutual_info_ik_doubleprime(
    a: f64,
    sigma0_sq: f64,
    sigmav_sq: f64,
    k: u32,
    w: f64,
    p: f64,
    sigmav_last_sq: f64,
) -> Result<f64, LowerError> {
    Ok(mutual_info_ik_prime(a, sigma0_sq, sigmav_sq, k, w, p, sigmav_last_sq)? + 0.5 * (PI * E / 2.0).log2())
}

/// Probability weight of the uniform component when `v2` is split into a
/// uniform part of half-width `sigma'` and a remainder.
pub fn ld_constant(sigmav2_sq: f64, sigmav2_prime_sq: f64) -> f64 {
    if sigmav2_prime_sq == sigmav2_sq {
        return 1.0;
    }
    if sigmav2_sq == 0.0 {
        return 0.0;
    }
    let s = sigmav2_sq.sqrt();
    let sp = sigmav2_prime_sq.sqrt();
    2.0 * sp / ((2.0 * PI).sqrt() * s) * (-sigmav2_prime_sq / (2.0 * sigmav2_sq)).exp()
}

/// Free parameters of `D_L,1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceParams {
    pub k1: u32,
    pub k2: u32,
    pub k: u32,
    pub sigma_v2_prime_sq: f64,
    pub alpha: f64,
    pub sigma: f64,
}

fn check_sigma(p: &ProblemParams, k1: u32, sigma: f64) -> Result<(), LowerError> {
    let cap = sigma_cap(p.a, p.sigmav1_sq, p.sigmav2_sq, k1);
    if !(sigma >= 0.0 && sigma <= cap * (1.0 + 1e-12)) {
        return Err(invalid(format!("Sigma = {sigma} outside [0, {cap}] for k1 = {k1}")));
    }
    Ok(())
}

impl SliceParams {
    pub fn validate(&self, p: &ProblemParams) -> Result<(), LowerError> {
        if self.k1 < 1 {
            return Err(invalid("k1 must be >= 1"));
        }
        if self.k2 < self.k1 + 1 {
            return Err(invalid("k2 must be >= k1 + 1"));
        }
        if self.k < self.k2 {
            return Err(invalid("k must be >= k2"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha must lie in [0, 1]"));
        }
        if !(self.sigma_v2_prime_sq >= 0.0 && self.sigma_v2_prime_sq.is_finite()) {
            return Err(invalid("sigma_v2_prime_sq must be finite and >= 0"));
        }
        check_sigma(p, self.k1, self.sigma)
    }
}

/// `D_L,1` with `k` possibly unbounded, reduced to `1 + scale * (...)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct L1Shape {
    pub a2: f64,
    pub k1: u32,
    pub k2: u32,
    /// `k - k2`; `None` when unbounded.
    pub tail_len: Option<u32>,
}

impl L1Shape {
    /// `a^{2(k-k1-1)}`.
    pub fn scale(&self) -> f64 {
        match self.tail_len {
            Some(t) => self.a2.powi((t + self.k2 - self.k1 - 1) as i32),
            None => f64::INFINITY,
        }
    }

    /// Coefficient of `sqrt(P2~)`.
    pub fn tail(&self) -> f64 {
        let d = self.k2 - self.k1;
        (self.a2.powi(-(d as i32)) * slice_geo(self.a2, self.tail_len) / SLICE_KEEP).sqrt()
    }

    /// Mutual information terms `(I'', I')` in nats.
    fn info(&self, sv2: f64, sigma: f64, sv2p: f64, exact: bool, p1: f64) -> (f64, f64) {
        let a2 = self.a2;
        let m = self.k2 - self.k1 - 1;
        let inv = 1.0 - 1.0 / a2;
        let pw = p1 / ((1.0 - SLICE_RATE / a2) * SLICE_KEEP);
        let i2 = if m == 0 {
            0.0
        } else {
            let mf = m as f64;
            let x = 2.0 * a2.powi(m as i32 - 1) * sigma / inv + 2.0 * a2.powi(m as i32 - 2) / inv * SLICE_RATE * pw;
            0.5 * mf * ratio(x, mf * sv2).ln_1p()
        };
        let last = 2.0 * a2.powi(m as i32) * sigma + 2.0 * a2.powi(m as i32 - 1) * pw;
        let mut i1 = i2 + 0.5 * ratio(last, sv2p).ln_1p();
        if !exact {
            i1 += 0.5 * (PI * E / 2.0).ln();
        }
        (i2, i1)
    }

    /// Heads of the two branches: `(A1, A2)` with the common scale removed.
    pub fn heads(&self, sv2: f64, sigma: f64, sv2p: f64, p1: f64) -> (f64, f64) {
        let a2 = self.a2;
        let exact = sv2p == sv2;
        let c = ld_constant(sv2, sv2p);
        let (i2, i1) = self.info(sv2, sigma, sv2p, exact, p1);
        let d = self.k2 - self.k1;
        let gd = slice_geo(a2, Some(d));
        let gt = slice_geo(a2, self.tail_len);
        let shrink = |i: f64| if i.is_finite() { sigma * (-2.0 * i).exp() } else { 0.0 };
        let h1 = root(c * a2, shrink(i1))
            - root(c * gd / SLICE_KEEP, p1)
            - root(a2.powi(-(d as i32)) * gt * SLICE_RATE.powi(d as i32) / SLICE_KEEP, p1);
        // the w[1] branch needs w[1] != w[k-1], i.e. k >= 3
        if self.tail_len == Some(0) && self.k2 == 2 {
            return (h1, f64::NEG_INFINITY);
        }
        let g2 = slice_geo(a2, self.tail_len.map(|t| t + d - 1));
        let h2 = shrink(i2).sqrt() - root(g2 * SLICE_RATE / (a2 * SLICE_KEEP), p1);
        (h1, h2)
    }
}

/// Combine heads and the `P2~` tail: `1 + scale * (...)_+^2`.
pub(crate) fn compose(scale: f64, floor: f64, head: f64, tail: f64) -> f64 {
    let b = pos_sq(head - tail);
    if b == 0.0 {
        floor
    } else {
        floor + scale * b
    }
}

/// `D_L,1`.
pub fn dl1(p: &ProblemParams, sp: &SliceParams, p1: f64, p2: f64) -> Result<f64, LowerError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    sp.validate(p)?;
    let shape = L1Shape { a2: p.a * p.a, k1: sp.k1, k2: sp.k2, tail_len: Some(sp.k - sp.k2) };
    let (h1, h2) = shape.heads(p.sigmav2_sq, sp.sigma, sp.sigma_v2_prime_sq, p1);
    let t = root(shape.tail() * shape.tail(), p2);
    let b = sp.alpha * pos_sq(h1 - t) + (1.0 - sp.alpha) * pos_sq(h2 - t);
    Ok(if b == 0.0 { 1.0 } else { 1.0 + shape.scale() * b })
}

/// Inner infimum of `D_L,2`: the smallest `(a - c1 - c2)^2 Sigma + c1^2
/// sv1^2 + c2^2 sv2^2` over the power-feasible box.
pub fn dl2_inner(p: &ProblemParams, sigma: f64, p1: f64, p2: f64) -> f64 {
    let lim = |pt: f64, sv: f64| {
        let den = SLICE_KEEP * (sigma + sv);
        if den > 0.0 {
            (pt / den).sqrt()
        } else {
            f64::INFINITY
        }
    };
    box_qp(p.a, sigma, p.sigmav1_sq, p.sigmav2_sq, lim(p1, p.sigmav1_sq), lim(p2, p.sigmav2_sq))
}

fn box_qp(a: f64, sig: f64, s1: f64, s2: f64, c1m: f64, c2m: f64) -> f64 {
    let f = |c1: f64, c2: f64| {
        let e = a - c1 - c2;
        e * e * sig + c1 * c1 * s1 + c2 * c2 * s2
    };
    if sig == 0.0 {
        return 0.0;
    }
    let det = sig * s1 + sig * s2 + s1 * s2;
    if det > 0.0 {
        let c1 = a * sig * s2 / det;
        let c2 = a * sig * s1 / det;
        if c1.abs() <= c1m && c2.abs() <= c2m {
            return f(c1, c2);
        }
    }
    let best1 = |c2: f64| (sig * (a - c2) / (sig + s1)).clamp(-c1m, c1m);
    let best2 = |c1: f64| (sig * (a - c1) / (sig + s2)).clamp(-c2m, c2m);
    let mut best = f64::INFINITY;
    if c1m.is_finite() {
        for c1 in [-c1m, c1m] {
            best = best.min(f(c1, best2(c1)));
        }
    }
    if c2m.is_finite() {
        for c2 in [-c2m, c2m] {
            best = best.min(f(best1(c2), c2));
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Coefficient of `sqrt(P~)` in `D_L,2` after removing `a^{2(k-k1-1)}`.
pub(crate) fn l2_tail(a2: f64, len: Option<u32>) -> f64 {
    (slice_geo(a2, len) * SLICE_RATE / (a2 * SLICE_KEEP)).sqrt()
}

/// `D_L,2`.
pub fn dl2(p: &ProblemParams, k1: u32, k: u32, sigma: f64, p1: f64, p2: f64) -> Result<f64, LowerError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    if k1 < 1 || k < k1 + 1 {
        return Err(invalid("D_L,2 needs k1 >= 1 and k >= k1 + 1"));
    }
    check_sigma(p, k1, sigma)?;
    let a2 = p.a * p.a;
    let t = k - k1 - 1;
    let c = l2_tail(a2, Some(t));
    let head = dl2_inner(p, sigma, p1, p2).sqrt() - root(c * c, p1);
    Ok(compose(a2.powi(t as i32), 1.0, head, root(c * c, p2)))
}

/// Coefficient of `sqrt(P~)` in `D_L,4` after removing `a^{2(k-2)}`.
pub(crate) fn l4_tail(a2: f64) -> f64 {
    (slice_geo(a2, None) / SLICE_KEEP).sqrt()
}

/// `D_L,4`.
pub fn dl4(p: &ProblemParams, k: u32, p1: f64, p2: f64) -> Result<f64, LowerError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    if k < 2 {
        return Err(invalid("D_L,4 needs k >= 2"));
    }
    let a2 = p.a * p.a;
    let c = l4_tail(a2);
    let head = p.abs_a() - root(c * c, p1);
    Ok(compose(a2.powi(k as i32 - 2), 0.0, head, root(c * c, p2)))
}
