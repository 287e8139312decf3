//! Lattice quantizer `(Q_x, R_x)`, Gaussian tail bounds and the `(d, w, o)`
//! approximate comb calculus.
//!
//! A random variable `X` satisfies the comb bound `(d, w, o)` when, except
//! with probability at most `o`, it lies within `w/2` of a multiple of `d`.
//! `d = inf` means the single box around zero.

use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

mod series;

pub use series::{sum_series, SERIES_MAX_TERMS, SERIES_REL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("invalid comb bound: {0}")]
    BadBound(String),
    #[error("cannot add comb bounds with spacings {0} and {1}")]
    IncompatibleSpacing(f64, f64),
    #[error("scale factor must be positive, got {0}")]
    BadScale(f64),
    #[error("series did not converge after {terms} terms (last term {last})")]
    NonConvergent { terms: usize, last: f64 },
}

fn check_step(step: f64) -> Result<(), LatticeError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(LatticeError::BadStep(step))
    }
}

/// `(Q, R)` without argument checks. Keeps `R` in `[-step/2, step/2)` even
/// when the division rounds across a half-integer.
#[inline]
pub fn split_unchecked(step: f64, y: f64) -> (f64, f64) {
    let mut k = (y / step + 0.5).floor();
    let mut r = (-k).mul_add(step, y);
    let half = 0.5 * step;
    if r < -half {
        k -= 1.0;
        r = (-k).mul_add(step, y);
    } else if r >= half {
        k += 1.0;
        r = (-k).mul_add(step, y);
    }
    (k * step, r)
}

/// `Q_step(y) = step * floor(y/step + 1/2)`.
pub fn quantize(step: f64, y: f64) -> Result<f64, LatticeError> {
    check_step(step)?;
    Ok(split_unchecked(step, y).0)
}

/// `R_step(y) = y - Q_step(y)`, in `[-step/2, step/2)`.
pub fn remainder(step: f64, y: f64) -> Result<f64, LatticeError> {
    check_step(step)?;
    Ok(split_unchecked(step, y).1)
}

const TAIL_SWITCH: f64 = 38.0;

/// Standard Gaussian upper tail `Q(x) = P(N(0,1) > x)`.
pub fn q_tail(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        q_tail_bracket(x).1
    } else {
        0.5 * libm::erfc(x / SQRT_2)
    }
}

/// `((1/x - 1/x^3) phi(x), phi(x)/x)` with `phi` the standard normal density.
/// Valid for `x > 0`.
pub fn q_tail_bracket(x: f64) -> (f64, f64) {
    let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    ((1.0 / x - 1.0 / (x * x * x)) * phi, phi / x)
}

/// Approximate comb bound `(d, w, o)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombBound {
    pub d: f64,
    pub w: f64,
    pub o: f64,
}

impl CombBound {
    pub fn new(d: f64, w: f64, o: f64) -> Result<Self, LatticeError> {
        if !(d > 0.0) {
            return Err(LatticeError::BadBound(format!("spacing {d} must be positive")));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(LatticeError::BadBound(format!("width {w} must be finite and >= 0")));
        }
        if d.is_finite() && !(d > w) {
            return Err(LatticeError::BadBound(format!("spacing {d} must exceed width {w}")));
        }
        if !(0.0..=1.0).contains(&o) {
            return Err(LatticeError::BadBound(format!("outage {o} outside [0, 1]")));
        }
        Ok(CombBound { d, w, o })
    }

    /// Whether `x` lies in one of the boxes `[i d - w/2, i d + w/2]`.
    pub fn contains(&self, x: f64) -> bool {
        let r = if self.d.is_finite() { split_unchecked(self.d, x).1 } else { x };
        r.abs() <= 0.5 * self.w
    }
}

/// Sum of a comb-bounded variable and a bounded (or same-spacing) one.
///
/// Unlike [`CombBound::new`] this does not demand `d > w` of the result;
/// callers check that when they need the quantizer bound.
pub fn comb_add(b1: CombBound, b2: CombBound) -> Result<CombBound, LatticeError> {
    if b2.d.is_finite() && b2.d != b1.d {
        return Err(LatticeError::IncompatibleSpacing(b1.d, b2.d));
    }
    Ok(CombBound { d: b1.d, w: b1.w + b2.w, o: (b1.o + b2.o).min(1.0) })
}

pub fn comb_scale(k: f64, b: CombBound) -> Result<CombBound, LatticeError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(LatticeError::BadScale(k));
    }
    Ok(CombBound { d: k * b.d, w: k * b.w, o: b.o })
}

/// Bound for `N(0, sigma^2)` with a single box of width `w`.
pub fn gaussian_comb(w: f64, sigma: f64) -> CombBound {
    let o = if sigma == 0.0 {
        if w > 0.0 { 0.0 } else { 1.0 }
    } else {
        (2.0 * q_tail(w / (2.0 * sigma))).min(1.0)
    };
    CombBound { d: f64::INFINITY, w, o }
}

/// Upper bound on `E[(X - Q_d(X + V))^2]` for `X <= (d, w, o)`,
/// `V ~ N(0, sigma^2)` independent, and `E[(X - Q_d(X))^2] <= residual_msq`.
///
/// The tail terms use the Gaussian `Q`.
pub fn quantized_mmse_bound(b: CombBound, residual_msq: f64, sigma: f64) -> Result<f64, LatticeError> {
    if !b.d.is_finite() || !(b.d > b.w) {
        return Err(LatticeError::BadBound(format!("need finite d > w, got d={} w={}", b.d, b.w)));
    }
    if !(sigma > 0.0) {
        return Err(LatticeError::BadBound(format!("sigma must be positive, got {sigma}")));
    }
    let (d, w) = (b.d, b.w);
    let inlier = sum_series(|i| {
        let i = i as f64;
        (i * d + 0.5 * w).powi(2) * 2.0 * q_tail(((2.0 * i - 1.0) * d - w) / (2.0 * sigma))
    })?;
    let outlier = if b.o > 0.0 {
        let tail = sum_series(|i| {
            let i = (i + 1) as f64;
            (i * d + 0.5 * d).powi(2) * 2.0 * q_tail((i - 1.0) * d / sigma)
        })?;
        b.o * ((1.5 * d).powi(2) + tail)
    } else {
        0.0
    };
    Ok(residual_msq + inlier + outlier)
}
