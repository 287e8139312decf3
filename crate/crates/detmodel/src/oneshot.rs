//! One- and two-stage models: the first controller sees `x0` exactly and may
//! only act below `p1'`; the second sees it through noise below `v'`.

use crate::{BitWord, DetError, Level, Source};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneShotParams {
    /// `x0` is random below this index.
    pub x0_level: i32,
    /// Observation noise is random below this index.
    pub v_level: i32,
    pub p1_level: i32,
    pub window_lo: i32,
    /// When false the first controller stays silent.
    pub u1_active: bool,
}

impl Default for OneShotParams {
    fn default() -> Self {
        OneShotParams { x0_level: 2, v_level: 1, p1_level: 1, window_lo: -8, u1_active: true }
    }
}

impl OneShotParams {
    fn validate(&self) -> Result<(), DetError> {
        if self.window_lo >= self.v_level.min(self.p1_level) {
            return Err(DetError::Invalid(format!("window_lo = {} leaves nothing to track", self.window_lo)));
        }
        Ok(())
    }
}

fn u1(p: &OneShotParams, y1: &BitWord) -> BitWord {
    if p.u1_active {
        y1.masked(i32::MIN, p.p1_level)
    } else {
        BitWord::zero()
    }
}

fn u2(p: &OneShotParams, y2: &BitWord) -> BitWord {
    y2.masked(p.v_level, i32::MAX)
}

fn x0(p: &OneShotParams) -> BitWord {
    BitWord::fresh(0, Source::X0, p.window_lo, p.x0_level)
}

/// Both controllers act on `x0` at once.
pub fn det_radner(p: &OneShotParams) -> Result<Level, DetError> {
    p.validate()?;
    let x0 = x0(p);
    let y2 = x0.xor(&BitWord::fresh(0, Source::V, p.window_lo, p.v_level));
    Ok(x0.xor(&u1(p, &x0)).xor(&u2(p, &y2)).upper_level())
}

/// The first controller acts on `x0`, the second on the result.
pub fn det_witsen(p: &OneShotParams) -> Result<Level, DetError> {
    p.validate()?;
    let x0 = x0(p);
    let x1 = x0.xor(&u1(p, &x0));
    let y2 = x1.xor(&BitWord::fresh(1, Source::V, p.window_lo, p.v_level));
    Ok(x1.xor(&u2(p, &y2)).upper_level())
}
