//! Binary deterministic models.
//!
//! Every bit is tracked as the XOR of the random source bits it depends on.
//! A bit with an empty provenance set is 0 with certainty; any other bit is
//! a fair coin, so the upper level of a word is decided exactly.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

mod oneshot;

pub use oneshot::{det_radner, det_witsen, OneShotParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("bit at index {index} would drop below the window while still relevant")]
    WindowUnderflow { index: i32 },
    #[error("bit at index {index} above window_hi = {hi}")]
    WindowOverflow { index: i32, hi: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    X0,
    W,
    V,
}

/// One independent fair coin: the bit at `level` of source `source` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceBit {
    pub time: i64,
    pub level: i32,
    pub source: Source,
}

pub type Provenance = BTreeSet<SourceBit>;

/// Upper level of a word: one above its highest random bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    NegInf,
    Finite(i32),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::NegInf => f.write_str("-inf"),
            Level::Finite(l) => write!(f, "{l}"),
        }
    }
}

/// Binary expansion with symbolic bits, keyed by bit index. Only bits with
/// nonempty provenance are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitWord {
    levels: BTreeMap<i32, Provenance>,
}

impl BitWord {
    pub fn zero() -> Self {
        BitWord::default()
    }

    /// Fresh independent bits `(time, i, source)` at every index in `lo..below`.
    pub fn fresh(time: i64, source: Source, lo: i32, below: i32) -> Self {
        let levels = (lo..below).map(|i| (i, BTreeSet::from([SourceBit { time, level: i, source }]))).collect();
        BitWord { levels }
    }

    pub fn get(&self, i: i32) -> Option<&Provenance> {
        self.levels.get(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &Provenance)> {
        self.levels.iter().map(|(&i, p)| (i, p))
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// XOR a single source bit into index `i`.
    pub fn toggle(&mut self, i: i32, bit: SourceBit) {
        let e = self.levels.entry(i).or_default();
        if !e.remove(&bit) {
            e.insert(bit);
        }
        if e.is_empty() {
            self.levels.remove(&i);
        }
    }

    pub fn xor(&self, other: &BitWord) -> BitWord {
        let mut out = self.clone();
        for (&i, p) in &other.levels {
            let e = out.levels.entry(i).or_default();
            *e = e.symmetric_difference(p).copied().collect();
            if e.is_empty() {
                out.levels.remove(&i);
            }
        }
        out
    }

    /// Multiply by `2^k`.
    pub fn shifted(&self, k: i32) -> BitWord {
        BitWord { levels: self.levels.iter().map(|(&i, p)| (i + k, p.clone())).collect() }
    }

    /// Bits with index in `[lo, hi)`; the rest are set to 0.
    pub fn masked(&self, lo: i32, hi: i32) -> BitWord {
        BitWord { levels: self.levels.range(lo..hi).map(|(&i, p)| (i, p.clone())).collect() }
    }

    pub fn upper_level(&self) -> Level {
        self.levels.keys().next_back().map_or(Level::NegInf, |&i| Level::Finite(i + 1))
    }

    /// Same word with source times measured relative to `n`.
    pub fn relabeled(&self, n: i64) -> BitWord {
        let levels = self
            .levels
            .iter()
            .map(|(&i, p)| (i, p.iter().map(|b| SourceBit { time: b.time - n, ..*b }).collect()))
            .collect();
        BitWord { levels }
    }

    /// One character per index from `hi - 1` down to `lo`, with the binary
    /// point between indices 0 and -1: `.` for 0, `w`/`v`/`x` for bits
    /// driven by one kind of source, `*` for mixed.
    pub fn diagram(&self, lo: i32, hi: i32) -> String {
        let mut s = String::new();
        for i in (lo..hi).rev() {
            let c = match self.levels.get(&i) {
                None => '.',
                Some(p) => {
                    let kinds: BTreeSet<Source> = p.iter().map(|b| b.source).collect();
                    match (kinds.len(), kinds.iter().next()) {
                        (1, Some(Source::W)) => 'w',
                        (1, Some(Source::V)) => 'v',
                        (1, Some(Source::X0)) => 'x',
                        _ => '*',
                    }
                }
            };
            s.push(c);
            if i == 0 && lo < 0 {
                s.push('|');
            }
        }
        s
    }

    fn clip(mut self, lo: i32, hi: i32) -> Result<BitWord, DetError> {
        if let Some((&i, _)) = self.levels.range(hi + 1..).next() {
            return Err(DetError::WindowOverflow { index: i, hi });
        }
        self.levels = self.levels.split_off(&lo);
        Ok(self)
    }
}

/// Parameters of the infinite-horizon model: shift `a'` per step, noise
/// level `sv2'` of the second observation and power level `p1'` of the first
/// input. Indices below `window_lo` are dropped; they are masked by fresh
/// disturbance bits before they could matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetParams {
    pub a_prime: i32,
    pub sigma_v2_level: i32,
    pub p1_level: i32,
    pub window_lo: i32,
    pub window_hi: i32,
}

impl DetParams {
    /// `a' = 2, sv2' = 1, p1' = 1`.
    pub fn problem3() -> Self {
        DetParams { a_prime: 2, sigma_v2_level: 1, p1_level: 1, window_lo: -8, window_hi: 16 }
    }

    pub fn validate(&self) -> Result<(), DetError> {
        if self.a_prime < 1 {
            return Err(DetError::Invalid(format!("a_prime must be >= 1, got {}", self.a_prime)));
        }
        if self.window_lo > -self.a_prime - 2 {
            return Err(DetError::Invalid(format!(
                "window_lo must be <= -a_prime - 2 = {}, got {}",
                -self.a_prime - 2,
                self.window_lo
            )));
        }
        if self.window_hi <= self.sigma_v2_level.max(self.p1_level) + self.a_prime {
            return Err(DetError::Invalid(format!("window_hi = {} is too small", self.window_hi)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetStrategy {
    /// First controller cancels every shifted bit below `p1'`; second
    /// controller cancels every shifted bit it sees noise-free.
    Optimal,
    /// Each input is one shifted copy of its observation.
    LinearShift,
}

/// First controller's move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum U1Rule {
    Zero,
    /// Cancel the shifted state below `p1'`.
    Cancel,
    /// `y1` shifted by the given amount, or by the largest shift that keeps
    /// it below `p1'` when `None`.
    Shift(Option<i32>),
}

/// Second controller's move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum U2Rule {
    Zero,
    /// Cancel the shifted bits whose `y2` copy is noise-free.
    CancelClean,
    /// All of `y2` shifted by `a'`, once the state reaches the noise-free
    /// band; zero before that.
    FullShift,
}

impl DetStrategy {
    pub fn rules(self) -> (U1Rule, U2Rule) {
        match self {
            DetStrategy::Optimal => (U1Rule::Cancel, U2Rule::CancelClean),
            DetStrategy::LinearShift => (U1Rule::Shift(None), U2Rule::FullShift),
        }
    }
}

/// `x[n+1]` from `x[n]` under `strategy`.
pub fn det_step(p: &DetParams, strategy: DetStrategy, state: &BitWord, n: i64) -> Result<BitWord, DetError> {
    let (u1, u2) = strategy.rules();
    det_step_rules(p, u1, u2, state, n)
}

pub fn det_step_rules(p: &DetParams, u1: U1Rule, u2: U2Rule, state: &BitWord, n: i64) -> Result<BitWord, DetError> {
    p.validate()?;
    let a = p.a_prime;
    let y2 = state.xor(&BitWord::fresh(n, Source::V, p.window_lo, p.sigma_v2_level));
    let input1 = match u1 {
        U1Rule::Zero => BitWord::zero(),
        U1Rule::Cancel => state.shifted(a).masked(i32::MIN, p.p1_level),
        U1Rule::Shift(k) => match state.upper_level() {
            Level::NegInf => BitWord::zero(),
            Level::Finite(top) => {
                let k = k.unwrap_or(p.p1_level - top);
                if p.window_lo + k > 0 {
                    return Err(DetError::WindowUnderflow { index: p.window_lo + k - 1 });
                }
                state.shifted(k).masked(i32::MIN, p.p1_level)
            }
        },
    };
    let input2 = match u2 {
        U2Rule::Zero => BitWord::zero(),
        U2Rule::CancelClean => y2.masked(p.sigma_v2_level, i32::MAX).shifted(a),
        U2Rule::FullShift => {
            if state.upper_level() > Level::Finite(p.sigma_v2_level) {
                y2.shifted(a)
            } else {
                BitWord::zero()
            }
        }
    };
    let next = state
        .shifted(a)
        .xor(&input1)
        .xor(&input2)
        .xor(&BitWord::fresh(n, Source::W, p.window_lo, 0));
    next.clip(p.window_lo, p.window_hi)
}

/// States `x[0] = 0, x[1], ..., x[steps]` and their upper levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetTrace {
    pub params: DetParams,
    pub strategy: DetStrategy,
    pub words: Vec<BitWord>,
    pub levels: Vec<Level>,
}

impl DetTrace {
    pub fn steady_level(&self) -> Level {
        *self.levels.last().unwrap_or(&Level::NegInf)
    }

    /// True iff every state from step `n` on equals its predecessor up to a
    /// shift of time.
    pub fn is_periodic_from(&self, n: usize) -> bool {
        (n.max(1)..self.words.len())
            .skip(1)
            .all(|k| self.words[k].relabeled(k as i64) == self.words[k - 1].relabeled(k as i64 - 1))
    }

    /// Per-step text diagram of the tracked window.
    pub fn diagram(&self) -> String {
        let hi = self.params.window_hi;
        let mut s = String::new();
        for (n, (w, l)) in self.words.iter().zip(&self.levels).enumerate() {
            s.push_str(&format!("x[{n:>2}] {}  level {l}\n", w.diagram(self.params.window_lo, hi)));
        }
        s
    }
}

pub fn det_run(p: &DetParams, strategy: DetStrategy, steps: usize) -> Result<DetTrace, DetError> {
    p.validate()?;
    let mut words = vec![BitWord::zero()];
    for n in 0..steps {
        let next = det_step(p, strategy, &words[n], n as i64)?;
        words.push(next);
    }
    let levels = words.iter().map(BitWord::upper_level).collect();
    Ok(DetTrace { params: *p, strategy, words, levels })
}
