//! Weighted-cost lower bound from the `D_L` envelopes.
//!
//! Each slicing `(k1, k2, k)` fixes how the weighted powers `P~` are
//! defined, so it is held fixed while `P~` is minimized. The remaining free
//! parameters (`Sigma`, `sigma_v2'`, `alpha`) enter pointwise.
//!
//! The minimum over `P~` runs on a logarithmic grid of cells. Every
//! envelope is nonincreasing in both powers, so evaluating `D` at the
//! upper corner of a cell and the power cost at its lower corner bounds
//! the cell from below.

use crate::{compose, dl3, l2_tail, l4_tail, root, sigma_cap, L1Shape, LowerError};
use lqgduet_core::{require_threshold, stage_count, ProblemParams, DEFAULT_A_THRESHOLD};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reach {
    Finite(u32),
    Unbounded,
}

impl fmt::Display for Reach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reach::Finite(k) => write!(f, "{k}"),
            Reach::Unbounded => write!(f, "inf"),
        }
    }
}

/// Which envelope produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerEnvelope {
    L1 { k1: u32, k2: u32, k: Reach },
    L2 { k1: u32, k: Reach },
    L3 { k1: u32 },
    L4 { k: Reach },
    /// `q = 0`.
    Trivial,
}

impl fmt::Display for LowerEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowerEnvelope::L1 { k1, k2, k } => write!(f, "L1(k1={k1},k2={k2},k={k})"),
            LowerEnvelope::L2 { k1, k } => write!(f, "L2(k1={k1},k={k})"),
            LowerEnvelope::L3 { k1 } => write!(f, "L3(k1={k1})"),
            LowerEnvelope::L4 { k } => write!(f, "L4(k={k})"),
            LowerEnvelope::Trivial => write!(f, "trivial"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerResult {
    pub cost: f64,
    pub envelope: LowerEnvelope,
    /// Lower corner of the minimizing cell.
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerConfig {
    /// Grid points per power axis.
    pub grid_points: usize,
    /// Perturbation of the recipe `k1` in each direction.
    pub k1_spread: u32,
    /// Extra stages beyond `k2` (or `k1 + 1`) tried for finite `k`.
    pub extra_k: u32,
}

impl Default for LowerConfig {
    fn default() -> Self {
        LowerConfig { grid_points: 240, k1_spread: 2, extra_k: 2 }
    }
}

enum Shape {
    /// `D(i, j) = floor + scale (head[i] - tail sqrt(e_j))_+^2`.
    Sep { head: Vec<f64> },
    /// `D(i, j) = floor + scale (head[i, j] - tail sqrt(e_j))_+^2`.
    Full { head: Vec<f64> },
    Const(f64),
}

struct Table {
    envelope: LowerEnvelope,
    scale: f64,
    floor: f64,
    tail: f64,
    shape: Shape,
}

impl Table {
    fn value(&self, i: usize, j: usize, n: usize, sqrt_e: &[f64]) -> f64 {
        let head = match &self.shape {
            Shape::Const(v) => return *v,
            Shape::Sep { head } => head[i],
            Shape::Full { head } => head[i * n + j],
        };
        compose(self.scale, self.floor, head, root(self.tail * self.tail, sqrt_e[j] * sqrt_e[j]))
    }
}

/// Precomputed envelope tables for one problem; weights vary per query.
pub struct LowerModel {
    edges: Vec<f64>,
    sqrt_e: Vec<f64>,
    tables: Vec<Table>,
}

fn recipe_k1(p: &ProblemParams) -> u32 {
    let a2 = p.a * p.a;
    let x = a2 * p.sigmav1_sq;
    if x < 1.0 {
        return 1;
    }
    let mut k1 = 2u32;
    while a2.powi(k1 as i32 - 1) <= x {
        k1 += 1;
    }
    k1
}

fn sigma_candidates(p: &ProblemParams, k1: u32) -> Vec<f64> {
    let cap = sigma_cap(p.a, p.sigmav1_sq, p.sigmav2_sq, k1);
    if cap <= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<f64> = [1.0, 0.75, 0.5, 0.35, 0.25, 0.15, 0.1, 0.05].iter().map(|f| f * cap).collect();
    let recipe = 0.295 * p.m_floor();
    if recipe < cap {
        out.push(recipe);
    }
    out
}

fn prime_candidates(sv2: f64) -> Vec<f64> {
    let mut out = vec![sv2];
    if sv2 > 0.0 {
        out.extend((-20..=2).filter(|&j| j != 0).map(|j| sv2 * 2f64.powi(j)));
    }
    out
}

impl LowerModel {
    pub fn new(p: &ProblemParams) -> Result<Self, LowerError> {
        Self::with_config(p, &LowerConfig::default())
    }

    pub fn with_config(p: &ProblemParams, cfg: &LowerConfig) -> Result<Self, LowerError> {
        p.validate()?;
        require_threshold(p, DEFAULT_A_THRESHOLD)?;
        let a2 = p.a * p.a;
        let spread = p.m_floor().max(p.sigmav2_sq);
        let lo = 1e-8;
        let hi = 1e3 * a2 * a2 * spread;
        let n = cfg.grid_points.max(2);
        let mut edges = Vec::with_capacity(n + 2);
        edges.push(0.0);
        let step = (hi / lo).ln() / (n - 1) as f64;
        edges.extend((0..n).map(|i| lo * (step * i as f64).exp()));
        edges.push(f64::INFINITY);
        let sqrt_e: Vec<f64> = edges.iter().map(|e| e.sqrt()).collect();

        let s = stage_count(p).unwrap_or(0);
        let k1r = recipe_k1(p);
        let mut k1s: Vec<u32> = (k1r.saturating_sub(cfg.k1_spread).max(1)..=k1r + cfg.k1_spread).collect();
        if !k1s.contains(&1) {
            k1s.insert(0, 1);
        }
        let primes = prime_candidates(p.sigmav2_sq);

        let mut tables = Vec::new();
        for &k1 in &k1s {
            let sigmas = sigma_candidates(p, k1);
            if sigmas.is_empty() {
                continue;
            }
            for k2 in k1 + 1..=k1 + s + 3 {
                let reaches = (0..=cfg.extra_k).map(|e| Reach::Finite(k2 + e)).chain([Reach::Unbounded]);
                for reach in reaches {
                    let shape = L1Shape {
                        a2,
                        k1,
                        k2,
                        tail_len: match reach {
                            Reach::Finite(k) => Some(k - k2),
                            Reach::Unbounded => None,
                        },
                    };
                    let head: Vec<f64> = edges
                        .iter()
                        .map(|&p1| {
                            let mut best = f64::NEG_INFINITY;
                            for &sig in &sigmas {
                                for &sp in &primes {
                                    let (h1, h2) = shape.heads(p.sigmav2_sq, sig, sp, p1);
                                    best = best.max(h1).max(h2);
                                }
                            }
                            best
                        })
                        .collect();
                    if head.iter().all(|h| *h <= 0.0) {
                        continue;
                    }
                    tables.push(Table {
                        envelope: LowerEnvelope::L1 { k1, k2, k: reach },
                        scale: shape.scale(),
                        floor: 1.0,
                        tail: shape.tail(),
                        shape: Shape::Sep { head },
                    });
                }
            }
            let reaches = (1..=cfg.extra_k + 1).map(|e| Reach::Finite(k1 + e)).chain([Reach::Unbounded]);
            for reach in reaches {
                let len = match reach {
                    Reach::Finite(k) => Some(k - k1 - 1),
                    Reach::Unbounded => None,
                };
                let c = l2_tail(a2, len);
                let m = edges.len();
                let mut head = vec![f64::NEG_INFINITY; m * m];
                for (i, &p1) in edges.iter().enumerate() {
                    for (j, &p2) in edges.iter().enumerate() {
                        let mut best = f64::NEG_INFINITY;
                        for &sig in &sigmas {
                            best = best.max(crate::dl2_inner(p, sig, p1, p2).sqrt());
                        }
                        head[i * m + j] = best - root(c * c, p1);
                    }
                }
                let scale = match len {
                    Some(t) => a2.powi(t as i32),
                    None => f64::INFINITY,
                };
                tables.push(Table {
                    envelope: LowerEnvelope::L2 { k1, k: reach },
                    scale,
                    floor: 1.0,
                    tail: c,
                    shape: Shape::Full { head },
                });
            }
        }

        let (k1_best, d3) = (1..=40u32)
            .map(|k1| (k1, dl3(p, k1)))
            .fold((1, 1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        tables.push(Table {
            envelope: LowerEnvelope::L3 { k1: k1_best },
            scale: 1.0,
            floor: 0.0,
            tail: 0.0,
            shape: Shape::Const(d3),
        });

        let c4 = l4_tail(a2);
        tables.push(Table {
            envelope: LowerEnvelope::L4 { k: Reach::Unbounded },
            scale: f64::INFINITY,
            floor: 0.0,
            tail: c4,
            shape: Shape::Sep { head: edges.iter().map(|&p1| p.abs_a() - root(c4 * c4, p1)).collect() },
        });

        Ok(LowerModel { edges, sqrt_e, tables })
    }

    /// Number of envelope tables.
    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    fn table_min(&self, t: &Table, q: f64, r1: f64, r2: f64) -> (f64, f64, f64) {
        let m = self.edges.len();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..m - 1 {
            let c1 = if r1 == 0.0 { 0.0 } else { r1 * self.edges[i] };
            if c1 >= best.0 {
                break;
            }
            for j in 0..m - 1 {
                let c2 = if r2 == 0.0 { 0.0 } else { r2 * self.edges[j] };
                if c1 + c2 >= best.0 {
                    break;
                }
                let d = t.value(i + 1, j + 1, m, &self.sqrt_e);
                let v = q * d + c1 + c2;
                if v < best.0 {
                    best = (v, self.edges[i], self.edges[j]);
                }
            }
        }
        best
    }

    /// Lower bound on the weighted cost for weights `(q, r1, r2)`.
    pub fn cost(&self, q: f64, r1: f64, r2: f64) -> LowerResult {
        if q == 0.0 {
            return LowerResult { cost: 0.0, envelope: LowerEnvelope::Trivial, p1: 0.0, p2: 0.0 };
        }
        let mut out = LowerResult { cost: 0.0, envelope: LowerEnvelope::Trivial, p1: 0.0, p2: 0.0 };
        for t in &self.tables {
            let (v, p1, p2) = self.table_min(t, q, r1, r2);
            if v > out.cost {
                out = LowerResult { cost: v, envelope: t.envelope, p1, p2 };
            }
        }
        out
    }

    /// Per-envelope minima, for audit dumps.
    pub fn audit(&self, q: f64, r1: f64, r2: f64) -> Vec<LowerResult> {
        self.tables
            .iter()
            .map(|t| {
                let (cost, p1, p2) = if q == 0.0 { (0.0, 0.0, 0.0) } else { self.table_min(t, q, r1, r2) };
                LowerResult { cost, envelope: t.envelope, p1, p2 }
            })
            .collect()
    }
}

/// Lower bound on the optimal weighted cost of `p`.
pub fn lower_weighted_cost(p: &ProblemParams) -> Result<LowerResult, LowerError> {
    Ok(LowerModel::new(p)?.cost(p.q, p.r1, p.r2))
}
