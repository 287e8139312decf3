//! Monte Carlo engine for the closed loop
//! `x[n+1] = a x[n] + u1[n] + u2[n] + w[n]`, `y_i[n] = x[n] + v_i[n]`.
//!
//! Every trial draws from its own ChaCha8 stream keyed by `(seed, trial)`,
//! in the fixed order `x[0]`, then `v1, v2, w` per step. Trial averages are
//! combined by pairwise summation in trial order, so results do not depend
//! on how rayon schedules the trials.

use lqgduet_core::{ProblemParams, TradeoffPoint};
use lqgduet_strategies::{Controller, StrategyError, StrategySpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DIVERGENCE_LIMIT: f64 = 1e150;
const SINGLE_TRIAL_BATCHES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state diverged in trial {trial} at step {step}")]
    Unstable { trial: u32, step: u64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub horizon: u64,
    pub burn_in: u64,
    pub trials: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { horizon: 200_000, burn_in: 1_000, trials: 32, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon <= self.burn_in {
            return Err(SimError::Config(format!("horizon {} must exceed burn_in {}", self.horizon, self.burn_in)));
        }
        if self.trials == 0 {
            return Err(SimError::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub avg_state_cost: f64,
    pub avg_u1_power: f64,
    pub avg_u2_power: f64,
    pub weighted_cost: f64,
    pub se_state: f64,
    pub se_u1: f64,
    pub se_u2: f64,
    pub se_weighted: f64,
}

impl SimResult {
    /// Result reported for a diverging strategy.
    pub fn unstable() -> Self {
        let inf = f64::INFINITY;
        SimResult {
            avg_state_cost: inf,
            avg_u1_power: inf,
            avg_u2_power: inf,
            weighted_cost: inf,
            se_state: 0.0,
            se_u1: 0.0,
            se_u2: 0.0,
            se_weighted: 0.0,
        }
    }

    pub fn tradeoff(&self) -> TradeoffPoint {
        TradeoffPoint { d: self.avg_state_cost, p1: self.avg_u1_power, p2: self.avg_u2_power }
    }
}

/// Per-trial (or per-batch) averages of `x^2`, `u1^2`, `u2^2`.
type Triple = [f64; 3];

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn run_trial(p: &ProblemParams, spec: StrategySpec, cfg: &SimConfig, trial: u32) -> Result<Vec<Triple>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64);
    let mut ctl = Controller::new(p, spec)?;
    let (s0, s1, s2) = (p.sigma0_sq.sqrt(), p.sigmav1_sq.sqrt(), p.sigmav2_sq.sqrt());
    let kept = cfg.horizon - cfg.burn_in;
    let batches = if cfg.trials == 1 { SINGLE_TRIAL_BATCHES.min(kept as usize) } else { 1 };
    let per_batch = kept / batches as u64;
    let mut out = Vec::with_capacity(batches);
    let mut acc = [0.0; 3];
    let mut in_batch = 0u64;
    let mut x = s0 * normal(&mut rng);
    for n in 0..cfg.horizon {
        let y1 = x + s1 * normal(&mut rng);
        let y2 = x + s2 * normal(&mut rng);
        let (u1, u2) = ctl.step(y1, y2);
        if n >= cfg.burn_in && out.len() < batches {
            acc[0] += x * x;
            acc[1] += u1 * u1;
            acc[2] += u2 * u2;
            in_batch += 1;
            if in_batch == per_batch {
                out.push(acc.map(|v| v / per_batch as f64));
                acc = [0.0; 3];
                in_batch = 0;
            }
        }
        x = p.a * x + u1 + u2 + normal(&mut rng);
        if !(x.abs() <= DIVERGENCE_LIMIT) {
            return Err(SimError::Unstable { trial, step: n + 1 });
        }
    }
    Ok(out)
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Simulate `cfg.trials` independent trajectories and average over the
/// steps after burn-in.
pub fn run(p: &ProblemParams, spec: StrategySpec, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    spec.validate()?;
    let per_trial: Vec<Result<Vec<Triple>, SimError>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(p, spec, cfg, t)).collect();
    let mut samples = Vec::new();
    for r in per_trial {
        samples.extend(r?);
    }
    let col = |i: usize| samples.iter().map(|t| t[i]).collect::<Vec<_>>();
    let weighted: Vec<f64> = samples.iter().map(|t| p.q * t[0] + p.r1 * t[1] + p.r2 * t[2]).collect();
    let (d, se_d) = mean_and_se(&col(0));
    let (p1, se_1) = mean_and_se(&col(1));
    let (p2, se_2) = mean_and_se(&col(2));
    let (_, se_w) = mean_and_se(&weighted);
    Ok(SimResult {
        avg_state_cost: d,
        avg_u1_power: p1,
        avg_u2_power: p2,
        weighted_cost: p.weighted(&TradeoffPoint { d, p1, p2 }),
        se_state: se_d,
        se_u1: se_1,
        se_u2: se_2,
        se_weighted: se_w,
    })
}

/// Like [`run`], but divergence becomes an all-infinite result.
pub fn run_or_unstable(p: &ProblemParams, spec: StrategySpec, cfg: &SimConfig) -> Result<SimResult, SimError> {
    match run(p, spec, cfg) {
        Err(SimError::Unstable { .. }) => Ok(SimResult::unstable()),
        other => other,
    }
}

/// Simulated `(D, P1, P2)` of a strategy.
pub fn tradeoff(p: &ProblemParams, spec: StrategySpec, cfg: &SimConfig) -> Result<TradeoffPoint, SimError> {
    run(p, spec, cfg).map(|r| r.tradeoff())
}
