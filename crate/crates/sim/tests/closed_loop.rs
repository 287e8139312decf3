use lqgduet_core::{normalize_with_map, ProblemParams, RawParams};
use lqgduet_sim::*;
use lqgduet_strategies::StrategySpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn params(a: f64, v1: f64, v2: f64) -> ProblemParams {
    ProblemParams { a, q: 1.0, r1: 0.5, r2: 2.0, sigma0_sq: 0.0, sigmav1_sq: v1, sigmav2_sq: v2 }
}

fn within(est: f64, se: f64, truth: f64, k: f64) -> bool {
    (est - truth).abs() <= k * se
}

#[test]
fn linbb1_matches_closed_form() {
    let a: f64 = 2.5;
    let r = run(&params(a, 1.0, 1.0), StrategySpec::LinBB { controller: 1 }, &SimConfig::default()).unwrap();
    assert!(within(r.avg_state_cost, r.se_state, 7.25, 4.0), "{r:?}");
    assert!(within(r.avg_u1_power, r.se_u1, 51.5625, 4.0), "{r:?}");
    assert_eq!(r.avg_u2_power, 0.0);
}

#[test]
fn linbb2_matches_closed_form() {
    let (a, v2): (f64, f64) = (3.0, 4.0);
    let r = run(&params(a, 0.0, v2), StrategySpec::LinBB { controller: 2 }, &SimConfig::default()).unwrap();
    let d = a * a * v2 + 1.0;
    let p2 = a.powi(4) * v2 + a * a * v2 + a * a;
    assert!(within(r.avg_state_cost, r.se_state, d, 4.0), "{r:?}");
    assert!(within(r.avg_u2_power, r.se_u2, p2, 4.0), "{r:?}");
    assert_eq!(r.avg_u1_power, 0.0);
}

#[test]
fn zero_input_diverges_for_unstable_a() {
    let p = params(2.5, 1.0, 1.0);
    let err = run(&p, StrategySpec::ZeroInput, &SimConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::Unstable { .. }));
    let r = run_or_unstable(&p, StrategySpec::ZeroInput, &SimConfig::default()).unwrap();
    assert_eq!(r.weighted_cost, f64::INFINITY);
}

#[test]
fn zero_input_stable_ar1() {
    let r = run(&params(0.5, 1.0, 1.0), StrategySpec::ZeroInput, &SimConfig::default()).unwrap();
    assert!(within(r.avg_state_cost, r.se_state, 4.0 / 3.0, 4.0), "{r:?}");
    let t = r.tradeoff();
    assert_eq!((t.p1, t.p2), (0.0, 0.0));
}

#[test]
fn bit_reproducible() {
    let p = params(2.5, 0.3, 10.0);
    let cfg = SimConfig { horizon: 20_000, burn_in: 100, trials: 8, seed: 99 };
    let spec = StrategySpec::Sig { s: 1, d: 1.0 };
    assert_eq!(run(&p, spec, &cfg).unwrap(), run(&p, spec, &cfg).unwrap());
    let other = run(&p, spec, &SimConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(run(&p, spec, &cfg).unwrap(), other);
}

#[test]
fn weighted_cost_consistent() {
    let p = params(2.5, 0.3, 10.0);
    let r = run(&p, StrategySpec::LinBB { controller: 1 }, &SimConfig { horizon: 10_000, ..Default::default() }).unwrap();
    let w = p.q * r.avg_state_cost + p.r1 * r.avg_u1_power + p.r2 * r.avg_u2_power;
    assert!((w - r.weighted_cost).abs() <= 1e-12 * w);
}

#[test]
fn single_trial_reports_batch_error() {
    let p = params(2.5, 1.0, 1.0);
    let r = run(&p, StrategySpec::LinBB { controller: 1 }, &SimConfig { trials: 1, ..Default::default() }).unwrap();
    assert!(r.se_state > 0.0);
}

#[test]
fn bad_config_rejected() {
    let p = params(2.5, 1.0, 1.0);
    let s = StrategySpec::LinBB { controller: 1 };
    assert!(run(&p, s, &SimConfig { horizon: 10, burn_in: 10, ..Default::default() }).is_err());
    assert!(run(&p, s, &SimConfig { trials: 0, ..Default::default() }).is_err());
}

#[test]
fn closed_forms_hold_across_seeds() {
    let a: f64 = 2.5;
    let p = params(a, 1.0, 1.0);
    let mut ok = 0;
    for seed in 0..10 {
        let cfg = SimConfig { horizon: 50_000, burn_in: 1_000, trials: 16, seed };
        let r = run(&p, StrategySpec::LinBB { controller: 1 }, &cfg).unwrap();
        if within(r.avg_state_cost, r.se_state, 7.25, 3.0) && within(r.avg_u1_power, r.se_u1, 51.5625, 3.0) {
            ok += 1;
        }
    }
    assert!(ok >= 9, "only {ok}/10 seeds");
}

#[test]
fn initial_variance_washes_out() {
    let spec = StrategySpec::LinBB { controller: 2 };
    let cfg = SimConfig { horizon: 50_000, ..Default::default() };
    let mut p = params(2.5, 0.0, 2.0);
    let r0 = run(&p, spec, &cfg).unwrap();
    p.sigma0_sq = 100.0;
    let r1 = run(&p, spec, &cfg).unwrap();
    let se = (r0.se_state.powi(2) + r1.se_state.powi(2)).sqrt();
    assert!((r0.avg_state_cost - r1.avg_state_cost).abs() <= 4.0 * se);
}

/// Direct simulation of the raw (un-normalized) system with controller 1
/// applying `u1 = -a y1 / (b1 c1)`.
fn raw_linbb1_cost(raw: &RawParams, steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = raw.sigma0_sq.sqrt() * n();
    let mut costs = Vec::with_capacity(steps);
    for t in 0..steps + 1000 {
        let y1 = raw.c1 * x + raw.sigmav1_sq.sqrt() * n();
        let u1 = -raw.a * y1 / (raw.b1 * raw.c1);
        if t >= 1000 {
            costs.push(raw.q * x * x + raw.r1 * u1 * u1);
        }
        x = raw.a * x + raw.b1 * u1 + raw.sigmaw_sq.sqrt() * n();
    }
    let batch = steps / 50;
    let means: Vec<f64> = costs.chunks(batch).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (m, (var / means.len() as f64).sqrt())
}

#[test]
fn normalization_preserves_weighted_cost() {
    let raws = [
        RawParams { a: 3.0, b1: 2.0, b2: 1.0, c1: 1.0, c2: 1.0, q: 1.0, r1: 4.0, r2: 1.0, sigma0_sq: 0.0, sigmaw_sq: 1.0, sigmav1_sq: 0.5, sigmav2_sq: 2.0 },
        RawParams { a: -2.5, b1: 0.5, b2: 3.0, c1: 2.0, c2: 0.7, q: 2.0, r1: 0.3, r2: 1.0, sigma0_sq: 1.0, sigmaw_sq: 4.0, sigmav1_sq: 1.0, sigmav2_sq: 3.0 },
        // controller 1 is the noisier one here, so it becomes slot 2
        RawParams { a: 2.5, b1: 1.5, b2: 1.0, c1: 1.0, c2: 1.0, q: 1.0, r1: 2.0, r2: 5.0, sigma0_sq: 0.0, sigmaw_sq: 2.0, sigmav1_sq: 8.0, sigmav2_sq: 1.0 },
    ];
    for raw in raws {
        let n = normalize_with_map(&raw).unwrap();
        let slot = if n.swapped { 2 } else { 1 };
        let r = run(&n.params, StrategySpec::LinBB { controller: slot }, &SimConfig::default()).unwrap();
        let (m, se) = raw_linbb1_cost(&raw, 2_000_000, 7);
        let tol = 4.0 * (se * se + r.se_weighted * r.se_weighted).sqrt();
        assert!((m - r.weighted_cost).abs() <= tol, "{raw:?}: raw {m} vs normalized {}", r.weighted_cost);
    }
}
