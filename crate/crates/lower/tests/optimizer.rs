use lqgduet_core::{classify, ProblemParams, Regime};
use lqgduet_lower::*;
use lqgduet_upper::optimize_upper;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(a: f64, v1: f64, v2: f64, q: f64, r1: f64, r2: f64) -> ProblemParams {
    ProblemParams { a, q, r1, r2, sigma0_sq: 0.0, sigmav1_sq: v1, sigmav2_sq: v2 }
}

#[test]
fn zero_state_weight_gives_zero() {
    let r = lower_weighted_cost(&params(3.0, 1.0, 50.0, 0.0, 1.0, 1.0)).unwrap();
    assert_eq!(r.cost, 0.0);
    assert_eq!((r.p1, r.p2), (0.0, 0.0));
}

#[test]
fn rejects_small_gain() {
    assert!(lower_weighted_cost(&params(2.0, 1.0, 2.0, 1.0, 1.0, 1.0)).is_err());
}

#[test]
fn weak_regime_floor_without_input_cost() {
    for &a in &[2.5f64, 5.0, 25.0] {
        for &v1 in &[0.0, 1.0, 10.0] {
            let m = (a * a * v1).max(1.0);
            for &frac in &[0.1, 1.0] {
                let p = params(a, v1, (frac * m).max(v1), 1.0, 0.0, 0.0);
                let r = lower_weighted_cost(&p).unwrap();
                assert!(r.cost >= 0.295 * m, "a={a} v1={v1} frac={frac} got {}", r.cost);
            }
        }
    }
}

#[test]
fn free_power_leaves_unit_floor() {
    let p = params(4.0, 0.0, 10.0, 1.0, 0.0, 0.0);
    let r = lower_weighted_cost(&p).unwrap();
    assert!(r.cost >= 1.0);
}

#[test]
fn monotone_in_weights() {
    let base = params(5.0, 0.5, 400.0, 1.0, 1.0, 1.0);
    let m = LowerModel::new(&base).unwrap();
    let mut last = 0.0;
    for &r in &[1e-3, 1e-1, 1.0, 10.0, 1e3] {
        let c = m.cost(1.0, r, r).cost;
        assert!(c >= last * (1.0 - 1e-12));
        last = c;
    }
}

#[test]
fn never_exceeds_upper_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut strong = 0;
    for _ in 0..50 {
        let a = 10f64.powf(rng.gen_range(0.398..2.0)) * if rng.gen_bool(0.2) { -1.0 } else { 1.0 };
        let v1 = if rng.gen_bool(0.3) { 0.0 } else { 10f64.powf(rng.gen_range(-2.0..1.5)) };
        let m = (a * a * v1).max(1.0);
        let v2 = (m * 10f64.powf(rng.gen_range(-1.0..6.0))).max(v1);
        let mut w = || 10f64.powf(rng.gen_range(-2.0..2.0));
        let (q, r1, r2) = (w(), w(), w());
        let p = params(a, v1, v2, q, r1, r2);
        if matches!(classify(&p).unwrap(), Regime::StronglyDegraded { .. }) {
            strong += 1;
        }
        let lo = lower_weighted_cost(&p).unwrap();
        let up = optimize_upper(&p).unwrap();
        assert!(lo.cost <= up.cost * (1.0 + 1e-9), "{p:?}: lower {} ({}) > upper {}", lo.cost, lo.envelope, up.cost);
    }
    assert!(strong >= 10);
}
