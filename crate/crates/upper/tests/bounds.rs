use approx::assert_relative_eq;
use lqgduet_core::{ProblemParams, TradeoffPoint};
use lqgduet_lattice::q_tail;
use lqgduet_sim::{run, SimConfig};
use lqgduet_strategies::StrategySpec;
use lqgduet_upper::*;
use proptest::prelude::*;

fn params(a: f64, v1: f64, v2: f64) -> ProblemParams {
    ProblemParams { a, q: 1.0, r1: 1.0, r2: 1.0, sigma0_sq: 0.0, sigmav1_sq: v1, sigmav2_sq: v2 }
}

/// Term-by-term evaluation with a fixed, generous number of terms.
fn du1_oracle(p: &ProblemParams, s: u32, d: f64, w1: f64) -> f64 {
    let a = p.a.abs();
    let a2 = a * a;
    let b = a.powi(s as i32) * d;
    let l = a.powi(s as i32 - 1) * d * a / (a - 1.0) + w1;
    let sv2 = p.sigmav2_sq.sqrt();
    let mut v = 2.0 * a.powi(2 * s as i32)
        * (2.0 * (d / 2.0).powi(2) * (1.0 / (1.0 - 1.0 / a)).powi(2) + 2.0 / (1.0 - 1.0 / a2) + 2.0 * a2 * p.sigmav1_sq);
    for i in 1..=3000 {
        let i = i as f64;
        v += 4.0 * a2 * (i * b + l / 2.0).powi(2) * q_tail(((2.0 * i - 1.0) * b - l) / (2.0 * sv2));
    }
    let var = a.powi(2 * (s as i32 - 1)) * a2 / (a2 - 1.0) + a.powi(2 * s as i32) * p.sigmav1_sq;
    let mut t = 0.0;
    for i in 1..=3000 {
        let i = i as f64;
        t += (i * b + b / 2.0).powi(2) * q_tail((i - 1.0) * b / sv2);
    }
    v + 8.0 * a2 * q_tail(w1 / (2.0 * var.sqrt())) * t + 2.0 * a2 * (d / 2.0).powi(2) + 1.0
}

#[test]
fn du1_with_negligible_observation_noise() {
    let p = params(4.0, 0.0, 1e-18);
    let dz = SigDesign { s: 1, d: 1.0, w1: 0.1 };
    let v = du1_value(&p, &dz).unwrap();
    assert_relative_eq!(v, du1_oracle(&p, 1, 1.0, 0.1), max_relative = 1e-6);
    // first and last lines plus the i = 1 outage term, where Q(0) = 1/2
    let head = 2.0 * 16.0 * (2.0 * 0.25 * (1.0f64 / 0.75).powi(2) + 2.0 / (1.0 - 1.0 / 16.0));
    let var: f64 = 16.0 / 15.0;
    let out = 8.0 * 16.0 * q_tail(0.1 / (2.0 * var.sqrt())) * 36.0 * 0.5;
    assert_relative_eq!(v, head + out + 2.0 * 16.0 * 0.25 + 1.0, max_relative = 1e-6);
}

#[test]
fn du1_matches_oracle_on_grid() {
    for (a, v1, v2, s, d, frac) in [
        (4.0, 0.0, 16.0, 1, 3.0, 0.2),
        (2.5, 0.5, 50.0, 2, 2.0, 0.1),
        (-3.0, 1.0, 200.0, 2, 1.5, 0.3),
        (10.0, 0.0, 1e3, 2, 0.5, 0.5),
        (25.0, 0.01, 1e4, 1, 20.0, 0.4),
    ] {
        let p = params(a, v1, v2);
        let aa: f64 = f64::abs(a);
        let room = aa.powi(s as i32) * d - aa.powi(s as i32 - 1) * d * aa / (aa - 1.0);
        let w1 = room * frac;
        assert_relative_eq!(du1_value(&p, &SigDesign { s, d, w1 }).unwrap(), du1_oracle(&p, s, d, w1), max_relative = 1e-10);
    }
}

#[test]
fn du1_power_components() {
    let p = params(4.0, 0.0, 16.0);
    let t = du1(&p, &SigDesign { s: 1, d: 1.0, w1: 0.5 }).unwrap();
    assert_eq!(t.p1, 4.0);
    assert_relative_eq!(t.p2, 8.0 * 16.0 * t.d + 3.5 * 256.0 + 4.0 * 16.0 * 16.0, max_relative = 1e-14);
}

#[test]
fn infeasible_designs_name_the_inequality() {
    let p = params(4.0, 0.0, 16.0);
    let msg = |dz| check_design(&p, &dz).unwrap_err().to_string();
    assert!(msg(SigDesign { s: 1, d: 0.0, w1: 0.1 }).contains("d > 0"));
    assert!(msg(SigDesign { s: 1, d: 1.0, w1: 0.0 }).contains("w1 > 0"));
    assert!(msg(SigDesign { s: 1, d: 1.0, w1: 3.0 }).contains("|a|^s d"));
    assert!(du1(&params(2.0, 0.0, 16.0), &SigDesign { s: 1, d: 1.0, w1: 0.01 }).is_err());
}

#[test]
fn du1_is_continuous_in_design() {
    let p = params(4.0, 0.2, 40.0);
    for k in 0..200 {
        let d = 0.05 * 1.03f64.powi(k);
        let dz = SigDesign { s: 1, d, w1: 4.0 * d / 6.0 };
        let (Ok(v0), Ok(v1)) = (du1_value(&p, &dz), du1_value(&p, &SigDesign { d: d * (1.0 + 1e-12), ..dz })) else {
            continue;
        };
        assert!((v1 - v0).abs() <= 1e-9 * v0, "jump at d={d}: {v0} -> {v1}");
    }
}

#[test]
fn linbb_examples() {
    assert_eq!(linbb_bound(&params(2.5, 1.0, 1.0), 1), TradeoffPoint { d: 7.25, p1: 51.5625, p2: 0.0 });
    assert_eq!(linbb_bound(&params(2.5, 0.0, 0.0), 2), TradeoffPoint { d: 1.0, p1: 0.0, p2: 6.25 });
}

fn below(sim: f64, se: f64, bound: f64) -> bool {
    sim <= bound + 3.0 * se
}

#[test]
fn simulation_respects_analytic_triples() {
    let cfg = SimConfig { horizon: 60_000, burn_in: 1_000, trials: 8, seed: 3 };
    let mut checked = 0;
    for (a, v1, v2) in [(4.0, 0.0, 16.0), (2.5, 0.0, 30.0), (3.0, 0.3, 60.0), (-4.0, 0.1, 100.0), (6.0, 0.0, 500.0)] {
        let p = params(a, v1, v2);
        let s = lqgduet_strategies::select_stage(&p).unwrap();
        let aa: f64 = f64::abs(a);
        for (d_scale, frac) in [(0.5, 0.3), (1.0, 0.5), (2.0, 0.2), (4.0, 0.8)] {
            let d = d_scale * v2.sqrt() / aa.powi(s as i32);
            let room = aa.powi(s as i32) * d - aa.powi(s as i32 - 1) * d * aa / (aa - 1.0);
            let dz = SigDesign { s, d, w1: room * frac };
            let Ok(bound) = du1(&p, &dz) else { continue };
            let r = run(&p, StrategySpec::Sig { s, d }, &cfg).unwrap();
            assert!(below(r.avg_state_cost, r.se_state, bound.d), "{p:?} {dz:?}: D {} > {}", r.avg_state_cost, bound.d);
            assert!(below(r.avg_u1_power, r.se_u1, bound.p1), "{p:?} {dz:?}: P1");
            assert!(below(r.avg_u2_power, r.se_u2, bound.p2), "{p:?} {dz:?}: P2");
            checked += 1;
        }
        for c in [1u8, 2] {
            let t = linbb_bound(&p, c);
            let r = run(&p, StrategySpec::LinBB { controller: c }, &cfg).unwrap();
            assert!((r.avg_state_cost - t.d).abs() <= 4.0 * r.se_state);
        }
    }
    assert!(checked >= 20, "only {checked} feasible pairs");
}

#[test]
fn simplified_bound_dominates_du1_at_bracket_design() {
    // the a = 2.5 example has an empty bracket; outside it the loosening
    // does not hold
    let p = params(2.5, 0.0, 6.25);
    let power = 6.25 / 70.0;
    let (lo, hi) = simplified_bracket(&p, 1);
    assert!(lo > hi);
    assert!(simplified_upper(&p, 1, power).is_err());
    let exact = du1(&p, &bracket_design(&p, 1, power)).unwrap();
    assert!(exact.d > simplified_upper_unchecked(&p, 1, power).d);

    let mut checked = 0;
    for a in [20.0f64, 50.0, 300.0, 2000.0] {
        for v1 in [0.0, 0.01, 1.0] {
            for mult in [1.5, 20.0, 1e3] {
                let m = (a * a * v1).max(1.0);
                let p = params(a, v1, m * mult);
                let s = lqgduet_strategies::select_stage(&p).unwrap();
                let (lo, hi) = simplified_bracket(&p, s);
                if lo > hi {
                    continue;
                }
                for k in 0..8 {
                    let power = (lo * (hi / lo).powf(k as f64 / 7.0)).clamp(lo, hi);
                    let loose = simplified_upper(&p, s, power).unwrap();
                    let exact = du1(&p, &bracket_design(&p, s, power)).unwrap();
                    assert!(exact.d <= loose.d && exact.p1 <= loose.p1 * (1.0 + 1e-12) && exact.p2 <= loose.p2, "{p:?} P={power}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 20);
}

#[test]
fn simplified_bound_endpoints() {
    let p = params(300.0, 0.0, 10.0);
    let (lo, hi) = simplified_bracket(&p, 1);
    assert!(lo < hi);
    let t = simplified_upper(&p, 1, hi).unwrap();
    assert!(t.d.is_finite() && t.p2.is_finite());
    assert_relative_eq!(t.p1, 4.0 * 300.0f64.powi(2), max_relative = 1e-12);
    match simplified_upper(&p, 1, hi * 2.0) {
        Err(UpperError::OutOfBracket { lo: l, hi: h, .. }) => assert_eq!((l, h), (lo, hi)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn simplified_d_has_single_interior_peak() {
    let p = params(300.0, 0.0, 10.0);
    let (lo, hi) = simplified_bracket(&p, 1);
    let c = 50.0 / p.sigmav2_sq;
    assert!(c * lo < 1.0 && c * hi > 1.0);
    let f = |x: f64| simplified_upper(&p, 1, x).unwrap().d;
    let n = 2000;
    let xs: Vec<f64> = (0..=n).map(|k| lo * (hi / lo).powf(k as f64 / n as f64)).collect();
    let mut changes = 0;
    let mut last = None;
    for w in xs.windows(2) {
        let sign = f(w[1]) > f(w[0]);
        if let Some(l) = last {
            if l != sign {
                changes += 1;
            }
        }
        last = Some(sign);
    }
    assert_eq!(changes, 1);
}

#[test]
fn zero_price_for_controller_one() {
    let mut p = params(3.0, 0.4, 50.0);
    p.r1 = 0.0;
    let best = optimize_upper(&p).unwrap();
    assert!(best.cost <= p.q * (9.0 * 0.4 + 1.0));
}

#[test]
fn weak_regime_uses_linear_only() {
    let p = params(3.0, 1.0, 4.0);
    let f = UpperFrontier::new(&p).unwrap();
    assert_eq!(f.candidates.len(), 2);
    assert!(matches!(optimize_upper(&p).unwrap().candidate.spec, StrategySpec::LinBB { .. }));
}

#[test]
fn scaling_family_stays_below_log_bound() {
    let a = 1e4;
    let p = ProblemParams { a, q: 1.0, r1: a, r2: 0.0, sigma0_sq: 0.0, sigmav1_sq: 0.0, sigmav2_sq: a };
    let best = optimize_upper(&p).unwrap();
    assert!(best.cost <= scaling_family_upper(a, LogBase::Natural), "{best:?}");
    assert!(matches!(best.candidate.spec, StrategySpec::Sig { .. }));
}

#[test]
fn below_threshold_rejected() {
    assert!(optimize_upper(&params(2.0, 0.0, 16.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn optimized_cost_monotone_in_weights(la in 1.0f64..4.0, lv in 0.0f64..6.0, q in 0.01f64..10.0,
                                          r1 in 0.0f64..10.0, r2 in 0.0f64..10.0, bump in 1.0f64..3.0) {
        let a = la.exp();
        let p = ProblemParams { a, q, r1, r2, sigma0_sq: 0.0, sigmav1_sq: 0.0, sigmav2_sq: lv.exp() };
        let f = UpperFrontier::new(&p).unwrap();
        let base = f.best(&p).cost;
        for p2 in [ProblemParams { q: q * bump, ..p }, ProblemParams { r1: r1 * bump + 0.1, ..p }, ProblemParams { r2: r2 * bump + 0.1, ..p }] {
            prop_assert!(f.best(&p2).cost >= base);
        }
    }
}
