use lqgduet_detmodel::*;
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::time::Instant;

fn p3() -> DetParams {
    DetParams::problem3()
}

#[test]
fn problem3_defaults() {
    let p = p3();
    assert_eq!((p.a_prime, p.sigma_v2_level, p.p1_level), (2, 1, 1));
    assert!(p.validate().is_ok());
    assert!(DetParams { window_lo: -3, ..p }.validate().is_err());
    assert!(DetParams { a_prime: 0, ..p }.validate().is_err());
}

#[test]
fn first_step_from_rest() {
    let p = p3();
    for st in [DetStrategy::Optimal, DetStrategy::LinearShift] {
        let x1 = det_step(&p, st, &BitWord::zero(), 0).unwrap();
        assert_eq!(x1.upper_level(), Level::Finite(0));
        assert!(x1.iter().all(|(i, prov)| i < 0 && prov.iter().all(|b| b.source == Source::W)));
    }
}

#[test]
fn optimal_reaches_level_two() {
    let t0 = Instant::now();
    let tr = det_run(&p3(), DetStrategy::Optimal, 12).unwrap();
    assert_eq!(tr.levels[0], Level::NegInf);
    assert_eq!(tr.levels[1], Level::Finite(0));
    for n in 2..tr.levels.len() {
        assert_eq!(tr.levels[n], Level::Finite(2), "step {n}");
    }
    assert_eq!(tr.steady_level(), Level::Finite(2));
    assert!(tr.is_periodic_from(3));
    // the bit between levels 0 and 1 is cancelled in steady state
    assert!(tr.words[5].get(0).is_none());
    assert!(t0.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn linear_shift_reaches_level_three() {
    let tr = det_run(&p3(), DetStrategy::LinearShift, 12).unwrap();
    assert_eq!(tr.levels[1], Level::Finite(0));
    assert_eq!(tr.levels[2], Level::Finite(2));
    for n in 3..tr.levels.len() {
        assert_eq!(tr.levels[n], Level::Finite(3), "step {n}");
    }
    assert_eq!(tr.steady_level(), Level::Finite(3));
}

#[test]
fn deeper_window_changes_nothing() {
    for st in [DetStrategy::Optimal, DetStrategy::LinearShift] {
        let base = det_run(&p3(), st, 10).unwrap().levels;
        for lo in [-4, -6, -11, -25] {
            let p = DetParams { window_lo: lo, ..p3() };
            assert_eq!(det_run(&p, st, 10).unwrap().levels, base, "{st:?} lo={lo}");
        }
    }
}

#[test]
fn other_shift_sizes() {
    for a in 3..6 {
        let p = DetParams { a_prime: a, sigma_v2_level: 1, p1_level: 1, window_lo: -a - 2, window_hi: 4 * a + 8 };
        let tr = det_run(&p, DetStrategy::Optimal, 10).unwrap();
        // only the band between p1' and sv2' + a' survives the two cancellations
        assert_eq!(tr.steady_level(), Level::Finite(a), "a'={a}");
    }
}

#[test]
fn overflow_is_reported() {
    let p = p3();
    assert!(DetParams { window_hi: 2, ..p }.validate().is_err());
    // without control the state climbs a' levels per step until it leaves the window
    let mut x = BitWord::zero();
    let mut err = None;
    for n in 0..20 {
        match det_step_rules(&p, U1Rule::Zero, U2Rule::Zero, &x, n) {
            Ok(next) => x = next,
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    assert!(matches!(err, Some(DetError::WindowOverflow { hi: 16, .. })), "{err:?}");
}

#[test]
fn no_single_step_zeroes_the_level_one_bit() {
    // from every reachable Optimal state, XOR any subset of y2's bits into
    // index 1: the bit never becomes deterministically zero
    let p = p3();
    let tr = det_run(&p, DetStrategy::Optimal, 6).unwrap();
    for (n, x) in tr.words.iter().enumerate().skip(1) {
        let v = BitWord::fresh(n as i64, Source::V, p.window_lo, p.sigma_v2_level);
        let y2 = x.xor(&v);
        let shifted = x.shifted(p.a_prime);
        let target = shifted.get(1).cloned().unwrap_or_default();
        let bits: Vec<BTreeSet<SourceBit>> = (p.window_lo..=p.window_hi).filter_map(|i| y2.get(i).cloned()).collect();
        assert!(bits.len() <= 16);
        for mask in 0u32..(1 << bits.len()) {
            let mut acc = target.clone();
            for (k, b) in bits.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    acc = acc.symmetric_difference(b).cloned().collect();
                }
            }
            assert!(!acc.is_empty(), "step {n} mask {mask:b}");
        }
    }
}

#[test]
fn radner_and_witsenhausen() {
    let p = OneShotParams::default();
    assert_eq!(det_witsen(&p).unwrap(), Level::NegInf);
    assert_eq!(det_radner(&p).unwrap(), Level::NegInf);
    let idle = OneShotParams { u1_active: false, ..p };
    assert_eq!(det_witsen(&idle).unwrap(), Level::Finite(1));
}

#[test]
fn level_display_and_order() {
    assert_eq!(Level::NegInf.to_string(), "-inf");
    assert_eq!(Level::Finite(3).to_string(), "3");
    assert!(Level::NegInf < Level::Finite(-100));
}

#[test]
fn json_round_trip() {
    let tr = det_run(&p3(), DetStrategy::Optimal, 4).unwrap();
    let s = serde_json::to_string(&tr).unwrap();
    let back: DetTrace = serde_json::from_str(&s).unwrap();
    assert_eq!(back, tr);
}

fn word_strategy() -> impl Strategy<Value = BitWord> {
    proptest::collection::vec((-10i32..10, 0i64..5, -10i32..10, 0u8..3), 0..30).prop_map(|v| {
        let mut w = BitWord::zero();
        for (i, t, l, s) in v {
            let source = [Source::W, Source::V, Source::X0][s as usize];
            w.toggle(i, SourceBit { time: t, level: l, source });
        }
        w
    })
}

proptest! {
    #[test]
    fn xor_is_an_involution(a in word_strategy(), c in word_strategy()) {
        prop_assert_eq!(a.xor(&c).xor(&c), a.clone());
        prop_assert_eq!(a.xor(&a), BitWord::zero());
    }

    #[test]
    fn shifting_moves_the_upper_level(a in word_strategy(), k in -5i32..5) {
        let s = a.shifted(k);
        match a.upper_level() {
            Level::NegInf => prop_assert_eq!(s.upper_level(), Level::NegInf),
            Level::Finite(l) => prop_assert_eq!(s.upper_level(), Level::Finite(l + k)),
        }
        prop_assert_eq!(s.shifted(-k), a);
    }
}
