use approx::assert_relative_eq;
use lqgduet_certify::*;
use proptest::prelude::*;
use twofloat::TwoFloat;

#[test]
fn rejects_small_gain() {
    assert!(prop1_divergence(&[1e5, 1.9e4]).is_err());
    assert!(prop1_table(&[5e3], PROP1_LINEAR_MIN_A).is_err());
}

#[test]
fn threshold_example() {
    let rows = prop1_divergence(&[2e4]).unwrap();
    let r = rows[0];
    assert_relative_eq!(r.linear_lb, 8e12 / 66.0, max_relative = 1e-13);
    assert!((r.linear_lb / 1.212e11 - 1.0).abs() < 1e-3);
    assert_relative_eq!(r.nonlinear_ub, 3297.0 * 4e8 * (2e4f64).ln(), max_relative = 1e-13);
    assert!((r.nonlinear_ub / 1.306e13 - 1.0).abs() < 1e-3);
    assert!(r.ratio < 1.0);
    assert!(r.nonlinear_valid);
}

#[test]
fn ratio_increases_along_decades() {
    let a: Vec<f64> = (5..=9).map(|e| 10f64.powi(e)).collect();
    let rows = prop1_divergence(&a).unwrap();
    assert!(strictly_increasing(&rows));
    let f = rows[4].ratio / rows[3].ratio;
    let want = 10.0 * 8.0 / 9.0;
    assert!((f / want - 1.0).abs() < 0.05, "{f} vs {want}");
}

#[test]
fn linear_side_table_flags_validity() {
    let a: Vec<f64> = (4..=8).map(|e| 10f64.powi(e)).collect();
    let rows = prop1_table(&a, PROP1_LINEAR_MIN_A).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(!rows[0].nonlinear_valid);
    assert!(rows[1..].iter().all(|r| r.nonlinear_valid));
    assert!(strictly_increasing(&rows));
}

#[test]
fn matches_double_double() {
    let a = 1e6;
    let r = prop1_divergence(&[a]).unwrap()[0];
    let x = TwoFloat::from(a);
    let lin = x * x * x / TwoFloat::from(66.0);
    let non = TwoFloat::from(3297.0) * x * x * x.ln();
    let rel = |got: f64, want: TwoFloat| ((TwoFloat::from(got) - want) / want).hi().abs();
    assert!(rel(r.linear_lb, lin) < 1e-12);
    assert!(rel(r.nonlinear_ub, non) < 1e-12);
    assert!(rel(r.ratio, lin / non) < 1e-12);
}

proptest! {
    #[test]
    fn increasing_for_any_increasing_sequence(mut e in proptest::collection::vec(4.31f64..9.0, 2..12)) {
        e.sort_by(|x, y| x.partial_cmp(y).unwrap());
        e.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        let a: Vec<f64> = e.iter().map(|v| 10f64.powf(*v)).collect();
        let rows = prop1_divergence(&a).unwrap();
        prop_assert!(strictly_increasing(&rows));
    }
}
