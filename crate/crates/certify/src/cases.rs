//! Region partition of the `(P1~, P2~)` quadrant and the region-wise
//! transfer checks with the closed-form region bounds.

use crate::{ratio_transfer_check, Case, CaseLabel, CertifyError, SampledTradeoff, STRONG_CASE_CONSTANT, WEAK_CASE_CONSTANT};
use lqgduet_core::{classify, require_threshold, ProblemParams, Regime, DEFAULT_A_THRESHOLD};
use lqgduet_upper::{apow, linbb_bound, simplified_bracket, simplified_upper_unchecked};
use serde::{Deserialize, Serialize};

/// Outcome of the transfer check restricted to one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub label: CaseLabel,
    pub checked: usize,
    pub pass: bool,
}

fn weak_thresholds(p: &ProblemParams) -> (f64, f64) {
    let a2 = p.a * p.a;
    (a2 * p.m_floor() / 400.0, a2 * (a2 * p.sigmav2_sq).max(1.0) / 400.0)
}

fn strong_p2_threshold(p: &ProblemParams) -> f64 {
    let a2 = p.a * p.a;
    a2 * a2 * p.sigmav2_sq / 28_000.0
}

fn decay(p: &ProblemParams, s: u32, x1: f64) -> f64 {
    (-50.0 * apow(p.a, 2.0 * (s as f64 - 1.0)) * x1 / p.sigmav2_sq).exp()
}

/// `P2~` below which the controllers cannot stabilize in the middle band.
fn middle_p2_threshold(p: &ProblemParams, s: u32, x1: f64) -> f64 {
    let a2s1 = apow(p.a, 2.0 * (s as f64 + 1.0));
    0.0457 * a2s1 * x1 * decay(p, s, x1) + 0.0113 * a2s1 * p.m_floor()
}

/// Weakly degraded region containing `(x1, x2)`.
pub fn weak_case(p: &ProblemParams, x1: f64, x2: f64) -> Case {
    let (t1, t2) = weak_thresholds(p);
    if x1 >= t1 {
        Case::III
    } else if x2 >= t2 {
        Case::II
    } else {
        Case::I
    }
}

/// Strongly degraded region containing `(x1, x2)` for stage count `s`.
///
/// When the middle band is empty, points between its ends fall in (i)/(ii).
pub fn strong_case(p: &ProblemParams, s: u32, x1: f64, x2: f64) -> Case {
    let (lo, hi) = simplified_bracket(p, s);
    if x1 <= lo {
        if x2 >= strong_p2_threshold(p) {
            Case::II
        } else {
            Case::I
        }
    } else if x1 <= hi {
        if x2 >= middle_p2_threshold(p, s, x1) {
            Case::IV
        } else {
            Case::III
        }
    } else {
        Case::V
    }
}

fn label_for(p: &ProblemParams, regime: Regime, x1: f64, x2: f64) -> CaseLabel {
    match regime {
        Regime::WeaklyDegraded => CaseLabel::Weak(weak_case(p, x1, x2)),
        Regime::StronglyDegraded { s } => CaseLabel::Strong(strong_case(p, s, x1, x2)),
    }
}

pub fn case_label(p: &ProblemParams, x1: f64, x2: f64) -> Result<CaseLabel, CertifyError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    Ok(label_for(p, classify(p)?, x1, x2))
}

/// The closed-form lower bound on `D_L` used in each region.
fn region_lower(p: &ProblemParams, regime: Regime, label: CaseLabel, x1: f64) -> f64 {
    let a2 = p.a * p.a;
    let m = p.m_floor();
    match label {
        CaseLabel::Weak(Case::II) => 0.176 * a2 * p.sigmav2_sq + 1.0,
        CaseLabel::Weak(Case::III) => 0.295 * m,
        CaseLabel::Strong(Case::II) => 0.008 * a2 * p.sigmav2_sq + 1.0,
        CaseLabel::Strong(Case::IV) => {
            let Regime::StronglyDegraded { s } = regime else { return f64::INFINITY };
            let a2s = apow(p.a, 2.0 * s as f64);
            0.2541 * a2s * x1 * decay(p, s, x1) + 0.066 * a2s * m + 1.0
        }
        CaseLabel::Strong(Case::V) => 0.295 * m,
        _ => f64::INFINITY,
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    std::iter::once(0.0).chain(logspace(lo * 1e-4, hi * 1e4, n)).chain([lo, hi]).collect()
}

/// Run the transfer check region by region with the case constants:
/// `c = 1200` against the linear triples in the weak regime, and
/// `c = STRONG_CASE_CONSTANT` against the linear triples plus the
/// simplified signaling triples in the strong regime.
///
/// `samples` is the number of log-spaced points per axis.
pub fn region_checks(p: &ProblemParams, samples: usize) -> Result<Vec<RegionOutcome>, CertifyError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    let regime = classify(p)?;
    let mut upper = vec![linbb_bound(p, 1), linbb_bound(p, 2)];
    let mut grid = Vec::new();
    let (c, labels) = match regime {
        Regime::WeaklyDegraded => {
            let (t1, t2) = weak_thresholds(p);
            let a2 = axis(t2, t2, samples);
            for x1 in axis(t1, t1, samples) {
                grid.extend(a2.iter().map(|&x2| (x1, x2)));
            }
            (WEAK_CASE_CONSTANT, vec![Case::I, Case::II, Case::III])
        }
        Regime::StronglyDegraded { s } => {
            let (lo, hi) = simplified_bracket(p, s);
            let t2 = strong_p2_threshold(p);
            let floor = middle_p2_threshold(p, s, 0.0);
            let mut a1 = axis(lo.min(hi), lo.max(hi), samples);
            let a2 = axis(t2.min(floor), t2.max(middle_p2_threshold(p, s, hi.max(lo))), samples);
            if lo < hi {
                for x1 in logspace(lo, hi, samples) {
                    a1.push(x1);
                    upper.push(simplified_upper_unchecked(p, s, x1));
                    let need = middle_p2_threshold(p, s, x1);
                    grid.extend([0.5, 1.0001, 2.0, 10.0, 1e3].map(|f| (x1, need * f)));
                }
            }
            for &x1 in &a1 {
                grid.extend(a2.iter().map(|&x2| (x1, x2)));
            }
            (STRONG_CASE_CONSTANT, vec![Case::I, Case::II, Case::III, Case::IV, Case::V])
        }
    };
    let du = SampledTradeoff::new(upper);
    Ok(labels
        .into_iter()
        .map(|case| {
            let label = match regime {
                Regime::WeaklyDegraded => CaseLabel::Weak(case),
                Regime::StronglyDegraded { .. } => CaseLabel::Strong(case),
            };
            let pts: Vec<(f64, f64)> = grid.iter().copied().filter(|&(x1, x2)| label_for(p, regime, x1, x2) == label).collect();
            let pass = ratio_transfer_check(|x1, x2| du.eval(x1, x2), |x1, _| region_lower(p, regime, label, x1), c, &pts);
            RegionOutcome { label, checked: pts.len(), pass }
        })
        .collect())
}
