use crate::{cases::case_label, CaseLabel, CertifyError};
use lqgduet_core::{classify, require_threshold, ProblemParams, Regime, DEFAULT_A_THRESHOLD};
use lqgduet_lower::LowerModel;
use lqgduet_upper::{apow, UpperFrontier};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Ratio cap from the case analyses: 1200 (weak) or 1.5e5 (strong).
pub fn default_cap(regime: Regime) -> f64 {
    match regime {
        Regime::WeaklyDegraded => 1200.0,
        Regime::StronglyDegraded { .. } => 1.5e5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub params: ProblemParams,
    pub regime: Regime,
    pub upper: f64,
    pub lower: f64,
    /// `upper / lower`, evaluated in log space.
    pub ratio: f64,
    /// Region of the lower optimizer's `(P1~, P2~)`.
    pub case_label: CaseLabel,
    pub pass: bool,
    pub cap: f64,
    pub upper_strategy: String,
    pub lower_envelope: String,
    pub p1_tilde: f64,
    pub p2_tilde: f64,
}

fn report(
    p: &ProblemParams,
    regime: Regime,
    lower: &LowerModel,
    upper: &UpperFrontier,
    cap: f64,
) -> Result<CertReport, CertifyError> {
    let lo = lower.cost(p.q, p.r1, p.r2);
    let up = upper.best(p);
    if !(lo.cost > 0.0) {
        return Err(CertifyError::Degenerate { upper: up.cost });
    }
    let ratio = if up.cost.is_finite() { (up.cost.ln() - lo.cost.ln()).exp() } else { f64::INFINITY };
    Ok(CertReport {
        params: *p,
        regime,
        upper: up.cost,
        lower: lo.cost,
        ratio,
        case_label: case_label(p, lo.p1, lo.p2)?,
        pass: ratio <= cap,
        cap,
        upper_strategy: up.candidate.spec.label(),
        lower_envelope: lo.envelope.to_string(),
        p1_tilde: lo.p1,
        p2_tilde: lo.p2,
    })
}

/// Compare the upper and lower cost optimizers at one problem.
pub fn certify_point(p: &ProblemParams, cap: f64) -> Result<CertReport, CertifyError> {
    require_threshold(p, DEFAULT_A_THRESHOLD)?;
    let regime = classify(p)?;
    if p.q == 0.0 && p.r1 == 0.0 && p.r2 == 0.0 {
        return Err(CertifyError::Degenerate { upper: 0.0 });
    }
    report(p, regime, &LowerModel::new(p)?, &UpperFrontier::new(p)?, cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeFilter {
    Weak,
    Strong,
    Both,
}

/// Sampled certification grid.
///
/// Strong instances use `sv2^2 = a^{2(s-1)} max(1, a^2 sv1^2) |a|`, weak
/// ones `sv2^2 = max(1, a^2 sv1^2) f` for each `f` in `weak_fractions`
/// (raised to `sv1^2` if needed). Every instance is paired with all
/// `weight_levels^3` triples `(q, r1, r2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertGrid {
    pub a_values: Vec<f64>,
    pub s_values: Vec<u32>,
    pub sv1_values: Vec<f64>,
    pub weak_fractions: Vec<f64>,
    pub weight_levels: Vec<f64>,
    pub weak_cap: f64,
    pub strong_cap: f64,
}

impl Default for CertGrid {
    fn default() -> Self {
        CertGrid {
            a_values: vec![2.5, 5.0, 25.0, 100.0],
            s_values: vec![1, 2, 3],
            sv1_values: vec![0.0, 1.0, 10.0],
            weak_fractions: vec![0.1, 1.0],
            weight_levels: vec![1e-2, 1.0, 1e2],
            weak_cap: 1200.0,
            strong_cap: 1.5e5,
        }
    }
}

impl CertGrid {
    pub fn instances(&self, filter: RegimeFilter) -> Vec<ProblemParams> {
        let mut out = Vec::new();
        let base = |a: f64, v1: f64, v2: f64| ProblemParams {
            a,
            q: 1.0,
            r1: 1.0,
            r2: 1.0,
            sigma0_sq: 0.0,
            sigmav1_sq: v1,
            sigmav2_sq: v2,
        };
        for &a in &self.a_values {
            for &v1 in &self.sv1_values {
                let m = (a * a * v1).max(1.0);
                if filter != RegimeFilter::Strong {
                    for &f in &self.weak_fractions {
                        out.push(base(a, v1, (m * f).max(v1)));
                    }
                }
                if filter != RegimeFilter::Weak {
                    for &s in &self.s_values {
                        out.push(base(a, v1, apow(a, 2.0 * (s as f64 - 1.0)) * m * a.abs()));
                    }
                }
            }
        }
        out
    }

    fn weights(&self) -> Vec<(f64, f64, f64)> {
        let w = &self.weight_levels;
        w.iter().flat_map(|&q| w.iter().flat_map(move |&r1| w.iter().map(move |&r2| (q, r1, r2)))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub header: String,
    pub reports: Vec<CertReport>,
    pub pass: bool,
}

const GRID_HEADER: &str = "sampled grid certification: the ratio cap is checked at the listed points only, not proved for all parameters";

/// Certify every grid point. Instances run in parallel; the report order
/// follows [`CertGrid::instances`] and then the weight triples.
pub fn certify_grid(g: &CertGrid, filter: RegimeFilter) -> Result<GridReport, CertifyError> {
    let weights = g.weights();
    let chunks: Vec<Vec<CertReport>> = g
        .instances(filter)
        .par_iter()
        .map(|base| {
            require_threshold(base, DEFAULT_A_THRESHOLD)?;
            let regime = classify(base)?;
            let cap = match regime {
                Regime::WeaklyDegraded => g.weak_cap,
                Regime::StronglyDegraded { .. } => g.strong_cap,
            };
            let lower = LowerModel::new(base)?;
            let upper = UpperFrontier::new(base)?;
            weights
                .iter()
                .map(|&(q, r1, r2)| report(&ProblemParams { q, r1, r2, ..*base }, regime, &lower, &upper, cap))
                .collect()
        })
        .collect::<Result<_, CertifyError>>()?;
    let reports: Vec<CertReport> = chunks.into_iter().flatten().collect();
    let pass = reports.iter().all(|r| r.pass);
    Ok(GridReport { header: GRID_HEADER.into(), reports, pass })
}
