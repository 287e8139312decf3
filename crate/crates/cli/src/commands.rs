//! Subcommand bodies. CSV schemas:
//!
//! * simulate: [`SimRow`]
//! * sweep: [`SweepRow`]
//! * upper: [`UpperRow`]; lower: [`LowerRow`]
//! * certify: [`CertRow`]
//! * prop1: [`Prop1Row`](lqgduet_certify::Prop1Row)

use crate::*;
use lqgduet_certify::{certify_grid, prop1_table, strictly_increasing, CertGrid, CertReport, RegimeFilter};
use lqgduet_core::Regime;
use lqgduet_detmodel::{det_radner, det_run, det_witsen, DetParams, DetStrategy, OneShotParams};
use lqgduet_lower::LowerModel;
use lqgduet_sim::{SimConfig, SimError, SimResult};
use lqgduet_upper::{linbb_bound, UpperFrontier};

fn header(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "# lqgduet {} {}", cfg.command.name(), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config: {}", cfg.to_json())?;
    Ok(())
}

fn write_csv<T: Serialize>(cfg: &RunConfig, rows: &[T], out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.json {
        serde_json::to_writer_pretty(&mut *out, rows).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out)?;
        return Ok(());
    }
    header(cfg, out)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimRow {
    pub strategy: String,
    pub a: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub sv1sq: f64,
    pub sv2sq: f64,
    pub seed: u64,
    pub trials: u32,
    pub horizon: u64,
    pub stable: bool,
    pub state_cost: f64,
    pub u1_power: f64,
    pub u2_power: f64,
    pub weighted_cost: f64,
    pub se_state: f64,
    pub se_u1: f64,
    pub se_u2: f64,
    pub se_weighted: f64,
}

pub fn simulate(cfg: &RunConfig, a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = a.params.to_params()?;
    let sc = SimConfig { horizon: a.horizon, burn_in: a.burn_in, trials: a.trials, seed: cfg.seed };
    sc.validate().map_err(config_err)?;
    let (res, stable) = match lqgduet_sim::run(&p, a.strategy, &sc) {
        Ok(r) => (r, true),
        Err(SimError::Unstable { .. }) => (SimResult::unstable(), false),
        Err(e @ SimError::Strategy(_)) | Err(e @ SimError::Config(_)) => return Err(config_err(e)),
    };
    let row = SimRow {
        strategy: a.strategy.to_string(),
        a: p.a,
        q: p.q,
        r1: p.r1,
        r2: p.r2,
        sv1sq: p.sigmav1_sq,
        sv2sq: p.sigmav2_sq,
        seed: cfg.seed,
        trials: a.trials,
        horizon: a.horizon,
        stable,
        state_cost: res.avg_state_cost,
        u1_power: res.avg_u1_power,
        u2_power: res.avg_u2_power,
        weighted_cost: res.weighted_cost,
        se_state: res.se_state,
        se_u1: res.se_u1,
        se_u2: res.se_u2,
        se_weighted: res.se_weighted,
    };
    write_csv(cfg, &[row], out)?;
    if stable {
        Ok(())
    } else {
        Err(CliError::Failed(format!("strategy {} is unstable for these parameters", a.strategy)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub l: f64,
    pub r1: f64,
    pub upper_cost: f64,
    pub upper_strategy: String,
    pub lower_cost: f64,
    pub lower_envelope: String,
    pub linear_cost: f64,
}

/// Costs for `q = 1, r2 = 0, sv1 = 0` and `r1 = a^l` over an
/// even grid of `l`.
pub fn sweep_rows(a: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    if a.points < 2 || !(a.l_max > a.l_min) {
        return Err(CliError::Config("sweep needs points >= 2 and l_max > l_min".into()));
    }
    let base = ProblemParams { a: a.a, q: 1.0, r1: 1.0, r2: 0.0, sigma0_sq: 0.0, sigmav1_sq: 0.0, sigmav2_sq: a.sv2sq };
    base.validate().map_err(config_err)?;
    let upper = UpperFrontier::new(&base).map_err(config_err)?;
    let lower = LowerModel::new(&base).map_err(config_err)?;
    let lin = [linbb_bound(&base, 1), linbb_bound(&base, 2)];
    Ok((0..a.points)
        .map(|i| {
            let l = a.l_min + (a.l_max - a.l_min) * i as f64 / (a.points - 1) as f64;
            let p = ProblemParams { r1: a.a.abs().powf(l), ..base };
            let up = upper.best(&p);
            let lo = lower.cost(p.q, p.r1, p.r2);
            SweepRow {
                l,
                r1: p.r1,
                upper_cost: up.cost,
                upper_strategy: up.candidate.spec.label(),
                lower_cost: lo.cost,
                lower_envelope: lo.envelope.to_string(),
                linear_cost: lin.iter().map(|t| p.weighted(t)).fold(f64::INFINITY, f64::min),
            }
        })
        .collect())
}

pub fn sweep(cfg: &RunConfig, a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    write_csv(cfg, &sweep_rows(a)?, out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UpperRow {
    pub cost: f64,
    pub family: String,
    pub strategy: String,
    pub state_cost: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn upper(cfg: &RunConfig, a: &BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = a.params.to_params()?;
    let c = UpperFrontier::new(&p).map_err(config_err)?.best(&p);
    let row = UpperRow {
        cost: c.cost,
        family: c.candidate.spec.label(),
        strategy: c.candidate.spec.to_string(),
        state_cost: c.candidate.point.d,
        p1: c.candidate.point.p1,
        p2: c.candidate.point.p2,
    };
    write_csv(cfg, &[row], out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LowerRow {
    pub cost: f64,
    pub envelope: String,
    pub p1: f64,
    pub p2: f64,
}

pub fn lower(cfg: &RunConfig, a: &BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = a.params.to_params()?;
    let m = LowerModel::new(&p).map_err(config_err)?;
    let mut res = vec![m.cost(p.q, p.r1, p.r2)];
    if a.audit {
        res.extend(m.audit(p.q, p.r1, p.r2));
    }
    let rows: Vec<LowerRow> =
        res.iter().map(|r| LowerRow { cost: r.cost, envelope: r.envelope.to_string(), p1: r.p1, p2: r.p2 }).collect();
    write_csv(cfg, &rows, out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertRow {
    pub a: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub sv1sq: f64,
    pub sv2sq: f64,
    pub regime: String,
    pub case: String,
    pub upper: f64,
    pub lower: f64,
    pub ratio: f64,
    pub cap: f64,
    pub pass: bool,
    pub upper_strategy: String,
    pub lower_envelope: String,
    pub p1_tilde: f64,
    pub p2_tilde: f64,
}

impl From<&CertReport> for CertRow {
    fn from(r: &CertReport) -> Self {
        let p = &r.params;
        CertRow {
            a: p.a,
            q: p.q,
            r1: p.r1,
            r2: p.r2,
            sv1sq: p.sigmav1_sq,
            sv2sq: p.sigmav2_sq,
            regime: match r.regime {
                Regime::WeaklyDegraded => "weak".into(),
                Regime::StronglyDegraded { s } => format!("strong(s={s})"),
            },
            case: r.case_label.to_string(),
            upper: r.upper,
            lower: r.lower,
            ratio: r.ratio,
            cap: r.cap,
            pass: r.pass,
            upper_strategy: r.upper_strategy.clone(),
            lower_envelope: r.lower_envelope.clone(),
            p1_tilde: r.p1_tilde,
            p2_tilde: r.p2_tilde,
        }
    }
}

pub fn cert_grid(a: &CertifyArgs) -> CertGrid {
    let d = CertGrid::default();
    CertGrid {
        a_values: a.a_values.clone(),
        s_values: a.s_values.clone(),
        sv1_values: a.sv1_values.clone(),
        weak_fractions: a.weak_fractions.clone(),
        weight_levels: a.weights.clone(),
        weak_cap: a.cap.unwrap_or(d.weak_cap),
        strong_cap: a.cap.unwrap_or(d.strong_cap),
    }
}

pub fn certify(cfg: &RunConfig, a: &CertifyArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let filter = match a.regime {
        RegimeArg::Weak => RegimeFilter::Weak,
        RegimeArg::Strong => RegimeFilter::Strong,
        RegimeArg::Both => RegimeFilter::Both,
    };
    let rep = certify_grid(&cert_grid(a), filter).map_err(config_err)?;
    let rows: Vec<CertRow> = rep.reports.iter().map(CertRow::from).collect();
    if cfg.json {
        serde_json::to_writer_pretty(&mut *out, &rep).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out)?;
    } else {
        header(cfg, out)?;
        writeln!(out, "# {}", rep.header)?;
        let mut w = csv::Writer::from_writer(&mut *out);
        for r in &rows {
            w.serialize(r).map_err(|e| CliError::Failed(e.to_string()))?;
        }
        w.flush()?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let worst = rows.iter().max_by(|x, y| x.ratio.total_cmp(&y.ratio));
    let verdict = if rep.pass { "PASS" } else { "FAIL" };
    match worst {
        Some(w) => writeln!(
            diag,
            "{verdict}: {} points, {failed} over cap, worst ratio {:.4} at a={} sv1sq={} sv2sq={} ({})",
            rows.len(),
            w.ratio,
            w.a,
            w.sv1sq,
            w.sv2sq,
            w.case
        )?,
        None => writeln!(diag, "{verdict}: empty grid")?,
    }
    if rep.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failed} grid points exceed the ratio cap")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct OneShotOut {
    model: OneShotArg,
    params: OneShotParams,
    level: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct TraceOut {
    params: DetParams,
    strategy: DetStrategy,
    levels: Vec<String>,
    steady_level: String,
}

pub fn detmodel(cfg: &RunConfig, a: &DetmodelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(model) = a.oneshot {
        let p = OneShotParams { u1_active: !a.no_u1, ..OneShotParams::default() };
        let level = match model {
            OneShotArg::Radner => det_radner(&p),
            OneShotArg::Witsen => det_witsen(&p),
        }
        .map_err(config_err)?;
        if cfg.json {
            let o = OneShotOut { model, params: p, level: level.to_string() };
            serde_json::to_writer_pretty(&mut *out, &o).map_err(|e| CliError::Failed(e.to_string()))?;
            writeln!(out)?;
        } else {
            writeln!(out, "final upper level: {level}")?;
        }
        return Ok(());
    }
    let p = DetParams {
        a_prime: a.aprime,
        sigma_v2_level: a.sv2_level,
        p1_level: a.p1_level,
        window_lo: a.window_lo.unwrap_or(-a.aprime - 6),
        window_hi: a.window_hi.unwrap_or(a.sv2_level.max(a.p1_level) + a.aprime + 13),
    };
    let strategy = match a.strategy {
        DetStrategyArg::Optimal => DetStrategy::Optimal,
        DetStrategyArg::Linear => DetStrategy::LinearShift,
    };
    let trace = det_run(&p, strategy, a.steps).map_err(config_err)?;
    if cfg.json {
        let o = TraceOut {
            params: p,
            strategy,
            levels: trace.levels.iter().map(|l| l.to_string()).collect(),
            steady_level: trace.steady_level().to_string(),
        };
        serde_json::to_writer_pretty(&mut *out, &o).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out)?;
    } else {
        write!(out, "{}", trace.diagram())?;
        writeln!(out, "steady upper level: {}", trace.steady_level())?;
    }
    Ok(())
}

pub fn prop1(cfg: &RunConfig, a: &Prop1Args, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let rows = prop1_table(&a.a, a.min_a).map_err(config_err)?;
    write_csv(cfg, &rows, out)?;
    if rows.len() > 1 {
        writeln!(diag, "ratio strictly increasing: {}", strictly_increasing(&rows))?;
    }
    Ok(())
}
