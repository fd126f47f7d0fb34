//! Asymptotic ballot ratio `ρ̂ = P̂ g(n−k) / (2 L̂ R̂)` along rungs of `n − k`.

use super::CampaignOutput;
use crate::config::seed_row;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::functionals::{estimate_ballot_with, estimate_l, estimate_r, r_sequence, BallotConfig, FunctionalEstimate, LConfig, RConfig};
use dgff_ballot::gff::{boundary_data, model_with_data};
use dgff_ballot::potential::G;
use dgff_ballot::solver::LaplaceSolver;
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct RatioPoint {
    pub gap: f64,
    pub u: usize,
    pub v: usize,
    pub rho: f64,
    pub rho_se: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm11Summary {
    pub points: Vec<RatioPoint>,
    /// Rungs skipped because `T < 1`.
    pub skipped: Vec<f64>,
    /// `|ρ̂ − 1|` does not increase beyond noise from rung to rung, per `(u, v)`.
    pub trend_ok: bool,
}

/// `ρ̂` and its delta-method standard error.
pub fn ratio(p: f64, p_se: f64, l: f64, l_se: f64, r: f64, r_se: f64, gap: f64) -> (f64, f64) {
    let rho = p * G * gap / (2.0 * l * r);
    let rel = ((p_se / p).powi(2) + (l_se / l).powi(2) + (r_se / r).powi(2)).sqrt();
    (rho, rho.abs() * rel)
}

fn trend_ok(points: &[RatioPoint]) -> bool {
    let mut keys: Vec<(usize, usize)> = points.iter().map(|p| (p.u, p.v)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.iter().all(|&(u, v)| {
        let s: Vec<&RatioPoint> = points.iter().filter(|p| (p.u, p.v) == (u, v) && p.rho.is_finite()).collect();
        s.windows(2).all(|w| (w[1].rho - 1.0).abs() <= (w[0].rho - 1.0).abs() + 1.96 * (w[0].rho_se.powi(2) + w[1].rho_se.powi(2)).sqrt())
    })
}

/// `r` for `L_n` on a shrunken rung: `B_{n−r}` must sit inside `e^{n−a} U`,
/// so the default sequence is taken at the physical scale `n − a` and shifted by `⌈a⌉`.
pub fn l_radius(cfg: &ExperimentConfig, gap: f64) -> i64 {
    let a = cfg.shrink(gap);
    cfg.r.unwrap_or_else(|| r_sequence(cfg.k + gap - a)) + a.ceil() as i64
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let ladder: Vec<f64> = cfg.r_ladder.iter().map(|g| cfg.k + g).collect();
    let mut r_cache: Vec<FunctionalEstimate> = Vec::new();
    for (vi, v) in cfg.v_data.iter().enumerate() {
        let (row, _) = seed_row(kind, &format!("R/v={vi}"));
        let rc = RConfig { v: cfg.v_domain.clone(), k: cfg.k, v_data: v.clone(), zeta: cfg.zeta, eps: cfg.eps, r: cfg.r };
        r_cache.push(estimate_r(&rc, &ladder, cfg.trials, cfg.seed, row, tol)?);
    }
    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &gap in &cfg.gaps {
        let spec = cfg.annulus(gap)?;
        let t = spec.t()?;
        if t < 1 {
            let label = format!("gap={gap}");
            let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, label).input("gap", gap).input("T", t);
            rec.flag("degenerate", true);
            rec.warnings.push(format!("T = {t} < 1; rung skipped"));
            records.push(rec);
            skipped.push(gap);
            continue;
        }
        let solver = Arc::new(LaplaceSolver::new(&spec.domain()?, tol)?);
        let mut l_cache = Vec::new();
        for (ui, u) in cfg.u_data.iter().enumerate() {
            let (row, _) = seed_row(kind, &format!("L/gap={gap}/u={ui}"));
            let lc = LConfig { u: spec.u.clone(), n: spec.n, u_data: u.clone(), eta: cfg.eta, eps: cfg.eps, r: Some(l_radius(cfg, gap)) };
            l_cache.push(estimate_l(&lc, &[], cfg.trials, cfg.seed, row, tol)?);
        }
        for (ui, u) in cfg.u_data.iter().enumerate() {
            for (vi, v) in cfg.v_data.iter().enumerate() {
                let start = Instant::now();
                let (row, label) = seed_row(kind, &format!("P/gap={gap}/u={ui}/v={vi}"));
                let mut data = boundary_data(&spec, u, v, tol)?;
                data.warnings.extend(spec.class_warnings());
                let model = model_with_data(&spec, solver.clone(), u, v)?;
                let bc = BallotConfig { annulus: spec.clone(), u: u.clone(), v: v.clone() };
                let p = estimate_ballot_with(&bc, &model, data.warnings.clone(), cfg.trials, cfg.seed, row)?;
                let (l, r) = (&l_cache[ui], &r_cache[vi]);
                let (rho, rho_se) = ratio(p.probability.estimate, p.probability.std_error(), l.value, l.std_error, r.value, r.std_error, gap);
                let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, label)
                    .input("gap", gap)
                    .input("n", spec.n)
                    .input("k", spec.k)
                    .input("T", t)
                    .input("shrink", cfg.shrink(gap))
                    .input("u", ui)
                    .input("v", vi)
                    .input("r_l", l.r)
                    .input("r_r", r.r);
                rec.est("p", p.probability.estimate);
                rec.ci("p", p.probability.ci);
                rec.est("l", l.value);
                rec.ci("l", l.ci);
                rec.est("r", r.value);
                rec.ci("r", r.ci);
                rec.est("rho", rho);
                rec.est("rho_se", rho_se);
                rec.ci("rho", super::normal_ci(rho, rho_se));
                if let Some((rx, rx_se)) = r.extrapolated {
                    let (rho_x, rho_x_se) = ratio(p.probability.estimate, p.probability.std_error(), l.value, l.std_error, rx, rx_se, gap);
                    rec.est("r_extrapolated", rx);
                    rec.est("rho_extrapolated", rho_x);
                    rec.ci("rho_extrapolated", super::normal_ci(rho_x, rho_x_se));
                }
                rec.est("u_bar_0", data.u_bar_0);
                rec.est("v_bar_inf", data.v_bar_inf);
                rec.flag("admissible", data.admissible(gap, cfg.eps));
                rec.flag("degenerate", false);
                rec.flag("r_stabilized", r.stabilized.unwrap_or(false));
                rec.warnings = data.warnings;
                rec.wall_time_s = start.elapsed().as_secs_f64();
                points.push(RatioPoint { gap, u: ui, v: vi, rho, rho_se });
                records.push(rec);
            }
        }
    }
    let summary = Thm11Summary { trend_ok: trend_ok(&points), points, skipped };
    let footer = vec![
        "rho = P g (n-k) / (2 L R); the limit is 1 as n - k grows".to_string(),
        "R uses the last ladder rung; rho_extrapolated uses the first-order extrapolant in 1/(n-k)".to_string(),
    ];
    let plot = PlotSpec { x: "in:gap".into(), ys: vec!["est:rho".into(), "est:rho_extrapolated".into()], logscale_y: false };
    Ok(CampaignOutput::new(records, &summary, footer, Some(plot)))
}
