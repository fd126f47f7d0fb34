//! Fitted constants of the upper bound `C (u_*^- + 1)(v_*^- + 1)/(n−k)` and of
//! the lower-bound companion, plus the positive-boundary decay check.

use super::CampaignOutput;
use crate::config::seed_row;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::functionals::{estimate_ballot_with, BallotConfig};
use dgff_ballot::gff::{boundary_data, model_with_data};
use dgff_ballot::solver::LaplaceSolver;
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapFit {
    pub gap: f64,
    /// `max P̂ (n−k)/((u_*^-+1)(v_*^-+1))` over the data grid.
    pub c_upper: f64,
    /// `min P̂ (n−k)/((ū(0)^-+1)(v̄(∞)^-+1))` over admissible rows with
    /// `ū(0) ≤ 0` and `v̄(∞) ≤ 0`.
    pub c_lower: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCheck {
    pub gap: f64,
    pub v: usize,
    /// `(u_*, log P̂)` over rows with `u_* ≥ 0`, with a half-count continuity correction.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log P̂` against `(u_*^+)²`.
    pub slope: f64,
    /// The average drop per unit of `u_*^+` grows along the grid; `None` with fewer than three levels.
    pub superlinear: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm23Summary {
    pub fits: Vec<GapFit>,
    /// `Ĉ` of each rung over `Ĉ` of the previous one.
    pub c_ratios: Vec<f64>,
    pub c_ratio_ok: bool,
    pub decay: Vec<DecayCheck>,
    pub decay_sign_ok: bool,
    /// Smallest `ĉ` over rungs.
    pub c_lower_min: Option<f64>,
}

struct Row {
    gap: f64,
    v: usize,
    u_star: f64,
    successes: u64,
    trials: u64,
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x * x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x * x - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

fn decay_checks(rows: &[Row]) -> Vec<DecayCheck> {
    let mut keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.gap.to_bits(), r.v)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = Vec::new();
    for (g, v) in keys {
        let gap = f64::from_bits(g);
        let mut points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.gap == gap && r.v == v && r.u_star >= 0.0)
            .map(|r| (r.u_star, ((r.successes as f64 + 0.5) / (r.trials as f64 + 1.0)).ln()))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
        if points.len() < 2 || points.iter().all(|p| p.0 == 0.0) {
            continue;
        }
        let superlinear = (points.len() >= 3).then(|| {
            let rates: Vec<f64> = points.windows(2).map(|w| (w[0].1 - w[1].1) / (w[1].0 - w[0].0)).collect();
            rates.windows(2).all(|w| w[1] >= w[0])
        });
        out.push(DecayCheck { gap, v, slope: slope(&points), points, superlinear });
    }
    out
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let mut records = Vec::new();
    let mut fits = Vec::new();
    let mut rows = Vec::new();
    for &gap in &cfg.gaps {
        let spec = cfg.annulus(gap)?;
        let solver = Arc::new(LaplaceSolver::new(&spec.domain()?, tol)?);
        let mut fit = GapFit { gap, c_upper: f64::NEG_INFINITY, c_lower: None };
        for (ui, u) in cfg.u_data.iter().enumerate() {
            for (vi, v) in cfg.v_data.iter().enumerate() {
                let start = Instant::now();
                let (row, label) = seed_row(kind, &format!("gap={gap}/u={ui}/v={vi}"));
                let mut data = boundary_data(&spec, u, v, tol)?;
                data.warnings.extend(spec.class_warnings());
                let model = model_with_data(&spec, solver.clone(), u, v)?;
                let bc = BallotConfig { annulus: spec.clone(), u: u.clone(), v: v.clone() };
                let p = estimate_ballot_with(&bc, &model, data.warnings.clone(), cfg.trials, cfg.seed, row)?.probability;
                let upper = p.estimate * gap / ((neg(data.u_star) + 1.0) * (neg(data.v_star) + 1.0));
                let lower = p.estimate * gap / ((neg(data.u_bar_0) + 1.0) * (neg(data.v_bar_inf) + 1.0));
                let admissible = data.admissible(gap, cfg.eps);
                fit.c_upper = fit.c_upper.max(upper);
                if admissible && data.u_bar_0 <= 0.0 && data.v_bar_inf <= 0.0 {
                    fit.c_lower = Some(fit.c_lower.map_or(lower, |c: f64| c.min(lower)));
                }
                rows.push(Row { gap, v: vi, u_star: data.u_star, successes: p.successes, trials: p.trials });
                let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, label)
                    .input("gap", gap)
                    .input("n", spec.n)
                    .input("k", spec.k)
                    .input("shrink", cfg.shrink(gap))
                    .input("u", ui)
                    .input("v", vi);
                rec.est("p", p.estimate);
                rec.ci("p", p.ci);
                rec.est("u_star", data.u_star);
                rec.est("v_star", data.v_star);
                rec.est("u_bar_0", data.u_bar_0);
                rec.est("v_bar_inf", data.v_bar_inf);
                rec.est("c_upper", upper);
                rec.est("c_lower", lower);
                rec.flag("admissible", admissible);
                rec.warnings = data.warnings;
                rec.wall_time_s = start.elapsed().as_secs_f64();
                records.push(rec);
            }
        }
        fits.push(fit);
    }
    let c_ratios: Vec<f64> = fits.windows(2).map(|w| w[1].c_upper / w[0].c_upper).collect();
    let decay = decay_checks(&rows);
    let c_lower_min = fits.iter().filter_map(|f| f.c_lower).reduce(f64::min);
    let summary = Thm23Summary {
        c_ratio_ok: c_ratios.iter().all(|r| (0.5..=2.0).contains(r)),
        c_ratios,
        decay_sign_ok: !decay.is_empty() && decay.iter().all(|d| d.slope < 0.0),
        decay,
        c_lower_min,
        fits,
    };
    let footer = vec!["C and c are fitted per rung; stability is judged by successive ratios".to_string()];
    let plot = PlotSpec { x: "in:gap".into(), ys: vec!["est:c_upper".into(), "est:c_lower".into()], logscale_y: true };
    Ok(CampaignOutput::new(records, &summary, footer, Some(plot)))
}
