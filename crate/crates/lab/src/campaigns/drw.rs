//! Barrier-estimate table for decorated random walks over a grid of laws.

use super::CampaignOutput;
use crate::config::seed_row;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::drw::{verify_appc, AppCRow};
use dgff_ballot::stats::Interval;
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct DrwSummary {
    pub rows: Vec<AppCRow>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let grid = cfg.drw.as_ref().ok_or_else(|| LabError::Config("drw campaigns need a `drw` grid".into()))?;
    let (kind, hash) = (cfg.kind, cfg.hash());
    let start = Instant::now();
    let (row0, label) = seed_row(kind, "grid");
    let rows = verify_appc(grid, cfg.trials, cfg.seed, row0)?;
    let per_row = start.elapsed().as_secs_f64() / rows.len().max(1) as f64;
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rec = ResultRecord::new(kind.name(), &hash, i, cfg.seed, format!("{label}+{i}"))
                .input("T", r.t)
                .input("a", r.a)
                .input("b", r.b)
                .input("decoration", &r.decoration)
                .input("r", r.r);
            rec.est("p", r.p);
            rec.ci("p", Interval { lo: r.p_lo, hi: r.p_hi });
            rec.est("ell", r.ell);
            rec.est("ell_se", r.ell_se);
            rec.est("ratio", r.ratio);
            rec.est("upper_const", r.upper_const);
            rec.est("lower_const", r.lower_const);
            rec.est("barrier_plus_ratio", r.barrier_plus_ratio);
            rec.est("barrier_minus_ratio", r.barrier_minus_ratio);
            rec.flag("b_below", r.b_below);
            rec.flag("product_small", r.product_small);
            rec.flag("envelope", r.envelope);
            rec.wall_time_s = per_row;
            rec
        })
        .collect();
    let footer = vec!["ratio = P s_T / (2 ell b^-); hypothesis flags are reported, never used as filters".to_string()];
    let plot = PlotSpec { x: "in:T".into(), ys: vec!["est:ratio".into()], logscale_y: false };
    Ok(CampaignOutput::new(records, &DrwSummary { rows }, footer, Some(plot)))
}
