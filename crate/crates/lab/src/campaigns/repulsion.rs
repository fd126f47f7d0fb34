//! Law of `w̄(0)` and `osc w̄` for `w = h_{∂B^±_l} + m_l`, with and without
//! conditioning on the ballot event (rejection sampling).

use super::{median_with_ci, CampaignOutput};
use crate::config::seed_row;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::functionals::{in_e_set, RingOperator};
use dgff_ballot::gff::build_model;
use dgff_ballot::scales::m_scale;
use dgff_ballot::stats::Proportion;
use serde::Serialize;
use std::time::Instant;

/// `M` grid used when the configuration leaves it empty.
pub const DEFAULT_M: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[derive(Clone, Debug, Serialize)]
pub struct RepulsionRung {
    pub gap: f64,
    pub l: f64,
    pub lambda: f64,
    pub accepted: u64,
    pub trials: u64,
    pub median_conditional: Option<f64>,
    pub median_unconditional: f64,
    /// `(M, P(∉ E | ballot))`.
    pub outside_e: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepulsionSummary {
    pub rungs: Vec<RepulsionRung>,
}

impl RepulsionRung {
    pub fn repelled(&self) -> bool {
        self.median_conditional.is_some_and(|m| m < 0.0 && m < self.median_unconditional)
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let ms: Vec<f64> = if cfg.m_grid.is_empty() { DEFAULT_M.to_vec() } else { cfg.m_grid.clone() };
    let (u, v) = (&cfg.u_data[0], &cfg.v_data[0]);
    let mut records = Vec::new();
    let mut rungs = Vec::new();
    for &gap in &cfg.gaps {
        let start = Instant::now();
        let spec = cfg.annulus(gap)?;
        let l = cfg.l_for(gap);
        let lambda = (spec.n - cfg.shrink(gap) - l).min(l - spec.k);
        let (model, data) = build_model(&spec, u, v, tol)?;
        let op = RingOperator::new(l, cfg.band_eps, tol)?;
        let bulk: Vec<usize> = spec.bulk_domain()?.points().iter().filter_map(|p| model.domain().index_of(*p)).collect();
        op.gather(&model, model.mean())?;
        let ml = m_scale(l);
        let (row, label) = seed_row(kind, &format!("gap={gap}"));
        let draws = model.map_fields(cfg.seed, row, 0..cfg.trials, |_, h| {
            let ballot = bulk.iter().all(|i| h[*i] <= 0.0);
            let w: Vec<f64> = op.gather(&model, h).expect("ring checked").into_iter().map(|x| x + ml).collect();
            (ballot, op.average(&w), op.oscillation(&w))
        })?;
        let all: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let cond: Vec<(f64, f64)> = draws.iter().filter(|d| d.0).map(|d| (d.1, d.2)).collect();
        let (med_u, ci_u) = median_with_ci(&all).ok_or_else(|| LabError::Config("no draws".into()))?;
        let med_c = median_with_ci(&cond.iter().map(|c| c.0).collect::<Vec<_>>());
        let outside: Vec<(f64, f64)> = ms
            .iter()
            .map(|m| {
                let out = cond.iter().filter(|(a, o)| !in_e_set(*a, *o, lambda, *m, cfg.band_eps)).count();
                (*m, if cond.is_empty() { f64::NAN } else { out as f64 / cond.len() as f64 })
            })
            .collect();
        let p = Proportion::new(cond.len() as u64, cfg.trials);
        let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, label)
            .input("gap", gap)
            .input("n", spec.n)
            .input("k", spec.k)
            .input("l", l)
            .input("lambda", lambda)
            .input("shrink", cfg.shrink(gap));
        rec.est("p_ballot", p.estimate);
        rec.ci("p_ballot", p.ci);
        rec.est("median_unconditional", med_u);
        rec.ci("median_unconditional", ci_u);
        if let Some((m, ci)) = med_c {
            rec.est("median_conditional", m);
            rec.ci("median_conditional", ci);
        }
        for (m, q) in &outside {
            rec.est(&format!("p_outside_e[M={m}]"), *q);
        }
        let r = RepulsionRung { gap, l, lambda, accepted: cond.len() as u64, trials: cfg.trials, median_conditional: med_c.map(|x| x.0), median_unconditional: med_u, outside_e: outside };
        rec.flag("repelled", r.repelled());
        rec.warnings = data.warnings;
        if r.accepted < 100 {
            rec.warnings.push(format!("only {} accepted draws", r.accepted));
        }
        rec.wall_time_s = start.elapsed().as_secs_f64();
        records.push(rec);
        rungs.push(r);
    }
    let footer = vec!["conditional statistics use rejection sampling on the ballot event".to_string()];
    let plot = PlotSpec { x: "in:gap".into(), ys: vec!["est:median_conditional".into(), "est:median_unconditional".into()], logscale_y: false };
    Ok(CampaignOutput::new(records, &RepulsionSummary { rungs }, footer, Some(plot)))
}
