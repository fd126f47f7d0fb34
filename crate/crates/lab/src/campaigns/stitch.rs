//! Direct ballot frequency against a two-stage estimate that conditions on the
//! field at `∂B^±_l`. Given the ring values the inner and outer pieces of
//! `D′ = D ∖ ∂B^±_l` are independent, so each outer draw contributes
//! `1{ring ok} · p̂_in · p̂_out` from fresh residual draws on `D′`.

use super::{normal_ci, CampaignOutput};
use crate::config::seed_row;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::functionals::RingOperator;
use dgff_ballot::gff::{build_model, GffError, GffModel, GibbsMarkov};
use dgff_ballot::stats::{MeanVar, Proportion, Z95};
use dgff_ballot::{ContinuumDomain, LatticeSet};
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct StitchRung {
    pub gap: f64,
    pub l: f64,
    pub direct: f64,
    pub direct_se: f64,
    pub two_stage: f64,
    pub two_stage_se: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StitchSummary {
    pub rungs: Vec<StitchRung>,
}

struct Outcome {
    direct: bool,
    two_stage: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let (u, v) = (&cfg.u_data[0], &cfg.v_data[0]);
    let mut records = Vec::new();
    let mut rungs = Vec::new();
    for &gap in &cfg.gaps {
        let start = Instant::now();
        let spec = cfg.annulus(gap)?;
        let l = cfg.l_for(gap);
        let (model, data) = build_model(&spec, u, v, tol)?;
        let d = model.domain();
        let ring = RingOperator::new(l, cfg.band_eps, tol)?.ring;
        if let Some(z) = ring.points().iter().find(|z| !d.contains(**z) && !model.boundary().contains(**z)) {
            return Err(LabError::Config(format!("ring point {z:?} outside the closure of the domain at gap {gap}")));
        }
        let sub = d.minus(&ring);
        let gm = GibbsMarkov::new(&model, &sub, tol)?;
        let residual = GffModel::zero_boundary(&sub, tol)?;
        let ball = LatticeSet::scaled(&ContinuumDomain::unit_disk(), l).map_err(GffError::from)?;
        let bulk = spec.bulk_domain()?;
        let ring_bulk: Vec<usize> = bulk.intersect(&ring).points().iter().filter_map(|p| d.index_of(*p)).collect();
        let piece = |inside: bool| -> Vec<(usize, usize)> {
            bulk.points().iter().filter(|p| ball.contains(**p) == inside).filter_map(|p| Some((d.index_of(*p)?, sub.index_of(*p)?))).collect()
        };
        let (inner, outer) = (piece(true), piece(false));
        let all_bulk: Vec<usize> = bulk.points().iter().filter_map(|p| d.index_of(*p)).collect();
        let (row, label) = seed_row(kind, &format!("gap={gap}"));
        let (inner_row, _) = seed_row(kind, &format!("gap={gap}/inner"));
        let m = cfg.inner_draws as u64;
        let outcomes = model.map_fields(cfg.seed, row, 0..cfg.trials, |t, h| -> Result<Outcome, GffError> {
            let direct = all_bulk.iter().all(|i| h[*i] <= 0.0);
            if !ring_bulk.iter().all(|i| h[*i] <= 0.0) {
                return Ok(Outcome { direct, two_stage: 0.0 });
            }
            let (phi, _) = gm.split(&model, h)?;
            let ok = residual.map_centered(cfg.seed, inner_row, t * m..(t + 1) * m, |_, psi| {
                let good = |set: &[(usize, usize)]| set.iter().all(|(i, j)| phi[*i] + psi[*j] <= 0.0);
                (good(&inner), good(&outer))
            })?;
            let frac = |f: &dyn Fn(&(bool, bool)) -> bool| ok.iter().filter(|x| f(x)).count() as f64 / m as f64;
            Ok(Outcome { direct, two_stage: frac(&|x| x.0) * frac(&|x| x.1) })
        })?;
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
        let p = Proportion::from_flags(&outcomes.iter().map(|o| o.direct).collect::<Vec<_>>());
        let two = MeanVar::from_slice(&outcomes.iter().map(|o| o.two_stage).collect::<Vec<_>>()).summary();
        let agree = (p.estimate - two.mean).abs() <= Z95 * (p.std_error().powi(2) + two.std_error.powi(2)).sqrt();
        let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, label)
            .input("gap", gap)
            .input("n", spec.n)
            .input("k", spec.k)
            .input("l", l)
            .input("eta", spec.eta)
            .input("zeta", spec.zeta)
            .input("inner_draws", cfg.inner_draws);
        rec.est("p_direct", p.estimate);
        rec.ci("p_direct", p.ci);
        rec.est("p_two_stage", two.mean);
        rec.ci("p_two_stage", normal_ci(two.mean, two.std_error));
        rec.flag("agree", agree);
        rec.warnings = data.warnings;
        rec.wall_time_s = start.elapsed().as_secs_f64();
        records.push(rec);
        rungs.push(StitchRung { gap, l, direct: p.estimate, direct_se: p.std_error(), two_stage: two.mean, two_stage_se: two.std_error, agree });
    }
    let footer = vec!["a consistency check of the Gibbs-Markov split, not a test of an asymptotic statement".to_string()];
    Ok(CampaignOutput::new(records, &StitchSummary { rungs }, footer, None))
}
