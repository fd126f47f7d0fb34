//! One module per experiment kind. Every campaign is a pure function of the
//! configuration (including its master seed); wall times are the only
//! nondeterministic output.

pub mod appb;
pub mod drw;
pub mod kernels;
pub mod repulsion;
pub mod stitch;
pub mod thm11;
pub mod thm23;

use crate::report::{PlotSpec, Report};
use crate::{ExperimentConfig, ExperimentKind, LabError, ResultRecord};
use dgff_ballot::stats::{quantile, Interval, Z95};
use serde::Serialize;

/// Records, a campaign-specific summary and report footer lines.
#[derive(Clone, Debug)]
pub struct CampaignOutput {
    pub records: Vec<ResultRecord>,
    pub summary: serde_json::Value,
    pub footer: Vec<String>,
    pub plot: Option<PlotSpec>,
}

impl CampaignOutput {
    fn new<S: Serialize>(records: Vec<ResultRecord>, summary: &S, footer: Vec<String>, plot: Option<PlotSpec>) -> CampaignOutput {
        CampaignOutput { records, summary: serde_json::to_value(summary).expect("summary serializes"), footer, plot }
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> Report {
        Report { campaign: cfg.kind.name().into(), config_hash: cfg.hash(), records: self.records.clone(), summary: self.summary.clone(), footer: self.footer.clone() }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Thm11 => thm11::run(cfg),
        ExperimentKind::Thm23 => thm23::run(cfg),
        ExperimentKind::Appb => appb::run(cfg),
        ExperimentKind::Repulsion => repulsion::run(cfg),
        ExperimentKind::Stitch => stitch::run(cfg),
        ExperimentKind::Drw => drw::run(cfg),
        ExperimentKind::Kernels => kernels::run(cfg),
    }
}

/// Median with a distribution-free 95% interval from binomial order statistics.
pub fn median_with_ci(xs: &[f64]) -> Option<(f64, Interval)> {
    if xs.is_empty() {
        return None;
    }
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let half = Z95 * n.sqrt() / 2.0;
    let lo = ((n / 2.0 - half).floor().max(0.0) as usize).min(s.len() - 1);
    let hi = ((n / 2.0 + half).ceil() as usize).min(s.len() - 1);
    Some((quantile(&s, 0.5), Interval { lo: s[lo], hi: s[hi] }))
}

/// Normal-theory interval `x ± z·se`.
pub fn normal_ci(x: f64, se: f64) -> Interval {
    Interval { lo: x - Z95 * se, hi: x + Z95 * se }
}
