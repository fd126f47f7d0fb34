//! Exact (no Monte Carlo) checks of the intermediate-scale mean and variance
//! at the origin seen through `Π_{B_l}(0,·)`, and of the `m̂_l − m_l` band.

use super::CampaignOutput;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::functionals::origin_kernel;
use dgff_ballot::gff::{annulus_boundary_fn, boundary_data};
use dgff_ballot::harmonic::GreenOperator;
use dgff_ballot::potential::G;
use dgff_ballot::scales::{mhat, mhat_band};
use dgff_ballot::solver::LaplaceSolver;
use serde::Serialize;
use std::sync::Arc;
use std::time::Instant;

/// Absolute floor under which deviations are treated as zero in growth checks.
pub const GROWTH_FLOOR: f64 = 0.05;

/// Allowed growth of a deviation over its first-rung value.
pub const GROWTH_FACTOR: f64 = 1.25;

#[derive(Clone, Debug, Serialize)]
pub struct AppbSummary {
    /// `|σ(0,0) − g(n−l)(l−k)/(n−k)|` per rung.
    pub sigma_dev: Vec<(f64, f64)>,
    pub sigma_bounded: bool,
    /// Largest `|μ(0) − prediction| − envelope` per rung over the data grid.
    pub mean_excess: Vec<(f64, f64)>,
    pub mean_bounded: bool,
    pub band_points: usize,
    pub band_violations: usize,
    /// Averaging circle inside the domain on every rung.
    pub geometry_ok: bool,
}

/// No value exceeds `GROWTH_FACTOR` times the first one (floored at `GROWTH_FLOOR`).
pub fn bounded(devs: &[f64]) -> bool {
    match devs.first() {
        Some(d0) => devs.iter().all(|d| *d <= GROWTH_FACTOR * d0.max(GROWTH_FLOOR)),
        None => true,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let mut records = Vec::new();
    let mut summary = AppbSummary { sigma_dev: vec![], sigma_bounded: true, mean_excess: vec![], mean_bounded: true, band_points: 0, band_violations: 0, geometry_ok: true };
    for &gap in &cfg.gaps {
        let start = Instant::now();
        let spec = cfg.annulus(gap)?;
        let (n, k, l) = (spec.n, spec.k, cfg.l_for(gap));
        let domain = spec.domain()?;
        let solver = Arc::new(LaplaceSolver::new(&domain, tol)?);
        let kernel = origin_kernel(l)?;
        let inside = kernel.support.iter().all(|z| domain.contains(*z));
        summary.geometry_ok &= inside;
        let weights: Vec<_> = kernel.support.iter().copied().zip(kernel.mass.iter().copied()).collect();
        let sigma = GreenOperator::from_solver(solver.clone()).quadratic_form(&weights)?;
        let sigma_pred = G * (n - l) * (l - k) / (n - k);
        let label = format!("gap={gap}");
        let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, format!("{}/{label}", kind.name()))
            .input("gap", gap)
            .input("n", n)
            .input("l", l)
            .input("k", k)
            .input("what", "sigma")
            .input("solver", solver.method());
        rec.est("sigma", sigma);
        rec.est("sigma_pred", sigma_pred);
        rec.est("sigma_dev", (sigma - sigma_pred).abs());
        rec.flag("geometry_ok", inside);
        rec.wall_time_s = start.elapsed().as_secs_f64();
        records.push(rec);
        summary.sigma_dev.push((gap, (sigma - sigma_pred).abs()));

        let mut worst = f64::NEG_INFINITY;
        for (ui, u) in cfg.u_data.iter().enumerate() {
            for (vi, v) in cfg.v_data.iter().enumerate() {
                let start = Instant::now();
                let data = boundary_data(&spec, u, v, tol)?;
                let w = annulus_boundary_fn(&spec, &domain, u, v)?;
                let mean = solver.dirichlet(w)?;
                let mu0: f64 = weights.iter().map(|(z, c)| c * domain.index_of(*z).map(|i| mean[i]).unwrap_or(0.0)).sum();
                let pred = -mhat(n, l, k)? + ((l - k) * data.u_bar_0 + (n - l) * data.v_bar_inf) / (n - k);
                let residual = (mu0 - pred).abs();
                let envelope = 2.0 * data.osc_u_eta + 2.0 * data.osc_v_zeta;
                worst = worst.max(residual - envelope);
                let mut rec = ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, format!("{}/{label}/u={ui}/v={vi}", kind.name()))
                    .input("gap", gap)
                    .input("n", n)
                    .input("l", l)
                    .input("k", k)
                    .input("what", "mean")
                    .input("u", ui)
                    .input("v", vi);
                rec.est("mu0", mu0);
                rec.est("mu0_pred", pred);
                rec.est("mean_residual", residual);
                rec.est("envelope", envelope);
                rec.warnings = data.warnings;
                rec.wall_time_s = start.elapsed().as_secs_f64();
                records.push(rec);
            }
        }
        summary.mean_excess.push((gap, worst));

        let (mut pts, mut bad) = (0, 0);
        for j in 0..=40 {
            let lj = k + gap * j as f64 / 40.0;
            let (r, lo, hi) = mhat_band(n, lj, k)?;
            pts += 1;
            bad += usize::from(!(lo <= r && r <= hi));
        }
        summary.band_points += pts;
        summary.band_violations += bad;
    }
    summary.sigma_bounded = bounded(&summary.sigma_dev.iter().map(|x| x.1).collect::<Vec<_>>());
    summary.mean_bounded = bounded(&summary.mean_excess.iter().map(|x| x.1.max(0.0)).collect::<Vec<_>>());
    let footer = vec![format!("deviations may not grow beyond {GROWTH_FACTOR} times the first rung (floor {GROWTH_FLOOR})")];
    let plot = PlotSpec { x: "in:gap".into(), ys: vec!["est:sigma_dev".into(), "est:mean_residual".into()], logscale_y: false };
    Ok(CampaignOutput::new(records, &summary, footer, Some(plot)))
}
