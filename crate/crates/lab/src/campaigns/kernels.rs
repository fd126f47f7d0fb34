//! Potential kernel values, Green function by solve vs the kernel formula, and
//! the ruin estimate `(log|x| − k)/(n − k)` across gaps.

use super::CampaignOutput;
use crate::report::PlotSpec;
use crate::{ExperimentConfig, LabError, ResultRecord};
use dgff_ballot::harmonic::{green_formula, poisson_kernel_with, ruin_asymptotic, ruin_field, GreenOperator};
use dgff_ballot::lattice::{annulus_domain, discretize};
use dgff_ballot::potential::{kernel, potential_integral};
use dgff_ballot::{ContinuumDomain, DiscreteDomain, Shape};
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct KernelsSummary {
    pub a10_error: f64,
    pub a11_error: f64,
    /// Largest `|a − asymptotic expansion|` on `50 ≤ |x| ≤ R0`.
    pub expansion_error: f64,
    pub green_domains: usize,
    pub green_max_rel: f64,
    /// `(n − k, max |ruin − (log|x|−k)/(n−k)| · (n − k))`.
    pub ruin: Vec<(f64, f64)>,
    /// Every ruin deviation within 25% of the first rung.
    pub ruin_stable: bool,
}

/// Domains of at most 2000 points: small clusters, disks, annuli, a lens, a
/// slit disk and a segment.
pub fn green_domains() -> Vec<DiscreteDomain> {
    let b = ContinuumDomain::unit_disk();
    let mut v = vec![
        DiscreteDomain::from_points(vec![[0, 0]]),
        DiscreteDomain::from_points(vec![[0, 0], [1, 0]]),
        DiscreteDomain::from_points(vec![[0, 0], [1, 0], [1, 1], [2, 1], [2, 2]]),
    ];
    for l in [1.0, 2.0, 3.0] {
        v.push(discretize(&b, l).expect("disk"));
    }
    v.push(annulus_domain(&b, 2.5, &b, 0.0).expect("annulus"));
    v.push(annulus_domain(&b, 3.0, &b, 1.0).expect("annulus"));
    let lens = ContinuumDomain::new(Shape::disk([-0.4, 0.0], 1.0).intersect(Shape::disk([0.4, 0.0], 1.0))).expect("lens");
    v.push(discretize(&lens, 2.5).expect("lens"));
    let slit = ContinuumDomain::new(Shape::unit_disk().intersect(Shape::disk([0.6, 0.0], 0.3).complement())).expect("slit");
    v.push(discretize(&slit, 3.0).expect("slit"));
    v.push(DiscreteDomain::from_points((0..30).map(|i| [i, 0]).collect()));
    v
}

/// Largest `|G_solve − G_formula| / (1 + |G_solve|)` over a few point pairs.
pub fn green_discrepancy(d: &DiscreteDomain, tol: &dgff_ballot::solver::SolverTolerances) -> Result<f64, LabError> {
    let g = GreenOperator::new(d, tol)?;
    let pts = d.points();
    let picks = [0, pts.len() / 3, pts.len() / 2, pts.len() - 1];
    let mut worst: f64 = 0.0;
    for &i in &picks {
        let pk = poisson_kernel_with(g.solver(), pts[i])?;
        for &j in &picks {
            let a = g.green(pts[i], pts[j])?;
            worst = worst.max((a - green_formula(&pk, pts[i], pts[j])).abs() / (1.0 + a.abs()));
        }
    }
    Ok(worst)
}

/// `max_x |P_x(τ^{B_n} ≤ τ^{B^-_k}) − (log|x| − k)/(n − k)| · (n − k)` over the whole annulus.
pub fn ruin_deviation(k: f64, gap: f64, tol: &dgff_ballot::solver::SolverTolerances) -> Result<(f64, &'static str), LabError> {
    let b = ContinuumDomain::unit_disk();
    let f = ruin_field(&b, k + gap, &b, k, tol)?;
    let dev = f.domain.points().iter().zip(&f.values).map(|(x, v)| (v - ruin_asymptotic(*x, k + gap, k)).abs()).fold(0.0, f64::max);
    Ok((dev * gap, f.method))
}

pub fn run(cfg: &ExperimentConfig) -> Result<CampaignOutput, LabError> {
    let (kind, hash, tol) = (cfg.kind, cfg.hash(), &cfg.solver);
    let mut records = Vec::new();
    let new = |records: &Vec<ResultRecord>, label: String| ResultRecord::new(kind.name(), &hash, records.len(), cfg.seed, format!("{}/{label}", kind.name()));

    let start = Instant::now();
    let a10 = potential_integral([1, 0]);
    let a11 = potential_integral([1, 1]);
    let expansion_error = kernel().overlap_error(50.0);
    let mut rec = new(&records, "potential".into()).input("what", "potential");
    rec.est("a10", a10);
    rec.est("a11", a11);
    rec.est("a10_error", (a10 - 1.0).abs());
    rec.est("a11_error", (a11 - 4.0 / PI).abs());
    rec.est("expansion_error", expansion_error);
    rec.wall_time_s = start.elapsed().as_secs_f64();
    records.push(rec);

    let mut green_max: f64 = 0.0;
    let domains = green_domains();
    for (i, d) in domains.iter().enumerate() {
        let start = Instant::now();
        let err = green_discrepancy(d, tol)?;
        green_max = green_max.max(err);
        let mut rec = new(&records, format!("green/{i}")).input("what", "green").input("domain", i).input("sites", d.len());
        rec.est("green_rel_error", err);
        rec.wall_time_s = start.elapsed().as_secs_f64();
        records.push(rec);
    }

    let mut ruin = Vec::new();
    for &gap in &cfg.gaps {
        let start = Instant::now();
        let (dev, method) = ruin_deviation(cfg.k, gap, tol)?;
        let mut rec = new(&records, format!("ruin/gap={gap}")).input("what", "ruin").input("gap", gap).input("k", cfg.k).input("solver", method);
        rec.est("ruin_dev_scaled", dev);
        rec.wall_time_s = start.elapsed().as_secs_f64();
        records.push(rec);
        ruin.push((gap, dev));
    }
    let first = ruin.first().map(|r| r.1).unwrap_or(0.0);
    let summary = KernelsSummary {
        a10_error: (a10 - 1.0).abs(),
        a11_error: (a11 - 4.0 / PI).abs(),
        expansion_error,
        green_domains: domains.len(),
        green_max_rel: green_max,
        ruin_stable: ruin.iter().all(|r| (r.1 - first).abs() <= 0.25 * first),
        ruin,
    };
    let plot = PlotSpec { x: "in:gap".into(), ys: vec!["est:ruin_dev_scaled".into()], logscale_y: false };
    Ok(CampaignOutput::new(records, &summary, vec![], Some(plot)))
}
