//! Monte-Carlo estimators of the field ballot probability and of the
//! boundary functionals `L_n(u)` and `R_k(v)`.

use crate::gff::{build_model, AnnulusSpec, BoundarySpec, GffError, GffModel};
use crate::harmonic::{poisson_kernel, poisson_kernel_at_infinity, PoissonKernel};
use crate::lattice::{DiscreteDomain, LatticeSet};
use crate::provenance::config_hash;
use crate::scales::m_scale;
use crate::solver::SolverTolerances;
use crate::stats::{Interval, MeanVar, Proportion, Z95};
use crate::ContinuumDomain;
use serde::{Deserialize, Serialize};

pub use crate::scales::r_sequence;

#[derive(Debug, thiserror::Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Gff(#[from] GffError),
    #[error("geometry violation: {0}")]
    Geometry(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Inputs of [`estimate_ballot`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallotConfig {
    pub annulus: AnnulusSpec,
    pub u: BoundarySpec,
    pub v: BoundarySpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallotEstimate {
    pub probability: Proportion,
    pub trials: u64,
    pub bulk_sites: usize,
    pub config_hash: String,
    pub warnings: Vec<String>,
}

/// Frequency of `{h ≤ 0 on U^η_n ∩ V^{-,ζ}_k}`.
pub fn estimate_ballot(cfg: &BallotConfig, trials: u64, master: u64, row: u64, tol: &SolverTolerances) -> Result<BallotEstimate, FunctionalError> {
    let (model, data) = build_model(&cfg.annulus, &cfg.u, &cfg.v, tol)?;
    estimate_ballot_with(cfg, &model, data.warnings, trials, master, row)
}

/// [`estimate_ballot`] on a prebuilt model of `cfg`.
pub fn estimate_ballot_with(cfg: &BallotConfig, model: &GffModel, warnings: Vec<String>, trials: u64, master: u64, row: u64) -> Result<BallotEstimate, FunctionalError> {
    let bulk = cfg.annulus.bulk_domain()?;
    if bulk.is_empty() {
        return Err(FunctionalError::Geometry("empty bulk U^η_n ∩ V^{-,ζ}_k".into()));
    }
    let probe = Probe::indicator_only(model, &bulk);
    let hits = model.map_centered(master, row, 0..trials, |_, h| probe.indicator(h))?;
    Ok(BallotEstimate {
        probability: Proportion::from_flags(&hits),
        trials,
        bulk_sites: bulk.len(),
        config_hash: config_hash(cfg),
        warnings,
    })
}

/// `(Σ_z π(z) h(z) + m_ℓ)^- · 1{h ≤ 0 on the check set}`, with the mean
/// contribution folded in ahead of sampling.
#[derive(Clone, Debug)]
struct Probe {
    weights: Vec<(usize, f64)>,
    offset: f64,
    check: Vec<(usize, f64)>,
}

impl Probe {
    fn indicator_only(model: &GffModel, set: &DiscreteDomain) -> Probe {
        let mean = model.mean();
        let check = set.points().iter().filter_map(|p| model.domain().index_of(*p)).map(|i| (i, mean[i])).collect();
        Probe { weights: Vec::new(), offset: 0.0, check }
    }

    fn new(model: &GffModel, kernel: &PoissonKernel, level: f64, set: &DiscreteDomain) -> Result<Probe, FunctionalError> {
        let mut p = Probe::indicator_only(model, set);
        let (d, bd, mean) = (model.domain(), model.boundary(), model.mean());
        p.offset = m_scale(level);
        for (z, w) in kernel.support.iter().zip(&kernel.mass) {
            if let Some(i) = d.index_of(*z) {
                p.weights.push((i, *w));
                p.offset += w * mean[i];
            } else if let Some(j) = bd.index_of(*z) {
                p.offset += w * model.boundary_values()[j];
            } else {
                return Err(FunctionalError::Geometry(format!("averaging point {z:?} outside the closure of the domain")));
            }
        }
        Ok(p)
    }

    fn indicator(&self, h: &[f64]) -> bool {
        self.check.iter().all(|(i, mu)| h[*i] + mu <= 0.0)
    }

    fn value(&self, h: &[f64]) -> f64 {
        if !self.indicator(h) {
            return 0.0;
        }
        let avg: f64 = self.offset + self.weights.iter().map(|(i, w)| w * h[*i]).sum::<f64>();
        (-avg).max(0.0)
    }
}

/// One point of a convergence trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub r: i64,
    pub n: f64,
    pub value: f64,
    pub std_error: f64,
    pub ci: Interval,
}

/// Estimate of `L_n(u)` or of a ladder approximation to `R_k(v)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci: Interval,
    pub r: i64,
    pub n: f64,
    /// First rung of the ladder for `R_k`.
    pub inner_n: Option<f64>,
    pub trace: Vec<TracePoint>,
    /// Last two ladder rungs within their combined 95% band.
    pub stabilized: Option<bool>,
    /// First-order Richardson extrapolant in `1/(n − k)` from the last two
    /// rungs, with its standard error. A diagnostic, not a limit value.
    pub extrapolated: Option<(f64, f64)>,
    pub trials: u64,
    pub config_hash: String,
}

fn point(r: i64, n: f64, xs: &[f64]) -> TracePoint {
    let mv = MeanVar::from_slice(xs);
    let s = mv.summary();
    TracePoint { r, n, value: s.mean, std_error: s.std_error, ci: s.ci }
}

/// Inputs of [`estimate_l`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LConfig {
    pub u: ContinuumDomain,
    pub n: f64,
    pub u_data: BoundarySpec,
    #[serde(default)]
    pub eta: f64,
    pub eps: f64,
    /// Defaults to [`r_sequence`]`(n)`.
    #[serde(default)]
    pub r: Option<i64>,
}

impl LConfig {
    pub fn r(&self) -> i64 {
        self.r.unwrap_or_else(|| r_sequence(self.n))
    }

    /// `U_n ∩ B^-_0`.
    fn annulus(&self) -> AnnulusSpec {
        AnnulusSpec { u: self.u.clone(), n: self.n, v: ContinuumDomain::unit_disk(), k: 0.0, eta: self.eta, zeta: 0.0, eps: self.eps }
    }
}

fn ball_set(level: f64) -> Result<LatticeSet, FunctionalError> {
    Ok(LatticeSet::scaled(&ContinuumDomain::unit_disk(), level).map_err(GffError::from)?)
}

fn exterior_set(level: f64) -> Result<LatticeSet, FunctionalError> {
    Ok(LatticeSet::scaled(&ContinuumDomain::unit_disk().complement(), level).map_err(GffError::from)?)
}

/// `Π_{B_ℓ}(0,·)`, carried by `∂B_ℓ`.
pub fn origin_kernel(level: f64) -> Result<PoissonKernel, FunctionalError> {
    let ball = ball_set(level)?.to_domain(Some(level)).map_err(GffError::from)?;
    Ok(poisson_kernel(&ball, [0, 0]).map_err(GffError::from)?)
}

/// `Π_{B^-_ℓ}(∞,·)`, carried by `∂B^-_ℓ`.
pub fn infinity_kernel(level: f64) -> Result<PoissonKernel, FunctionalError> {
    let hole = exterior_set(level)?.not().to_domain(Some(level)).map_err(GffError::from)?;
    Ok(poisson_kernel_at_infinity(&hole).map_err(GffError::from)?)
}

fn check_support(kernel: &PoissonKernel, carrier: &DiscreteDomain, what: &str) -> Result<(), FunctionalError> {
    match kernel.support.iter().find(|z| !carrier.contains(**z)) {
        Some(z) => Err(FunctionalError::Geometry(format!("{what}: {z:?} not in the required region"))),
        None => Ok(()),
    }
}

/// The `L_n` model: `−m_n + u` on `∂U_n` and `ū(0)` on `∂B^-_0`.
pub fn l_model(cfg: &LConfig, tol: &SolverTolerances) -> Result<(GffModel, f64), FunctionalError> {
    let spec = cfg.annulus();
    let zero = BoundarySpec::zero();
    let data = crate::gff::boundary_data(&spec, &cfg.u_data, &zero, tol)?;
    let (model, _) = build_model(&spec, &cfg.u_data, &BoundarySpec::constant(data.u_bar_0), tol)?;
    Ok((model, data.u_bar_0))
}

/// `E((h̄_{B_{n−r}}(0) + m_{n−r})^- ; h ≤ 0 on U^η_n ∩ B^-_{n−r})`, with every
/// `r` in `extra_rs` evaluated on the same samples.
pub fn estimate_l(cfg: &LConfig, extra_rs: &[i64], trials: u64, master: u64, row: u64, tol: &SolverTolerances) -> Result<FunctionalEstimate, FunctionalError> {
    let (model, _) = l_model(cfg, tol)?;
    estimate_l_with(cfg, &model, extra_rs, trials, master, row)
}

/// [`estimate_l`] on a prebuilt [`l_model`].
pub fn estimate_l_with(cfg: &LConfig, model: &GffModel, extra_rs: &[i64], trials: u64, master: u64, row: u64) -> Result<FunctionalEstimate, FunctionalError> {
    if trials < 2 {
        return Err(FunctionalError::Params("need at least 2 trials".into()));
    }
    let spec = cfg.annulus();
    let bulk = model.domain().filter(&spec.u_bulk()?);
    let mut rs = vec![cfg.r()];
    rs.extend(extra_rs.iter().copied().filter(|r| *r != cfg.r()));
    let mut probes = Vec::new();
    for &r in &rs {
        let level = cfg.n - r as f64;
        if r < 1 || level < 0.0 {
            return Err(FunctionalError::Params(format!("need 1 <= r <= n, got r = {r}")));
        }
        let kernel = origin_kernel(level)?;
        check_support(&kernel, &bulk, "∂B_{n−r} ⊄ U^η_n")?;
        let check = bulk.filter(&exterior_set(level)?);
        probes.push(Probe::new(model, &kernel, level, &check)?);
    }
    let vals = model.map_centered(master, row, 0..trials, |_, h| probes.iter().map(|p| p.value(h)).collect::<Vec<f64>>())?;
    let trace: Vec<TracePoint> = rs.iter().enumerate().map(|(j, r)| point(*r, cfg.n, &vals.iter().map(|v| v[j]).collect::<Vec<_>>())).collect();
    let head = trace[0];
    Ok(FunctionalEstimate {
        value: head.value,
        std_error: head.std_error,
        ci: head.ci,
        r: head.r,
        n: cfg.n,
        inner_n: None,
        trace,
        stabilized: None,
        extrapolated: None,
        trials,
        config_hash: config_hash(cfg),
    })
}

/// Inputs of [`estimate_r`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RConfig {
    pub v: ContinuumDomain,
    pub k: f64,
    pub v_data: BoundarySpec,
    #[serde(default)]
    pub zeta: f64,
    pub eps: f64,
    /// Defaults to [`r_sequence`]`(n − k)` on each rung.
    #[serde(default)]
    pub r: Option<i64>,
}

impl RConfig {
    pub fn r_at(&self, n: f64) -> i64 {
        self.r.unwrap_or_else(|| r_sequence(n - self.k))
    }

    pub fn annulus(&self, n: f64) -> AnnulusSpec {
        AnnulusSpec { u: ContinuumDomain::unit_disk(), n, v: self.v.clone(), k: self.k, eta: 0.0, zeta: self.zeta, eps: self.eps }
    }
}

/// One rung of the `R_k` ladder at outer scale `n`, with `u ≡ 0`.
pub fn estimate_r_rung(cfg: &RConfig, n: f64, trials: u64, master: u64, row: u64, tol: &SolverTolerances) -> Result<TracePoint, FunctionalError> {
    if trials < 2 {
        return Err(FunctionalError::Params("need at least 2 trials".into()));
    }
    let spec = cfg.annulus(n);
    let (model, _) = build_model(&spec, &BoundarySpec::zero(), &cfg.v_data, tol)?;
    let r = cfg.r_at(n);
    let level = cfg.k + r as f64;
    if r < 1 || level > n {
        return Err(FunctionalError::Params(format!("need 1 <= r <= n − k, got r = {r}")));
    }
    let bulk = model.domain().filter(&spec.v_bulk()?);
    let kernel = infinity_kernel(level)?;
    check_support(&kernel, &bulk, "∂B^-_{k+r} ⊄ V^{-,ζ}_k")?;
    let check = bulk.filter(&ball_set(level)?);
    let probe = Probe::new(&model, &kernel, level, &check)?;
    let vals = model.map_centered(master, row, 0..trials, |_, h| probe.value(h))?;
    Ok(point(r, n, &vals))
}

/// `R_k(v)` along an increasing ladder of `n`; rung `i` uses seed row `row + i`.
pub fn estimate_r(cfg: &RConfig, n_ladder: &[f64], trials: u64, master: u64, row: u64, tol: &SolverTolerances) -> Result<FunctionalEstimate, FunctionalError> {
    if n_ladder.is_empty() || n_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FunctionalError::Params("n ladder must be nonempty and increasing".into()));
    }
    let trace = n_ladder
        .iter()
        .enumerate()
        .map(|(i, n)| estimate_r_rung(cfg, *n, trials, master, row + i as u64, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let last = *trace.last().expect("nonempty ladder");
    let prev = (trace.len() >= 2).then(|| trace[trace.len() - 2]);
    let stabilized = prev.map(|p| (last.value - p.value).abs() <= Z95 * (last.std_error.powi(2) + p.std_error.powi(2)).sqrt());
    let extrapolated = prev.map(|p| {
        let (a, b) = (p.n - cfg.k, last.n - cfg.k);
        let v = (b * last.value - a * p.value) / (b - a);
        let se = ((b * last.std_error).powi(2) + (a * p.std_error).powi(2)).sqrt() / (b - a);
        (v, se)
    });
    Ok(FunctionalEstimate {
        value: last.value,
        std_error: last.std_error,
        ci: last.ci,
        r: last.r,
        n: last.n,
        inner_n: Some(n_ladder[0]),
        trace,
        stabilized,
        extrapolated,
        trials,
        config_hash: config_hash(&(cfg, n_ladder)),
    })
}

/// Linear maps from values `w` on `∂B^±_l = ∂B_l ∪ ∂B^-_l` to `w̄(0)` and to
/// the oscillation of `w̄` over `B^{±,ε}_l`. By the maximum principle the
/// oscillation is read off the boundary layers of the two bulk pieces and `∞`.
#[derive(Clone, Debug)]
pub struct RingOperator {
    pub level: f64,
    pub eps: f64,
    pub ring: DiscreteDomain,
    origin: Vec<(usize, f64)>,
    rows: Vec<Vec<(usize, f64)>>,
}

fn sparse_row(carrier: &DiscreteDomain, ring: &DiscreteDomain, dense: &[f64]) -> Vec<(usize, f64)> {
    carrier.points().iter().zip(dense).filter(|(_, w)| **w != 0.0).map(|(z, w)| (ring.index_of(*z).expect("carrier inside ring"), *w)).collect()
}

impl RingOperator {
    pub fn new(level: f64, eps: f64, tol: &SolverTolerances) -> Result<RingOperator, FunctionalError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(FunctionalError::Params(format!("ε = {eps} not in (0,1)")));
        }
        let g = |e: crate::lattice::LatticeError| FunctionalError::from(GffError::from(e));
        let p = |e: crate::harmonic::PotentialError| FunctionalError::from(GffError::from(e));
        let ball = ball_set(level)?.to_domain(Some(level)).map_err(g)?;
        let inner_carrier = ball.outer_boundary();
        let hole = exterior_set(level)?.not().to_domain(Some(level)).map_err(g)?;
        let outer_carrier = DiscreteDomain::from_points(crate::harmonic::inner_layer(&hole));
        let ring = inner_carrier.union(&outer_carrier);
        let origin = origin_kernel(level)?;
        let origin = origin.support.iter().zip(&origin.mass).map(|(z, w)| (ring.index_of(*z).expect("kernel on ∂B_l"), *w)).collect();
        let mut rows = Vec::new();
        let bulk_in = LatticeSet::scaled(&ContinuumDomain::unit_disk().bulk(eps).map_err(GffError::from)?, level).map_err(g)?.to_domain(Some(level)).map_err(g)?;
        if !bulk_in.is_empty() {
            let solver = crate::solver::LaplaceSolver::new(&ball, tol).map_err(GffError::from)?;
            for x in crate::harmonic::inner_layer(&bulk_in) {
                let k = crate::harmonic::poisson_kernel_with(&solver, x).map_err(p)?;
                rows.push(k.support.iter().zip(&k.mass).filter(|(_, w)| **w != 0.0).map(|(z, w)| (ring.index_of(*z).expect("kernel on ∂B_l"), *w)).collect());
            }
        }
        let ext_bulk = LatticeSet::scaled(&ContinuumDomain::unit_disk().complement().bulk(eps).map_err(GffError::from)?, level).map_err(g)?;
        let layer = ext_bulk.not().to_domain(Some(level)).map_err(g)?.outer_boundary();
        let (ext_rows, inf) = crate::harmonic::extension_operator(&outer_carrier, layer.points()).map_err(p)?;
        rows.extend(ext_rows.iter().map(|r| sparse_row(&outer_carrier, &ring, r)));
        rows.push(sparse_row(&outer_carrier, &ring, &inf));
        Ok(RingOperator { level, eps, ring, origin, rows })
    }

    /// `w̄(0)`.
    pub fn average(&self, w: &[f64]) -> f64 {
        self.origin.iter().map(|(i, c)| c * w[*i]).sum()
    }

    /// `osc_{B^{±,ε}_l} w̄`.
    pub fn oscillation(&self, w: &[f64]) -> f64 {
        let (lo, hi) = self.rows.iter().map(|r| r.iter().map(|(i, c)| c * w[*i]).sum::<f64>()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo <= hi {
            hi - lo
        } else {
            0.0
        }
    }

    /// Ring values of `h` (on `D`) completed by the boundary data of `model`.
    pub fn gather(&self, model: &GffModel, h: &[f64]) -> Result<Vec<f64>, FunctionalError> {
        let (d, bd) = (model.domain(), model.boundary());
        self.ring
            .points()
            .iter()
            .map(|z| {
                d.index_of(*z)
                    .map(|i| h[i])
                    .or_else(|| bd.index_of(*z).map(|j| model.boundary_values()[j]))
                    .ok_or_else(|| FunctionalError::Geometry(format!("ring point {z:?} outside the closure of the domain")))
            })
            .collect()
    }
}

/// Membership of `w = h_{∂B^±_l} + m_l` in `E_{l,M,ε}`:
/// `−Λ^{1−ε} ≤ w̄(0) ≤ −Λ^ε` and `osc w̄ ≤ M`, `Λ = (n−l) ∧ (l−k)`.
pub fn in_e_set(avg: f64, osc: f64, lambda: f64, m: f64, eps: f64) -> bool {
    -lambda.powf(1.0 - eps) <= avg && avg <= -lambda.powf(eps) && osc <= m
}
