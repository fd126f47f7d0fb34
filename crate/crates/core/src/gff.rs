//! The discrete Gaussian free field `h^{D,w}` on a finite domain with
//! Dirichlet data, its exact sampler, and the Gibbs–Markov split.
//!
//! Draws use the edge factorization `L_D = EᵀE`, where `E` has one row per
//! nearest-neighbour edge with at least one endpoint in `D`. With
//! `w ~ N(0, I)` over edges, `L_D^{-1}(2Eᵀw)` has covariance
//! `4 L_D^{-1} = G_D`. Trial `t` of row `r` under master seed `s` always
//! consumes the stream `(s, r, t)`, so results do not depend on batching or
//! thread count.

use crate::harmonic::{inner_layer, GreenOperator, HarmonicExtension, PotentialError};
use crate::lattice::{add, annulus_domain, check_class, DiscreteDomain, DomainClass, DomainClassParams, LatticeError, LatticeSet, Point, NEIGHBORS};
use crate::scales::{m_scale, t_count};
use crate::seeds::StreamId;
use crate::shape::{ContinuumDomain, Shape, ShapeError};
use crate::solver::{LaplaceSolver, SolverError, SolverTolerances};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::sync::Arc;

/// Trials per factorized block solve.
pub const SAMPLE_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GffError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("subdomain not contained")]
    NotContained,
    #[error("invalid boundary data: {0}")]
    Boundary(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Boundary data on a carrier at scale `ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant { value: f64 },
    /// Per-vertex values; vertices not listed take `default`.
    Table { points: Vec<Point>, values: Vec<f64>, default: f64 },
    /// `c + g · e^{-ℓ} x`, harmonic on `Z²`.
    Affine { c: f64, gradient: [f64; 2] },
    /// `inside` on `e^{-ℓ}x ∈ shape`, `outside` elsewhere.
    Piecewise { shape: Shape, inside: f64, outside: f64 },
}

impl BoundarySpec {
    pub fn constant(value: f64) -> BoundarySpec {
        BoundarySpec::Constant { value }
    }

    pub fn zero() -> BoundarySpec {
        Self::constant(0.0)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BoundarySpec::Constant { .. })
    }

    pub fn validate(&self) -> Result<(), GffError> {
        let finite = |v: f64| v.is_finite();
        let ok = match self {
            BoundarySpec::Constant { value } => finite(*value),
            BoundarySpec::Table { points, values, default } => points.len() == values.len() && values.iter().all(|v| finite(*v)) && finite(*default),
            BoundarySpec::Affine { c, gradient } => finite(*c) && gradient.iter().all(|v| finite(*v)),
            BoundarySpec::Piecewise { shape, inside, outside } => shape.validate().is_ok() && finite(*inside) && finite(*outside),
        };
        if ok {
            Ok(())
        } else {
            Err(GffError::Boundary(format!("{self:?}")))
        }
    }

    /// Values on `carrier` for data attached at scale `level`.
    pub fn values(&self, carrier: &DiscreteDomain, level: f64) -> Result<Vec<f64>, GffError> {
        self.validate()?;
        let s = (-level).exp();
        let pts = carrier.points();
        Ok(match self {
            BoundarySpec::Constant { value } => vec![*value; pts.len()],
            BoundarySpec::Table { points, values, default } => {
                let map: std::collections::HashMap<Point, f64> = points.iter().copied().zip(values.iter().copied()).collect();
                pts.iter().map(|p| map.get(p).copied().unwrap_or(*default)).collect()
            }
            BoundarySpec::Affine { c, gradient } => pts.iter().map(|p| c + s * (gradient[0] * p[0] as f64 + gradient[1] * p[1] as f64)).collect(),
            BoundarySpec::Piecewise { shape, inside, outside } => {
                let w = ContinuumDomain::new(shape.clone())?;
                pts.iter().map(|p| if w.contains([s * p[0] as f64, s * p[1] as f64]) { *inside } else { *outside }).collect()
            }
        })
    }
}

/// `U_n ∩ V^-_k` with bulk parameters and the class parameter `ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub u: ContinuumDomain,
    pub n: f64,
    pub v: ContinuumDomain,
    pub k: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub zeta: f64,
    pub eps: f64,
}

impl AnnulusSpec {
    /// `U = V = B`.
    pub fn ball(n: f64, k: f64, eps: f64) -> AnnulusSpec {
        AnnulusSpec { u: ContinuumDomain::unit_disk(), n, v: ContinuumDomain::unit_disk(), k, eta: 0.0, zeta: 0.0, eps }
    }

    pub fn with_bulk(mut self, eta: f64, zeta: f64) -> AnnulusSpec {
        self.eta = eta;
        self.zeta = zeta;
        self
    }

    pub fn validate(&self) -> Result<(), GffError> {
        DomainClassParams::new(self.eps, self.eta, self.zeta)?;
        if !(self.n.is_finite() && self.k.is_finite() && self.k >= 0.0 && self.n >= self.k) {
            return Err(GffError::Params(format!("need 0 <= k <= n, got n = {}, k = {}", self.n, self.k)));
        }
        Ok(())
    }

    /// `U_n`.
    pub fn u_n(&self) -> Result<LatticeSet, GffError> {
        Ok(LatticeSet::scaled(&self.u, self.n)?)
    }

    /// `U^η_n`.
    pub fn u_bulk(&self) -> Result<LatticeSet, GffError> {
        Ok(LatticeSet::scaled(&self.u.bulk(self.eta)?, self.n)?)
    }

    /// `V^-_k`.
    pub fn v_minus(&self) -> Result<LatticeSet, GffError> {
        Ok(LatticeSet::scaled(&self.v.complement(), self.k)?)
    }

    /// `V^{-,ζ}_k`.
    pub fn v_bulk(&self) -> Result<LatticeSet, GffError> {
        Ok(LatticeSet::scaled(&self.v.complement().bulk(self.zeta)?, self.k)?)
    }

    /// `U_n ∩ V^-_k`.
    pub fn domain(&self) -> Result<DiscreteDomain, GffError> {
        Ok(annulus_domain(&self.u, self.n, &self.v, self.k)?)
    }

    /// `U^η_n ∩ V^{-,ζ}_k`, where the ballot event is imposed.
    pub fn bulk_domain(&self) -> Result<DiscreteDomain, GffError> {
        Ok(self.u_bulk()?.and(self.v_bulk()?).to_domain(Some(self.n))?)
    }

    pub fn t(&self) -> Result<i64, GffError> {
        t_count(self.n, self.k, self.eps, self.zeta).map_err(|e| GffError::Params(e.to_string()))
    }

    /// Class-membership warnings for `U ∈ 𝔘^η_ε` and `V ∈ 𝔙_ε`.
    pub fn class_warnings(&self) -> Vec<String> {
        let Ok(p) = DomainClassParams::new(self.eps, self.eta, self.zeta) else {
            return vec!["invalid class parameters".into()];
        };
        let mut out = Vec::new();
        for (name, w, which) in [("U", &self.u, DomainClass::U), ("V", &self.v, DomainClass::V)] {
            let c = check_class(w, &p, which);
            out.extend(c.reasons.iter().map(|r| format!("{name}: {r}")));
        }
        out
    }
}

/// Harmonic bookkeeping of the boundary data `u` on `∂U_n` and `v` on `∂V^-_k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryData {
    pub u_bar_0: f64,
    pub v_bar_inf: f64,
    pub osc_u_eta: f64,
    pub osc_v_zeta: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub warnings: Vec<String>,
}

impl BoundaryData {
    fn finish(u_bar_0: f64, v_bar_inf: f64, osc_u_eta: f64, osc_v_zeta: f64, warnings: Vec<String>) -> BoundaryData {
        BoundaryData {
            u_bar_0,
            v_bar_inf,
            osc_u_eta,
            osc_v_zeta,
            u_star: u_bar_0 - 2.0 * osc_u_eta,
            v_star: v_bar_inf - 2.0 * osc_v_zeta,
            warnings,
        }
    }

    /// `(1 + ū(0)^-)(1 + v̄(∞)^-) <= (n − k)^{1−ε}` together with the
    /// `ε^{-1}` caps.
    pub fn admissible(&self, n_minus_k: f64, eps: f64) -> bool {
        let cap = [self.u_bar_0, self.v_bar_inf, self.osc_u_eta, self.osc_v_zeta].iter().all(|x| *x <= 1.0 / eps);
        let neg = |x: f64| (-x).max(0.0);
        cap && (1.0 + neg(self.u_bar_0)) * (1.0 + neg(self.v_bar_inf)) <= n_minus_k.powf(1.0 - eps)
    }
}

/// `max − min`, or `None` for an empty iterator.
fn spread(it: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = it.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    (lo <= hi).then_some(hi - lo)
}

/// Computes `ū(0)`, `v̄(∞)`, the bulk oscillations and `u_*`, `v_*`.
pub fn boundary_data(spec: &AnnulusSpec, u: &BoundarySpec, v: &BoundarySpec, tol: &SolverTolerances) -> Result<BoundaryData, GffError> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let un = spec.u_n()?.to_domain(Some(spec.n))?;
    if un.is_empty() {
        return Err(GffError::Lattice(LatticeError::DegenerateAnnulus));
    }
    let du = un.outer_boundary();
    let uvals = u.values(&du, spec.n)?;
    let u_bulk = spec.u_bulk()?.to_domain(Some(spec.n))?;
    let (u_bar_0, osc_u) = if let BoundarySpec::Constant { value } = u {
        (*value, 0.0)
    } else {
        let solver = LaplaceSolver::new(&un, tol)?;
        let ubar = solver.dirichlet(|z| du.index_of(z).map(|i| uvals[i]).unwrap_or(0.0))?;
        let at = |p: Point| un.index_of(p).map(|i| ubar[i]).or_else(|| du.index_of(p).map(|i| uvals[i])).unwrap_or(0.0);
        let u0 = at([0, 0]);
        (u0, spread(u_bulk.points().iter().map(|p| at(*p))).unwrap_or(0.0))
    };
    if u_bulk.is_empty() {
        warnings.push("U^η_n is empty; osc ū_η set to 0".to_string());
    }
    let hole = spec.v_minus()?.not().to_domain(Some(spec.k))?;
    let (v_bar_inf, osc_v) = if hole.is_empty() {
        return Err(GffError::Lattice(LatticeError::DegenerateAnnulus));
    } else {
        let dv = DiscreteDomain::from_points(inner_layer(&hole));
        let vvals = v.values(&dv, spec.k)?;
        let ext = HarmonicExtension::from_values(&dv, vvals)?;
        let complement = spec.v_bulk()?.not().to_domain(Some(spec.k))?;
        if ext.is_constant() {
            (ext.at_infinity(), 0.0)
        } else {
            let layer = complement.outer_boundary();
            let o = spread(layer.points().iter().map(|p| ext.eval(*p)).chain([ext.at_infinity()])).unwrap_or(0.0);
            (ext.at_infinity(), o)
        }
    };
    Ok(BoundaryData::finish(u_bar_0, v_bar_inf, osc_u, osc_v, warnings))
}

/// Edge incidence list of `E`: `(i, Some(j))` for interior edges, `(i, None)`
/// for edges leaving `D`.
#[derive(Debug)]
struct Edges {
    list: Vec<(u32, Option<u32>)>,
}

impl Edges {
    fn new(d: &DiscreteDomain) -> Edges {
        let mut list = Vec::with_capacity(2 * d.len() + 4);
        for (i, p) in d.points().iter().enumerate() {
            for dir in NEIGHBORS {
                match d.index_of(add(*p, dir)) {
                    Some(j) => {
                        if dir == [1, 0] || dir == [0, 1] {
                            list.push((i as u32, Some(j as u32)));
                        }
                    }
                    None => list.push((i as u32, None)),
                }
            }
        }
        Edges { list }
    }

    /// Writes `2Eᵀw` into `b` for fresh `w ~ N(0, I)`.
    fn draw_rhs(&self, rng: &mut impl Rng, b: &mut [f64]) {
        b.iter_mut().for_each(|x| *x = 0.0);
        for (i, j) in &self.list {
            let w: f64 = rng.sample(StandardNormal);
            let w2 = 2.0 * w;
            b[*i as usize] += w2;
            if let Some(j) = j {
                b[*j as usize] -= w2;
            }
        }
    }
}

/// `h^{D,w}`: mean `w̄` (harmonic extension of the data on `∂D`),
/// covariance `G_D`.
pub struct GffModel {
    domain: DiscreteDomain,
    boundary: DiscreteDomain,
    boundary_values: Vec<f64>,
    mean: Vec<f64>,
    solver: Arc<LaplaceSolver>,
    green: GreenOperator,
    edges: Edges,
}

impl std::fmt::Debug for GffModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GffModel").field("sites", &self.domain.len()).field("boundary", &self.boundary.len()).finish()
    }
}

impl GffModel {
    /// Model on `domain` with boundary values `w` on `∂D`.
    pub fn new(domain: &DiscreteDomain, w: impl Fn(Point) -> f64, tol: &SolverTolerances) -> Result<GffModel, GffError> {
        let solver = Arc::new(LaplaceSolver::new(domain, tol)?);
        Self::with_solver(solver, w)
    }

    /// Reuses an existing factorization of `L_D`.
    pub fn with_solver(solver: Arc<LaplaceSolver>, w: impl Fn(Point) -> f64) -> Result<GffModel, GffError> {
        let domain = solver.domain().clone();
        let boundary = domain.outer_boundary();
        let boundary_values: Vec<f64> = boundary.points().iter().map(|p| w(*p)).collect();
        if boundary_values.iter().any(|v| !v.is_finite()) {
            return Err(GffError::Boundary("non-finite boundary value".into()));
        }
        let bv = |p: Point| boundary.index_of(p).map(|i| boundary_values[i]).unwrap_or(0.0);
        let mean = if boundary_values.iter().all(|v| *v == 0.0) { vec![0.0; domain.len()] } else { solver.dirichlet(bv)? };
        let edges = Edges::new(&domain);
        let green = GreenOperator::from_solver(solver.clone());
        Ok(GffModel { domain, boundary, boundary_values, mean, solver, green, edges })
    }

    pub fn zero_boundary(domain: &DiscreteDomain, tol: &SolverTolerances) -> Result<GffModel, GffError> {
        Self::new(domain, |_| 0.0, tol)
    }

    /// Same covariance, new boundary data.
    pub fn with_boundary(&self, w: impl Fn(Point) -> f64) -> Result<GffModel, GffError> {
        Self::with_solver(self.solver.clone(), w)
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn boundary(&self) -> &DiscreteDomain {
        &self.boundary
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary_values
    }

    /// `w̄` on `D`.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `w̄` on `D̄`.
    pub fn mean_at(&self, p: Point) -> Option<f64> {
        self.domain.index_of(p).map(|i| self.mean[i]).or_else(|| self.boundary.index_of(p).map(|i| self.boundary_values[i]))
    }

    pub fn solver(&self) -> &Arc<LaplaceSolver> {
        &self.solver
    }

    pub fn green(&self) -> &GreenOperator {
        &self.green
    }

    fn batch_len(&self) -> usize {
        if self.solver.method() == "mg-pcg" {
            1
        } else {
            SAMPLE_BATCH
        }
    }

    /// Centered draws for `trials`, handed to `f(trial, values)` in batches;
    /// results are returned in trial order.
    fn batches_impl<R: Send>(&self, master: u64, row: u64, trials: Range<u64>, centered: bool, f: &(dyn Fn(u64, &[f64], usize) -> R + Sync)) -> Result<Vec<R>, GffError> {
        let n = self.domain.len();
        let bl = self.batch_len() as u64;
        let starts: Vec<u64> = (trials.start..trials.end).step_by(bl as usize).collect();
        starts
            .into_par_iter()
            .map(|s| {
                let e = (s + bl).min(trials.end);
                let m = (e - s) as usize;
                let mut buf = vec![0.0; n * m];
                for (c, t) in (s..e).enumerate() {
                    let mut rng = StreamId::new(master, row, t).rng();
                    self.edges.draw_rhs(&mut rng, &mut buf[c * n..(c + 1) * n]);
                }
                if n > 0 {
                    self.solver.solve_block_in_place(&mut buf, m)?;
                }
                if !centered {
                    for col in buf.chunks_mut(n.max(1)) {
                        col.iter_mut().zip(&self.mean).for_each(|(x, mu)| *x += mu);
                    }
                }
                Ok(f(s, &buf, m))
            })
            .collect()
    }

    fn map_impl<R: Send>(&self, master: u64, row: u64, trials: Range<u64>, centered: bool, f: &(dyn Fn(u64, &[f64]) -> R + Sync)) -> Result<Vec<R>, GffError> {
        let n = self.domain.len();
        let chunks = self.batches_impl(master, row, trials, centered, &|s, buf, m| (0..m).map(|c| f(s + c as u64, &buf[c * n..(c + 1) * n])).collect::<Vec<R>>())?;
        Ok(chunks.into_iter().flatten().collect())
    }

    /// `f(first_trial, block, m)` on column-major blocks of `m` centered draws.
    pub fn map_centered_batches<R: Send>(&self, master: u64, row: u64, trials: Range<u64>, f: impl Fn(u64, &[f64], usize) -> R + Sync) -> Result<Vec<R>, GffError> {
        self.batches_impl(master, row, trials, true, &f)
    }

    /// `f(trial, h)` for draws of `h^{D,w}` on `D`.
    pub fn map_fields<R: Send>(&self, master: u64, row: u64, trials: Range<u64>, f: impl Fn(u64, &[f64]) -> R + Sync) -> Result<Vec<R>, GffError> {
        self.map_impl(master, row, trials, false, &f)
    }

    /// `f(trial, h − w̄)` for the zero-boundary part.
    pub fn map_centered<R: Send>(&self, master: u64, row: u64, trials: Range<u64>, f: impl Fn(u64, &[f64]) -> R + Sync) -> Result<Vec<R>, GffError> {
        self.map_impl(master, row, trials, true, &f)
    }

    /// One draw of `h^{D,w}` on `D̄`.
    pub fn sample(&self, id: StreamId) -> Result<FieldSample, GffError> {
        let mut v = self.map_fields(id.master, id.row, id.trial..id.trial + 1, |_, h| h.to_vec())?;
        let mut values = v.pop().unwrap_or_default();
        values.extend_from_slice(&self.boundary_values);
        Ok(FieldSample { stream: id, values })
    }

    /// The field on `D̄` from its values on `D`.
    pub fn extend_to_closure(&self, on_domain: &[f64]) -> Vec<f64> {
        let mut v = on_domain.to_vec();
        v.extend_from_slice(&self.boundary_values);
        v
    }
}

/// Builds the annulus model with data `−m_n + u` on `∂U_n` and `−m_k + v`
/// on `∂V^-_k`, together with the boundary bookkeeping. Class violations
/// are reported as warnings.
pub fn build_model(spec: &AnnulusSpec, u: &BoundarySpec, v: &BoundarySpec, tol: &SolverTolerances) -> Result<(GffModel, BoundaryData), GffError> {
    let mut data = boundary_data(spec, u, v, tol)?;
    data.warnings.extend(spec.class_warnings());
    let domain = spec.domain()?;
    let model = build_model_on(spec, &domain, u, v, tol)?;
    Ok((model, data))
}

/// The annulus model on a precomputed domain.
pub fn build_model_on(spec: &AnnulusSpec, domain: &DiscreteDomain, u: &BoundarySpec, v: &BoundarySpec, tol: &SolverTolerances) -> Result<GffModel, GffError> {
    let solver = Arc::new(LaplaceSolver::new(domain, tol)?);
    model_with_data(spec, solver, u, v)
}

/// The annulus data on an existing factorization of `L_{U_n ∩ V^-_k}`.
pub fn model_with_data(spec: &AnnulusSpec, solver: Arc<LaplaceSolver>, u: &BoundarySpec, v: &BoundarySpec) -> Result<GffModel, GffError> {
    let w = annulus_boundary_fn(spec, solver.domain(), u, v)?;
    GffModel::with_solver(solver, w)
}

/// `−m_n 1_{∂U_n} + u − m_k 1_{∂V^-_k} + v` on `∂(U_n ∩ V^-_k)`; functions
/// are zero off their carriers, so a point on both carriers gets the sum.
pub fn annulus_boundary_fn(spec: &AnnulusSpec, domain: &DiscreteDomain, u: &BoundarySpec, v: &BoundarySpec) -> Result<impl Fn(Point) -> f64, GffError> {
    let bd = domain.outer_boundary();
    let un = spec.u_n()?;
    let vm = spec.v_minus()?;
    let du = bd.filter(&un.clone().not());
    let dv = bd.filter(&vm.clone().not());
    let uv = u.values(&du, spec.n)?;
    let vv = v.values(&dv, spec.k)?;
    let (mn, mk) = (m_scale(spec.n), m_scale(spec.k));
    Ok(move |p: Point| {
        let a = du.index_of(p).map(|i| -mn + uv[i]).unwrap_or(0.0);
        let b = dv.index_of(p).map(|i| -mk + vv[i]).unwrap_or(0.0);
        a + b
    })
}

/// Values of `h^{D,w}` on `D̄` (domain points first, then `∂D`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub stream: StreamId,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn on_domain<'a>(&'a self, model: &GffModel) -> &'a [f64] {
        &self.values[..model.domain().len()]
    }

    pub fn on_boundary<'a>(&'a self, model: &GffModel) -> &'a [f64] {
        &self.values[model.domain().len()..]
    }

    pub fn at(&self, model: &GffModel, p: Point) -> Option<f64> {
        let n = model.domain().len();
        model.domain().index_of(p).map(|i| self.values[i]).or_else(|| model.boundary().index_of(p).map(|i| self.values[n + i]))
    }
}

/// Gibbs–Markov split with respect to `D′ ⊂ D`: `h = φ + h′` where `φ` is
/// the harmonic extension into `D′` of `h` off `D′` and `h′` is a
/// zero-boundary field on `D′` independent of `φ`.
pub struct GibbsMarkov {
    sub: DiscreteDomain,
    solver: LaplaceSolver,
    sub_in_domain: Vec<usize>,
}

impl GibbsMarkov {
    pub fn new(model: &GffModel, sub: &DiscreteDomain, tol: &SolverTolerances) -> Result<GibbsMarkov, GffError> {
        if !sub.is_subset_of(model.domain()) {
            return Err(GffError::NotContained);
        }
        let sub_in_domain = sub.points().iter().map(|p| model.domain().index_of(*p).expect("subset")).collect();
        Ok(GibbsMarkov { sub: sub.clone(), solver: LaplaceSolver::new(sub, tol)?, sub_in_domain })
    }

    pub fn subdomain(&self) -> &DiscreteDomain {
        &self.sub
    }

    /// `(φ on D, h − φ on D′)` for a field given on `D` (boundary values from the model).
    pub fn split(&self, model: &GffModel, h: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GffError> {
        let value = |p: Point| model.domain().index_of(p).map(|i| h[i]).or_else(|| model.boundary().index_of(p).map(|i| model.boundary_values()[i])).unwrap_or(0.0);
        let inner = self.solver.dirichlet(value)?;
        let mut phi = h.to_vec();
        let mut residual = Vec::with_capacity(inner.len());
        for (k, i) in self.sub_in_domain.iter().enumerate() {
            residual.push(h[*i] - inner[k]);
            phi[*i] = inner[k];
        }
        Ok((phi, residual))
    }
}

/// `gibbs_markov(model, D′, sample)` for a single sample on `D̄`.
pub fn gibbs_markov(model: &GffModel, sub: &DiscreteDomain, sample: &FieldSample, tol: &SolverTolerances) -> Result<(Vec<f64>, Vec<f64>), GffError> {
    let gm = GibbsMarkov::new(model, sub, tol)?;
    let (mut phi, residual) = gm.split(model, sample.on_domain(model))?;
    phi.extend_from_slice(sample.on_boundary(model));
    Ok((phi, residual))
}

/// Distribution summary of `max_A h − m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxSummary {
    pub trials: usize,
    pub centering: f64,
    pub mean: f64,
    pub std_error: f64,
    pub quantiles: Vec<(f64, f64)>,
    /// `(t, freq(max − m > t))`.
    pub right_tail: Vec<(f64, f64)>,
    /// `(t, freq(max − m < −t))`.
    pub left_tail: Vec<(f64, f64)>,
}

/// Offsets of the tail tables.
pub const TAIL_OFFSETS: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0];

/// `max_{target} h − centering` over `trials` draws of the model.
pub fn max_statistics(model: &GffModel, target: &DiscreteDomain, centering: f64, master: u64, row: u64, trials: u64) -> Result<MaxSummary, GffError> {
    let idx: Vec<usize> = target.points().iter().filter_map(|p| model.domain().index_of(*p)).collect();
    if idx.is_empty() {
        return Err(GffError::NotContained);
    }
    let maxima = model.map_fields(master, row, 0..trials, |_, h| idx.iter().map(|i| h[*i]).fold(f64::NEG_INFINITY, f64::max) - centering)?;
    let mv = crate::stats::MeanVar::from_slice(&maxima);
    let mut sorted = maxima.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let nf = maxima.len() as f64;
    let freq = |pred: &dyn Fn(f64) -> bool| maxima.iter().filter(|x| pred(**x)).count() as f64 / nf;
    Ok(MaxSummary {
        trials: maxima.len(),
        centering,
        mean: mv.mean(),
        std_error: mv.std_error(),
        quantiles: [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|q| (*q, crate::stats::quantile(&sorted, *q))).collect(),
        right_tail: TAIL_OFFSETS.iter().map(|t| (*t, freq(&|x| x > *t))).collect(),
        left_tail: TAIL_OFFSETS.iter().map(|t| (*t, freq(&|x| x < -*t))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_spec_json() {
        let s = BoundarySpec::Affine { c: 1.0, gradient: [2.0, 0.0] };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<BoundarySpec>(&j).unwrap(), s);
        assert!(serde_json::from_str::<BoundarySpec>(r#"{"kind":"constant","value":1,"x":2}"#).is_err());
        let bad = BoundarySpec::Table { points: vec![[0, 0]], values: vec![], default: 0.0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constant_data_bookkeeping() {
        let spec = AnnulusSpec::ball(3.0, 0.0, 0.1).with_bulk(0.1, 0.5);
        let d = boundary_data(&spec, &BoundarySpec::constant(-2.0), &BoundarySpec::constant(1.5), &SolverTolerances::default()).unwrap();
        assert_eq!((d.u_bar_0, d.osc_u_eta, d.u_star), (-2.0, 0.0, -2.0));
        assert_eq!((d.v_bar_inf, d.osc_v_zeta, d.v_star), (1.5, 0.0, 1.5));
    }

    #[test]
    fn singleton_model() {
        let d = DiscreteDomain::from_points(vec![[0, 0]]);
        let m = GffModel::new(&d, |_| 3.0, &SolverTolerances::default()).unwrap();
        assert!((m.mean()[0] - 3.0).abs() < 1e-14);
        let s = m.sample(StreamId::new(1, 2, 3)).unwrap();
        assert_eq!(s.values.len(), 5);
        assert!(s.on_boundary(&m).iter().all(|v| *v == 3.0));
        assert_eq!(s, m.sample(StreamId::new(1, 2, 3)).unwrap());
    }
}
