//! Inward and outward concentric decompositions of `h^{U_n ∩ V^-_k}` and the
//! decorated random walk read off a coupled field sample.
//!
//! A decomposition fixes the nested sets `Δ_{-1} ⊇ … ⊇ Δ_{T+1}`, the annuli
//! `A_p = Δ_{p−1} ∖ Δ_p`, the sets `A′_p = Δ′_p ∩ Δ_{p−1}` and
//! `J_p = A′_p ∪ (Δ_p ∩ Ω)` (`J_T = A′_T`), where `Ω = V^-_k` inward and
//! `Ω = U_n` outward. Peeling a zero-boundary sample means: starting from
//! the full field, for `p = 0, …, T` take the binding field `φ_p` of the
//! current residual onto `J_p`, keep the residual on `A′_p` as `h_p`, and
//! continue with the residual on `Δ_p ∩ Ω`.

use crate::gff::{AnnulusSpec, BoundaryData, GffError, GffModel};
use crate::harmonic::{poisson_kernel_at_infinity, poisson_kernel_with, GreenOperator, PoissonKernel};
use crate::lattice::{add, DiscreteDomain, LatticeSet, Point, NEIGHBORS};
use crate::scales::{ceil_log, floor_log, m_scale};
use crate::seeds::StreamId;
use crate::solver::{LaplaceSolver, SolverTolerances};
use crate::stats::MeanVar;
use crate::ContinuumDomain;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConcentricError {
    #[error("annulus too thin")]
    TooThin,
    #[error("decomposition invariant violated: {0}")]
    Invariant(String),
    #[error("non-positive step variance σ²_{p} = {value}")]
    Variance { p: usize, value: f64 },
    #[error("field has {got} values, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Gff(#[from] GffError),
}

impl From<crate::solver::SolverError> for ConcentricError {
    fn from(e: crate::solver::SolverError) -> Self {
        ConcentricError::Gff(e.into())
    }
}

impl From<crate::harmonic::PotentialError> for ConcentricError {
    fn from(e: crate::harmonic::PotentialError) -> Self {
        ConcentricError::Gff(e.into())
    }
}

impl From<crate::lattice::LatticeError> for ConcentricError {
    fn from(e: crate::lattice::LatticeError) -> Self {
        ConcentricError::Gff(e.into())
    }
}

impl From<crate::shape::ShapeError> for ConcentricError {
    fn from(e: crate::shape::ShapeError) -> Self {
        ConcentricError::Gff(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inward,
    Outward,
}

/// Per-level peeling data.
struct Level {
    /// `D`-indices of `J_p`, in the order of `solver`'s domain.
    j_idx: Vec<usize>,
    /// For each point of `J_p`, the `D`-indices of its neighbours in `D ∖ J_p`.
    j_nbrs: Vec<Vec<usize>>,
    j_solver: LaplaceSolver,
    /// Membership in `A′_p` and in `Δ_p ∩ Ω`, over `D`.
    in_a_prime: Vec<bool>,
    in_next: Vec<bool>,
    /// Membership of `Dom_p = Δ_{p−1} ∩ Ω`, over `D`.
    in_dom: Vec<bool>,
}

/// A concentric decomposition of `U_n ∩ V^-_k`.
pub struct Decomposition {
    pub direction: Direction,
    pub spec: AnnulusSpec,
    pub t: usize,
    pub domain: DiscreteDomain,
    /// `Δ_{-1}, …, Δ_{T+1}` (index `p + 1`).
    pub deltas: Vec<LatticeSet>,
    /// `A_0, …, A_{T+1}`.
    pub annuli: Vec<DiscreteDomain>,
    /// `A′_0, …, A′_T`.
    pub a_prime: Vec<DiscreteDomain>,
    /// `J_0, …, J_T`.
    pub j_sets: Vec<DiscreteDomain>,
    /// `Δ_{p−1} ∩ Ω` for `p = 0, …, T`.
    pub doms: Vec<DiscreteDomain>,
    /// Harmonic weights on `∂Δ_p` for `p = 1, …, T` (index `p − 1`): from
    /// `0` inward, from `∞` outward.
    pub weights: Vec<PoissonKernel>,
    /// Exact `σ_p² = Var X_p`, index `p − 1`.
    pub sigma2: Vec<f64>,
    /// `D`-indices of the weight support (entries outside `D` dropped), index `p − 1`.
    weight_idx: Vec<Vec<(usize, f64)>>,
    /// `D`-indices of `A_p`, `p = 0, …, T+1`.
    annulus_idx: Vec<Vec<usize>>,
    levels: Vec<Level>,
}

impl std::fmt::Debug for Decomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Decomposition").field("direction", &self.direction).field("t", &self.t).field("sites", &self.domain.len()).finish()
    }
}

/// Scale of `Δ_p` for `1 <= p <= T − 1`.
pub fn delta_level(spec: &AnnulusSpec, direction: Direction, p: usize) -> f64 {
    match direction {
        Direction::Inward => spec.n + floor_log(spec.eps) as f64 - p as f64,
        Direction::Outward => spec.k + ceil_log(1.0 / spec.eps + spec.zeta) as f64 + p as f64,
    }
}

/// Centering scale paired with annulus `p`: `n − p` inward, `k + p` outward.
pub fn m_level(spec: &AnnulusSpec, direction: Direction, p: usize) -> f64 {
    match direction {
        Direction::Inward => spec.n - p as f64,
        Direction::Outward => spec.k + p as f64,
    }
}

fn families(spec: &AnnulusSpec, dir: Direction, t: usize) -> Result<(Vec<LatticeSet>, Vec<LatticeSet>, LatticeSet), ConcentricError> {
    let b = ContinuumDomain::unit_disk();
    let bc = b.complement();
    let un = spec.u_n()?;
    let ub = spec.u_bulk()?;
    let vm = spec.v_minus()?;
    let vb = spec.v_bulk()?;
    let mut deltas = Vec::with_capacity(t + 3);
    let mut primes = Vec::with_capacity(t + 1);
    match dir {
        Direction::Inward => {
            deltas.push(un.clone());
            deltas.push(ub.clone());
            primes.push(LatticeSet::scaled(&spec.u.bulk(spec.eta)?.complement(), spec.n)?);
            for p in 1..t {
                let l = delta_level(spec, dir, p);
                deltas.push(LatticeSet::scaled(&b, l)?);
                primes.push(LatticeSet::scaled(&bc, l)?);
            }
            deltas.push(vb.clone().not());
            deltas.push(vm.clone().not());
            primes.push(vb);
            Ok((deltas, primes, vm))
        }
        Direction::Outward => {
            deltas.push(vm.clone());
            deltas.push(vb.clone());
            primes.push(LatticeSet::scaled(&spec.v.complement().bulk(spec.zeta)?.complement(), spec.k)?);
            for p in 1..t {
                let l = delta_level(spec, dir, p);
                deltas.push(LatticeSet::scaled(&bc, l)?);
                primes.push(LatticeSet::scaled(&b, l)?);
            }
            deltas.push(ub.clone().not());
            deltas.push(un.clone().not());
            primes.push(ub);
            Ok((deltas, primes, un))
        }
    }
}

fn mask(d: &DiscreteDomain, sub: &DiscreteDomain) -> Vec<bool> {
    let mut m = vec![false; d.len()];
    for p in sub.points() {
        if let Some(i) = d.index_of(*p) {
            m[i] = true;
        }
    }
    m
}

impl Decomposition {
    /// Builds the set families, factorizations, harmonic weights and exact
    /// step variances; every structural invariant is checked here.
    pub fn new(spec: &AnnulusSpec, direction: Direction, tol: &SolverTolerances) -> Result<Decomposition, ConcentricError> {
        spec.validate()?;
        let t = spec.t()?;
        if t < 1 {
            return Err(ConcentricError::TooThin);
        }
        let t = t as usize;
        let domain = spec.domain()?;
        let (deltas, primes, omega) = families(spec, direction, t)?;

        // Nesting, checked on a disk that contains every point where the sets differ.
        let r = domain.max_norm() + 3.0;
        let probe = LatticeSet::scaled(&ContinuumDomain::disk([0.0, 0.0], r + 0.5)?, 0.0)?.materialize()?;
        for w in 0..deltas.len() - 1 {
            if let Some(p) = probe.iter().find(|x| deltas[w + 1].contains(**x) && !deltas[w].contains(**x)) {
                return Err(ConcentricError::Invariant(format!("Δ_{} ⊄ Δ_{} at {p:?}", w as i64, w as i64 - 1)));
            }
        }

        let annuli: Vec<DiscreteDomain> = (0..=t + 1).map(|p| domain.filter(&deltas[p].clone().minus(deltas[p + 1].clone()))).collect();
        let total: usize = annuli.iter().map(|a| a.len()).sum();
        if total != domain.len() {
            return Err(ConcentricError::Invariant(format!("annuli cover {total} of {} sites", domain.len())));
        }
        let a_prime: Vec<DiscreteDomain> = (0..=t).map(|p| domain.filter(&primes[p].clone().and(deltas[p].clone()))).collect();
        for p in 0..=t {
            if !a_prime[p].is_subset_of(&annuli[p]) {
                return Err(ConcentricError::Invariant(format!("A′_{p} ⊄ A_{p}")));
            }
        }
        let doms: Vec<DiscreteDomain> = (0..=t).map(|p| domain.filter(&deltas[p].clone().and(omega.clone()))).collect();
        let j_sets: Vec<DiscreteDomain> = (0..=t)
            .map(|p| if p < t { a_prime[p].union(&domain.filter(&deltas[p + 1].clone().and(omega.clone()))) } else { a_prime[t].clone() })
            .collect();

        let mut levels = Vec::with_capacity(t + 1);
        for p in 0..=t {
            let j = &j_sets[p];
            let j_idx: Vec<usize> = j.points().iter().map(|x| domain.index_of(*x).expect("J ⊂ D")).collect();
            let j_nbrs = j
                .points()
                .iter()
                .map(|x| NEIGHBORS.iter().map(|d| add(*x, *d)).filter(|y| !j.contains(*y)).filter_map(|y| domain.index_of(y)).collect())
                .collect();
            let next = if p < t { domain.filter(&deltas[p + 1].clone().and(omega.clone())) } else { DiscreteDomain::empty() };
            levels.push(Level {
                j_idx,
                j_nbrs,
                j_solver: LaplaceSolver::new(j, tol)?,
                in_a_prime: mask(&domain, &a_prime[p]),
                in_next: mask(&domain, &next),
                in_dom: mask(&domain, &doms[p]),
            });
        }

        let mut weights = Vec::with_capacity(t);
        for p in 1..=t {
            let w = match direction {
                Direction::Inward => {
                    let dp = deltas[p + 1].to_domain(None)?;
                    let s = LaplaceSolver::new(&dp, tol)?;
                    poisson_kernel_with(&s, [0, 0])?
                }
                Direction::Outward => {
                    let hole = deltas[p + 1].clone().not().to_domain(None)?;
                    poisson_kernel_at_infinity(&hole)?
                }
            };
            weights.push(w);
        }
        let weight_idx: Vec<Vec<(usize, f64)>> = weights.iter().map(|w| w.support.iter().zip(&w.mass).filter_map(|(z, m)| domain.index_of(*z).map(|i| (i, *m))).collect()).collect();

        // σ_p² = πᵀ G_{Dom_p} π − πᵀ G_{J_p} π.
        let mut sigma2 = Vec::with_capacity(t);
        for p in 1..=t {
            let pi: Vec<(Point, f64)> = weight_idx[p - 1].iter().map(|(i, m)| (domain.points()[*i], *m)).collect();
            let g_dom = GreenOperator::new(&doms[p], tol)?.quadratic_form(&pi)?;
            let g_j = GreenOperator::from_solver(Arc::new(LaplaceSolver::new(&j_sets[p], tol)?)).quadratic_form(&pi)?;
            let v = g_dom - g_j;
            if v.is_nan() || v <= 0.0 {
                return Err(ConcentricError::Variance { p, value: v });
            }
            sigma2.push(v);
        }
        let annulus_idx = annuli.iter().map(|a| a.points().iter().map(|x| domain.index_of(*x).expect("A ⊂ D")).collect()).collect();
        Ok(Decomposition { direction, spec: spec.clone(), t, domain, deltas, annuli, a_prime, j_sets, doms, weights, sigma2, weight_idx, annulus_idx, levels })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// `D`-indices of `A_p`.
    pub fn annulus_indices(&self, p: usize) -> &[usize] {
        &self.annulus_idx[p]
    }

    /// Runs the peeling on `m` column-major fields on `D`, calling
    /// `visit(p, φ_p, e_p)` where `e_p` is the residual on `J_p` (zero
    /// elsewhere); `h_p` is `e_p` on `A′_p`.
    pub fn peel_block(&self, block: &[f64], m: usize, mut visit: impl FnMut(usize, &[f64], &[f64])) -> Result<(), ConcentricError> {
        let n = self.len();
        if block.len() != n * m {
            return Err(ConcentricError::Dimension { got: block.len(), expected: n * m });
        }
        let mut r = block.to_vec();
        let mut phi = vec![0.0; n * m];
        let mut e = vec![0.0; n * m];
        for (p, lv) in self.levels.iter().enumerate() {
            let nj = lv.j_idx.len();
            let mut sol = vec![0.0; nj * m];
            for c in 0..m {
                let rc = &r[c * n..(c + 1) * n];
                for (k, nb) in lv.j_nbrs.iter().enumerate() {
                    sol[c * nj + k] = nb.iter().map(|i| rc[*i]).sum();
                }
            }
            if nj > 0 {
                lv.j_solver.solve_block_in_place(&mut sol, m)?;
            }
            for c in 0..m {
                let (rc, pc, ec) = (&r[c * n..(c + 1) * n], &mut phi[c * n..(c + 1) * n], &mut e[c * n..(c + 1) * n]);
                for i in 0..n {
                    pc[i] = if lv.in_dom[i] { rc[i] } else { 0.0 };
                    ec[i] = 0.0;
                }
                for (k, i) in lv.j_idx.iter().enumerate() {
                    let s = sol[c * nj + k];
                    ec[*i] = rc[*i] - s;
                    pc[*i] = s;
                }
            }
            visit(p, &phi, &e);
            for c in 0..m {
                let (rc, ec) = (&mut r[c * n..(c + 1) * n], &e[c * n..(c + 1) * n]);
                for i in 0..n {
                    rc[i] = if lv.in_next[i] { ec[i] } else { 0.0 };
                }
            }
        }
        Ok(())
    }

    /// `(φ_0, …, φ_T)` and `(h_0, …, h_T)` on `D` for one zero-boundary field.
    pub fn decompose_field(&self, h: &[f64]) -> Result<PeeledField, ConcentricError> {
        let mut phi = Vec::with_capacity(self.t + 1);
        let mut hp = Vec::with_capacity(self.t + 1);
        self.peel_block(h, 1, |p, f, e| {
            phi.push(f.to_vec());
            hp.push(e.iter().zip(&self.levels[p].in_a_prime).map(|(v, a)| if *a { *v } else { 0.0 }).collect());
        })?;
        Ok(PeeledField { phi, h: hp })
    }

    /// Largest `|h(x) − Σ_{p≤q∧T} φ_p(x) − h_q(x) 1_{q≤T}|` over `x ∈ A_q`, all `q`.
    pub fn reconstruction_error(&self, h: &[f64], peeled: &PeeledField) -> f64 {
        let mut worst = 0.0f64;
        for q in 0..=self.t + 1 {
            for &i in &self.annulus_idx[q] {
                let mut s: f64 = (0..=q.min(self.t)).map(|p| peeled.phi[p][i]).sum();
                if q <= self.t {
                    s += peeled.h[q][i];
                }
                worst = worst.max((h[i] - s).abs());
            }
        }
        worst
    }

    /// `X_p = Σ_z π_p(z) φ_p(z)` for `1 <= p <= T`.
    pub fn harmonic_average(&self, p: usize, phi: &[f64]) -> f64 {
        self.weight_idx[p - 1].iter().map(|(i, w)| w * phi[*i]).sum()
    }

    /// Prepares DRW builds for a model on `D` with the given boundary data.
    pub fn drw_builder<'a>(&'a self, model: &'a GffModel, data: &BoundaryData) -> Result<DrwBuilder<'a>, ConcentricError> {
        if model.domain() != &self.domain {
            return Err(ConcentricError::Dimension { got: model.domain().len(), expected: self.domain.len() });
        }
        let t = self.t;
        let mut s = vec![0.0; t + 1];
        for p in 1..=t {
            s[p] = s[p - 1] + self.sigma2[p - 1];
        }
        let st = s[t];
        let (a, b) = match self.direction {
            Direction::Inward => (data.u_bar_0, data.v_bar_inf),
            Direction::Outward => (data.v_bar_inf, data.u_bar_0),
        };
        let beta: Vec<f64> = (0..=t).map(|p| (st - s[p]) / st * a + s[p] / st * b).collect();
        let mut c = vec![0.0; t + 1];
        let mut g_var = vec![0.0; t + 1];
        for j in 1..t {
            let (hi, lo) = (st - s[j - 1], st - s[j]);
            let s2 = self.sigma2[j - 1];
            c[j] = (hi / lo).ln() / s2;
            let int_f2 = (1.0 / lo - 1.0 / hi) / s2;
            g_var[j] = (int_f2 - c[j] * c[j]).max(0.0);
        }
        let gamma: Vec<Vec<f64>> = (0..=t)
            .map(|p| {
                if p == 0 {
                    return Vec::new();
                }
                let ml = m_scale(m_level(&self.spec, self.direction, p));
                self.annulus_idx[p].iter().map(|i| model.mean()[*i] + ml - beta[p]).collect()
            })
            .collect();
        Ok(DrwBuilder { decomp: self, model, s, beta, c, g_var, gamma })
    }
}

/// Output of [`Decomposition::decompose_field`].
#[derive(Clone, Debug)]
pub struct PeeledField {
    pub phi: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// Coefficients shared by all realizations on one model.
pub struct DrwBuilder<'a> {
    decomp: &'a Decomposition,
    model: &'a GffModel,
    /// `s_{1,p}`, index `p = 0..=T`.
    pub s: Vec<f64>,
    pub beta: Vec<f64>,
    /// `c_j = σ_j^{-2} log((s_T − s_{j−1})/(s_T − s_j))`.
    pub c: Vec<f64>,
    /// `Var G_j = ∫f_j² − (∫f_j)²`.
    pub g_var: Vec<f64>,
    /// `γ` on `A_p` (in `annulus_indices(p)` order).
    gamma: Vec<Vec<f64>>,
}

/// One realization of the DRW coupled to a field sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrwRealization {
    pub direction: Direction,
    pub trial: u64,
    pub t: usize,
    /// `X_p`, index `p − 1`.
    pub x: Vec<f64>,
    /// `G_j`, index `j − 1` (`j < T`).
    pub g: Vec<f64>,
    /// `S′_p`, `p = 0..=T`.
    pub s_prime: Vec<f64>,
    pub beta: Vec<f64>,
    pub s: Vec<f64>,
    /// `D_p`, index `p − 1`.
    pub d: Vec<f64>,
    /// `Y_p`, index `p − 1`.
    pub y: Vec<f64>,
    /// `max_{A_p} h` read from the sample directly, index `p − 1`.
    pub field_max: Vec<f64>,
    /// Reconstruction error of the peeling on this sample.
    pub reconstruction_error: f64,
}

/// CSV row of a realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrwRow {
    pub trial: u64,
    pub p: usize,
    pub x: f64,
    pub s_prime: f64,
    pub beta: f64,
    pub d: f64,
    pub s: f64,
}

impl DrwRealization {
    pub fn rows(&self) -> Vec<DrwRow> {
        (0..=self.t)
            .map(|p| DrwRow {
                trial: self.trial,
                p,
                x: if p == 0 { 0.0 } else { self.x[p - 1] },
                s_prime: self.s_prime[p],
                beta: self.beta[p],
                d: if p == 0 { 0.0 } else { self.d[p - 1] },
                s: self.s[p],
            })
            .collect()
    }

    /// Per-`p` equality of `{S_p + D_p ≤ 0}` and `{max_{A_p} h ≤ 0}`, and
    /// agreement of the two values to `tol`.
    pub fn correspondence(&self, tol: f64) -> Vec<bool> {
        (1..=self.t)
            .map(|p| {
                let lhs = self.s[p] + self.d[p - 1];
                let rhs = self.field_max[p - 1];
                (lhs - rhs).abs() <= tol * (1.0 + rhs.abs()) && ((lhs <= 0.0) == (rhs <= 0.0) || rhs.abs() <= tol)
            })
            .collect()
    }

    /// `⋂_p {S_p + D_p ≤ 0}`.
    pub fn ballot(&self) -> bool {
        (1..=self.t).all(|p| self.s[p] + self.d[p - 1] <= 0.0)
    }
}

impl DrwBuilder<'_> {
    pub fn decomposition(&self) -> &Decomposition {
        self.decomp
    }

    /// Realizations for `m` centered fields in `block`, with bridge Gaussians
    /// from the auxiliary streams of `(master, row, trial)`.
    pub fn build_block(&self, block: &[f64], m: usize, master: u64, row: u64, first_trial: u64) -> Result<Vec<DrwRealization>, ConcentricError> {
        let dc = self.decomp;
        let n = dc.len();
        let t = dc.t;
        let mean = self.model.mean();
        let mut cum = vec![0.0; n * m];
        let mut x = vec![vec![0.0; t]; m];
        let mut mp = vec![vec![f64::NEG_INFINITY; t]; m];
        let mut fmax = vec![vec![f64::NEG_INFINITY; t]; m];
        let mut err = vec![0.0f64; m];
        dc.peel_block(block, m, |p, phi, e| {
            let lv = &dc.levels[p];
            let ml = m_scale(m_level(&dc.spec, dc.direction, p));
            for c in 0..m {
                let (cc, pc, ec, hc) = (&mut cum[c * n..(c + 1) * n], &phi[c * n..(c + 1) * n], &e[c * n..(c + 1) * n], &block[c * n..(c + 1) * n]);
                cc.iter_mut().zip(pc).for_each(|(a, b)| *a += b);
                if p >= 1 {
                    x[c][p - 1] = dc.harmonic_average(p, pc);
                }
                for (k, &i) in dc.annulus_idx[p].iter().enumerate() {
                    let hp = if lv.in_a_prime[i] { ec[i] } else { 0.0 };
                    let val = cc[i] + hp;
                    err[c] = err[c].max((hc[i] - val).abs());
                    if p >= 1 {
                        mp[c][p - 1] = mp[c][p - 1].max(hp - ml + cc[i] + self.gamma[p][k]);
                        fmax[c][p - 1] = fmax[c][p - 1].max(hc[i] + mean[i]);
                    }
                }
                if p == t {
                    for &i in &dc.annulus_idx[t + 1] {
                        err[c] = err[c].max((hc[i] - cc[i]).abs());
                    }
                }
            }
        })?;
        let st = self.s[t];
        let mut out = Vec::with_capacity(m);
        for c in 0..m {
            let trial = first_trial + c as u64;
            let mut rng = StreamId::new(master, row, trial).aux(0xB41D).rng();
            let g: Vec<f64> = (1..t).map(|j| self.g_var[j].sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
            let mut s_prime = vec![0.0; t + 1];
            let mut acc = 0.0;
            for p in 1..t {
                acc += x[c][p - 1] * self.c[p] + dc.sigma2[p - 1].sqrt() * g[p - 1];
                s_prime[p] = (st - self.s[p]) * acc;
            }
            let s: Vec<f64> = s_prime.iter().zip(&self.beta).map(|(a, b)| a + b).collect();
            let d: Vec<f64> = (1..=t).map(|p| mp[c][p - 1] - s_prime[p]).collect();
            // Y_p = Σ_{j≤p} (s_{p,T}/s_{j,T}) X_j with s_{p,T} = s_T − s_{p−1}.
            let y: Vec<f64> = (1..=t).map(|p| (1..=p).map(|j| (st - self.s[p - 1]) / (st - self.s[j - 1]) * x[c][j - 1]).sum()).collect();
            out.push(DrwRealization {
                direction: dc.direction,
                trial,
                t,
                x: x[c].clone(),
                g,
                s_prime,
                beta: self.beta.clone(),
                s,
                d,
                y,
                field_max: fmax[c].clone(),
                reconstruction_error: err[c],
            });
        }
        Ok(out)
    }

    /// Draws `trials` samples of the model and builds one realization each.
    pub fn run(&self, master: u64, row: u64, trials: std::ops::Range<u64>) -> Result<Vec<DrwRealization>, ConcentricError> {
        let batches = self.model.map_centered_batches(master, row, trials, |first, block, m| self.build_block(block, m, master, row, first))?;
        let mut out = Vec::new();
        for b in batches {
            out.extend(b?);
        }
        Ok(out)
    }
}

/// Summary of the empirical checks on a set of realizations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DrwDiagnostics {
    pub realizations: usize,
    pub sigma2_exact: Vec<f64>,
    pub sigma2_empirical: Vec<f64>,
    pub sigma2_band: (f64, f64),
    /// Largest `|Ĉov(S′_p, S′_q) − s_p(s_T − s_q)/s_T| / se` over `1 <= p <= q < T`.
    pub bridge_max_z: f64,
    /// Rows `(δ, t, max_p freq, envelope)` for `P(|D_p| > δ^{-1}∧_{T,p}^{1/2−δ} + t)`.
    pub decoration_tails: Vec<(f64, f64, f64, f64)>,
    /// The smallest `δ` on the grid whose rows all sit below the envelope.
    pub best_delta: Option<f64>,
    /// `(T − p, Var(S′_p − Y_p))`.
    pub coupling_variance: Vec<(usize, f64)>,
}

/// Decoration-tail grid.
pub const TAIL_DELTAS: [f64; 3] = [0.1, 0.2, 0.3];
pub const TAIL_TS: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];

/// Computes the diagnostic tables for realizations on one decomposition.
pub fn drw_assumption_diagnostics(decomp: &Decomposition, builder_s: &[f64], rs: &[DrwRealization]) -> DrwDiagnostics {
    let t = decomp.t;
    let nr = rs.len();
    let sigma2_empirical: Vec<f64> = (0..t).map(|p| MeanVar::from_slice(&rs.iter().map(|r| r.x[p]).collect::<Vec<_>>()).variance()).collect();
    let lo = decomp.sigma2.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = decomp.sigma2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let st = builder_s[t];
    let mut bridge_max_z = 0.0f64;
    for p in 1..t {
        for q in p..t {
            let z: Vec<f64> = rs.iter().map(|r| r.s_prime[p] * r.s_prime[q]).collect();
            let mv = MeanVar::from_slice(&z);
            let exact = builder_s[p] * (st - builder_s[q]) / st;
            bridge_max_z = bridge_max_z.max((mv.mean() - exact).abs() / mv.std_error().max(1e-300));
        }
    }
    let mut decoration_tails = Vec::new();
    let mut best_delta = None;
    for &dl in &TAIL_DELTAS {
        let mut all_ok = true;
        for &tt in &TAIL_TS {
            let mut worst = 0.0f64;
            for p in 1..=t {
                let w = (p.min(t - p) as f64).max(0.0);
                let thr = w.powf(0.5 - dl) / dl + tt;
                let f = rs.iter().filter(|r| r.d[p - 1].abs() > thr).count() as f64 / nr.max(1) as f64;
                worst = worst.max(f);
            }
            let env = (-tt.powf(dl)).exp() / dl;
            all_ok &= worst <= env;
            decoration_tails.push((dl, tt, worst, env));
        }
        if all_ok && best_delta.is_none() {
            best_delta = Some(dl);
        }
    }
    let coupling_variance = (1..=t)
        .map(|p| (t - p, MeanVar::from_slice(&rs.iter().map(|r| r.s_prime[p] - r.y[p - 1]).collect::<Vec<_>>()).variance()))
        .collect();
    DrwDiagnostics { realizations: nr, sigma2_exact: decomp.sigma2.clone(), sigma2_empirical, sigma2_band: (lo, hi), bridge_max_z, decoration_tails, best_delta, coupling_variance }
}
