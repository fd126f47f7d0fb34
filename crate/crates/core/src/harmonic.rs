//! Green functions, hitting distributions, bounded harmonic extensions and
//! ruin probabilities for simple random walk on `Z²`.

use crate::lattice::{add, norm, DiscreteDomain, LatticeError, LatticeSet, Point, NEIGHBORS};
use crate::potential::potential_kernel;
use crate::shape::ContinuumDomain;
use crate::solver::{LaplaceSolver, SolverError, SolverTolerances};
use faer::linalg::solvers::Solve;
use faer::Mat;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Largest carrier handled by the dense potential-kernel systems.
pub const MAX_DENSE_CARRIER: usize = 6000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("point outside domain")]
    PointOutside,
    #[error("infinity start invalid")]
    InfinityStartInvalid,
    #[error("empty set")]
    EmptySet,
    #[error("carrier of {0} points exceeds the dense limit")]
    CarrierTooLarge(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Start of a walk: a lattice point or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Point(Point),
    Infinity,
}

/// `G_D` backed by one factorization, with a column cache.
pub struct GreenOperator {
    solver: Arc<LaplaceSolver>,
    cache: Mutex<HashMap<usize, Arc<Vec<f64>>>>,
}

impl GreenOperator {
    pub fn new(domain: &DiscreteDomain, tol: &SolverTolerances) -> Result<GreenOperator, PotentialError> {
        Ok(Self::from_solver(Arc::new(LaplaceSolver::new(domain, tol)?)))
    }

    pub fn from_solver(solver: Arc<LaplaceSolver>) -> GreenOperator {
        GreenOperator { solver, cache: Mutex::new(HashMap::new()) }
    }

    pub fn solver(&self) -> &Arc<LaplaceSolver> {
        &self.solver
    }

    pub fn domain(&self) -> &DiscreteDomain {
        self.solver.domain()
    }

    /// `G_D(·, y)` on the points of `D`.
    pub fn column(&self, y: Point) -> Result<Arc<Vec<f64>>, PotentialError> {
        let j = self.domain().index_of(y).ok_or(PotentialError::PointOutside)?;
        if let Some(c) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&j) {
            return Ok(c.clone());
        }
        let mut rhs = vec![0.0; self.domain().len()];
        rhs[j] = 4.0;
        let col = Arc::new(self.solver.solve(&rhs)?);
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(j, col.clone());
        Ok(col)
    }

    pub fn green(&self, x: Point, y: Point) -> Result<f64, PotentialError> {
        let i = self.domain().index_of(x).ok_or(PotentialError::PointOutside)?;
        Ok(self.column(y)?[i])
    }

    /// `G_D w` for a weight vector on `D`.
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>, PotentialError> {
        let rhs: Vec<f64> = w.iter().map(|v| 4.0 * v).collect();
        Ok(self.solver.solve(&rhs)?)
    }

    /// `Σ_{x,y} w(x) G_D(x,y) w(y)` for weights on points of `D`; points
    /// outside `D` contribute nothing.
    pub fn quadratic_form(&self, w: &[(Point, f64)]) -> Result<f64, PotentialError> {
        let mut v = vec![0.0; self.domain().len()];
        for (p, c) in w {
            if let Some(i) = self.domain().index_of(*p) {
                v[i] += c;
            }
        }
        let gv = self.apply(&v)?;
        Ok(v.iter().zip(&gv).map(|(a, b)| a * b).sum())
    }
}

impl std::fmt::Debug for GreenOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenOperator").field("domain", self.domain()).finish()
    }
}

/// Which evaluation route [`green`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    Solve,
    KernelFormula,
}

/// `G_D(x,y)`.
pub fn green(d: &DiscreteDomain, x: Point, y: Point, method: GreenMethod) -> Result<f64, PotentialError> {
    if !d.contains(x) || !d.contains(y) {
        return Err(PotentialError::PointOutside);
    }
    let tol = SolverTolerances::default();
    match method {
        GreenMethod::Solve => GreenOperator::new(d, &tol)?.green(x, y),
        GreenMethod::KernelFormula => {
            let solver = LaplaceSolver::new(d, &tol)?;
            let pk = poisson_kernel_with(&solver, x)?;
            Ok(green_formula(&pk, x, y))
        }
    }
}

/// `Σ_z Π_D(x,z) a(y − z) − a(x − y)` given `Π_D(x,·)`.
pub fn green_formula(pk: &PoissonKernel, x: Point, y: Point) -> f64 {
    let s: f64 = pk.support.iter().zip(&pk.mass).map(|(z, m)| m * potential_kernel([y[0] - z[0], y[1] - z[1]])).sum();
    s - potential_kernel([x[0] - y[0], x[1] - y[1]])
}

/// Hitting distribution on a finite set of boundary points.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonKernel {
    pub start: Start,
    /// Sorted row-major.
    pub support: Vec<Point>,
    pub mass: Vec<f64>,
}

impl PoissonKernel {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn get(&self, z: Point) -> f64 {
        self.support.iter().position(|q| *q == z).map(|i| self.mass[i]).unwrap_or(0.0)
    }

    pub fn expectation(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.support.iter().zip(&self.mass).map(|(z, m)| m * f(*z)).sum()
    }

    pub fn as_map(&self) -> HashMap<Point, f64> {
        self.support.iter().copied().zip(self.mass.iter().copied()).collect()
    }

    /// Total-variation distance `½ Σ |p − q|`.
    pub fn tv_distance(&self, other: &PoissonKernel) -> f64 {
        let mut m = self.as_map();
        for (z, q) in other.support.iter().zip(&other.mass) {
            *m.entry(*z).or_insert(0.0) -= q;
        }
        0.5 * m.values().map(|v| v.abs()).sum::<f64>()
    }
}

/// Hitting weights `H(z) = Σ_{y ∼ z, y ∈ D} g(y)` of `∂D` from a solved `g = L^{-1} b`.
fn collect_boundary(domain: &DiscreteDomain, g: &[f64], start: Start) -> PoissonKernel {
    let bd = domain.outer_boundary();
    let mass = bd
        .points()
        .iter()
        .map(|z| NEIGHBORS.iter().filter_map(|d| domain.index_of(add(*z, *d))).map(|i| g[i]).sum())
        .collect();
    PoissonKernel { start, support: bd.points().to_vec(), mass }
}

/// `Π_D(x,·)` for a finite domain.
pub fn poisson_kernel(d: &DiscreteDomain, x: Point) -> Result<PoissonKernel, PotentialError> {
    if !d.contains(x) {
        return Ok(PoissonKernel { start: Start::Point(x), support: vec![x], mass: vec![1.0] });
    }
    let solver = LaplaceSolver::new(d, &SolverTolerances::default())?;
    poisson_kernel_with(&solver, x)
}

/// `Π_D(x,·)` reusing a factorization; starts outside `D` are absorbed at once.
pub fn poisson_kernel_with(solver: &LaplaceSolver, x: Point) -> Result<PoissonKernel, PotentialError> {
    let d = solver.domain();
    let Some(i) = d.index_of(x) else {
        return Ok(PoissonKernel { start: Start::Point(x), support: vec![x], mass: vec![1.0] });
    };
    let mut rhs = vec![0.0; d.len()];
    rhs[i] = 1.0;
    let g = solver.solve(&rhs)?;
    Ok(collect_boundary(d, &g, Start::Point(x)))
}

/// Hitting distribution of `∂D` for a start drawn from `weights` (points of `D`).
pub fn averaged_poisson_kernel(solver: &LaplaceSolver, weights: &[(Point, f64)]) -> Result<PoissonKernel, PotentialError> {
    let d = solver.domain();
    let mut rhs = vec![0.0; d.len()];
    for (p, w) in weights {
        let i = d.index_of(*p).ok_or(PotentialError::PointOutside)?;
        rhs[i] += w;
    }
    let g = solver.solve(&rhs)?;
    Ok(collect_boundary(d, &g, Start::Point(weights.first().map(|w| w.0).unwrap_or([0, 0]))))
}

/// `x ↦ Π_D(x, z)` on the points of `D` (one adjoint solve).
pub fn hitting_column(solver: &LaplaceSolver, z: Point) -> Result<Vec<f64>, PotentialError> {
    let d = solver.domain();
    let mut rhs = vec![0.0; d.len()];
    for dz in NEIGHBORS {
        if let Some(i) = d.index_of(add(z, dz)) {
            rhs[i] = 1.0;
        }
    }
    Ok(solver.solve(&rhs)?)
}

/// Points of a finite set `K` with a nearest neighbour outside `K`.
pub fn inner_layer(k: &DiscreteDomain) -> Vec<Point> {
    k.points().iter().copied().filter(|p| NEIGHBORS.iter().any(|d| !k.contains(add(*p, *d)))).collect()
}

/// Solves `c + Σ_y ν(y) a(x − y) = f(x)` on `pts` with constraint `Σ ν = s`
/// (`s = 0`: bounded harmonic extension; `s = 1`, `f = 0`: equilibrium measure).
fn potential_system(pts: &[Point], f: &[f64], total: f64) -> Result<(Vec<f64>, f64), PotentialError> {
    let m = pts.len();
    if m > MAX_DENSE_CARRIER {
        return Err(PotentialError::CarrierTooLarge(m));
    }
    let a = Mat::<f64>::from_fn(m + 1, m + 1, |i, j| {
        if i < m && j < m {
            potential_kernel([pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]])
        } else if i == m && j == m {
            0.0
        } else {
            1.0
        }
    });
    let b = Mat::<f64>::from_fn(m + 1, 1, |i, _| if i < m { f[i] } else { total });
    let lu = a.partial_piv_lu();
    let x = lu.solve(b.as_ref());
    let nu = (0..m).map(|i| x[(i, 0)]).collect();
    Ok((nu, x[(m, 0)]))
}

/// `Π(∞,·)` for the co-finite domain `Z² ∖ K`: the harmonic measure of `K`
/// from infinity, supported on the points of `K` adjacent to its complement.
/// Obtained from `Σ_y a(x − y) μ(y) = cap(K)` on the support with `Σ μ = 1`.
pub fn poisson_kernel_at_infinity(hole: &DiscreteDomain) -> Result<PoissonKernel, PotentialError> {
    if hole.is_empty() {
        return Err(PotentialError::InfinityStartInvalid);
    }
    let support = inner_layer(hole);
    let zeros = vec![0.0; support.len()];
    let (mu, _neg_cap) = potential_system(&support, &zeros, 1.0)?;
    Ok(PoissonKernel { start: Start::Infinity, support, mass: mu })
}

/// `Π_D(start, ·)` for a symbolic domain: finite domains accept lattice
/// starts, co-finite domains accept [`Start::Infinity`].
pub fn poisson_kernel_set(d: &LatticeSet, start: Start, tol: &SolverTolerances) -> Result<PoissonKernel, PotentialError> {
    match start {
        Start::Infinity => {
            if !d.exterior_radius().is_finite() {
                return Err(PotentialError::InfinityStartInvalid);
            }
            let hole = d.clone().not().to_domain(None)?;
            poisson_kernel_at_infinity(&hole)
        }
        Start::Point(x) => {
            let dom = d.to_domain(None)?;
            let solver = LaplaceSolver::new(&dom, tol)?;
            poisson_kernel_with(&solver, x)
        }
    }
}

/// Far-start approximation of `Π(∞,·)` for `Z² ∖ K`: the walk starts
/// uniformly on `m` points of the circle of radius `rho`, the plane is
/// truncated at radius `2 rho`, and the mass that reaches `K` first is
/// renormalized.
pub fn far_start_kernel(hole: &DiscreteDomain, rho: f64, m: usize, tol: &SolverTolerances) -> Result<PoissonKernel, PotentialError> {
    if hole.is_empty() {
        return Err(PotentialError::InfinityStartInvalid);
    }
    let outer = ContinuumDomain::disk([0.0, 0.0], 2.0 * rho + 0.5).map_err(|_| PotentialError::InfinityStartInvalid)?;
    let set = LatticeSet::scaled(&outer, 0.0)?.minus(hole.as_set());
    let dom = set.to_domain(None)?;
    let solver = LaplaceSolver::new(&dom, tol)?;
    let starts: Vec<(Point, f64)> = (0..m)
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / m as f64;
            ([(rho * th.cos()).round() as i32, (rho * th.sin()).round() as i32], 1.0 / m as f64)
        })
        .collect();
    let full = averaged_poisson_kernel(&solver, &starts)?;
    let mut support = Vec::new();
    let mut mass = Vec::new();
    for (z, w) in full.support.iter().zip(&full.mass) {
        if hole.contains(*z) {
            support.push(*z);
            mass.push(*w);
        }
    }
    let tot: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|v| *v /= tot);
    Ok(PoissonKernel { start: Start::Infinity, support, mass })
}

/// Richardson combination of far-start estimates at `e^Δ r_K` and `e^{Δ+1} r_K`:
/// `H* = (H_{Δ+1} − e^{-1} H_Δ)/(1 − e^{-1})`, with `|H_{Δ+1} − H_Δ|` in TV as
/// the reported error.
pub fn far_start_richardson(hole: &DiscreteDomain, delta: f64, m: usize, tol: &SolverTolerances) -> Result<(PoissonKernel, f64), PotentialError> {
    let rk = hole.max_norm().max(1.0);
    let h0 = far_start_kernel(hole, rk * delta.exp(), m, tol)?;
    let h1 = far_start_kernel(hole, rk * (delta + 1.0).exp(), m, tol)?;
    let e = (-1.0f64).exp();
    let m0 = h0.as_map();
    let mass = h1.support.iter().zip(&h1.mass).map(|(z, v)| (v - e * m0.get(z).copied().unwrap_or(0.0)) / (1.0 - e)).collect();
    let err = h0.tv_distance(&h1);
    Ok((PoissonKernel { start: Start::Infinity, support: h1.support.clone(), mass }, err))
}

/// Rows `R` with `f̄(x_i) = Σ_j R[i][j] f(y_j)` for the bounded harmonic
/// extension from `carrier = {y_j}`, and the row for `f̄(∞)`.
pub fn extension_operator(carrier: &DiscreteDomain, targets: &[Point]) -> Result<(Vec<Vec<f64>>, Vec<f64>), PotentialError> {
    let pts = carrier.points();
    let m = pts.len();
    if m == 0 {
        return Err(PotentialError::EmptySet);
    }
    if m > MAX_DENSE_CARRIER {
        return Err(PotentialError::CarrierTooLarge(m));
    }
    let a = Mat::<f64>::from_fn(m + 1, m + 1, |i, j| match (i < m, j < m) {
        (true, true) => potential_kernel([pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]]),
        (false, false) => 0.0,
        _ => 1.0,
    });
    let rhs = Mat::<f64>::from_fn(m + 1, m, |i, j| if i == j { 1.0 } else { 0.0 });
    let x = a.partial_piv_lu().solve(rhs.as_ref());
    let inf: Vec<f64> = (0..m).map(|j| x[(m, j)]).collect();
    let rows = targets
        .iter()
        .map(|t| {
            if let Some(i) = carrier.index_of(*t) {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                return e;
            }
            let ak: Vec<f64> = pts.iter().map(|y| potential_kernel([t[0] - y[0], t[1] - y[1]])).collect();
            (0..m).map(|j| inf[j] + (0..m).map(|i| ak[i] * x[(i, j)]).sum::<f64>()).collect()
        })
        .collect();
    Ok((rows, inf))
}

/// The bounded harmonic extension `f̄` of `f` from a finite carrier `A`:
/// `f̄ = f` on `A`, discrete-harmonic on `Z² ∖ A`, bounded, with value at
/// infinity `f̄(∞)`. Represented as `f̄(x) = c + Σ_{y∈A} ν(y) a(x − y)` with
/// `Σ ν = 0`.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    carrier: DiscreteDomain,
    values: Vec<f64>,
    nu: Vec<f64>,
    at_infinity: f64,
}

impl HarmonicExtension {
    pub fn new(carrier: &DiscreteDomain, f: impl Fn(Point) -> f64) -> Result<HarmonicExtension, PotentialError> {
        if carrier.is_empty() {
            return Err(PotentialError::EmptySet);
        }
        let values: Vec<f64> = carrier.points().iter().map(|p| f(*p)).collect();
        Self::from_values(carrier, values)
    }

    pub fn from_values(carrier: &DiscreteDomain, values: Vec<f64>) -> Result<HarmonicExtension, PotentialError> {
        if carrier.is_empty() {
            return Err(PotentialError::EmptySet);
        }
        let first = values[0];
        if values.iter().all(|v| *v == first) {
            return Ok(HarmonicExtension { carrier: carrier.clone(), nu: vec![0.0; values.len()], values, at_infinity: first });
        }
        let (nu, c) = potential_system(carrier.points(), &values, 0.0)?;
        Ok(HarmonicExtension { carrier: carrier.clone(), values, nu, at_infinity: c })
    }

    pub fn carrier(&self) -> &DiscreteDomain {
        &self.carrier
    }

    pub fn is_constant(&self) -> bool {
        self.nu.iter().all(|v| *v == 0.0)
    }

    pub fn eval(&self, x: Point) -> f64 {
        if let Some(i) = self.carrier.index_of(x) {
            return self.values[i];
        }
        if self.is_constant() {
            return self.at_infinity;
        }
        self.at_infinity
            + self
                .carrier
                .points()
                .iter()
                .zip(&self.nu)
                .map(|(y, v)| v * potential_kernel([x[0] - y[0], x[1] - y[1]]))
                .sum::<f64>()
    }

    pub fn eval_start(&self, s: Start) -> f64 {
        match s {
            Start::Point(x) => self.eval(x),
            Start::Infinity => self.at_infinity,
        }
    }

    /// `f̄(∞)`.
    pub fn at_infinity(&self) -> f64 {
        self.at_infinity
    }

    /// Far-start estimate of `f̄(∞)` with its Richardson error estimate.
    pub fn at_infinity_far_start(&self, delta: f64, m: usize, tol: &SolverTolerances) -> Result<(f64, f64), PotentialError> {
        let (h, err) = far_start_richardson(&self.carrier, delta, m, tol)?;
        let spread = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok((h.expectation(|z| self.eval(z)), 2.0 * err * spread))
    }

    /// `(P f̄)(x) − f̄(x)`.
    pub fn laplacian_at(&self, x: Point) -> f64 {
        NEIGHBORS.iter().map(|d| self.eval(add(x, *d))).sum::<f64>() / 4.0 - self.eval(x)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)))
    }
}

/// `max − min` of `f` over `S` (and over `∞` when `include_infinity`).
pub fn oscillation(f: impl Fn(Start) -> f64, s: &[Point], include_infinity: bool) -> Result<f64, PotentialError> {
    let mut it: Vec<f64> = s.iter().map(|p| f(Start::Point(*p))).collect();
    if include_infinity {
        it.push(f(Start::Infinity));
    }
    oscillation_of(it)
}

pub fn oscillation_of(values: impl IntoIterator<Item = f64>) -> Result<f64, PotentialError> {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return Err(PotentialError::EmptySet);
    }
    Ok(hi - lo)
}

/// `P_x(τ^{U_n} ≤ τ^{V^-_k})` for every `x ∈ U_n ∩ V^-_k`.
pub struct RuinField {
    pub domain: DiscreteDomain,
    pub values: Vec<f64>,
    pub method: &'static str,
}

impl RuinField {
    pub fn at(&self, x: Point) -> Option<f64> {
        self.domain.index_of(x).map(|i| self.values[i])
    }
}

pub fn ruin_field(u: &ContinuumDomain, n: f64, v: &ContinuumDomain, k: f64, tol: &SolverTolerances) -> Result<RuinField, PotentialError> {
    let domain = crate::lattice::annulus_domain(u, n, v, k)?;
    let un = LatticeSet::scaled(u, n)?;
    let solver = LaplaceSolver::new(&domain, tol)?;
    let values = solver.dirichlet(|q| if un.contains(q) { 0.0 } else { 1.0 })?;
    Ok(RuinField { domain, values, method: solver.method() })
}

pub fn ruin_probability(u: &ContinuumDomain, n: f64, v: &ContinuumDomain, k: f64, x: Point) -> Result<f64, PotentialError> {
    let f = ruin_field(u, n, v, k, &SolverTolerances::default())?;
    f.at(x).ok_or(PotentialError::PointOutside)
}

/// `(log|x| − k)/(n − k)`.
pub fn ruin_asymptotic(x: Point, n: f64, k: f64) -> f64 {
    (norm(x).ln() - k) / (n - k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_kernels() {
        let d = DiscreteDomain::from_points(vec![[0, 0]]);
        let pk = poisson_kernel(&d, [0, 0]).unwrap();
        assert_eq!(pk.support.len(), 4);
        assert!(pk.mass.iter().all(|m| (m - 0.25).abs() < 1e-15));
        assert_eq!(green(&d, [0, 0], [0, 0], GreenMethod::Solve).unwrap(), 1.0);
        let pair = DiscreteDomain::from_points(vec![[0, 0], [1, 0]]);
        assert!((green(&pair, [0, 0], [0, 0], GreenMethod::Solve).unwrap() - 16.0 / 15.0).abs() < 1e-14);
        assert_eq!(green(&pair, [0, 0], [5, 0], GreenMethod::Solve), Err(PotentialError::PointOutside));
    }

    #[test]
    fn harmonic_measure_of_small_holes() {
        let one = DiscreteDomain::from_points(vec![[0, 0]]);
        let h = poisson_kernel_at_infinity(&one).unwrap();
        assert_eq!(h.mass, vec![1.0]);
        let two = DiscreteDomain::from_points(vec![[0, 0], [1, 0]]);
        let h = poisson_kernel_at_infinity(&two).unwrap();
        assert!((h.mass[0] - 0.5).abs() < 1e-14 && (h.mass[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn harmonic_extension_examples() {
        let d = DiscreteDomain::from_points(vec![[0, 0]]).outer_boundary();
        let ext = HarmonicExtension::new(&d, |p| if p == [1, 0] { 1.0 } else { 0.0 }).unwrap();
        assert!((ext.eval([0, 0]) - 0.25).abs() < 1e-13);
        assert!(ext.laplacian_at([0, 0]).abs() < 1e-13);
        assert!(ext.laplacian_at([7, -3]).abs() < 1e-12);
        let c = HarmonicExtension::new(&d, |_| 2.5).unwrap();
        assert_eq!(c.eval([100, 3]), 2.5);
        assert_eq!(c.at_infinity(), 2.5);
        assert!(PotentialError::InfinityStartInvalid.to_string() == "infinity start invalid");
    }

    #[test]
    fn extension_operator_matches_extension() {
        let ring = DiscreteDomain::from_points((-3..=3).flat_map(|x| (-3..=3).map(move |y| [x, y])).collect()).outer_boundary();
        let f = |p: Point| (p[0] as f64).sin() + 0.3 * p[1] as f64;
        let ext = HarmonicExtension::new(&ring, f).unwrap();
        let targets = [[9, 1], [-5, 6], [4, 0], [30, -30]];
        let (rows, inf) = extension_operator(&ring, &targets).unwrap();
        let vals: Vec<f64> = ring.points().iter().map(|p| f(*p)).collect();
        let dot = |r: &[f64]| r.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>();
        for (t, r) in targets.iter().zip(&rows) {
            assert!((dot(r) - ext.eval(*t)).abs() < 1e-10, "{t:?}");
        }
        assert!((dot(&inf) - ext.at_infinity()).abs() < 1e-10);
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillation_of([1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(oscillation_of([0.0, 3.0]).unwrap(), 3.0);
        assert!(oscillation_of(std::iter::empty()).is_err());
    }
}
