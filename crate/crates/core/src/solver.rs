//! Linear solves with the lattice Dirichlet Laplacian `L_D = 4I − A_D`, where
//! `A_D` is the nearest-neighbour adjacency restricted to `D`.
//!
//! `I − P_D = L_D / 4`, so the Green function is `G_D = 4 L_D^{-1}`.
//! Domains up to [`SolverTolerances::direct_max_sites`] sites use a sparse
//! Cholesky factorization; larger ones use conjugate gradients on the masked
//! bounding box, preconditioned by a geometric multigrid V-cycle.

use crate::lattice::{add, DiscreteDomain, Point, NEIGHBORS};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("point outside domain")]
    PointOutside,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("conjugate gradients stalled after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid solver tolerances: {0}")]
    InvalidTolerances(String),
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// Solver tolerances; serialized as a JSON object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverTolerances {
    /// Largest domain factorized directly.
    pub direct_max_sites: usize,
    /// Relative residual `‖b − Lx‖₂ / ‖b‖₂` required from the iterative path.
    pub cg_rel_residual: f64,
    pub cg_max_iterations: usize,
    /// Multigrid coarsening stops at this many active sites.
    pub coarsest_sites: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances { direct_max_sites: 200_000, cg_rel_residual: 1e-10, cg_max_iterations: 400, coarsest_sites: 4096 }
    }
}

impl SolverTolerances {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.cg_rel_residual > 0.0 && self.cg_rel_residual <= 1e-2) {
            return Err(SolverError::InvalidTolerances(format!("cg_rel_residual = {} not in (0, 1e-2]", self.cg_rel_residual)));
        }
        if self.cg_max_iterations == 0 || self.cg_max_iterations > 1_000_000 {
            return Err(SolverError::InvalidTolerances("cg_max_iterations must be in 1..=1e6".into()));
        }
        if self.coarsest_sites == 0 || self.coarsest_sites > 1_000_000 {
            return Err(SolverError::InvalidTolerances("coarsest_sites must be in 1..=1e6".into()));
        }
        if self.direct_max_sites > 20_000_000 {
            return Err(SolverError::InvalidTolerances("direct_max_sites must be <= 2e7".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<SolverTolerances, SolverError> {
        let t: SolverTolerances = serde_json::from_str(s).map_err(|e| SolverError::InvalidTolerances(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tolerances serialize")
    }
}

/// Outcome of one iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn factorize(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<faer::sparse::linalg::solvers::Llt<usize, f64>, SolverError> {
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, triplets)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    a.sp_cholesky(Side::Lower).map_err(|e| SolverError::Factorization(format!("{e:?}")))
}

fn laplacian_triplets(points: &[Point], index: impl Fn(Point) -> Option<usize>) -> Vec<Triplet<usize, usize, f64>> {
    let mut t = Vec::with_capacity(points.len() * 3);
    for (i, p) in points.iter().enumerate() {
        t.push(Triplet::new(i, i, 4.0));
        for d in NEIGHBORS {
            if let Some(j) = index(add(*p, d)) {
                // Lower triangle only is read by the factorization, but both are supplied.
                t.push(Triplet::new(i, j, -1.0));
            }
        }
    }
    t
}

/// Column width of direct block solves.
pub const SOLVE_WIDTH: usize = 32;

enum Backend {
    Empty,
    Direct(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Multigrid(Box<Multigrid>),
}

/// Solver for `L_D x = b` on a fixed domain.
pub struct LaplaceSolver {
    domain: DiscreteDomain,
    tol: SolverTolerances,
    backend: Backend,
}

impl LaplaceSolver {
    pub fn new(domain: &DiscreteDomain, tol: &SolverTolerances) -> Result<LaplaceSolver, SolverError> {
        tol.validate()?;
        let backend = if domain.is_empty() {
            Backend::Empty
        } else if domain.len() <= tol.direct_max_sites {
            let t = laplacian_triplets(domain.points(), |p| domain.index_of(p));
            Backend::Direct(factorize(domain.len(), &t)?)
        } else {
            Backend::Multigrid(Box::new(Multigrid::new(domain, tol)?))
        };
        Ok(LaplaceSolver { domain: domain.clone(), tol: *tol, backend })
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn tolerances(&self) -> &SolverTolerances {
        &self.tol
    }

    pub fn method(&self) -> &'static str {
        match self.backend {
            Backend::Empty => "empty",
            Backend::Direct(_) => "sparse-cholesky",
            Backend::Multigrid(_) => "mg-pcg",
        }
    }

    /// `y = L_D x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let pts = self.domain.points();
        pts.iter()
            .enumerate()
            .map(|(i, p)| {
                let mut v = 4.0 * x[i];
                for d in NEIGHBORS {
                    if let Some(j) = self.domain.index_of(add(*p, d)) {
                        v -= x[j];
                    }
                }
                v
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.solve_with_stats(rhs).map(|(x, _)| x)
    }

    pub fn solve_with_stats(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats), SolverError> {
        if rhs.len() != self.len() {
            return Err(SolverError::Dimension { got: rhs.len(), expected: self.len() });
        }
        match &self.backend {
            Backend::Empty => Ok((Vec::new(), SolveStats { iterations: 0, rel_residual: 0.0 })),
            Backend::Direct(llt) => {
                let mut x = rhs.to_vec();
                let n = x.len();
                llt.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut x, n, 1));
                Ok((x, SolveStats { iterations: 0, rel_residual: 0.0 }))
            }
            Backend::Multigrid(mg) => mg.solve(rhs, &self.tol),
        }
    }

    /// Solves for several right-hand sides; the direct path batches them.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolverError> {
        for r in rhs {
            if r.len() != self.len() {
                return Err(SolverError::Dimension { got: r.len(), expected: self.len() });
            }
        }
        match &self.backend {
            Backend::Direct(llt) if !rhs.is_empty() => {
                let n = self.len();
                let mut m = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
                llt.solve_in_place(m.as_mut());
                Ok((0..rhs.len()).map(|j| m.col(j).iter().copied().collect()).collect())
            }
            _ => rhs.iter().map(|r| self.solve(r)).collect(),
        }
    }

    /// Column-major batch solve in place: `buf` holds `ncols` columns of length `len()`.
    pub fn solve_block_in_place(&self, buf: &mut [f64], ncols: usize) -> Result<(), SolverError> {
        let n = self.len();
        if buf.len() != n * ncols {
            return Err(SolverError::Dimension { got: buf.len(), expected: n * ncols });
        }
        match &self.backend {
            Backend::Empty => Ok(()),
            Backend::Direct(llt) => {
                // Fixed-width chunks keep each column's arithmetic independent of `ncols`.
                let mut pad = vec![0.0; n * SOLVE_WIDTH];
                for chunk in buf.chunks_mut(n * SOLVE_WIDTH) {
                    if chunk.len() == pad.len() {
                        llt.solve_in_place(faer::MatMut::from_column_major_slice_mut(chunk, n, SOLVE_WIDTH));
                    } else {
                        pad.fill(0.0);
                        pad[..chunk.len()].copy_from_slice(chunk);
                        llt.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut pad, n, SOLVE_WIDTH));
                        chunk.copy_from_slice(&pad[..chunk.len()]);
                    }
                }
                Ok(())
            }
            Backend::Multigrid(mg) => {
                for c in buf.chunks_mut(n) {
                    let (x, _) = mg.solve(c, &self.tol)?;
                    c.copy_from_slice(&x);
                }
                Ok(())
            }
        }
    }

    /// Right-hand side carrying Dirichlet data: `b(x) = Σ_{y ∼ x, y ∉ D} f(y)`.
    pub fn boundary_rhs(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.domain
            .points()
            .iter()
            .map(|p| {
                NEIGHBORS
                    .iter()
                    .map(|d| add(*p, *d))
                    .filter(|q| !self.domain.contains(*q))
                    .map(&f)
                    .sum()
            })
            .collect()
    }

    /// The harmonic function on `D` with boundary values `f` on `∂D`.
    pub fn dirichlet(&self, f: impl Fn(Point) -> f64) -> Result<Vec<f64>, SolverError> {
        let b = self.boundary_rhs(f);
        self.solve(&b)
    }
}

// ---------------------------------------------------------------------------
// Multigrid-preconditioned conjugate gradients.

struct Level {
    nx: usize,
    ny: usize,
    mask: Vec<bool>,
    x: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl Level {
    fn new(nx: usize, ny: usize, mask: Vec<bool>) -> Level {
        let n = nx * ny;
        Level { nx, ny, mask, x: vec![0.0; n], b: vec![0.0; n], r: vec![0.0; n] }
    }

    fn active(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// One Gauss–Seidel sweep over sites with `(ix + iy) % 2 == color`.
    fn sweep(&mut self, color: usize) {
        let nx = self.nx;
        for iy in 1..self.ny - 1 {
            let start = 1 + (iy + 1 + color) % 2;
            let row = iy * nx;
            let mut ix = start;
            while ix < nx - 1 {
                let i = row + ix;
                if self.mask[i] {
                    let mut s = self.b[i];
                    for j in [i - 1, i + 1, i - nx, i + nx] {
                        if self.mask[j] {
                            s += self.x[j];
                        }
                    }
                    self.x[i] = 0.25 * s;
                }
                ix += 2;
            }
        }
    }

    fn residual(&mut self) {
        let nx = self.nx;
        for iy in 1..self.ny - 1 {
            for ix in 1..nx - 1 {
                let i = iy * nx + ix;
                if self.mask[i] {
                    let mut s = self.b[i] - 4.0 * self.x[i];
                    for j in [i - 1, i + 1, i - nx, i + nx] {
                        if self.mask[j] {
                            s += self.x[j];
                        }
                    }
                    self.r[i] = s;
                } else {
                    self.r[i] = 0.0;
                }
            }
        }
    }
}

struct Multigrid {
    /// Box index of each domain point on the finest level.
    map: Vec<usize>,
    levels: std::sync::Mutex<Vec<Level>>,
    coarse: faer::sparse::linalg::solvers::Llt<usize, f64>,
    coarse_index: Vec<u32>,
    coarse_len: usize,
}

const SMOOTH: usize = 2;

impl Multigrid {
    fn new(domain: &DiscreteDomain, tol: &SolverTolerances) -> Result<Multigrid, SolverError> {
        let pts = domain.points();
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for p in pts {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        let x0 = xmin - 1;
        let y0 = ymin - 1;
        let nx = (xmax - x0 + 2) as usize;
        let ny = (ymax - y0 + 2) as usize;
        let mut mask = vec![false; nx * ny];
        let map: Vec<usize> = pts
            .iter()
            .map(|p| {
                let i = (p[1] - y0) as usize * nx + (p[0] - x0) as usize;
                mask[i] = true;
                i
            })
            .collect();
        let mut finest = Level::new(nx, ny, mask);
        finest.x = Vec::new();
        finest.b = Vec::new();
        let mut levels = vec![finest];
        loop {
            let f = levels.last().unwrap();
            if f.active() <= tol.coarsest_sites || f.nx < 8 || f.ny < 8 {
                break;
            }
            let (cx, cy) = (f.nx / 2 + 1, f.ny / 2 + 1);
            let mut cm = vec![false; cx * cy];
            for jy in 1..cy - 1 {
                for jx in 1..cx - 1 {
                    let (fx, fy) = (2 * jx, 2 * jy);
                    if fx < f.nx && fy < f.ny {
                        cm[jy * cx + jx] = f.mask[fy * f.nx + fx];
                    }
                }
            }
            let c = Level::new(cx, cy, cm);
            if c.active() == 0 {
                break;
            }
            levels.push(c);
        }
        let last = levels.last().unwrap();
        let mut coarse_index = vec![u32::MAX; last.nx * last.ny];
        let mut cpts = Vec::new();
        for (i, slot) in coarse_index.iter_mut().enumerate() {
            if last.mask[i] {
                *slot = cpts.len() as u32;
                cpts.push([(i % last.nx) as i32, (i / last.nx) as i32]);
            }
        }
        let (lnx, lny) = (last.nx as i32, last.ny as i32);
        let t = laplacian_triplets(&cpts, |p| {
            if p[0] < 0 || p[1] < 0 || p[0] >= lnx || p[1] >= lny {
                return None;
            }
            let v = coarse_index[(p[1] * lnx + p[0]) as usize];
            (v != u32::MAX).then_some(v as usize)
        });
        let coarse = factorize(cpts.len(), &t)?;
        Ok(Multigrid {
            map,
            levels: std::sync::Mutex::new(levels),
            coarse,
            coarse_index,
            coarse_len: cpts.len(),
        })
    }

    fn vcycle(&self, levels: &mut [Level], l: usize) {
        let last = levels.len() - 1;
        if l == last {
            let lev = &mut levels[l];
            let mut rhs = vec![0.0; self.coarse_len];
            for (i, &k) in self.coarse_index.iter().enumerate() {
                if k != u32::MAX {
                    rhs[k as usize] = lev.b[i];
                }
            }
            let n = rhs.len();
            self.coarse.solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut rhs, n, 1));
            for (i, &k) in self.coarse_index.iter().enumerate() {
                lev.x[i] = if k != u32::MAX { rhs[k as usize] } else { 0.0 };
            }
            return;
        }
        {
            let f = &mut levels[l];
            f.x.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..SMOOTH {
                f.sweep(0);
                f.sweep(1);
            }
            f.residual();
        }
        let (head, tail) = levels.split_at_mut(l + 1);
        let f = &mut head[l];
        let c = &mut tail[0];
        // b_c = P^T r_f with bilinear P.
        c.b.iter_mut().for_each(|v| *v = 0.0);
        for jy in 1..c.ny - 1 {
            for jx in 1..c.nx - 1 {
                let ci = jy * c.nx + jx;
                if !c.mask[ci] {
                    continue;
                }
                let mut s = 0.0;
                for dy in -1i64..=1 {
                    let fy = 2 * jy as i64 + dy;
                    if fy <= 0 || fy >= f.ny as i64 - 1 {
                        continue;
                    }
                    let wy = if dy == 0 { 1.0 } else { 0.5 };
                    for dx in -1i64..=1 {
                        let fx = 2 * jx as i64 + dx;
                        if fx <= 0 || fx >= f.nx as i64 - 1 {
                            continue;
                        }
                        let wx = if dx == 0 { 1.0 } else { 0.5 };
                        s += wx * wy * f.r[fy as usize * f.nx + fx as usize];
                    }
                }
                c.b[ci] = s;
            }
        }
        self.vcycle(tail, 0);
        let c = &tail[0];
        // x_f += P x_c on active fine sites.
        let taps = |i: usize| -> ([(usize, f64); 2], usize) {
            if i % 2 == 0 {
                ([(i / 2, 1.0), (0, 0.0)], 1)
            } else {
                ([(i / 2, 0.5), (i / 2 + 1, 0.5)], 2)
            }
        };
        for iy in 1..f.ny - 1 {
            let (ty, ny) = taps(iy);
            for ix in 1..f.nx - 1 {
                let i = iy * f.nx + ix;
                if !f.mask[i] {
                    continue;
                }
                let (tx, nxt) = taps(ix);
                let mut s = 0.0;
                for &(jy, wy) in &ty[..ny] {
                    for &(jx, wx) in &tx[..nxt] {
                        s += wx * wy * c.x[jy * c.nx + jx];
                    }
                }
                f.x[i] += s;
            }
        }
        for _ in 0..SMOOTH {
            f.sweep(1);
            f.sweep(0);
        }
    }

    /// `z = M^{-1} r` on the finest box layout. The finest level borrows
    /// `r` and `z` instead of keeping its own right-hand side and iterate.
    fn precondition(&self, levels: &mut [Level], r: &mut Vec<f64>, z: &mut Vec<f64>) {
        std::mem::swap(&mut levels[0].b, r);
        std::mem::swap(&mut levels[0].x, z);
        self.vcycle(levels, 0);
        std::mem::swap(&mut levels[0].b, r);
        std::mem::swap(&mut levels[0].x, z);
    }

    fn apply_box(levels: &[Level], x: &[f64], y: &mut [f64]) {
        let f = &levels[0];
        let nx = f.nx;
        for iy in 1..f.ny - 1 {
            for ix in 1..nx - 1 {
                let i = iy * nx + ix;
                if f.mask[i] {
                    let mut s = 4.0 * x[i];
                    for j in [i - 1, i + 1, i - nx, i + nx] {
                        if f.mask[j] {
                            s -= x[j];
                        }
                    }
                    y[i] = s;
                }
            }
        }
    }

    fn solve(&self, rhs: &[f64], tol: &SolverTolerances) -> Result<(Vec<f64>, SolveStats), SolverError> {
        let mut guard = self.levels.lock().unwrap_or_else(|e| e.into_inner());
        let levels = guard.as_mut_slice();
        let n = levels[0].nx * levels[0].ny;
        let mut b = vec![0.0; n];
        for (k, &i) in self.map.iter().enumerate() {
            b[i] = rhs[k];
        }
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            return Ok((vec![0.0; rhs.len()], SolveStats { iterations: 0, rel_residual: 0.0 }));
        }
        let mut x = vec![0.0; n];
        let mut r = b;
        let mut z = vec![0.0; n];
        self.precondition(levels, &mut r, &mut z);
        let mut p = z.clone();
        let mut q = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut it = 0;
        let mut rel = 1.0;
        while it < tol.cg_max_iterations {
            Self::apply_box(levels, &p, &mut q);
            let alpha = rz / dot(&p, &q);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            it += 1;
            rel = dot(&r, &r).sqrt() / bnorm;
            if rel <= tol.cg_rel_residual {
                break;
            }
            self.precondition(levels, &mut r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if rel > tol.cg_rel_residual {
            return Err(SolverError::NotConverged { iterations: it, residual: rel });
        }
        let out = self.map.iter().map(|&i| x[i]).collect();
        Ok((out, SolveStats { iterations: it, rel_residual: rel }))
    }
}

/// Dot product with a fixed summation order.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::annulus_domain;
    use crate::shape::ContinuumDomain;

    #[test]
    fn singleton_and_pair() {
        let d = DiscreteDomain::from_points(vec![[0, 0]]);
        let s = LaplaceSolver::new(&d, &SolverTolerances::default()).unwrap();
        assert_eq!(s.solve(&[4.0]).unwrap(), vec![1.0]);
        let d = DiscreteDomain::from_points(vec![[0, 0], [1, 0]]);
        let s = LaplaceSolver::new(&d, &SolverTolerances::default()).unwrap();
        let g = s.solve(&[4.0, 0.0]).unwrap();
        assert!((g[0] - 16.0 / 15.0).abs() < 1e-14);
        assert!((g[1] - 4.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn multigrid_matches_direct() {
        let b = ContinuumDomain::unit_disk();
        let d = annulus_domain(&b, 3.5, &b, 0.0).unwrap();
        let direct = LaplaceSolver::new(&d, &SolverTolerances::default()).unwrap();
        let tol = SolverTolerances { direct_max_sites: 0, coarsest_sites: 64, ..Default::default() };
        let mg = LaplaceSolver::new(&d, &tol).unwrap();
        assert_eq!(mg.method(), "mg-pcg");
        let rhs: Vec<f64> = (0..d.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let x1 = direct.solve(&rhs).unwrap();
        let (x2, stats) = mg.solve_with_stats(&rhs).unwrap();
        assert!(stats.iterations < 40, "{stats:?}");
        let scale = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn tolerances_json_round_trip() {
        let t = SolverTolerances::default();
        assert_eq!(SolverTolerances::from_json(&t.to_json()).unwrap(), t);
        assert!(SolverTolerances::from_json(r#"{"cg_rel_residual": 0.5}"#).is_err());
        assert!(SolverTolerances::from_json(r#"{"bogus": 1}"#).is_err());
        let partial = SolverTolerances::from_json(r#"{"cg_rel_residual": 1e-8}"#).unwrap();
        assert_eq!(partial.direct_max_sites, 200_000);
    }
}
