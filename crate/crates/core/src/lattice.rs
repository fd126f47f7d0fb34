//! Lattice discretizations `W_ℓ = {x ∈ Z² : d(e^{-ℓ}x, W^c) > e^{-ℓ}/2}` and
//! finite subsets of `Z²`.

use crate::shape::{ContinuumDomain, Sdf, Shape};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type Point = [i32; 2];

/// The four nearest-neighbour offsets.
pub const NEIGHBORS: [Point; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];

/// Relative guard band applied to the discretization threshold.
pub const GUARD: f64 = 1e-12;

/// Largest half-width of a materialization box.
const MAX_HALF_WIDTH: f64 = 1.0e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("unbounded discretization")]
    Unbounded,
    #[error("degenerate annulus")]
    DegenerateAnnulus,
    #[error("invalid scale {0}: must be finite and >= 0")]
    InvalidScale(f64),
    #[error("invalid class parameters: {0}")]
    InvalidParams(String),
    #[error("discretization too large: half-width {0:.0} exceeds limit")]
    TooLarge(f64),
}

#[inline]
pub fn add(p: Point, q: Point) -> Point {
    [p[0] + q[0], p[1] + q[1]]
}

#[inline]
pub fn norm(p: Point) -> f64 {
    (p[0] as f64).hypot(p[1] as f64)
}

fn row_major(a: &Point, b: &Point) -> std::cmp::Ordering {
    (a[1], a[0]).cmp(&(b[1], b[0]))
}

/// `W` scaled to level `ℓ`, ready for the lattice membership test.
pub struct ScaledShape {
    domain: ContinuumDomain,
    level: f64,
    sdf: Sdf,
    outer: f64,
    exterior: f64,
}

impl ScaledShape {
    pub fn new(domain: &ContinuumDomain, level: f64) -> Result<ScaledShape, LatticeError> {
        if !level.is_finite() || level < 0.0 {
            return Err(LatticeError::InvalidScale(level));
        }
        let factor = level.exp();
        let rad = domain.radial_scaled(factor);
        Ok(ScaledShape {
            domain: domain.clone(),
            level,
            sdf: domain.compile_scaled(factor),
            outer: rad.outer - 0.5,
            exterior: rad.exterior + 1.0,
        })
    }

    /// `d(e^{-ℓ}p, W^c) > e^{-ℓ}/2`, rejecting points within the guard band.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        let x = [p[0] as f64, p[1] as f64];
        self.sdf.eval(x) > 0.5 + GUARD * (1.0 + norm(p))
    }

    pub fn domain(&self) -> &ContinuumDomain {
        &self.domain
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

impl fmt::Debug for ScaledShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})_{}", self.domain.to_json(), self.level)
    }
}

/// A possibly infinite subset of `Z²` described symbolically.
#[derive(Clone, Debug)]
pub enum LatticeSet {
    Scaled(Arc<ScaledShape>),
    /// Sorted (row-major) explicit points.
    Points(Arc<Vec<Point>>),
    Not(Box<LatticeSet>),
    And(Vec<LatticeSet>),
    Or(Vec<LatticeSet>),
    /// `{x ∉ S : x ∼ y for some y ∈ S}`.
    Boundary(Box<LatticeSet>),
}

impl LatticeSet {
    pub fn scaled(domain: &ContinuumDomain, level: f64) -> Result<LatticeSet, LatticeError> {
        Ok(LatticeSet::Scaled(Arc::new(ScaledShape::new(domain, level)?)))
    }

    pub fn points(mut pts: Vec<Point>) -> LatticeSet {
        pts.sort_by(row_major);
        pts.dedup();
        LatticeSet::Points(Arc::new(pts))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> LatticeSet {
        LatticeSet::Not(Box::new(self))
    }

    pub fn and(self, other: LatticeSet) -> LatticeSet {
        LatticeSet::And(vec![self, other])
    }

    pub fn or(self, other: LatticeSet) -> LatticeSet {
        LatticeSet::Or(vec![self, other])
    }

    pub fn minus(self, other: LatticeSet) -> LatticeSet {
        LatticeSet::And(vec![self, other.not()])
    }

    pub fn boundary(self) -> LatticeSet {
        LatticeSet::Boundary(Box::new(self))
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            LatticeSet::Scaled(s) => s.contains(p),
            LatticeSet::Points(v) => v.binary_search_by(|q| row_major(q, &p)).is_ok(),
            LatticeSet::Not(s) => !s.contains(p),
            LatticeSet::And(v) => v.iter().all(|s| s.contains(p)),
            LatticeSet::Or(v) => v.iter().any(|s| s.contains(p)),
            LatticeSet::Boundary(s) => !s.contains(p) && NEIGHBORS.iter().any(|d| s.contains(add(p, *d))),
        }
    }

    /// Every member satisfies `|p| <= outer_radius()`.
    pub fn outer_radius(&self) -> f64 {
        match self {
            LatticeSet::Scaled(s) => s.outer,
            LatticeSet::Points(v) => v.iter().map(|p| norm(*p)).fold(f64::NEG_INFINITY, f64::max),
            LatticeSet::Not(s) => s.exterior_radius(),
            LatticeSet::And(v) => v.iter().map(Self::outer_radius).fold(f64::INFINITY, f64::min),
            LatticeSet::Or(v) => v.iter().map(Self::outer_radius).fold(f64::NEG_INFINITY, f64::max),
            LatticeSet::Boundary(s) => {
                let r = s.outer_radius();
                if r.is_finite() {
                    r + 1.0
                } else {
                    s.exterior_radius()
                }
            }
        }
    }

    /// Every lattice point with `|p| > exterior_radius()` is a member.
    pub fn exterior_radius(&self) -> f64 {
        match self {
            LatticeSet::Scaled(s) => s.exterior,
            LatticeSet::Points(_) => f64::INFINITY,
            LatticeSet::Not(s) => s.outer_radius(),
            LatticeSet::And(v) => v.iter().map(Self::exterior_radius).fold(f64::NEG_INFINITY, f64::max),
            LatticeSet::Or(v) => v.iter().map(Self::exterior_radius).fold(f64::INFINITY, f64::min),
            LatticeSet::Boundary(_) => f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.outer_radius().is_finite()
    }

    /// Enumerates the (finite) set in row-major order.
    pub fn materialize(&self) -> Result<Vec<Point>, LatticeError> {
        let r = self.outer_radius();
        if !r.is_finite() {
            return Err(LatticeError::Unbounded);
        }
        if r < 0.0 {
            return Ok(Vec::new());
        }
        if r > MAX_HALF_WIDTH {
            return Err(LatticeError::TooLarge(r));
        }
        if let LatticeSet::Points(v) = self {
            return Ok(v.as_ref().clone());
        }
        let h = r.floor() as i32;
        let rows: Vec<Vec<Point>> = (-h..=h)
            .into_par_iter()
            .map(|y| {
                let span = ((r * r - (y as f64) * (y as f64)).max(0.0)).sqrt().floor() as i32 + 1;
                (-span.min(h)..=span.min(h)).map(|x| [x, y]).filter(|p| self.contains(*p)).collect()
            })
            .collect();
        Ok(rows.concat())
    }

    pub fn to_domain(&self, scale: Option<f64>) -> Result<DiscreteDomain, LatticeError> {
        let pts = self.materialize()?;
        Ok(DiscreteDomain::from_sorted(pts, scale, self.clone()))
    }
}

#[derive(Clone, Debug)]
enum Index {
    Dense { x0: i32, y0: i32, w: usize, h: usize, grid: Vec<u32> },
    Sorted,
}

/// A finite subset of `Z²`, sorted row-major, with a symbolic provenance.
#[derive(Clone)]
pub struct DiscreteDomain {
    points: Arc<Vec<Point>>,
    scale: Option<f64>,
    provenance: LatticeSet,
    index: Arc<Index>,
}

impl fmt::Debug for DiscreteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteDomain").field("len", &self.len()).field("scale", &self.scale).finish()
    }
}

impl PartialEq for DiscreteDomain {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl DiscreteDomain {
    fn from_sorted(points: Vec<Point>, scale: Option<f64>, provenance: LatticeSet) -> DiscreteDomain {
        let index = Arc::new(Self::build_index(&points));
        DiscreteDomain { points: Arc::new(points), scale, provenance, index }
    }

    /// Arbitrary finite point set; sorts and deduplicates.
    pub fn from_points(mut pts: Vec<Point>) -> DiscreteDomain {
        pts.sort_by(row_major);
        pts.dedup();
        let prov = LatticeSet::Points(Arc::new(pts.clone()));
        Self::from_sorted(pts, None, prov)
    }

    pub fn empty() -> DiscreteDomain {
        Self::from_points(Vec::new())
    }

    fn build_index(points: &[Point]) -> Index {
        if points.is_empty() {
            return Index::Sorted;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let w = (x1 as i64 - x0 as i64 + 1) as usize;
        let h = (y1 as i64 - y0 as i64 + 1) as usize;
        let area = w.saturating_mul(h);
        if area <= 8 * points.len() + 4096 && points.len() < u32::MAX as usize {
            let mut grid = vec![u32::MAX; area];
            for (i, p) in points.iter().enumerate() {
                grid[(p[1] - y0) as usize * w + (p[0] - x0) as usize] = i as u32;
            }
            Index::Dense { x0, y0, w, h, grid }
        } else {
            Index::Sorted
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn provenance(&self) -> &LatticeSet {
        &self.provenance
    }

    /// Position of `p` in [`points`](Self::points).
    #[inline]
    pub fn index_of(&self, p: Point) -> Option<usize> {
        match self.index.as_ref() {
            Index::Dense { x0, y0, w, h, grid } => {
                let dx = p[0] as i64 - *x0 as i64;
                let dy = p[1] as i64 - *y0 as i64;
                if dx < 0 || dy < 0 || dx >= *w as i64 || dy >= *h as i64 {
                    return None;
                }
                let v = grid[dy as usize * w + dx as usize];
                (v != u32::MAX).then_some(v as usize)
            }
            Index::Sorted => self.points.binary_search_by(|q| row_major(q, &p)).ok(),
        }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.index_of(p).is_some()
    }

    /// As a symbolic set backed by the explicit point list.
    pub fn as_set(&self) -> LatticeSet {
        LatticeSet::Points(self.points.clone())
    }

    /// `∂D = {x ∉ D : |x − y| = 1 for some y ∈ D}`.
    pub fn outer_boundary(&self) -> DiscreteDomain {
        let mut out: Vec<Point> = Vec::new();
        for p in self.points.iter() {
            for d in NEIGHBORS {
                let q = add(*p, d);
                if !self.contains(q) {
                    out.push(q);
                }
            }
        }
        out.sort_by(row_major);
        out.dedup();
        let prov = self.provenance.clone().boundary();
        Self::from_sorted(out, self.scale, prov)
    }

    pub fn intersect(&self, other: &DiscreteDomain) -> DiscreteDomain {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let pts: Vec<Point> = small.points.iter().copied().filter(|p| large.contains(*p)).collect();
        let prov = self.provenance.clone().and(other.provenance.clone());
        Self::from_sorted(pts, self.scale.or(other.scale), prov)
    }

    pub fn minus(&self, other: &DiscreteDomain) -> DiscreteDomain {
        let pts: Vec<Point> = self.points.iter().copied().filter(|p| !other.contains(*p)).collect();
        let prov = self.provenance.clone().minus(other.provenance.clone());
        Self::from_sorted(pts, self.scale, prov)
    }

    pub fn union(&self, other: &DiscreteDomain) -> DiscreteDomain {
        let mut pts: Vec<Point> = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.points, &other.points);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match row_major(&a[i], &b[j]) {
                std::cmp::Ordering::Less => {
                    pts.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    pts.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    pts.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        pts.extend_from_slice(&a[i..]);
        pts.extend_from_slice(&b[j..]);
        let prov = self.provenance.clone().or(other.provenance.clone());
        Self::from_sorted(pts, self.scale.or(other.scale), prov)
    }

    /// Restriction to the members of a symbolic set.
    pub fn filter(&self, set: &LatticeSet) -> DiscreteDomain {
        let pts: Vec<Point> = self.points.iter().copied().filter(|p| set.contains(*p)).collect();
        let prov = self.provenance.clone().and(set.clone());
        Self::from_sorted(pts, self.scale, prov)
    }

    pub fn is_subset_of(&self, other: &DiscreteDomain) -> bool {
        self.points.iter().all(|p| other.contains(*p))
    }

    pub fn is_disjoint(&self, other: &DiscreteDomain) -> bool {
        self.points.iter().all(|p| !other.contains(*p))
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(*p)).fold(0.0, f64::max)
    }

    pub fn min_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(*p)).fold(f64::INFINITY, f64::min)
    }

    /// Number of 4-connected components.
    pub fn component_count(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(i) = stack.pop() {
                for d in NEIGHBORS {
                    if let Some(j) = self.index_of(add(self.points[i], d)) {
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }
}

/// `W_ℓ`.
pub fn discretize(w: &ContinuumDomain, level: f64) -> Result<DiscreteDomain, LatticeError> {
    LatticeSet::scaled(w, level)?.to_domain(Some(level))
}

/// `∂D`.
pub fn outer_boundary(d: &DiscreteDomain) -> DiscreteDomain {
    d.outer_boundary()
}

/// `W^η`.
pub fn bulk(w: &ContinuumDomain, eta: f64) -> Result<ContinuumDomain, crate::shape::ShapeError> {
    w.bulk(eta)
}

/// `U_n ∩ V^-_k`.
pub fn annulus_domain(u: &ContinuumDomain, n: f64, v: &ContinuumDomain, k: f64) -> Result<DiscreteDomain, LatticeError> {
    if !(n.is_finite() && k.is_finite()) || k < 0.0 {
        return Err(LatticeError::InvalidScale(k));
    }
    if n < k {
        return Err(LatticeError::DegenerateAnnulus);
    }
    let set = LatticeSet::scaled(u, n)?.and(LatticeSet::scaled(&v.complement(), k)?);
    let d = set.to_domain(Some(n))?;
    if d.is_empty() {
        return Err(LatticeError::DegenerateAnnulus);
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainClassParams {
    pub eps: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl DomainClassParams {
    pub fn new(eps: f64, eta: f64, zeta: f64) -> Result<DomainClassParams, LatticeError> {
        let p = DomainClassParams { eps, eta, zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(LatticeError::InvalidParams(format!("eps = {} not in (0,1)", self.eps)));
        }
        let cap = 1.0 / self.eps;
        for (name, v) in [("eta", self.eta), ("zeta", self.zeta)] {
            if !(v >= 0.0 && v <= cap) {
                return Err(LatticeError::InvalidParams(format!("{name} = {v} not in [0, 1/eps]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainClass {
    /// `𝔇_ε`
    D,
    /// `𝔘_ε^η`
    U,
    /// `𝔙_ε`
    V,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassCheck {
    pub ok: bool,
    pub reasons: Vec<String>,
    /// Set when connectivity or component diameters were assessed on a raster.
    pub approximate: bool,
}

pub const REASON_BALL: &str = "B(0,ε) ⊄ W";
pub const REASON_OUTER: &str = "W ⊄ B(0,1/ε)";
pub const REASON_DIAMETER: &str = "boundary component of diameter < ε";
pub const REASON_HOLE: &str = "εB ⊄ U^η interior hole";
pub const REASON_U_CONNECTED: &str = "U not connected";
pub const REASON_V_CONNECTED: &str = "V^- not connected";

/// Membership of `W` in `𝔇_ε`, `𝔘_ε^η` or `𝔙_ε`.
///
/// Shapes whose disks are all centered at the origin are analyzed exactly
/// through their radial profile. Other shapes use exact arc geometry for the
/// containments and a fine lattice raster (4-adjacency) for connectivity.
pub fn check_class(w: &ContinuumDomain, p: &DomainClassParams, which: DomainClass) -> ClassCheck {
    let mut reasons = Vec::new();
    let mut approximate = false;
    let eps = p.eps;
    if w.signed_distance([0.0, 0.0]) < eps {
        reasons.push(REASON_BALL.to_string());
    }
    let profile = w.radial_intervals();
    let sup = match &profile {
        Some(iv) => iv.last().map(|x| x.1).unwrap_or(0.0),
        None => {
            approximate |= !w.is_exact();
            w.bounding_annulus().outer
        }
    };
    if sup > 1.0 / eps {
        reasons.push(REASON_OUTER.to_string());
    }
    match &profile {
        Some(iv) => {
            let small = iv.iter().flat_map(|(a, b)| [*a, *b]).any(|r| r > 0.0 && r.is_finite() && 2.0 * r < eps);
            if small {
                reasons.push(REASON_DIAMETER.to_string());
            }
        }
        None => {
            approximate = true;
            if raster_min_component_diameter(w, eps) < eps {
                reasons.push(REASON_DIAMETER.to_string());
            }
        }
    }
    match which {
        DomainClass::D => {}
        DomainClass::U => {
            let ub = w.bulk(p.eta).expect("validated eta");
            if ub.signed_distance([0.0, 0.0]) < eps {
                reasons.push(REASON_HOLE.to_string());
            }
            let connected = match &profile {
                Some(iv) => iv.len() <= 1,
                None => raster_components(w, eps) <= 1,
            };
            if !connected {
                reasons.push(REASON_U_CONNECTED.to_string());
            }
        }
        DomainClass::V => {
            let vm = w.complement();
            let connected = match vm.radial_intervals() {
                Some(iv) => iv.len() <= 1,
                None => raster_components(&vm, eps) <= 1,
            };
            if !connected {
                reasons.push(REASON_V_CONNECTED.to_string());
            }
        }
    }
    ClassCheck { ok: reasons.is_empty(), reasons, approximate }
}

fn raster_level(w: &ContinuumDomain, eps: f64) -> f64 {
    let r = w.bounding_annulus().outer.min(w.complement().bounding_annulus().outer.min(1.0 / eps)).max(eps);
    let want = (64.0 / eps).ln();
    // Keep the raster to about 4e6 sites.
    let cap = (1000.0 / r).ln();
    want.min(cap).max(0.0)
}

fn raster_components(w: &ContinuumDomain, eps: f64) -> usize {
    let level = raster_level(w, eps);
    let rad = w.bounding_annulus();
    let set = match LatticeSet::scaled(w, level) {
        Ok(s) => s,
        Err(_) => return 0,
    };
    let truncated = if rad.outer.is_finite() {
        set
    } else {
        let r = (1.0 / eps).max(w.complement().bounding_annulus().outer) * 1.5;
        let cap = ContinuumDomain::new(Shape::disk([0.0, 0.0], r)).expect("valid disk");
        set.and(LatticeSet::scaled(&cap, level).expect("valid level"))
    };
    match truncated.to_domain(Some(level)) {
        Ok(d) => d.component_count(),
        Err(_) => 0,
    }
}

fn raster_min_component_diameter(w: &ContinuumDomain, eps: f64) -> f64 {
    let level = raster_level(w, eps);
    let Ok(inside) = LatticeSet::scaled(w, level) else { return f64::INFINITY };
    let r = w.bounding_annulus().outer.min(w.complement().bounding_annulus().outer) * 1.5 + 1.0;
    let Ok(cap) = ContinuumDomain::new(Shape::disk([0.0, 0.0], r)) else { return f64::INFINITY };
    let Ok(cap_set) = LatticeSet::scaled(&cap, level) else { return f64::INFINITY };
    let Ok(bd) = inside.boundary().and(cap_set).to_domain(Some(level)) else { return f64::INFINITY };
    let scale = (-level).exp();
    let mut best = f64::INFINITY;
    let n = bd.len();
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            comp.push(bd.points()[i]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(j) = bd.index_of(add(bd.points()[i], [dx, dy])) {
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        let (mut x0, mut x1, mut y0, mut y1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for p in &comp {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let diam = ((x1 - x0) as f64).hypot((y1 - y0) as f64) * scale;
        best = best.min(diam);
    }
    best
}
