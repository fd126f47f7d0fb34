//! Continuum shapes.
//!
//! A shape is an expression tree over open disks combined by complement
//! (interior of the complement), intersection, union, scaling by `e^t` and
//! bulk shrinkage `W^eta = {x in W : d(x, W^c) > eta}`. Every tree compiles
//! to a signed distance function whose sign is the exact membership test.
//! Subtrees built only from disks and boolean operations are evaluated from
//! their exact boundary arcs; a bulk node subtracts `eta`, which is exact on
//! the inside of the shrunken set.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// Maximum nesting depth accepted from untrusted input.
pub const MAX_DEPTH: usize = 64;
/// Maximum number of tree nodes accepted from untrusted input.
pub const MAX_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShapeError {
    #[error("invalid disk: center and radius must be finite and radius > 0")]
    InvalidDisk,
    #[error("invalid bulk parameter: eta must be finite and >= 0")]
    InvalidEta,
    #[error("invalid scaling exponent: must be finite with |t| <= 300")]
    InvalidScale,
    #[error("empty operand list for {0}")]
    EmptyOperands(&'static str),
    #[error("shape tree deeper than {MAX_DEPTH}")]
    TooDeep,
    #[error("shape tree has more than {MAX_NODES} nodes")]
    TooLarge,
    #[error("malformed shape JSON: {0}")]
    Json(String),
}

/// Serializable shape expression. The JSON form is internally tagged by `op`:
/// `{"op":"disk","center":[0,0],"radius":1}`,
/// `{"op":"complement","of":{...}}`, `{"op":"intersection","of":[...]}`,
/// `{"op":"union","of":[...]}`, `{"op":"scale","log_factor":t,"of":{...}}`,
/// `{"op":"bulk","eta":e,"of":{...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Complement { of: Box<Shape> },
    Intersection { of: Vec<Shape> },
    Union { of: Vec<Shape> },
    Scale { log_factor: f64, of: Box<Shape> },
    Bulk { eta: f64, of: Box<Shape> },
}

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64) -> Shape {
        Shape::Disk { center, radius }
    }

    /// The unit disk `B = B(0,1)`.
    pub fn unit_disk() -> Shape {
        Shape::disk([0.0, 0.0], 1.0)
    }

    pub fn complement(self) -> Shape {
        Shape::Complement { of: Box::new(self) }
    }

    pub fn intersect(self, other: Shape) -> Shape {
        match self {
            Shape::Intersection { mut of } => {
                of.push(other);
                Shape::Intersection { of }
            }
            s => Shape::Intersection { of: vec![s, other] },
        }
    }

    pub fn union(self, other: Shape) -> Shape {
        match self {
            Shape::Union { mut of } => {
                of.push(other);
                Shape::Union { of }
            }
            s => Shape::Union { of: vec![s, other] },
        }
    }

    /// `e^t W`.
    pub fn scaled(self, log_factor: f64) -> Shape {
        Shape::Scale { log_factor, of: Box::new(self) }
    }

    pub fn bulk(self, eta: f64) -> Shape {
        Shape::Bulk { eta, of: Box::new(self) }
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let mut nodes = 0usize;
        self.validate_inner(0, &mut nodes)
    }

    fn validate_inner(&self, depth: usize, nodes: &mut usize) -> Result<(), ShapeError> {
        if depth >= MAX_DEPTH {
            return Err(ShapeError::TooDeep);
        }
        *nodes += 1;
        if *nodes > MAX_NODES {
            return Err(ShapeError::TooLarge);
        }
        match self {
            Shape::Disk { center, radius } => {
                let ok = center.iter().all(|c| c.is_finite() && c.abs() < 1e12)
                    && radius.is_finite()
                    && *radius > 0.0
                    && *radius < 1e12;
                if ok {
                    Ok(())
                } else {
                    Err(ShapeError::InvalidDisk)
                }
            }
            Shape::Complement { of } => of.validate_inner(depth + 1, nodes),
            Shape::Intersection { of } | Shape::Union { of } => {
                if of.is_empty() {
                    let name = if matches!(self, Shape::Union { .. }) { "union" } else { "intersection" };
                    return Err(ShapeError::EmptyOperands(name));
                }
                of.iter().try_for_each(|s| s.validate_inner(depth + 1, nodes))
            }
            Shape::Scale { log_factor, of } => {
                if !log_factor.is_finite() || log_factor.abs() > 300.0 {
                    return Err(ShapeError::InvalidScale);
                }
                of.validate_inner(depth + 1, nodes)
            }
            Shape::Bulk { eta, of } => {
                if !eta.is_finite() || *eta < 0.0 {
                    return Err(ShapeError::InvalidEta);
                }
                of.validate_inner(depth + 1, nodes)
            }
        }
    }
}

/// Radii `inner <= |x| <= outer` enclosing a shape; `outer` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingAnnulus {
    pub inner: f64,
    pub outer: f64,
}

/// Conservative radial information about a set `W`:
/// `W ⊂ closed B(0, outer)`, `W ∩ B(0, hole) = ∅`,
/// `B(0, ball) ⊂ W` and `W ⊇ {|x| > exterior}`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Radial {
    pub outer: f64,
    pub hole: f64,
    pub ball: f64,
    pub exterior: f64,
}

/// Normalized tree: scalings pushed into the leaves.
#[derive(Clone, Debug)]
enum Norm {
    Disk([f64; 2], f64),
    Not(Box<Norm>),
    And(Vec<Norm>),
    Or(Vec<Norm>),
    Bulk(f64, Box<Norm>),
}

impl Norm {
    fn from_shape(s: &Shape, factor: f64) -> Norm {
        match s {
            Shape::Disk { center, radius } => {
                Norm::Disk([center[0] * factor, center[1] * factor], radius * factor)
            }
            Shape::Complement { of } => Norm::Not(Box::new(Norm::from_shape(of, factor))),
            Shape::Intersection { of } => {
                Norm::And(of.iter().map(|c| Norm::from_shape(c, factor)).collect())
            }
            Shape::Union { of } => Norm::Or(of.iter().map(|c| Norm::from_shape(c, factor)).collect()),
            Shape::Scale { log_factor, of } => Norm::from_shape(of, factor * log_factor.exp()),
            Shape::Bulk { eta, of } => Norm::Bulk(eta * factor, Box::new(Norm::from_shape(of, factor))),
        }
    }

    fn has_bulk(&self) -> bool {
        match self {
            Norm::Disk(..) => false,
            Norm::Not(c) => c.has_bulk(),
            Norm::And(v) | Norm::Or(v) => v.iter().any(Norm::has_bulk),
            Norm::Bulk(..) => true,
        }
    }

    fn is_centered(&self) -> bool {
        match self {
            Norm::Disk(c, _) => c[0] == 0.0 && c[1] == 0.0,
            Norm::Not(c) | Norm::Bulk(_, c) => c.is_centered(),
            Norm::And(v) | Norm::Or(v) => v.iter().all(Norm::is_centered),
        }
    }

    fn radial(&self) -> Radial {
        match self {
            Norm::Disk(c, r) => {
                let d = (c[0] * c[0] + c[1] * c[1]).sqrt();
                Radial {
                    outer: d + r,
                    hole: (d - r).max(0.0),
                    ball: (r - d).max(0.0),
                    exterior: f64::INFINITY,
                }
            }
            Norm::Not(c) => {
                let r = c.radial();
                Radial { outer: r.exterior, hole: r.ball, ball: r.hole, exterior: r.outer }
            }
            Norm::And(v) => v.iter().map(Norm::radial).fold(
                Radial { outer: f64::INFINITY, hole: 0.0, ball: f64::INFINITY, exterior: 0.0 },
                |a, b| Radial {
                    outer: a.outer.min(b.outer),
                    hole: a.hole.max(b.hole),
                    ball: a.ball.min(b.ball),
                    exterior: a.exterior.max(b.exterior),
                },
            ),
            Norm::Or(v) => v.iter().map(Norm::radial).fold(
                Radial { outer: 0.0, hole: f64::INFINITY, ball: 0.0, exterior: f64::INFINITY },
                |a, b| Radial {
                    outer: a.outer.max(b.outer),
                    hole: a.hole.min(b.hole),
                    ball: a.ball.max(b.ball),
                    exterior: a.exterior.min(b.exterior),
                },
            ),
            Norm::Bulk(eta, c) => {
                let r = c.radial();
                Radial {
                    outer: (r.outer - eta).max(0.0),
                    hole: r.hole + eta,
                    ball: (r.ball - eta).max(0.0),
                    exterior: r.exterior + eta,
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tri {
    Inside,
    On,
    Outside,
}

#[derive(Clone, Debug)]
enum Logic {
    Disk(usize),
    Not(Box<Logic>),
    And(Vec<Logic>),
    Or(Vec<Logic>),
}

#[derive(Clone, Copy, Debug)]
struct Circle {
    c: [f64; 2],
    r: f64,
}

impl Circle {
    fn tri(&self, x: [f64; 2]) -> Tri {
        let dx = x[0] - self.c[0];
        let dy = x[1] - self.c[1];
        let d2 = dx * dx + dy * dy;
        let r2 = self.r * self.r;
        if d2 < r2 {
            Tri::Inside
        } else if d2 > r2 {
            Tri::Outside
        } else {
            Tri::On
        }
    }
}

/// A boundary arc: angles `start .. start + sweep` on a circle.
#[derive(Clone, Copy, Debug)]
struct Arc {
    circle: Circle,
    start: f64,
    sweep: f64,
}

impl Arc {
    fn point(&self, angle: f64) -> [f64; 2] {
        [self.circle.c[0] + self.circle.r * angle.cos(), self.circle.c[1] + self.circle.r * angle.sin()]
    }

    fn distance(&self, x: [f64; 2]) -> f64 {
        let dx = x[0] - self.circle.c[0];
        let dy = x[1] - self.circle.c[1];
        let rho = (dx * dx + dy * dy).sqrt();
        if self.sweep >= TAU {
            return (rho - self.circle.r).abs();
        }
        if rho > 0.0 {
            let theta = dy.atan2(dx);
            let rel = (theta - self.start).rem_euclid(TAU);
            if rel <= self.sweep {
                return (rho - self.circle.r).abs();
            }
        }
        let a = self.point(self.start);
        let b = self.point(self.start + self.sweep);
        let da = ((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2)).sqrt();
        let db = ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2)).sqrt();
        da.min(db)
    }
}

/// Exact boolean combination of disks, stored with its boundary arcs.
#[derive(Clone, Debug)]
struct ArcSet {
    logic: Logic,
    circles: Vec<Circle>,
    arcs: Vec<Arc>,
}

impl ArcSet {
    fn new(n: &Norm) -> ArcSet {
        let mut circles: Vec<Circle> = Vec::new();
        let logic = Self::build_logic(n, &mut circles);
        let mut set = ArcSet { logic, circles, arcs: Vec::new() };
        set.arcs = set.boundary_arcs();
        set
    }

    fn build_logic(n: &Norm, circles: &mut Vec<Circle>) -> Logic {
        match n {
            Norm::Disk(c, r) => {
                let idx = circles
                    .iter()
                    .position(|k| k.c == *c && k.r == *r)
                    .unwrap_or_else(|| {
                        circles.push(Circle { c: *c, r: *r });
                        circles.len() - 1
                    });
                Logic::Disk(idx)
            }
            Norm::Not(c) => Logic::Not(Box::new(Self::build_logic(c, circles))),
            Norm::And(v) => Logic::And(v.iter().map(|c| Self::build_logic(c, circles)).collect()),
            Norm::Or(v) => Logic::Or(v.iter().map(|c| Self::build_logic(c, circles)).collect()),
            Norm::Bulk(..) => unreachable!("bulk nodes are compiled separately"),
        }
    }

    fn tri(&self, logic: &Logic, x: [f64; 2]) -> Tri {
        match logic {
            Logic::Disk(i) => self.circles[*i].tri(x),
            Logic::Not(c) => match self.tri(c, x) {
                Tri::Inside => Tri::Outside,
                Tri::Outside => Tri::Inside,
                Tri::On => Tri::On,
            },
            Logic::And(v) => {
                let mut all_in = true;
                for c in v {
                    match self.tri(c, x) {
                        Tri::Outside => return Tri::Outside,
                        Tri::On => all_in = false,
                        Tri::Inside => {}
                    }
                }
                if all_in {
                    Tri::Inside
                } else {
                    Tri::On
                }
            }
            Logic::Or(v) => {
                let mut all_out = true;
                for c in v {
                    match self.tri(c, x) {
                        Tri::Inside => return Tri::Inside,
                        Tri::On => all_out = false,
                        Tri::Outside => {}
                    }
                }
                if all_out {
                    Tri::Outside
                } else {
                    Tri::On
                }
            }
        }
    }

    fn inside(&self, x: [f64; 2]) -> bool {
        self.tri(&self.logic, x) == Tri::Inside
    }

    fn boundary_arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for (i, ci) in self.circles.iter().enumerate() {
            let mut angles: Vec<f64> = Vec::new();
            for (j, cj) in self.circles.iter().enumerate() {
                if i == j {
                    continue;
                }
                let dx = cj.c[0] - ci.c[0];
                let dy = cj.c[1] - ci.c[1];
                let d = (dx * dx + dy * dy).sqrt();
                if d == 0.0 || d > ci.r + cj.r || d < (ci.r - cj.r).abs() {
                    continue;
                }
                let base = dy.atan2(dx);
                let cosv = ((ci.r * ci.r + d * d - cj.r * cj.r) / (2.0 * ci.r * d)).clamp(-1.0, 1.0);
                let half = cosv.acos();
                angles.push((base - half).rem_euclid(TAU));
                angles.push((base + half).rem_euclid(TAU));
            }
            angles.sort_by(f64::total_cmp);
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
            let pieces: Vec<(f64, f64)> = if angles.is_empty() {
                vec![(0.0, TAU)]
            } else {
                (0..angles.len())
                    .map(|k| {
                        let a = angles[k];
                        let b = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + TAU };
                        (a, b - a)
                    })
                    .filter(|(_, sweep)| *sweep > 0.0)
                    .collect()
            };
            let delta = 1e-9 * ci.r.max(1e-300);
            for (start, sweep) in pieces {
                let mid = start + 0.5 * sweep;
                let (s, c) = mid.sin_cos();
                let p_in = [ci.c[0] + (ci.r - delta) * c, ci.c[1] + (ci.r - delta) * s];
                let p_out = [ci.c[0] + (ci.r + delta) * c, ci.c[1] + (ci.r + delta) * s];
                if self.inside(p_in) != self.inside(p_out) {
                    arcs.push(Arc { circle: *ci, start, sweep });
                }
            }
        }
        arcs
    }

    fn signed_distance(&self, x: [f64; 2]) -> f64 {
        let state = self.tri(&self.logic, x);
        if state == Tri::On {
            return 0.0;
        }
        let d = self.arcs.iter().map(|a| a.distance(x)).fold(f64::INFINITY, f64::min);
        if state == Tri::Inside {
            d
        } else {
            -d
        }
    }
}

/// Compiled signed distance function.
#[derive(Clone, Debug)]
pub(crate) enum Sdf {
    Exact(ArcSetBox),
    Not(Box<Sdf>),
    And(Vec<Sdf>),
    Or(Vec<Sdf>),
    Bulk(f64, Box<Sdf>),
}

#[derive(Clone, Debug)]
pub(crate) struct ArcSetBox(Box<ArcSet>);

impl Sdf {
    fn compile(n: &Norm) -> Sdf {
        if !n.has_bulk() {
            return Sdf::Exact(ArcSetBox(Box::new(ArcSet::new(n))));
        }
        match n {
            Norm::Disk(..) => unreachable!(),
            Norm::Not(c) => Sdf::Not(Box::new(Sdf::compile(c))),
            Norm::And(v) => Sdf::And(v.iter().map(Sdf::compile).collect()),
            Norm::Or(v) => Sdf::Or(v.iter().map(Sdf::compile).collect()),
            Norm::Bulk(eta, c) => Sdf::Bulk(*eta, Box::new(Sdf::compile(c))),
        }
    }

    pub(crate) fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            Sdf::Exact(a) => a.0.signed_distance(x),
            Sdf::Not(c) => -c.eval(x),
            Sdf::And(v) => v.iter().map(|c| c.eval(x)).fold(f64::INFINITY, f64::min),
            Sdf::Or(v) => v.iter().map(|c| c.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            Sdf::Bulk(eta, c) => c.eval(x) - eta,
        }
    }
}

/// A validated open set `W ⊂ R²` with its compiled distance function.
#[derive(Clone)]
pub struct ContinuumDomain {
    shape: Shape,
    sdf: Sdf,
    radial: Radial,
    centered: bool,
}

impl fmt::Debug for ContinuumDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumDomain").field("shape", &self.shape).finish()
    }
}

impl PartialEq for ContinuumDomain {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
    }
}

impl ContinuumDomain {
    pub fn new(shape: Shape) -> Result<ContinuumDomain, ShapeError> {
        shape.validate()?;
        Ok(Self::compile_unchecked(shape))
    }

    fn compile_unchecked(shape: Shape) -> ContinuumDomain {
        let norm = Norm::from_shape(&shape, 1.0);
        ContinuumDomain { sdf: Sdf::compile(&norm), radial: norm.radial(), centered: norm.is_centered(), shape }
    }

    /// The unit disk `B`.
    pub fn unit_disk() -> ContinuumDomain {
        Self::compile_unchecked(Shape::unit_disk())
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<ContinuumDomain, ShapeError> {
        Self::new(Shape::disk(center, radius))
    }

    pub fn from_json(s: &str) -> Result<ContinuumDomain, ShapeError> {
        let shape: Shape = serde_json::from_str(s).map_err(|e| ShapeError::Json(e.to_string()))?;
        Self::new(shape)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.shape).expect("shape serialization is infallible")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `W^-`: interior of the complement.
    pub fn complement(&self) -> ContinuumDomain {
        Self::compile_unchecked(self.shape.clone().complement())
    }

    /// `W^eta`.
    pub fn bulk(&self, eta: f64) -> Result<ContinuumDomain, ShapeError> {
        Self::new(self.shape.clone().bulk(eta))
    }

    /// `e^t W`.
    pub fn scaled(&self, log_factor: f64) -> Result<ContinuumDomain, ShapeError> {
        Self::new(self.shape.clone().scaled(log_factor))
    }

    pub fn intersect(&self, other: &ContinuumDomain) -> Result<ContinuumDomain, ShapeError> {
        Self::new(self.shape.clone().intersect(other.shape.clone()))
    }

    pub fn union(&self, other: &ContinuumDomain) -> Result<ContinuumDomain, ShapeError> {
        Self::new(self.shape.clone().union(other.shape.clone()))
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        self.sdf.eval(x)
    }

    /// `d(x, W^c)`, zero outside `W`.
    pub fn dist_to_complement(&self, x: [f64; 2]) -> f64 {
        self.sdf.eval(x).max(0.0)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.sdf.eval(x) > 0.0
    }

    pub fn bounding_annulus(&self) -> BoundingAnnulus {
        BoundingAnnulus { inner: self.radial.hole, outer: self.radial.outer }
    }

    /// All disks share the origin as center.
    pub fn is_radial(&self) -> bool {
        self.centered
    }

    /// Whether the distance function is exact everywhere (no bulk nodes).
    pub fn is_exact(&self) -> bool {
        !Norm::from_shape(&self.shape, 1.0).has_bulk()
    }

    pub(crate) fn compile_scaled(&self, factor: f64) -> Sdf {
        Sdf::compile(&Norm::from_shape(&self.shape, factor))
    }

    pub(crate) fn radial_scaled(&self, factor: f64) -> Radial {
        Norm::from_shape(&self.shape, factor).radial()
    }

    /// Radial membership profile for shapes whose disks are all centered:
    /// the maximal open intervals of radii `r` with `x ∈ W` for `|x| = r`.
    pub(crate) fn radial_intervals(&self) -> Option<Vec<(f64, f64)>> {
        if !self.centered {
            return None;
        }
        let rad = self.radial;
        let top = if rad.outer.is_finite() { rad.outer * 1.01 + 1.0 } else { rad.exterior * 1.01 + 1.0 };
        let probe = |r: f64| self.contains([r, 0.0]);
        let samples = 200_000usize;
        let mut intervals = Vec::new();
        let mut prev_r = 0.0;
        let mut prev_in = probe(0.0);
        let mut start = if prev_in { Some(0.0) } else { None };
        let refine = |mut lo: f64, mut hi: f64, lo_in: bool| {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if probe(mid) == lo_in {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for i in 1..=samples {
            let r = top * i as f64 / samples as f64;
            let inside = probe(r);
            if inside != prev_in {
                let edge = refine(prev_r, r, prev_in);
                if inside {
                    start = Some(edge);
                } else if let Some(s) = start.take() {
                    intervals.push((s, edge));
                }
            }
            prev_in = inside;
            prev_r = r;
        }
        if let Some(s) = start {
            intervals.push((s, f64::INFINITY));
        }
        Some(intervals)
    }
}

impl Serialize for ContinuumDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.shape.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContinuumDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let shape = Shape::deserialize(d)?;
        ContinuumDomain::new(shape).map_err(serde::de::Error::custom)
    }
}
