//! Standalone decorated random walks: Gaussian bridges with step variances
//! `σ_k²`, pluggable decorations, ballot probabilities, the functional
//! `ℓ_{T,r}(a,b)`, the one-dimensional ballot function `F`, and the control
//! variable `R`.

use crate::stats::{Interval, MeanEstimate, Proportion, Z95};
use crate::seeds::StreamId;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Trials per parallel task.
const CHUNK: u64 = 4096;
/// Auxiliary stream purpose for decorations.
const DECOR_STREAM: u64 = 0xDEC0;
/// Hard limit on walk length.
pub const MAX_STEPS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DrwError {
    #[error("invalid walk specification: {0}")]
    Spec(String),
    #[error("field-coupled decorations come from a concentric decomposition")]
    FieldCoupled,
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// Length of the walk: a bridge of `T` steps or a free walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Finite(usize),
    Infinite(InfiniteHorizon),
}

/// `T = ∞`, realized as a free walk of `horizon` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfiniteHorizon {
    pub infinite: bool,
    pub horizon: usize,
}

impl Horizon {
    pub fn infinite(horizon: usize) -> Horizon {
        Horizon::Infinite(InfiniteHorizon { infinite: true, horizon })
    }

    /// Number of steps actually simulated.
    pub fn steps(&self) -> usize {
        match self {
            Horizon::Finite(t) => *t,
            Horizon::Infinite(h) => h.horizon,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite(_))
    }
}

/// Step variances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepVariances {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl StepVariances {
    fn get(&self, k: usize) -> f64 {
        match self {
            StepVariances::Constant(v) => *v,
            StepVariances::Sequence(v) => v[k - 1],
        }
    }
}

/// Law of the decorations `D_1, …, D_T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecorationModel {
    Zero,
    /// `D_k = shift + ±scale·W`, `W ~ Weibull(exponent)`, i.i.d. and
    /// independent of the walk.
    Weibull { scale: f64, exponent: f64, #[serde(default)] shift: f64 },
    /// `D_k = value` at `k = at`, zero elsewhere.
    Injected { at: usize, value: f64 },
    /// Decorations read off a field sample.
    FieldCoupled,
}

impl DecorationModel {
    /// Checks `P(|D_k| > δ^{-1}∧^{1/2−δ} + t) ≤ δ^{-1} e^{−t^δ}` for the
    /// Weibull family by minimizing `(t/s)^κ − t^δ + log δ^{-1}` on a fine
    /// log grid of `t` (the `∧` term only helps and is dropped).
    pub fn satisfies_envelope(&self, delta: f64) -> bool {
        match self {
            DecorationModel::Zero | DecorationModel::FieldCoupled => true,
            DecorationModel::Injected { .. } => false,
            DecorationModel::Weibull { scale, exponent, shift } => {
                if *exponent < delta {
                    return false;
                }
                let c = (1.0 / delta).ln();
                (0..=4000).all(|i| {
                    let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 4000.0);
                    let x = (t - shift.abs()).max(0.0);
                    (x / scale).powf(*exponent) - t.powf(delta) + c >= -1e-12
                })
            }
        }
    }
}

/// A decorated-walk law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrwSpec {
    #[serde(rename = "T")]
    pub t: Horizon,
    pub a: f64,
    pub b: f64,
    pub sigma2: StepVariances,
    pub delta: f64,
    pub decoration: DecorationModel,
}

impl DrwSpec {
    /// Zero-decoration walk with unit step variances.
    pub fn gaussian(t: Horizon, a: f64, b: f64) -> DrwSpec {
        DrwSpec { t, a, b, sigma2: StepVariances::Constant(1.0), delta: 0.25, decoration: DecorationModel::Zero }
    }

    pub fn with_decoration(mut self, d: DecorationModel) -> DrwSpec {
        self.decoration = d;
        self
    }

    pub fn validate(&self) -> Result<(), DrwError> {
        let n = self.t.steps();
        if n == 0 || n > MAX_STEPS {
            return Err(DrwError::Spec(format!("steps must be in 1..={MAX_STEPS}")));
        }
        if let Horizon::Infinite(h) = self.t {
            if !h.infinite {
                return Err(DrwError::Spec("infinite horizon must set \"infinite\": true".into()));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / 3.0) {
            return Err(DrwError::Spec("δ must lie in (0, 1/3)".into()));
        }
        if !self.a.is_finite() || !self.b.is_finite() {
            return Err(DrwError::Spec("endpoints must be finite".into()));
        }
        let (lo, hi) = (self.delta, 1.0 / self.delta);
        let ok = |v: f64| v > lo && v < hi;
        match &self.sigma2 {
            StepVariances::Constant(v) if !ok(*v) => return Err(DrwError::Spec(format!("σ² = {v} outside (δ, 1/δ)"))),
            StepVariances::Sequence(v) if v.len() < n => return Err(DrwError::Spec(format!("{} variances for {n} steps", v.len()))),
            StepVariances::Sequence(v) if !v.iter().all(|x| ok(*x)) => return Err(DrwError::Spec("σ_k² outside (δ, 1/δ)".into())),
            _ => {}
        }
        match &self.decoration {
            DecorationModel::Weibull { scale, exponent, shift } if !(*scale > 0.0 && *exponent > 0.0 && shift.is_finite()) => {
                Err(DrwError::Spec("Weibull decoration needs scale > 0, exponent > 0".into()))
            }
            DecorationModel::Injected { at, value } if *at == 0 || *at > n || !value.is_finite() => Err(DrwError::Spec("injected decoration outside 1..=T".into())),
            _ => Ok(()),
        }
    }

    /// `s_k = Σ_{j≤k} σ_j²`, `k = 0..=steps`.
    pub fn cumulative_variance(&self) -> Vec<f64> {
        let n = self.t.steps();
        let mut s = vec![0.0; n + 1];
        for k in 1..=n {
            s[k] = s[k - 1] + self.sigma2.get(k);
        }
        s
    }

    /// `E S_k = (b s_k + a (s_T − s_k))/s_T` for bridges, `a` for free walks.
    pub fn mean(&self, k: usize) -> f64 {
        let s = self.cumulative_variance();
        match self.t {
            Horizon::Finite(t) => (self.b * s[k] + self.a * (s[t] - s[k])) / s[t],
            Horizon::Infinite(_) => self.a,
        }
    }

    /// `Cov(S_k, S_m) = s_k (s_T − s_m)/s_T` for `k ≤ m` (bridge) or `s_k` (free).
    pub fn covariance(&self, k: usize, m: usize) -> f64 {
        let (k, m) = (k.min(m), k.max(m));
        let s = self.cumulative_variance();
        match self.t {
            Horizon::Finite(t) => s[k] * (s[t] - s[m]) / s[t],
            Horizon::Infinite(_) => s[k],
        }
    }

    /// `Var(S_k | S_{k−1})` of the sequential sampler, for `1 <= k <= T`.
    pub fn conditional_variance(&self, k: usize, s: &[f64]) -> f64 {
        match self.t {
            Horizon::Finite(t) => self.sigma2.get(k) * (s[t] - s[k]) / (s[t] - s[k - 1]),
            Horizon::Infinite(_) => self.sigma2.get(k),
        }
    }
}

/// A path `S_0..S_T` with decorations `D_0 = 0, D_1..D_T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrwPath {
    pub s: Vec<f64>,
    pub d: Vec<f64>,
}

impl DrwPath {
    /// `max_{k ∈ [k1, k2]} (S_k + D_k) ≤ 0`.
    pub fn below(&self, window: (usize, usize)) -> bool {
        (window.0..=window.1.min(self.s.len() - 1)).all(|k| self.s[k] + self.d[k] <= 0.0)
    }

    /// Steps `ξ_k = S_k − S_{k−1}`, index `k − 1`.
    pub fn steps(&self) -> Vec<f64> {
        self.s.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Reusable sampler state for one spec.
struct Sampler<'a> {
    spec: &'a DrwSpec,
    sd: Vec<f64>,
    gain: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(spec: &'a DrwSpec) -> Sampler<'a> {
        let s_cum = spec.cumulative_variance();
        let n = spec.t.steps();
        let sd = (1..=n).map(|k| spec.conditional_variance(k, &s_cum).max(0.0).sqrt()).collect();
        let gain = (1..=n)
            .map(|k| match spec.t {
                Horizon::Finite(t) => (s_cum[k] - s_cum[k - 1]) / (s_cum[t] - s_cum[k - 1]),
                Horizon::Infinite(_) => 0.0,
            })
            .collect();
        Sampler { spec, sd, gain }
    }

    /// Fills `S_0..S_upto` and `D_0..D_upto`; prefixes agree with longer fills.
    fn fill(&self, id: StreamId, path: &mut DrwPath, upto: usize) {
        let n = upto.min(self.spec.t.steps());
        let mut rng = id.rng();
        path.s.resize(n + 1, 0.0);
        path.d.resize(n + 1, 0.0);
        path.s[0] = self.spec.a;
        for k in 1..=n {
            let prev = path.s[k - 1];
            let z: f64 = rng.sample(StandardNormal);
            path.s[k] = match self.spec.t {
                Horizon::Finite(t) if k == t => self.spec.b,
                Horizon::Finite(_) => prev + self.gain[k - 1] * (self.spec.b - prev) + self.sd[k - 1] * z,
                Horizon::Infinite(_) => prev + self.sd[k - 1] * z,
            };
        }
        self.decorate(id, &mut path.d);
    }

    fn decorate(&self, id: StreamId, d: &mut [f64]) {
        d.iter_mut().for_each(|x| *x = 0.0);
        match &self.spec.decoration {
            DecorationModel::Zero | DecorationModel::FieldCoupled => {}
            DecorationModel::Injected { at, value } => {
                if *at < d.len() {
                    d[*at] = *value;
                }
            }
            DecorationModel::Weibull { scale, exponent, shift } => {
                let mut rng: ChaCha8Rng = id.aux(DECOR_STREAM).rng();
                for x in d.iter_mut().skip(1) {
                    let u: f64 = rng.random::<f64>();
                    let w = (-(1.0 - u).ln()).powf(1.0 / exponent);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    *x = shift + sign * scale * w;
                }
            }
        }
    }
}

/// One path of the walk with its decorations.
pub fn sample_walk(spec: &DrwSpec, id: StreamId) -> Result<DrwPath, DrwError> {
    spec.validate()?;
    if spec.decoration == DecorationModel::FieldCoupled {
        return Err(DrwError::FieldCoupled);
    }
    let mut p = DrwPath { s: Vec::new(), d: Vec::new() };
    Sampler::new(spec).fill(id, &mut p, usize::MAX);
    Ok(p)
}

/// Runs `f` on every path of trials `0..trials`, folding per fixed-size
/// chunk and combining chunks in trial order.
#[allow(clippy::too_many_arguments)]
fn fold_paths<A: Send>(spec: &DrwSpec, upto: usize, master: u64, row: u64, trials: u64, init: impl Fn() -> A + Sync, step: impl Fn(&mut A, &DrwPath) + Sync, merge: impl Fn(&mut A, A)) -> Result<A, DrwError> {
    spec.validate()?;
    if spec.decoration == DecorationModel::FieldCoupled {
        return Err(DrwError::FieldCoupled);
    }
    let sampler = Sampler::new(spec);
    let starts: Vec<u64> = (0..trials).step_by(CHUNK as usize).collect();
    let parts: Vec<A> = starts
        .into_par_iter()
        .map(|s| {
            let mut acc = init();
            let mut path = DrwPath { s: Vec::new(), d: Vec::new() };
            for t in s..(s + CHUNK).min(trials) {
                sampler.fill(StreamId::new(master, row, t), &mut path, upto);
                step(&mut acc, &path);
            }
            acc
        })
        .collect();
    let mut out = init();
    for p in parts {
        merge(&mut out, p);
    }
    Ok(out)
}

/// Default window `[1, T]`.
pub fn full_window(spec: &DrwSpec) -> (usize, usize) {
    (1, spec.t.steps())
}

/// Window `[⌈δ^{-1}⌉, ⌊T − δ^{-1}⌋]` of the upper bound.
pub fn inner_window(spec: &DrwSpec) -> (usize, usize) {
    let t = spec.t.steps() as f64;
    let lo = (1.0 / spec.delta).ceil() as usize;
    let hi = (t - 1.0 / spec.delta).floor().max(0.0) as usize;
    (lo.max(1), hi)
}

/// Frequency of `max_{k∈window}(S_k + D_k) ≤ 0`.
pub fn ballot_prob(spec: &DrwSpec, trials: u64, window: Option<(usize, usize)>, master: u64, row: u64) -> Result<Proportion, DrwError> {
    if trials < 1000 {
        return Err(DrwError::Spec("ballot_prob needs at least 10³ trials".into()));
    }
    let w = window.unwrap_or_else(|| full_window(spec));
    let hits = fold_paths(spec, w.1, master, row, trials, || 0u64, |a, p| *a += p.below(w) as u64, |a, b| *a += b)?;
    Ok(Proportion::new(hits, trials))
}

/// Pooled Welford state for per-chunk merging.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn merge(&mut self, o: Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
    }

    fn estimate(&self) -> MeanEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        let se = (var / n).sqrt();
        MeanEstimate { mean, std_error: se, n: self.n, ci: Interval { lo: mean - Z95 * se, hi: mean + Z95 * se } }
    }
}

/// `ℓ_{T,r}(a,b) = E(S_r^-; max_{k=1}^r (S_k + D_k) ≤ 0)`.
pub fn ell(spec: &DrwSpec, r: usize, trials: u64, master: u64, row: u64) -> Result<MeanEstimate, DrwError> {
    if r == 0 || r > spec.t.steps() {
        return Err(DrwError::Spec(format!("r = {r} outside 1..=T")));
    }
    let m = fold_paths(spec, r, master, row, trials, Moments::default, |a, p| a.push(ell_term(p, r)), |a, b| a.merge(b))?;
    Ok(m.estimate())
}

fn ell_term(p: &DrwPath, r: usize) -> f64 {
    if p.below((1, r)) {
        (-p.s[r]).max(0.0)
    } else {
        0.0
    }
}

/// `F_r(w) = E(S_r^-; S_{(0,r]} ≤ 0 | S_0 = w)` for a free standard
/// Gaussian walk, at every `r` in `rs` from one set of paths.
pub fn classic_f_trace(w: f64, rs: &[usize], trials: u64, master: u64, row: u64) -> Result<Vec<(usize, MeanEstimate)>, DrwError> {
    let rmax = *rs.iter().max().ok_or_else(|| DrwError::Spec("empty r list".into()))?;
    if rs.contains(&0) {
        return Err(DrwError::Spec("r must be positive".into()));
    }
    let spec = DrwSpec::gaussian(Horizon::infinite(rmax), w, 0.0);
    let m = fold_paths(
        &spec,
        rmax,
        master,
        row,
        trials,
        || vec![Moments::default(); rs.len()],
        |acc, p| {
            let mut alive = rmax;
            for k in 1..=rmax {
                if p.s[k] > 0.0 {
                    alive = k - 1;
                    break;
                }
            }
            for (a, r) in acc.iter_mut().zip(rs) {
                a.push(if *r <= alive { (-p.s[*r]).max(0.0) } else { 0.0 });
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y)),
    )?;
    Ok(rs.iter().copied().zip(m.iter().map(|x| x.estimate())).collect())
}

/// `F_r(w)` at a single `r`.
pub fn classic_f(w: f64, r: usize, trials: u64, master: u64, row: u64) -> Result<MeanEstimate, DrwError> {
    Ok(classic_f_trace(w, &[r], trials, master, row)?.remove(0).1)
}

/// `R = min{r ≥ 1 : max(|D_k| − δ^{-1}∧_{T,k}^{1/2−δ}, |ξ_k|) ≤ (k ∨ r)^{δ/2} ∀k}`,
/// for `s = S_0..S_T`, `d = D_0..D_T` and `t = None` for `T = ∞`.
/// Saturates at `u64::MAX`.
pub fn control_r(s: &[f64], d: &[f64], t: Option<usize>, delta: f64) -> u64 {
    let mut r = 1u64;
    for k in 1..s.len() {
        let wedge = match t {
            Some(t) => k.min(t.saturating_sub(k)) as f64,
            None => k as f64,
        };
        let q = (d[k].abs() - wedge.powf(0.5 - delta) / delta).max((s[k] - s[k - 1]).abs());
        if q > (k as f64).powf(delta / 2.0) {
            let need = q.powf(2.0 / delta).ceil();
            let need = if need.is_finite() && need < u64::MAX as f64 { need as u64 } else { u64::MAX };
            r = r.max(need);
        }
    }
    r
}

/// `R` of a sampled path.
pub fn control_r_path(spec: &DrwSpec, p: &DrwPath) -> u64 {
    let t = if spec.t.is_finite() { Some(spec.t.steps()) } else { None };
    control_r(&p.s, &p.d, t, spec.delta)
}

/// Counts of `R` in dyadic bins `[2^j, 2^{j+1})`, as `(2^j, count)`.
pub fn r_histogram(rs: &[u64]) -> Vec<(u64, u64)> {
    let mut bins = vec![0u64; 64];
    for r in rs {
        bins[63 - r.max(&1).leading_zeros() as usize] += 1;
    }
    let last = bins.iter().rposition(|c| *c > 0).unwrap_or(0);
    (0..=last).map(|j| (1u64 << j, bins[j])).collect()
}

/// `R` for `trials` paths.
pub fn control_r_sample(spec: &DrwSpec, trials: u64, master: u64, row: u64) -> Result<Vec<u64>, DrwError> {
    fold_paths(spec, usize::MAX, master, row, trials, Vec::new, |a, p| a.push(control_r_path(spec, p)), |a, b| a.extend(b))
}

/// Endpoint value in a grid: a number or `coef · T^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Fixed(f64),
    Power { coef: f64, exponent: f64 },
}

impl GridValue {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            GridValue::Fixed(v) => *v,
            GridValue::Power { coef, exponent } => coef * (t as f64).powf(*exponent),
        }
    }
}

/// Cartesian grid of walk laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrwGrid {
    #[serde(rename = "T")]
    pub t: Vec<usize>,
    pub a: Vec<GridValue>,
    pub b: Vec<GridValue>,
    #[serde(default = "unit_variance")]
    pub sigma2: f64,
    pub delta: f64,
    pub decorations: Vec<DecorationModel>,
    /// `r` for `ℓ_{T,r}`; defaults to `⌈√T⌉` when absent.
    #[serde(default)]
    pub r: Option<usize>,
}

fn unit_variance() -> f64 {
    1.0
}

impl DrwGrid {
    pub fn from_json(s: &str) -> Result<DrwGrid, DrwError> {
        let g: DrwGrid = serde_json::from_str(s).map_err(|e| DrwError::Grid(e.to_string()))?;
        g.specs()?;
        Ok(g)
    }

    /// Expanded rows in `T`, `a`, `b`, decoration order.
    pub fn specs(&self) -> Result<Vec<DrwSpec>, DrwError> {
        if self.t.is_empty() || self.a.is_empty() || self.b.is_empty() || self.decorations.is_empty() {
            return Err(DrwError::Grid("every axis needs at least one value".into()));
        }
        let rows = self.t.len() * self.a.len() * self.b.len() * self.decorations.len();
        if rows > 10_000 {
            return Err(DrwError::Grid(format!("{rows} rows exceed the 10⁴ limit")));
        }
        let mut out = Vec::with_capacity(rows);
        for &t in &self.t {
            for a in &self.a {
                for b in &self.b {
                    for d in &self.decorations {
                        let s = DrwSpec { t: Horizon::Finite(t), a: a.at(t), b: b.at(t), sigma2: StepVariances::Constant(self.sigma2), delta: self.delta, decoration: d.clone() };
                        s.validate()?;
                        if let Some(r) = self.r {
                            if r == 0 || r > t {
                                return Err(DrwError::Grid(format!("r = {r} outside 1..={t}")));
                            }
                        }
                        out.push(s);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Hypothesis checks for a row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// `b < −T^δ`.
    pub b_below: bool,
    /// `(a^- + 1) b^- ≤ T^{1−δ}`.
    pub product_small: bool,
    /// Decorations respect the tail envelope.
    pub envelope: bool,
}

pub fn hypotheses(spec: &DrwSpec) -> Hypotheses {
    let t = spec.t.steps() as f64;
    let (am, bm) = ((-spec.a).max(0.0), (-spec.b).max(0.0));
    Hypotheses { b_below: spec.b < -t.powf(spec.delta), product_small: (am + 1.0) * bm <= t.powf(1.0 - spec.delta), envelope: spec.decoration.satisfies_envelope(spec.delta) }
}

/// One row of the barrier-estimate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppCRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub a: f64,
    pub b: f64,
    pub decoration: String,
    pub r: usize,
    pub trials: u64,
    pub p: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub ell: f64,
    pub ell_se: f64,
    /// `P̂ s_T / (2 ℓ̂ b^-)`.
    pub ratio: f64,
    /// `P̂_window T / ((a^-+1)(b^-+1))` on `[⌈δ^{-1}⌉, ⌊T−δ^{-1}⌋]`.
    pub upper_const: f64,
    /// `P̂ T / ((a^-+1) b^-)`.
    pub lower_const: f64,
    /// `P̂ s_T / (2 a^- b^-)` with barrier `+δ^{-1}∧^{1/2−δ}` and `−δ^{-1}∧^{1/2−δ}`.
    pub barrier_plus_ratio: f64,
    pub barrier_minus_ratio: f64,
    pub b_below: bool,
    pub product_small: bool,
    pub envelope: bool,
}

fn decoration_label(d: &DecorationModel) -> String {
    match d {
        DecorationModel::Zero => "zero".into(),
        DecorationModel::Weibull { scale, exponent, shift } => format!("weibull(s={scale},k={exponent},shift={shift})"),
        DecorationModel::Injected { at, value } => format!("injected({at},{value})"),
        DecorationModel::FieldCoupled => "field".into(),
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct RowAcc {
    full: u64,
    inner: u64,
    plus: u64,
    minus: u64,
    ell: Moments,
}

/// Ballot probabilities, `ℓ`, the two bound constants and the deterministic
/// barrier variants for one row, all from the same paths.
pub fn appc_row(spec: &DrwSpec, r: usize, trials: u64, master: u64, row: u64) -> Result<AppCRow, DrwError> {
    let t = spec.t.steps();
    if !spec.t.is_finite() {
        return Err(DrwError::Spec("barrier rows need a finite T".into()));
    }
    if r == 0 || r > t {
        return Err(DrwError::Spec(format!("r = {r} outside 1..=T")));
    }
    let inner = inner_window(spec);
    let dl = spec.delta;
    let barrier: Vec<f64> = (0..=t).map(|k| (k.min(t - k) as f64).powf(0.5 - dl) / dl).collect();
    let acc = fold_paths(
        spec,
        t,
        master,
        row,
        trials,
        RowAcc::default,
        |a, p| {
            a.full += p.below((1, t)) as u64;
            a.inner += p.below(inner) as u64;
            a.plus += (1..=t).all(|k| p.s[k] + barrier[k] <= 0.0) as u64;
            a.minus += (1..=t).all(|k| p.s[k] - barrier[k] <= 0.0) as u64;
            a.ell.push(ell_term(p, r));
        },
        |a, b| {
            a.full += b.full;
            a.inner += b.inner;
            a.plus += b.plus;
            a.minus += b.minus;
            a.ell.merge(b.ell);
        },
    )?;
    let st = spec.cumulative_variance()[t];
    let (am, bm) = ((-spec.a).max(0.0), (-spec.b).max(0.0));
    let p = Proportion::new(acc.full, trials);
    let pin = acc.inner as f64 / trials as f64;
    let e = acc.ell.estimate();
    let h = hypotheses(spec);
    let tf = t as f64;
    Ok(AppCRow {
        t,
        a: spec.a,
        b: spec.b,
        decoration: decoration_label(&spec.decoration),
        r,
        trials,
        p: p.estimate,
        p_lo: p.ci.lo,
        p_hi: p.ci.hi,
        ell: e.mean,
        ell_se: e.std_error,
        ratio: p.estimate * st / (2.0 * e.mean * bm),
        upper_const: pin * tf / ((am + 1.0) * (bm + 1.0)),
        lower_const: p.estimate * tf / ((am + 1.0) * bm),
        barrier_plus_ratio: acc.plus as f64 / trials as f64 * st / (2.0 * am * bm),
        barrier_minus_ratio: acc.minus as f64 / trials as f64 * st / (2.0 * am * bm),
        b_below: h.b_below,
        product_small: h.product_small,
        envelope: h.envelope,
    })
}

/// The barrier-estimate table over a grid; row `i` uses seed row `row + i`.
pub fn verify_appc(grid: &DrwGrid, trials: u64, master: u64, row: u64) -> Result<Vec<AppCRow>, DrwError> {
    grid.specs()?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let t = s.t.steps();
            let r = grid.r.unwrap_or(((t as f64).sqrt().ceil() as usize).clamp(1, t));
            appc_row(s, r, trials, master, row + i as u64)
        })
        .collect()
}

/// Summary of the walk part of concentric realizations as a path.
pub fn path_from_realization(r: &crate::concentric::DrwRealization) -> DrwPath {
    let mut d = vec![0.0];
    d.extend_from_slice(&r.d);
    DrwPath { s: r.s.clone(), d }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_endpoints_and_zero_decorations() {
        let spec = DrwSpec::gaussian(Horizon::Finite(20), -2.0, -3.0);
        let p = sample_walk(&spec, StreamId::new(1, 0, 0)).unwrap();
        assert_eq!(p.s[0], -2.0);
        assert_eq!(p.s[20], -3.0);
        assert!(p.d.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn trivial_one_step_ballots() {
        let up = DrwSpec::gaussian(Horizon::Finite(1), -1.0, 0.5);
        assert_eq!(ballot_prob(&up, 1000, None, 1, 0).unwrap().estimate, 0.0);
        let down = DrwSpec::gaussian(Horizon::Finite(1), 3.0, -0.5);
        assert_eq!(ballot_prob(&down, 1000, None, 1, 0).unwrap().estimate, 1.0);
    }

    #[test]
    fn control_variable_cases() {
        let mut spec = DrwSpec::gaussian(Horizon::Finite(50), -1.0, -1.0);
        spec.sigma2 = StepVariances::Constant(0.26);
        spec.delta = 0.25;
        let tiny = DrwPath { s: vec![0.0; 51], d: vec![0.0; 51] };
        assert_eq!(control_r_path(&spec, &tiny), 1);
        let mut heavy = tiny.clone();
        heavy.d[5] = 1e3;
        assert!(control_r_path(&spec, &heavy) > 1);
        assert_eq!(r_histogram(&[1, 1, 2, 3, 9]), vec![(1, 2), (2, 2), (4, 0), (8, 1)]);
    }

    #[test]
    fn weibull_envelope_check() {
        let ok = DecorationModel::Weibull { scale: 0.5, exponent: 1.0, shift: 0.0 };
        assert!(ok.satisfies_envelope(0.25));
        let bad = DecorationModel::Weibull { scale: 50.0, exponent: 0.1, shift: 0.0 };
        assert!(!bad.satisfies_envelope(0.25));
    }

    #[test]
    fn grid_json_expands() {
        let g = DrwGrid::from_json(r#"{"T":[100,400],"a":[-3],"b":[{"coef":-1,"exponent":0.3}],"delta":0.25,"decorations":[{"kind":"zero"}],"r":20}"#).unwrap();
        let s = g.specs().unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[1].b + 400f64.powf(0.3)).abs() < 1e-12);
        assert!(DrwGrid::from_json(r#"{"T":[],"a":[],"b":[],"delta":0.25,"decorations":[]}"#).is_err());
    }
}
