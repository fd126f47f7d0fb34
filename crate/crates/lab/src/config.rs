use crate::LabError;
use dgff_ballot::drw::DrwGrid;
use dgff_ballot::gff::{AnnulusSpec, BoundarySpec};
use dgff_ballot::provenance::config_hash;
use dgff_ballot::seeds::label_id;
use dgff_ballot::solver::SolverTolerances;
use dgff_ballot::ContinuumDomain;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Thm11,
    Thm23,
    Appb,
    Repulsion,
    Stitch,
    Drw,
    Kernels,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Thm11 => "thm11",
            ExperimentKind::Thm23 => "thm23",
            ExperimentKind::Appb => "appb",
            ExperimentKind::Repulsion => "repulsion",
            ExperimentKind::Stitch => "stitch",
            ExperimentKind::Drw => "drw",
            ExperimentKind::Kernels => "kernels",
        }
    }
}

fn unit_disk() -> ContinuumDomain {
    ContinuumDomain::unit_disk()
}

fn default_gaps() -> Vec<f64> {
    vec![6.0, 8.0, 10.0]
}

fn default_width() -> Option<f64> {
    Some(5.0)
}

fn default_eps() -> f64 {
    0.1
}

fn zero_data() -> Vec<BoundarySpec> {
    vec![BoundarySpec::zero()]
}

fn default_trials() -> u64 {
    10_000
}

fn default_seed() -> u64 {
    1
}

fn default_band_eps() -> f64 {
    0.05
}

fn default_ladder() -> Vec<f64> {
    vec![3.0, 4.0, 5.0]
}

fn default_inner() -> usize {
    8
}

/// Largest lattice a rung may need.
pub const MAX_SITES: f64 = 4e7;

/// One campaign: geometry, grids, data, trial counts and seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "unit_disk")]
    pub u_domain: ContinuumDomain,
    #[serde(default = "unit_disk")]
    pub v_domain: ContinuumDomain,
    /// Physical log-width cap: a rung with gap `n − k` uses `e^{-a} U` with
    /// `a = max(0, n − k − width)`, keeping lattice sizes bounded.
    /// `null` disables the cap.
    #[serde(default = "default_width")]
    pub width: Option<f64>,
    /// Values of `n − k`.
    #[serde(default = "default_gaps")]
    pub gaps: Vec<f64>,
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Boundary data grid on `∂U_n`.
    #[serde(default = "zero_data")]
    pub u_data: Vec<BoundarySpec>,
    /// Boundary data grid on `∂V^-_k`.
    #[serde(default = "zero_data")]
    pub v_data: Vec<BoundarySpec>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Fixed `r`; [`dgff_ballot::functionals::r_sequence`] when absent.
    #[serde(default)]
    pub r: Option<i64>,
    /// Intermediate scale `l` as a fraction of the physical gap.
    #[serde(default)]
    pub l_fraction: Option<f64>,
    /// `M` values for `E_{l,M,ε}`.
    #[serde(default)]
    pub m_grid: Vec<f64>,
    /// The `ε` of `E_{l,M,ε}` and of `B^{±,ε}_l`.
    #[serde(default = "default_band_eps")]
    pub band_eps: f64,
    /// Values of `n − k` for the `R_k` ladder.
    #[serde(default = "default_ladder")]
    pub r_ladder: Vec<f64>,
    /// Fresh sub-annulus draws per outer sample in the stitch campaign.
    #[serde(default = "default_inner")]
    pub inner_draws: usize,
    #[serde(default)]
    pub drw: Option<DrwGrid>,
    #[serde(default)]
    pub solver: SolverTolerances,
    /// Output directory; not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({ "kind": kind })).expect("defaults deserialize")
    }

    pub fn from_json(s: &str) -> Result<ExperimentConfig, LabError> {
        let c: ExperimentConfig = serde_json::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.gaps.is_empty() || self.gaps.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return bad("gaps must be nonempty and positive".into());
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return bad(format!("k = {} must be >= 0", self.k));
        }
        if self.trials == 0 || self.trials > 100_000_000 {
            return bad("trials must be in 1..=1e8".into());
        }
        if self.u_data.is_empty() || self.v_data.is_empty() {
            return bad("u_data and v_data need at least one entry".into());
        }
        for d in self.u_data.iter().chain(&self.v_data) {
            d.validate().map_err(|e| LabError::Config(e.to_string()))?;
        }
        if let Some(w) = self.width {
            if !(w.is_finite() && w > 0.0) {
                return bad(format!("width = {w} must be positive"));
            }
        }
        if let Some(f) = self.l_fraction {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("l_fraction = {f} not in (0,1)"));
            }
        }
        if !(self.band_eps > 0.0 && self.band_eps < 0.5) {
            return bad(format!("band_eps = {} not in (0, 1/2)", self.band_eps));
        }
        if self.r_ladder.is_empty() || self.r_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return bad("r_ladder must be nonempty and increasing".into());
        }
        if self.inner_draws == 0 || self.inner_draws > 4096 {
            return bad("inner_draws must be in 1..=4096".into());
        }
        if let Some(r) = self.r {
            if r < 1 {
                return bad(format!("r = {r} must be >= 1"));
            }
        }
        if self.kind == ExperimentKind::Drw && self.drw.is_none() {
            return bad("drw campaigns need a `drw` grid".into());
        }
        if let Some(g) = &self.drw {
            g.specs().map_err(|e| LabError::Config(e.to_string()))?;
        }
        self.solver.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if self.kind != ExperimentKind::Drw {
            for &g in &self.gaps {
                let sites = self.site_bound(g);
                if sites > MAX_SITES {
                    return bad(format!("rung n - k = {g} needs about {sites:.1e} sites (limit {MAX_SITES:.0e}); lower the gap or set `width`"));
                }
            }
        }
        Ok(())
    }

    /// Upper bound `π R² e^{2(n−a)}` on the lattice size of a rung, `R` the
    /// outer radius of `U`.
    pub fn site_bound(&self, gap: f64) -> f64 {
        let r = self.u_domain.bounding_annulus().outer;
        std::f64::consts::PI * (r * (self.k + gap - self.shrink(gap)).exp() + 1.0).powi(2)
    }

    /// Hash of the canonical JSON without the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        config_hash(&c)
    }

    /// Shrink exponent `a` for a rung.
    pub fn shrink(&self, gap: f64) -> f64 {
        self.width.map(|w| (gap - w).max(0.0)).unwrap_or(0.0)
    }

    /// Annulus of a rung, with `U` replaced by `e^{-a} U`.
    pub fn annulus(&self, gap: f64) -> Result<AnnulusSpec, LabError> {
        let a = self.shrink(gap);
        let u = if a > 0.0 { self.u_domain.scaled(-a).map_err(|e| LabError::Config(e.to_string()))? } else { self.u_domain.clone() };
        Ok(AnnulusSpec { u, n: self.k + gap, v: self.v_domain.clone(), k: self.k, eta: self.eta, zeta: self.zeta, eps: self.eps })
    }

    /// Intermediate scale of a rung; defaults to the middle of the physical gap.
    pub fn l_for(&self, gap: f64) -> f64 {
        let phys = gap - self.shrink(gap);
        self.k + self.l_fraction.unwrap_or(0.5) * phys
    }
}

/// Seed row for a labelled sub-stream of a campaign: `label_id("<kind>/<label>")`.
pub fn seed_row(kind: ExperimentKind, label: &str) -> (u64, String) {
    let s = format!("{}/{label}", kind.name());
    (label_id(&s), s)
}
