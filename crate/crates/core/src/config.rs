//! JSON configuration schema. Every default value used by the command-line
//! workflows lives here.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{GammaChoice, RadiusSearch, ReportOptions};
use crate::equilibrium::EquilibriumSpec;
use crate::measures::{moment, ParticleEnsemble};
use crate::potentials::Potential;
use crate::{Error, Result};

/// Initial particle configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Midpoint quantiles of an equilibrium measure.
    QuantilesOf { equilibrium: EquilibriumSpec },
    /// Deterministic midpoint grid of the uniform law on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Seeded uniform draws on `[0, half_width]`, mirrored to an antisymmetric set.
    UniformRandom { half_width: f64 },
    /// Two mirrored uniform clusters of the given width centred at `±center`.
    TwoClusters { center: f64, width: f64 },
    Explicit { positions: Vec<f64> },
}

fn default_dt_init() -> f64 {
    0.01
}
fn default_dt_min() -> f64 {
    1e-12
}
fn default_record_every() -> f64 {
    0.05
}
fn default_stability_factor() -> f64 {
    2.0
}
fn default_max_halvings() -> u32 {
    40
}
fn default_gap_floor_relative() -> f64 {
    1e-9
}
fn default_snapshot_count() -> usize {
    50
}

/// Simulation parameters; also carries the option blocks used by the
/// `pipeline` workflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub potential: Potential,
    pub init: InitSpec,
    pub t_end: f64,
    /// Upper bound on the time step.
    #[serde(default = "default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
    /// Minimum admissible particle gap; defaults to `gap_floor_relative`
    /// times the initial support width.
    #[serde(default)]
    pub gap_floor: Option<f64>,
    #[serde(default = "default_gap_floor_relative")]
    pub gap_floor_relative: f64,
    #[serde(default = "default_record_every")]
    pub record_every: f64,
    /// Time between stored snapshots; defaults to `t_end / snapshot_count`.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default = "default_snapshot_count")]
    pub snapshot_count: usize,
    #[serde(default)]
    pub symmetrize_each_step: bool,
    #[serde(default)]
    pub seed: u64,
    /// Steps are capped at `stability_factor` over a Gershgorin bound of the
    /// drift Jacobian's spectral radius.
    #[serde(default = "default_stability_factor")]
    pub stability_factor: f64,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: u32,
    /// Measure the series `w2` column is computed against; defaults to the
    /// equilibrium of `potential` when one is known in closed form.
    #[serde(default)]
    pub target: Option<EquilibriumSpec>,
    /// Support-escape radius for non-confining potentials.
    #[serde(default)]
    pub hard_radius: Option<f64>,
    #[serde(default)]
    pub constants: ConstantsOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
}

impl SimulationConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|source| Error::Json {
            path: "<string>".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.potential.validate()?;
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return bad(format!(
                "need 0 < dt_min < dt_init, got dt_min={} dt_init={}",
                self.dt_min, self.dt_init
            ));
        }
        if let Some(g) = self.gap_floor {
            if !(g > 0.0) {
                return bad(format!("gap_floor must be positive, got {g}"));
            }
        }
        if !(self.gap_floor_relative > 0.0) {
            return bad("gap_floor_relative must be positive".into());
        }
        if !(self.record_every > 0.0) {
            return bad(format!("record_every must be positive, got {}", self.record_every));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) {
                return bad(format!("snapshot_every must be positive, got {s}"));
            }
        }
        if self.snapshot_count == 0 {
            return bad("snapshot_count must be positive".into());
        }
        if !(self.stability_factor > 0.0) {
            return bad("stability_factor must be positive".into());
        }
        if self.symmetrize_each_step && self.n % 2 == 1 {
            return bad("symmetrize_each_step needs an even particle count".into());
        }
        if let Some(r) = self.hard_radius {
            if !(r > 0.0) {
                return bad(format!("hard_radius must be positive, got {r}"));
            }
        }
        match &self.init {
            InitSpec::Uniform { half_width } | InitSpec::UniformRandom { half_width }
                if !(*half_width > 0.0) =>
            {
                bad(format!("init half_width must be positive, got {half_width}"))
            }
            InitSpec::TwoClusters { center, width } if !(*width > 0.0 && *center > 0.5 * width) => {
                bad(format!(
                    "two_clusters needs width > 0 and center > width/2, got center={center} width={width}"
                ))
            }
            InitSpec::Explicit { positions } if positions.len() != self.n => bad(format!(
                "explicit init has {} positions but n = {}",
                positions.len(),
                self.n
            )),
            _ => Ok(()),
        }
    }

    /// Snapshot spacing after applying the default.
    pub fn snapshot_interval(&self) -> f64 {
        self.snapshot_every
            .unwrap_or(self.t_end / self.snapshot_count as f64)
    }
}

fn default_r_max() -> f64 {
    1e4
}

/// Options for the rate-constant computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsOptions {
    /// Use `gamma = 1/(2 r^2)` instead of `1/(4 r^2)`.
    #[serde(default)]
    pub sharp_gamma: bool,
    /// Lower end of the radius search; defaults to the smallest radius where
    /// the potential is convex outside, or a tiny positive value.
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Initial second moment; defaults to that of the initial ensemble.
    #[serde(default)]
    pub m2_init: Option<f64>,
    /// Initial support half-width for the non-confining support bound;
    /// defaults to that of the initial ensemble.
    #[serde(default)]
    pub m: Option<f64>,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        Self {
            sharp_gamma: false,
            r0: None,
            r_max: default_r_max(),
            m2_init: None,
            m: None,
        }
    }
}

impl ConstantsOptions {
    /// Resolves the defaults that depend on the initial ensemble.
    pub fn report_options(&self, init: &ParticleEnsemble) -> Result<ReportOptions> {
        Ok(ReportOptions {
            m2_init: match self.m2_init {
                Some(m2) => m2,
                None => moment(init, 2.0)?,
            },
            m: self.m.unwrap_or_else(|| init.support_radius()),
            search: RadiusSearch {
                r0: self.r0,
                r_max: self.r_max,
                gamma: if self.sharp_gamma {
                    GammaChoice::Sharp
                } else {
                    GammaChoice::Quarter
                },
            },
        })
    }
}

fn default_tol() -> f64 {
    0.02
}
fn default_hwi_pairs() -> usize {
    50
}
fn default_floor_factor() -> f64 {
    3.0
}
fn default_min_floor() -> f64 {
    1e-8
}
fn default_monotone_tol() -> f64 {
    1e-9
}
fn default_moment_slack() -> f64 {
    0.05
}
fn default_symmetry_tol() -> f64 {
    1e-9
}

/// Options for trajectory verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    /// Absolute allowance for entropy-estimator bias on inequality margins.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_hwi_pairs")]
    pub hwi_pairs: usize,
    /// The decay-fit noise floor is this multiple of the final W2.
    #[serde(default = "default_floor_factor")]
    pub floor_factor: f64,
    #[serde(default = "default_min_floor")]
    pub min_floor: f64,
    #[serde(default = "default_monotone_tol")]
    pub entropy_monotone_tol: f64,
    #[serde(default = "default_moment_slack")]
    pub moment_slack: f64,
    #[serde(default = "default_symmetry_tol")]
    pub symmetry_tol: f64,
    /// Seed for choosing snapshot pairs; defaults to the simulation seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            hwi_pairs: default_hwi_pairs(),
            floor_factor: default_floor_factor(),
            min_floor: default_min_floor(),
            entropy_monotone_tol: default_monotone_tol(),
            moment_slack: default_moment_slack(),
            symmetry_tol: default_symmetry_tol(),
            seed: None,
        }
    }
}
