//! Particle dynamics `dx_i/dt = -V'(x_i) + (2/N) sum_{j != i} 1/(x_i - x_j)`.
//!
//! Time stepping is classical RK4. A step is accepted only if the particles
//! stay strictly ordered with gaps at least `gap_floor`; otherwise dt is
//! halved. The step is also capped by `stability_factor / rho`, with rho a
//! Gershgorin bound on the spectral radius of the drift Jacobian, since the
//! close-packed interaction makes the system stiff as N grows.
//!
//! Results do not depend on the number of rayon threads: every particle's
//! interaction sum is sequential, and exactly antisymmetric states keep
//! bitwise antisymmetric velocities.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InitSpec, SimulationConfig};
use crate::constants::support_bound_analysis;
use crate::equilibrium::{EquilibriumDensity, EquilibriumSpec};
use crate::functionals::{entropy_slice, exactly_antisymmetric, row_sums};
use crate::measures::{self, ParticleEnsemble};
use crate::potentials::Potential;
use crate::{Error, Result};

/// Velocities and (optionally) the Gershgorin stiffness bound.
fn drift(x: &[f64], v: &Potential, stiffness: bool) -> (Vec<f64>, f64) {
    let n = x.len();
    let scale = 2.0 / n as f64;
    let sym = exactly_antisymmetric(x);
    let m = if sym { n.div_ceil(2) } else { n };
    let eval = |i: usize| {
        let xi = x[i];
        if stiffness {
            let (s, q) = row_sums::<true>(x, i);
            (-v.derivative(xi) + scale * s, v.second_derivative(xi).abs() + 2.0 * scale * q)
        } else {
            let (s, _) = row_sums::<false>(x, i);
            (-v.derivative(xi) + scale * s, 0.0)
        }
    };
    let part: Vec<(f64, f64)> = (0..m).into_par_iter().map(eval).collect();
    let mut vel = vec![0.0; n];
    let mut rho = 0.0f64;
    for (i, &(vi, ri)) in part.iter().enumerate() {
        vel[i] = vi;
        rho = rho.max(ri);
    }
    if sym {
        for i in 0..n / 2 {
            vel[n - 1 - i] = -vel[i];
        }
    }
    (vel, rho)
}

/// `v_i = -V'(x_i) + 2 H_i`.
pub fn velocity_field(ensemble: &ParticleEnsemble, v: &Potential) -> Vec<f64> {
    drift(ensemble.positions(), v, false).0
}

/// Gershgorin bound on the spectral radius of the drift Jacobian.
pub fn stiffness_bound(ensemble: &ParticleEnsemble, v: &Potential) -> f64 {
    drift(ensemble.positions(), v, true).1
}

/// Limits for a single guarded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt_min: f64,
    pub gap_floor: f64,
    pub max_halvings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub ensemble: ParticleEnsemble,
    pub dt_used: f64,
    pub halvings: u32,
}

fn axpy(out: &mut [f64], x: &[f64], h: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + h * ki;
    }
}

fn rk4(x: &[f64], k1: &[f64], dt: f64, v: &Potential) -> Vec<f64> {
    let n = x.len();
    let mut tmp = vec![0.0; n];
    axpy(&mut tmp, x, 0.5 * dt, k1);
    let (k2, _) = drift(&tmp, v, false);
    axpy(&mut tmp, x, 0.5 * dt, &k2);
    let (k3, _) = drift(&tmp, v, false);
    axpy(&mut tmp, x, dt, &k3);
    let (k4, _) = drift(&tmp, v, false);
    let h = dt / 6.0;
    (0..n)
        .map(|i| x[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn admissible(x: &[f64], gap_floor: f64) -> bool {
    x.iter().all(|v| v.is_finite()) && x.windows(2).all(|w| w[1] - w[0] >= gap_floor)
}

/// RK4 from `x` with precomputed first stage `k1`, halving dt until the
/// ordering/gap guard accepts.
fn guarded_step(
    x: &[f64],
    k1: &[f64],
    dt: f64,
    v: &Potential,
    ctl: &StepControl,
) -> Result<(Vec<f64>, f64, u32)> {
    let mut h = dt;
    let mut halvings = 0;
    loop {
        let y = rk4(x, k1, h, v);
        if admissible(&y, ctl.gap_floor) {
            return Ok((y, h, halvings));
        }
        halvings += 1;
        h *= 0.5;
        if halvings > ctl.max_halvings || h < ctl.dt_min {
            let gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            return Err(Error::NearCollision {
                dt: h,
                detail: format!("{halvings} halvings, current minimum gap {gap:e}"),
            });
        }
    }
}

/// One guarded RK4 step of size at most `dt`.
pub fn step(ensemble: &ParticleEnsemble, v: &Potential, dt: f64, ctl: &StepControl) -> Result<StepOutcome> {
    if !(dt >= ctl.dt_min) {
        return Err(Error::param("dt", dt, "must be at least dt_min"));
    }
    let x = ensemble.positions();
    let (k1, _) = drift(x, v, false);
    let (y, dt_used, halvings) = guarded_step(x, &k1, dt, v, ctl)?;
    Ok(StepOutcome {
        ensemble: ParticleEnsemble::from_sorted_unchecked(y),
        dt_used,
        halvings,
    })
}

/// Builds the initial ensemble described by `init`.
pub fn initial_ensemble(init: &InitSpec, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    let mirrored = |half: Vec<f64>| {
        // `half` holds the positive points in any order
        let mut pos = half;
        pos.sort_by(f64::total_cmp);
        let mut x: Vec<f64> = pos.iter().rev().map(|p| -p).collect();
        if n % 2 == 1 {
            x.push(0.0);
        }
        x.extend(pos);
        ParticleEnsemble::new(x)
    };
    match init {
        InitSpec::QuantilesOf { equilibrium } => equilibrium.build()?.sample(n),
        InitSpec::Uniform { half_width } => {
            let m = *half_width;
            let pts = (0..n / 2).map(|i| m - m * (2 * i + 1) as f64 / n as f64).collect();
            mirrored(pts)
        }
        InitSpec::UniformRandom { half_width } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..n / 2).map(|_| rng.random_range(0.0..*half_width)).collect();
            mirrored(pts)
        }
        InitSpec::TwoClusters { center, width } => {
            let k = n / 2;
            let pts = (0..k)
                .map(|i| center - 0.5 * width + width * (i as f64 + 0.5) / k as f64)
                .collect();
            mirrored(pts)
        }
        InitSpec::Explicit { positions } => ParticleEnsemble::from_unsorted(positions.clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub m2: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// W2 to the target's midpoint quantiles; NaN without a target.
    pub w2: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub ensemble: ParticleEnsemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardRadiusSource {
    Config,
    SupportBound,
    /// No admissible support bound exists; the radius where V'' changes sign is used.
    ConvexityRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardRadius {
    pub value: f64,
    pub source: HardRadiusSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub halvings: u64,
    pub stability_limited: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortKind {
    NearCollision,
    SupportEscape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub kind: AbortKind,
    pub t: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub file: String,
}

/// Run metadata written as `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub config: SimulationConfig,
    pub target: Option<EquilibriumSpec>,
    /// Discrete entropy of the N-point midpoint-quantile sample of the target.
    pub target_entropy: Option<f64>,
    pub gap_floor: f64,
    pub hard_radius: Option<HardRadius>,
    pub snapshots: Vec<SnapshotEntry>,
    pub stats: StepStats,
    /// Largest asymmetry removed by per-step symmetrization.
    pub max_symmetrize_correction: f64,
    pub abort: Option<AbortInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub series: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Relative entropy at each recorded time, when the target is known.
    pub fn relative_entropy(&self) -> Option<Vec<f64>> {
        let s0 = self.meta.target_entropy?;
        Some(self.series.iter().map(|r| r.entropy - s0).collect())
    }

    pub fn target(&self) -> Option<EquilibriumSpec> {
        self.meta.target
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error("near collision at t = {t}: {source}")]
    NearCollision {
        t: f64,
        source: Error,
        partial: Box<Trajectory>,
    },
    #[error("support escape at t = {t}: max |x| = {radius} exceeds hard radius {hard_radius}")]
    SupportEscape {
        t: f64,
        radius: f64,
        hard_radius: f64,
        partial: Box<Trajectory>,
    },
}

impl SimulationError {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            SimulationError::Setup(_) => None,
            SimulationError::NearCollision { partial, .. } | SimulationError::SupportEscape { partial, .. } => {
                Some(partial)
            }
        }
    }
}

struct Recorder<'a> {
    v: &'a Potential,
    target_points: Option<Vec<f64>>,
    series: Vec<SeriesRow>,
    snapshots: Vec<Snapshot>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, x: &[f64], vel: &[f64], snapshot: bool) {
        let n = x.len() as f64;
        let ens = ParticleEnsemble::from_sorted_unchecked(x.to_vec());
        self.series.push(SeriesRow {
            t,
            m2: x.iter().map(|v| v * v).sum::<f64>() / n,
            entropy: entropy_slice(x, self.v),
            fisher: vel.iter().map(|v| v * v).sum::<f64>() / n,
            w2: self
                .target_points
                .as_ref()
                .map_or(f64::NAN, |q| measures::w2_to_points(&ens, q)),
            support_radius: ens.support_radius(),
        });
        if snapshot {
            self.snapshots.push(Snapshot { t, ensemble: ens });
        }
    }
}

fn default_hard_radius(cfg: &SimulationConfig, init: &ParticleEnsemble) -> Result<Option<HardRadius>> {
    let Potential::QuarticNonconfining { g } = cfg.potential else {
        return Ok(None);
    };
    if let Some(r) = cfg.hard_radius {
        return Ok(Some(HardRadius {
            value: r,
            source: HardRadiusSource::Config,
        }));
    }
    let sb = support_bound_analysis(init.support_radius(), g)?;
    Ok(match sb.m_star {
        Some(m) => Some(HardRadius {
            value: m,
            source: HardRadiusSource::SupportBound,
        }),
        None if g < 0.0 => Some(HardRadius {
            value: (-1.0 / (3.0 * g)).sqrt(),
            source: HardRadiusSource::ConvexityRadius,
        }),
        None => None,
    })
}

/// Integrates the particle system described by `cfg`, recording the series
/// every `record_every` and snapshots every `snapshot_interval()`.
///
/// `target` overrides `cfg.target`; with neither, the equilibrium of the
/// potential is used when it is one of the quartic families.
pub fn simulate(cfg: &SimulationConfig, target: Option<&EquilibriumDensity>) -> Result<Trajectory, SimulationError> {
    cfg.validate()?;
    let v = &cfg.potential;
    let init = initial_ensemble(&cfg.init, cfg.n, cfg.seed)?;
    if init.len() != cfg.n {
        return Err(Error::InvalidConfig(format!(
            "initial configuration has {} particles, expected {}",
            init.len(),
            cfg.n
        ))
        .into());
    }
    let target_eq = match target {
        Some(t) => Some(t.clone()),
        None => cfg
            .target
            .or_else(|| EquilibriumSpec::for_potential(v))
            .map(|s| s.build())
            .transpose()?,
    };
    let target_points = target_eq.as_ref().map(|e| e.quantile_points(cfg.n)).transpose()?;
    let target_entropy = target_points.as_ref().map(|q| entropy_slice(q, v));
    let x0 = init.positions();
    let width = x0[x0.len() - 1] - x0[0];
    let gap_floor = cfg.gap_floor.unwrap_or(cfg.gap_floor_relative * width);
    let hard_radius = default_hard_radius(cfg, &init)?;
    let ctl = StepControl {
        dt_min: cfg.dt_min,
        gap_floor,
        max_halvings: cfg.max_halvings,
    };

    let mut record_times: Vec<f64> = {
        let k = (cfg.t_end / cfg.record_every * (1.0 + 1e-12)).floor() as u64;
        (1..=k).map(|i| i as f64 * cfg.record_every).collect()
    };
    if record_times.last().is_none_or(|&t| t < cfg.t_end * (1.0 - 1e-12)) {
        record_times.push(cfg.t_end);
    }
    let n_records = record_times.len();
    let snap_stride = ((cfg.snapshot_interval() / cfg.record_every).round() as usize).max(1);

    let mut meta = TrajectoryMeta {
        config: cfg.clone(),
        target: target_eq.as_ref().map(|e| e.spec()),
        target_entropy,
        gap_floor,
        hard_radius,
        snapshots: Vec::new(),
        stats: StepStats {
            min_dt: f64::INFINITY,
            ..StepStats::default()
        },
        max_symmetrize_correction: 0.0,
        abort: None,
    };
    let mut rec = Recorder {
        v,
        target_points,
        series: Vec::new(),
        snapshots: Vec::new(),
    };

    let mut x = init.into_positions();
    let mut t = 0.0;
    let (mut k1, mut rho) = drift(&x, v, true);
    rec.record(0.0, &x, &k1, true);

    let finish = |rec: Recorder, mut meta: TrajectoryMeta| {
        if meta.stats.accepted == 0 {
            meta.stats.min_dt = 0.0;
        }
        meta.snapshots = rec
            .snapshots
            .iter()
            .enumerate()
            .map(|(index, s)| SnapshotEntry {
                index,
                t: s.t,
                file: format!("snapshot_{index}.csv"),
            })
            .collect();
        Trajectory {
            series: rec.series,
            snapshots: rec.snapshots,
            meta,
        }
    };

    for (k, &t_next) in (1..).zip(&record_times) {
        while t < t_next {
            let remaining = t_next - t;
            let stable = if rho > 0.0 { cfg.stability_factor / rho } else { f64::INFINITY };
            let cap = cfg.dt_init.min(stable);
            if stable < cfg.dt_init {
                meta.stats.stability_limited += 1;
            }
            let dt = if remaining <= cap {
                remaining
            } else {
                remaining / (remaining / cap).ceil()
            };
            let (y, used, halvings) = match guarded_step(&x, &k1, dt, v, &ctl) {
                Ok(r) => r,
                Err(source) => {
                    meta.abort = Some(AbortInfo {
                        kind: AbortKind::NearCollision,
                        t,
                        detail: source.to_string(),
                    });
                    return Err(SimulationError::NearCollision {
                        t,
                        source,
                        partial: Box::new(finish(rec, meta)),
                    });
                }
            };
            x = y;
            t = if halvings == 0 && dt == remaining { t_next } else { t + used };
            meta.stats.accepted += 1;
            meta.stats.halvings += halvings as u64;
            meta.stats.min_dt = meta.stats.min_dt.min(used);
            meta.stats.max_dt = meta.stats.max_dt.max(used);
            if cfg.symmetrize_each_step {
                let ens = ParticleEnsemble::from_sorted_unchecked(std::mem::take(&mut x));
                meta.max_symmetrize_correction = meta.max_symmetrize_correction.max(ens.asymmetry());
                x = measures::symmetrize(&ens)?.into_positions();
            }
            if let Some(hr) = meta.hard_radius {
                let radius = x[0].abs().max(x[x.len() - 1].abs());
                if radius > hr.value {
                    meta.abort = Some(AbortInfo {
                        kind: AbortKind::SupportEscape,
                        t,
                        detail: format!("max |x| = {radius} exceeds {}", hr.value),
                    });
                    return Err(SimulationError::SupportEscape {
                        t,
                        radius,
                        hard_radius: hr.value,
                        partial: Box::new(finish(rec, meta)),
                    });
                }
            }
            (k1, rho) = drift(&x, v, true);
        }
        rec.record(t, &x, &k1, k % snap_stride == 0 || k == n_records);
    }
    Ok(finish(rec, meta))
}
