//! Trajectory checks: decay-rate fits, the HWI, log-Sobolev and
//! transportation inequalities, moment and support bounds, and entropy
//! monotonicity.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::VerifyOptions;
use crate::constants::{beta_star, lambda as lambda_of, moment_bound_quartic, ConstantsReport, RateConstants};
use crate::dynamics::Trajectory;
use crate::functionals::{entropy_discrete, fisher_discrete};
use crate::measures::{w2, ParticleEnsemble};
use crate::potentials::Potential;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Negated slope of `log value` against t.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of leading points used.
    pub points: usize,
}

/// Least-squares fit of `log values` against `times`, using the leading run
/// of values above `floor`.
pub fn fit_exponential_rate(times: &[f64], values: &[f64], floor: f64) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::InsufficientData(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let used = values.iter().take_while(|&&v| v > floor && v > 0.0).count();
    if used < 3 {
        return Err(Error::InsufficientData(format!(
            "{used} points above the floor {floor:e}; need at least 3"
        )));
    }
    let t = &times[..used];
    let y: Vec<f64> = values[..used].iter().map(|v| v.ln()).collect();
    let n = used as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (ti, yi) in t.iter().zip(&y) {
        stt += (ti - tm) * (ti - tm);
        sty += (ti - tm) * (yi - ym);
        syy += (yi - ym) * (yi - ym);
    }
    if stt == 0.0 {
        return Err(Error::InsufficientData("all times coincide".into()));
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let ss_res: f64 = t
        .iter()
        .zip(&y)
        .map(|(ti, yi)| {
            let r = yi - (intercept + slope * ti);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        rate: -slope,
        intercept,
        r_squared,
        points: used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwiMargin {
    /// `rhs - lhs`.
    pub margin: f64,
    /// `Sigma(rho0) - Sigma(rho1)`.
    pub lhs: f64,
    /// `W sqrt(D(rho0)) - lambda W^2`.
    pub rhs: f64,
    pub w2: f64,
    pub fisher0: f64,
}

/// HWI margin `W sqrt(D(rho0)) - lambda W^2 - (Sigma(rho0) - Sigma(rho1))`
/// with the discrete estimators. Both ensembles must be symmetric to
/// `symmetry_tol`.
pub fn check_hwi(
    rho0: &ParticleEnsemble,
    rho1: &ParticleEnsemble,
    v: &Potential,
    lambda: f64,
    symmetry_tol: f64,
) -> Result<HwiMargin> {
    for (name, e) in [("rho0", rho0), ("rho1", rho1)] {
        if !e.is_symmetric(symmetry_tol) {
            return Err(Error::InvalidEnsemble(format!(
                "{name} is not symmetric: asymmetry {:e} exceeds {symmetry_tol:e}",
                e.asymmetry()
            )));
        }
    }
    let lhs = entropy_discrete(rho0, v)? - entropy_discrete(rho1, v)?;
    let w = w2(rho0, rho1);
    let fisher0 = fisher_discrete(rho0, v);
    let rhs = w * fisher0.sqrt() - lambda * w * w;
    Ok(HwiMargin {
        margin: rhs - lhs,
        lhs,
        rhs,
        w2: w,
        fisher0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Where a check attains its worst margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Time(f64),
    Pair { first: f64, second: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Written as `null` when undefined.
    #[serde(deserialize_with = "nan_if_null")]
    pub worst_margin: f64,
    #[serde(rename = "where")]
    pub location: Location,
    pub detail: String,
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckRecord {
    fn new(name: &str, ok: bool, worst_margin: f64, location: Location, detail: String) -> Self {
        Self {
            name: name.to_string(),
            status: Status::from_bool(ok),
            worst_margin,
            location,
            detail,
        }
    }
}

/// Worst (smallest) margin over the series rows; `None` when no row applies.
fn worst_over_time<F: Fn(usize) -> Option<f64>>(traj: &Trajectory, margin: F) -> Option<(f64, f64)> {
    let mut worst: Option<(f64, f64)> = None;
    for (i, row) in traj.series.iter().enumerate() {
        if let Some(m) = margin(i) {
            if worst.is_none_or(|(w, _)| m < w) {
                worst = Some((m, row.t));
            }
        }
    }
    worst
}

/// `min_t (D(t) - 4 lambda Sigma_rel(t)) / (1 + D(t))`; passes when at
/// least `-tol`.
pub fn check_logsob(traj: &Trajectory, lambda: f64, tol: f64) -> Result<CheckRecord> {
    let rel = traj
        .relative_entropy()
        .ok_or_else(|| Error::InsufficientData("trajectory has no target".into()))?;
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    let (worst, t) = worst_over_time(traj, |i| {
        let d = traj.series[i].fisher;
        Some((d - 4.0 * lambda * rel[i]) / (1.0 + d))
    })
    .ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    Ok(CheckRecord::new(
        "log_sobolev",
        worst >= -tol,
        worst,
        Location::Time(t),
        format!("min over t of (D - 4 lambda Sigma_rel)/(1 + D), lambda = {lambda:e}, tol = {tol}"),
    ))
}

/// `min_t sqrt(Sigma_rel(t)/lambda) - W2(t)`; passes when at least `-tol`.
pub fn check_transport(traj: &Trajectory, lambda: f64, tol: f64) -> Result<CheckRecord> {
    let rel = traj
        .relative_entropy()
        .ok_or_else(|| Error::InsufficientData("trajectory has no target".into()))?;
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    let (worst, t) = worst_over_time(traj, |i| {
        let w = traj.series[i].w2;
        w.is_finite().then(|| (rel[i].max(0.0) / lambda).sqrt() - w)
    })
    .ok_or_else(|| Error::InsufficientData("no W2 values in series".into()))?;
    Ok(CheckRecord::new(
        "transport",
        worst >= -tol,
        worst,
        Location::Time(t),
        format!("min over t of sqrt(Sigma_rel/lambda) - W2, lambda = {lambda:e}, tol = {tol}"),
    ))
}

/// `max_t |(Sigma(t_{k+1}) - Sigma(t_k))/dt + D_avg|` relative to
/// `max(1, D_avg)`, with `D_avg` the trapezoid average over the interval.
/// Reports the fraction of intervals within `tol`.
pub fn dissipation_residuals(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.series
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let d_avg = 0.5 * (w[0].fisher + w[1].fisher);
            let res = ((w[1].entropy - w[0].entropy) / dt + d_avg).abs() / d_avg.max(1.0);
            (w[1].t, res)
        })
        .collect()
}

pub fn check_dissipation(traj: &Trajectory, tol: f64, min_fraction: f64) -> Result<CheckRecord> {
    let res = dissipation_residuals(traj);
    if res.is_empty() {
        return Err(Error::InsufficientData("need at least two records".into()));
    }
    let within = res.iter().filter(|(_, r)| *r <= tol).count();
    let fraction = within as f64 / res.len() as f64;
    let (t, worst) = res.iter().fold((0.0, 0.0f64), |acc, &(t, r)| if r > acc.1 { (t, r) } else { acc });
    Ok(CheckRecord::new(
        "dissipation_identity",
        fraction >= min_fraction,
        fraction - min_fraction,
        Location::Time(t),
        format!(
            "{within}/{} intervals with |dSigma/dt + D| <= {tol} max(1, D); worst residual {worst:e}",
            res.len()
        ),
    ))
}

fn check_entropy_monotone(traj: &Trajectory, tol: f64) -> CheckRecord {
    let mut worst = (f64::INFINITY, 0.0);
    for w in traj.series.windows(2) {
        let m = w[0].entropy - w[1].entropy;
        if m < worst.0 {
            worst = (m, w[1].t);
        }
    }
    if worst.0 == f64::INFINITY {
        worst.0 = 0.0;
    }
    CheckRecord::new(
        "entropy_monotone",
        worst.0 >= -tol,
        worst.0,
        Location::Time(worst.1),
        format!("min over steps of Sigma(t_k) - Sigma(t_(k+1)), tol = {tol:e}"),
    )
}

fn check_moment(traj: &Trajectory, c: f64, slack: f64) -> CheckRecord {
    let m2_0 = traj.series[0].m2;
    let bound = moment_bound_quartic(c, m2_0) + slack;
    let (worst, t) = worst_over_time(traj, |i| Some(bound - traj.series[i].m2)).unwrap_or((0.0, 0.0));
    let in_regime = c > -2.0 && c < 0.0;
    CheckRecord::new(
        "moment_bound",
        worst >= 0.0,
        worst,
        Location::Time(t),
        format!(
            "m2(t) <= max(1 + sqrt 2, m2(0)) + {slack} = {bound}{}",
            if in_regime { "" } else { " (c outside (-2, 0))" }
        ),
    )
}

fn check_containment(traj: &Trajectory, constants: &ConstantsReport) -> CheckRecord {
    let sb = constants.support_bound;
    let radius = traj.series.iter().map(|r| r.support_radius).fold(0.0, f64::max);
    match constants.m {
        Some(m_star) => {
            let (worst, t) =
                worst_over_time(traj, |i| Some(m_star - traj.series[i].support_radius)).unwrap_or((0.0, 0.0));
            CheckRecord::new(
                "support_containment",
                worst >= 0.0,
                worst,
                Location::Time(t),
                format!("max |x_i| = {radius} against M* = {m_star}"),
            )
        }
        None => CheckRecord::new(
            "support_containment",
            false,
            f64::NAN,
            Location::None,
            match sb {
                Some(sb) => format!(
                    "no support bound M* exists for m = {}, g = {} (largest slack {:e} at M = {}); observed max |x_i| = {radius}",
                    sb.m, sb.g, sb.max_slack, sb.max_slack_at
                ),
                None => format!("no support bound available; observed max |x_i| = {radius}"),
            },
        ),
    }
}

/// Aggregated verification results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub fitted_rate: Option<f64>,
    pub fitted_r2: Option<f64>,
    pub fit_points: Option<usize>,
    pub noise_floor: Option<f64>,
    pub certified_rate_2lambda: Option<f64>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Rate constants at the report's radius with the moment bound raised to
/// `m2`, when larger.
fn rate_with_moment(rc: &RateConstants, m2: f64) -> f64 {
    let m = rc.m.max(m2);
    lambda_of(rc.alpha, rc.beta, beta_star(rc.r, m, rc.p, rc.gamma))
}

/// Decay-rate fit of the W2 series above the noise floor
/// `max(min_floor, floor_factor * W2(t_end))`.
pub fn fit_w2_decay(traj: &Trajectory, opts: &VerifyOptions) -> Result<(RateFit, f64)> {
    let w: Vec<f64> = traj.series.iter().map(|r| r.w2).collect();
    let last = *w.last().ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    if !last.is_finite() {
        return Err(Error::InsufficientData("trajectory has no W2 series".into()));
    }
    let floor = (opts.floor_factor * last).max(opts.min_floor);
    let t: Vec<f64> = traj.series.iter().map(|r| r.t).collect();
    Ok((fit_exponential_rate(&t, &w, floor)?, floor))
}

/// HWI on `opts.hwi_pairs` seeded random ordered snapshot pairs.
pub fn check_hwi_pairs(traj: &Trajectory, rc: &RateConstants, opts: &VerifyOptions) -> Result<CheckRecord> {
    let v = &traj.meta.config.potential;
    let snaps = &traj.snapshots;
    let k = snaps.len();
    if k < 2 {
        return Err(Error::InsufficientData("need at least two snapshots".into()));
    }
    let seed = opts.seed.unwrap_or(traj.meta.config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // running maximum of m2 up to each snapshot time
    let running_m2 = |t: f64| {
        traj.series
            .iter()
            .take_while(|r| r.t <= t)
            .map(|r| r.m2)
            .fold(0.0, f64::max)
    };
    let mut worst = (f64::INFINITY, Location::None);
    for _ in 0..opts.hwi_pairs {
        let idx = sample(&mut rng, k, 2);
        let (a, b) = (&snaps[idx.index(0)], &snaps[idx.index(1)]);
        let lam = rate_with_moment(rc, running_m2(a.t.max(b.t)));
        let m = check_hwi(&a.ensemble, &b.ensemble, v, lam, opts.symmetry_tol)?;
        if m.margin < worst.0 {
            worst = (
                m.margin,
                Location::Pair {
                    first: a.t,
                    second: b.t,
                },
            );
        }
    }
    Ok(CheckRecord::new(
        "hwi",
        worst.0 >= -opts.tol,
        worst.0,
        worst.1,
        format!(
            "{} seeded snapshot pairs (seed {seed}), lambda at r = {} with the running-max moment bound, tol = {}",
            opts.hwi_pairs, rc.r, opts.tol
        ),
    ))
}

/// Runs every check that applies to `traj` given the constants report.
pub fn verify_convergence(
    traj: &Trajectory,
    constants: &ConstantsReport,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if traj.series.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    let v = &traj.meta.config.potential;
    let mut checks = Vec::new();
    checks.push(check_entropy_monotone(traj, opts.entropy_monotone_tol));

    let has_target = traj.meta.target_entropy.is_some();
    let mut fit = None;
    let mut floor = has_target.then(|| {
        let last = traj.series[traj.series.len() - 1].w2;
        (opts.floor_factor * last).max(opts.min_floor)
    });
    let at_floor = floor.is_some_and(|f| traj.series[0].w2 <= f);
    if at_floor {
        checks.push(CheckRecord::new(
            "decay_rate",
            true,
            0.0,
            Location::Time(0.0),
            "W2 starts at the noise floor; nothing to fit".into(),
        ));
    } else if has_target {
        match fit_w2_decay(traj, opts) {
            Ok((f, fl)) => {
                fit = Some(f);
                floor = Some(fl);
            }
            Err(e) => checks.push(CheckRecord::new(
                "decay_rate",
                false,
                f64::NAN,
                Location::None,
                e.to_string(),
            )),
        }
    }

    let rc = constants.rate_constants.filter(|_| constants.certified);
    if let Some(f) = fit {
        let (ok, margin, detail) = match rc {
            Some(rc) => {
                let target = 2.0 * rc.lambda;
                (
                    f.rate >= target,
                    f.rate - target,
                    format!("fitted rate {} on {} points (r2 = {}) against 2 lambda = {target}", f.rate, f.points, f.r_squared),
                )
            }
            None => (
                f.rate > 0.0,
                f.rate,
                format!("fitted rate {} on {} points (r2 = {}); no certified rate, requiring > 0", f.rate, f.points, f.r_squared),
            ),
        };
        checks.push(CheckRecord::new("decay_rate", ok, margin, Location::None, detail));
    }

    if let (Some(rc), true) = (rc, has_target) {
        let rel = traj.relative_entropy().unwrap_or_default();
        let lam = rc.lambda;
        let amp = (rel[0].max(0.0) / lam).sqrt();
        let fl = floor.unwrap_or(opts.min_floor);
        let (worst, t) = worst_over_time(traj, |i| {
            let r = &traj.series[i];
            (r.w2 > fl).then(|| amp * (-2.0 * lam * r.t).exp() * (1.0 + opts.tol) - r.w2)
        })
        .unwrap_or((0.0, 0.0));
        checks.push(CheckRecord::new(
            "envelope",
            worst >= 0.0,
            worst,
            Location::Time(t),
            format!("W2(t) <= sqrt(Sigma_rel(0)/lambda) exp(-2 lambda t) (1 + {}) above the floor {fl:e}", opts.tol),
        ));
        checks.push(check_logsob(traj, lam, opts.tol)?);
        checks.push(check_transport(traj, lam, opts.tol)?);
        if traj.snapshots.len() >= 2 && traj.snapshots.iter().all(|s| s.ensemble.is_symmetric(opts.symmetry_tol)) {
            checks.push(check_hwi_pairs(traj, &rc, opts)?);
        } else {
            checks.push(CheckRecord::new(
                "hwi",
                false,
                f64::NAN,
                Location::None,
                format!("snapshots are not symmetric to {:e} or fewer than two", opts.symmetry_tol),
            ));
        }
    }

    match *v {
        Potential::QuarticConfining { c } => checks.push(check_moment(traj, c, opts.moment_slack)),
        Potential::QuarticNonconfining { .. } => checks.push(check_containment(traj, constants)),
        Potential::GeneralEven { .. } => {}
    }

    if let Some(a) = &traj.meta.abort {
        checks.push(CheckRecord::new(
            "completed",
            false,
            a.t,
            Location::Time(a.t),
            format!("simulation aborted: {}", a.detail),
        ));
    }

    let passed = checks.iter().all(|c| c.status == Status::Pass);
    Ok(VerificationReport {
        checks,
        fitted_rate: fit.map(|f| f.rate),
        fitted_r2: fit.map(|f| f.r_squared),
        fit_points: fit.map(|f| f.points),
        noise_floor: floor,
        certified_rate_2lambda: rc.map(|k| 2.0 * k.lambda),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fit() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let f = fit_exponential_rate(&t, &v, 1e-8).unwrap();
        assert!((f.rate - 3.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let flat = fit_exponential_rate(&t, &vec![2.0; 50], 1e-8).unwrap();
        assert!(flat.rate.abs() < 1e-15);
    }

    #[test]
    fn fit_needs_three_points() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [1.0, 0.1, 1e-9, 1e-10];
        assert!(fit_exponential_rate(&t, &v, 1e-8).is_err());
        assert!(fit_exponential_rate(&t[..3], &v, 1e-8).is_err());
    }

    #[test]
    fn hwi_on_identical_ensembles_is_zero() {
        let e = ParticleEnsemble::new(vec![-1.0, -0.2, 0.2, 1.0]).unwrap();
        let v = Potential::harmonic();
        let m = check_hwi(&e, &e, &v, 0.5, 1e-9).unwrap();
        assert_eq!((m.margin, m.lhs, m.w2), (0.0, 0.0, 0.0));
        let skew = ParticleEnsemble::new(vec![-1.0, 0.0, 1.1]).unwrap();
        assert!(check_hwi(&e, &skew, &v, 0.5, 1e-9).is_err());
    }

    #[test]
    fn undefined_margin_round_trips() {
        let c = CheckRecord::new("x", false, f64::NAN, Location::None, String::new());
        let back: CheckRecord = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert!(back.worst_margin.is_nan());
        assert_eq!(back.status, Status::Fail);
    }
}
