//! Explicit convergence constants: moment bounds, the HWI constant
//! `beta*(r)`, the rate `lambda(r)`, and the support bound for the
//! non-confining quartic.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::potentials::{PerturbedPotential, Potential};
use crate::{Error, Result};

/// How the interaction convexity constant gamma depends on the radius r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaChoice {
    /// `gamma = 1/(4 r^2)`.
    #[default]
    Quarter,
    /// `gamma = 1/(2 r^2)`, the sharper bound from `W''(x) = 2/x^2 >= 1/(2r^2)` on `|x| <= 2r`.
    Sharp,
}

impl GammaChoice {
    pub fn gamma(self, r: f64) -> f64 {
        match self {
            GammaChoice::Quarter => 0.25 / (r * r),
            GammaChoice::Sharp => 0.5 / (r * r),
        }
    }
}

/// `gamma (1 - 2^{p+1} M / r^p)`.
pub fn beta_star(r: f64, m: f64, p: f64, gamma: f64) -> f64 {
    gamma * (1.0 - 2f64.powf(p + 1.0) * m / r.powf(p))
}

/// `min(alpha, beta* - beta) / 2`.
pub fn lambda(alpha: f64, beta: f64, beta_star: f64) -> f64 {
    0.5 * alpha.min(beta_star - beta)
}

/// Second-moment bound `max(1 + sqrt 2, m2(0))` for `x^4/4 + c x^2/2`.
pub fn moment_bound_quartic(_c: f64, m2_init: f64) -> f64 {
    (1.0 + SQRT_2).max(m2_init)
}

/// The same bound from the stationarity identity with constant 1/2:
/// `m2^2 + c m2 <= 1/2` gives `max(1 + sqrt(3/2), m2(0))` over `|c| <= 2`.
pub fn moment_bound_quartic_halved(_c: f64, m2_init: f64) -> f64 {
    (1.0 + 1.5f64.sqrt()).max(m2_init)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBound {
    /// Largest root with constant term 1.
    pub bound: f64,
    /// Largest root with constant term 1/2.
    pub halved_constant: f64,
    /// The exponent 2n of the moment being bounded.
    pub moment_order: u32,
}

/// Bound on `m_{2n}` for a potential `x^{2n}/(2n) + sum a_{2k} x^{2k}/(2k)`
/// plus a perturbation of sup-norm at most one: the largest root of
/// `1 - x + sum_k |a_{2k}| x^{k/n} + sum_{k=0}^{m} x^{k/n}`,
/// the second sum present only when there is a perturbation of degree 2m.
pub fn moment_bound_general(v: &PerturbedPotential) -> Result<MomentBound> {
    let (n, a) = v
        .base
        .normal_form()
        .ok_or_else(|| Error::Unsupported("moment bound needs the x^{2n}/(2n) normal form".into()))?;
    if v.perturbation_norm() > 1.0 {
        return Err(Error::param(
            "perturbation_norm",
            v.perturbation_norm(),
            "must be at most 1",
        ));
    }
    let nf = n as f64;
    let mut terms: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .map(|(i, c)| (c.abs(), (i + 1) as f64 / nf))
        .collect();
    if !v.perturbation.is_empty() {
        for k in 0..v.perturbation.len() {
            terms.push((1.0, k as f64 / nf));
        }
    }
    let root = |c0: f64| {
        let q = |x: f64| c0 - x + terms.iter().map(|(w, e)| w * x.powf(*e)).sum::<f64>();
        let mut hi = 1.0;
        while q(hi) >= 0.0 {
            hi *= 2.0;
        }
        // q is concave on x > 0 with q(0) > 0, so there is exactly one root
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(MomentBound {
        bound: root(1.0),
        halved_constant: root(0.5),
        moment_order: 2 * n,
    })
}

/// Maximizes a smooth unimodal function on `[lo, hi]`: geometric grid, then
/// golden-section refinement around the best grid point to relative
/// tolerance 1e-8 in the argument.
fn maximize_geometric<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> (f64, f64) {
    const GRID: usize = 2000;
    let ratio = (hi / lo).powf(1.0 / GRID as f64);
    let pts: Vec<f64> = (0..=GRID).map(|i| lo * ratio.powi(i as i32)).collect();
    let (best, _) = pts
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, f(r)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut a = pts[best.saturating_sub(1)];
    let mut b = pts[(best + 1).min(GRID)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 * b {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let r = 0.5 * (a + b);
    let mut out = (r, f(r));
    for &end in &[lo, hi, pts[best]] {
        let v = f(end);
        if v > out.1 {
            out = (end, v);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaStarOptimum {
    pub r_best: f64,
    pub beta_star: f64,
    /// False when no radius in range gives a positive value.
    pub positive: bool,
}

/// `max_{r0 <= r <= r_max} beta*(r)` with `gamma(r)` from `gamma`.
pub fn beta_star_eq(p: f64, m: f64, r0: f64, r_max: f64, gamma: GammaChoice) -> Result<BetaStarOptimum> {
    if !(r0 > 0.0) || !(r_max > r0) {
        return Err(Error::InvalidConfig(format!(
            "radius search needs 0 < r0 < r_max, got r0={r0} r_max={r_max}"
        )));
    }
    let (r_best, value) = maximize_geometric(r0, r_max, |r| beta_star(r, m, p, gamma.gamma(r)));
    Ok(BetaStarOptimum {
        r_best,
        beta_star: value,
        positive: value > 0.0,
    })
}

/// The constants realising the HWI inequality at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub p: f64,
    pub beta_star: f64,
    pub lambda: f64,
}

/// Radius search range for [`certified_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSearch {
    pub r0: Option<f64>,
    pub r_max: f64,
    pub gamma: GammaChoice,
}

impl RateConstants {
    fn at(v: &Potential, r: f64, m: f64, gamma: GammaChoice) -> Result<Self> {
        let (alpha, beta) = v.convexity_profile(r)?;
        let g = gamma.gamma(r);
        let bs = beta_star(r, m, 2.0, g);
        Ok(Self {
            r,
            alpha,
            beta,
            gamma: g,
            m,
            p: 2.0,
            beta_star: bs,
            lambda: lambda(alpha, beta, bs),
        })
    }
}

/// Best certified rate constant for the confining quartic: maximizes
/// `lambda(r)` over `r >= r0` (default `sqrt(max(0, -c)/3)`) with
/// `M = max(1 + sqrt 2, m2_init)`. `None` when no radius gives `lambda > 0`.
pub fn certified_rate(v: &Potential, m2_init: f64, search: RadiusSearch) -> Result<Option<RateConstants>> {
    let Potential::QuarticConfining { c } = *v else {
        return Err(Error::Unsupported(
            "certified rates are implemented for the confining quartic".into(),
        ));
    };
    let m = moment_bound_quartic(c, m2_init);
    let lo = search
        .r0
        .unwrap_or_else(|| if c < 0.0 { (-c / 3.0).sqrt() } else { 1e-6 })
        .max(1e-12);
    if !(search.r_max > lo) {
        return Err(Error::InvalidConfig(format!(
            "radius search needs r0 < r_max, got r0={lo} r_max={}",
            search.r_max
        )));
    }
    let objective = |r: f64| {
        RateConstants::at(v, r, m, search.gamma)
            .map(|k| k.lambda)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (r, best) = maximize_geometric(lo, search.r_max, objective);
    if !(best > 0.0) {
        return Ok(None);
    }
    RateConstants::at(v, r, m, search.gamma).map(Some)
}

/// Outcome of the non-confining support-radius search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBound {
    pub m: f64,
    pub g: f64,
    /// Smallest admissible `M >= m` (None when the inequality has no
    /// solution or the admissibility test `g > -1/(3M)` fails).
    pub m_star: Option<f64>,
    /// Smallest solution of the inequality, ignoring admissibility.
    pub smallest_solution: Option<f64>,
    /// `g > -1/(3 M)` at the smallest solution.
    pub admissible: bool,
    /// `g > -1/(3 M^2)` at the smallest solution (equivalent to `1 + 3 g M^2 > 0`).
    pub admissible_squared: bool,
    /// `1 + 3 g M*^2`, the convexity of V on `[-M*, M*]`.
    pub convexity: Option<f64>,
    /// Largest value of `M^2 - (m^2 + 2 sqrt2 M / sqrt(1+3gM^2) + 1/(1+3gM^2))`
    /// over the searched range, and where it occurs.
    pub max_slack: f64,
    pub max_slack_at: f64,
}

fn support_slack(m: f64, g: f64, big_m: f64) -> f64 {
    let a = 1.0 + 3.0 * g * big_m * big_m;
    big_m * big_m - (m * m + 2.0 * SQRT_2 * big_m / a.sqrt() + 1.0 / a)
}

/// Full report of the support-radius search for `V = g x^4/4 + x^2/2` with
/// initial support in `[-m, m]`.
pub fn support_bound_analysis(m: f64, g: f64) -> Result<SupportBound> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::param("m", m, "must be positive"));
    }
    if !(g <= 0.0) {
        return Err(Error::param("g", g, "must be <= 0"));
    }
    // f is below its g = 0 counterpart, whose root is sqrt2 + sqrt(m^2 + 3)
    let flat_root = SQRT_2 + (m * m + 3.0).sqrt();
    let hi = if g < 0.0 {
        ((-1.0 / (3.0 * g)).sqrt() * (1.0 - 1e-12)).min(flat_root * 4.0 + 10.0)
    } else {
        flat_root * 2.0
    };
    let f = |x: f64| support_slack(m, g, x);
    let mut best = (f64::NEG_INFINITY, m);
    let mut solution = None;
    if hi > m {
        const STEPS: usize = 200_000;
        let mut prev = (m, f(m));
        best = (prev.1, m);
        if prev.1 >= 0.0 {
            solution = Some(m);
        } else {
            for i in 1..=STEPS {
                let x = m + (hi - m) * i as f64 / STEPS as f64;
                let fx = f(x);
                if fx > best.0 {
                    best = (fx, x);
                }
                if fx >= 0.0 {
                    let (mut lo, mut up) = (prev.0, x);
                    while up - lo > 1e-12 * up {
                        let mid = 0.5 * (lo + up);
                        if f(mid) >= 0.0 {
                            up = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    solution = Some(up);
                    break;
                }
                prev = (x, fx);
            }
        }
    }
    let admissible = solution.is_some_and(|s| g > -1.0 / (3.0 * s));
    let admissible_squared = solution.is_some_and(|s| g > -1.0 / (3.0 * s * s));
    let m_star = solution.filter(|_| admissible);
    Ok(SupportBound {
        m,
        g,
        m_star,
        smallest_solution: solution,
        admissible,
        admissible_squared,
        convexity: m_star.map(|s| 1.0 + 3.0 * g * s * s),
        max_slack: best.0,
        max_slack_at: best.1,
    })
}

/// Smallest `M >= m` with `m^2 + 2 sqrt2 M/sqrt(1+3gM^2) + 1/(1+3gM^2) <= M^2`,
/// provided `g > -1/(3M)`.
pub fn nonconfining_support_bound(m: f64, g: f64) -> Result<Option<f64>> {
    Ok(support_bound_analysis(m, g)?.m_star)
}

/// Options for [`constants_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub m2_init: f64,
    /// Initial support half-width (non-confining case).
    pub m: f64,
    pub search: RadiusSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateVariant {
    pub r_best: f64,
    pub beta_star: f64,
    pub lambda: Option<f64>,
    pub rate_2lambda: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variants {
    /// The same search with the sharper gamma.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sharp_gamma: Option<RateVariant>,
    /// Moment bound with constant term 1/2.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub halved_moment_bound: Option<f64>,
    /// Support bound with the `g > -1/(3 M^2)` admissibility test.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_bound_squared_admissibility: Option<f64>,
}

/// The `constants` workflow output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub potential: Potential,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub r_best: Option<f64>,
    pub beta_star: Option<f64>,
    pub lambda: Option<f64>,
    pub rate_2lambda: Option<f64>,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate_constants: Option<RateConstants>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_bound: Option<SupportBound>,
    pub variants: Variants,
    pub notes: Vec<String>,
}

const NOTE_MOMENT_ROOT: &str =
    "moment bound M is the largest root of Q; the readings {Q >= 0} and {Q <= 0} agree on it";
const NOTE_HYPOTHESIS: &str =
    "rate hypothesis checked as beta < beta*(r) at the chosen radius (the equilibrium constant is replaced by beta*(r))";
const NOTE_R0: &str = "r0 is the lower end of the radius search and is user-configurable";
const NOTE_ADMISSIBILITY: &str =
    "support bound admissibility tested as g > -1/(3 M*); the g > -1/(3 M*^2) variant is reported alongside";

/// Computes all constants relevant to `v`.
pub fn constants_report(v: &Potential, opts: ReportOptions) -> Result<ConstantsReport> {
    v.validate()?;
    let mut notes = vec![NOTE_MOMENT_ROOT.to_string(), NOTE_R0.to_string()];
    match *v {
        Potential::QuarticConfining { c } => {
            notes.push(NOTE_HYPOTHESIS.to_string());
            let m = moment_bound_quartic(c, opts.m2_init);
            let lo = opts
                .search
                .r0
                .unwrap_or_else(|| if c < 0.0 { (-c / 3.0).sqrt() } else { 1e-6 })
                .max(1e-12);
            let eq = beta_star_eq(2.0, m, lo, opts.search.r_max, opts.search.gamma)?;
            let rc = certified_rate(v, opts.m2_init, opts.search)?;
            let sharp_search = RadiusSearch {
                gamma: GammaChoice::Sharp,
                ..opts.search
            };
            let sharp_eq = beta_star_eq(2.0, m, lo, opts.search.r_max, GammaChoice::Sharp)?;
            let sharp = certified_rate(v, opts.m2_init, sharp_search)?;
            let halved = Some(moment_bound_quartic_halved(c, opts.m2_init));
            Ok(ConstantsReport {
                potential: v.clone(),
                m: Some(m),
                r_best: Some(rc.map_or(eq.r_best, |k| k.r)),
                beta_star: Some(rc.map_or(eq.beta_star, |k| k.beta_star)),
                lambda: rc.map(|k| k.lambda),
                rate_2lambda: rc.map(|k| 2.0 * k.lambda),
                certified: rc.is_some(),
                rate_constants: rc,
                support_bound: None,
                variants: Variants {
                    sharp_gamma: Some(RateVariant {
                        r_best: sharp.map_or(sharp_eq.r_best, |k| k.r),
                        beta_star: sharp.map_or(sharp_eq.beta_star, |k| k.beta_star),
                        lambda: sharp.map(|k| k.lambda),
                        rate_2lambda: sharp.map(|k| 2.0 * k.lambda),
                        certified: sharp.is_some(),
                    }),
                    halved_moment_bound: halved,
                    support_bound_squared_admissibility: None,
                },
                notes,
            })
        }
        Potential::QuarticNonconfining { g } => {
            notes.push(NOTE_ADMISSIBILITY.to_string());
            let sb = support_bound_analysis(opts.m, g)?;
            Ok(ConstantsReport {
                potential: v.clone(),
                m: sb.m_star,
                r_best: None,
                beta_star: None,
                lambda: None,
                rate_2lambda: None,
                certified: false,
                rate_constants: None,
                support_bound: Some(sb),
                variants: Variants {
                    sharp_gamma: None,
                    halved_moment_bound: None,
                    support_bound_squared_admissibility: sb
                        .smallest_solution
                        .filter(|_| sb.admissible_squared),
                },
                notes,
            })
        }
        Potential::GeneralEven { .. } => {
            let b = moment_bound_general(&PerturbedPotential::unperturbed(v.clone()))?;
            Ok(ConstantsReport {
                potential: v.clone(),
                m: Some(b.bound),
                r_best: None,
                beta_star: None,
                lambda: None,
                rate_2lambda: None,
                certified: false,
                rate_constants: None,
                support_bound: None,
                variants: Variants {
                    sharp_gamma: None,
                    halved_moment_bound: Some(b.halved_constant),
                    support_bound_squared_admissibility: None,
                },
                notes,
            })
        }
    }
}
