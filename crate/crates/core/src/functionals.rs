//! Free entropy, free Fisher information and Hilbert transforms, for particle
//! ensembles and for the closed-form equilibrium densities.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumDensity;
use crate::measures::ParticleEnsemble;
use crate::potentials::Potential;
use crate::quadrature::{gl24, gl32, gl64, graded, graded_both, Toward};
use crate::{Error, Result};

/// Sums `sum_{j != i} 1/(x_i - x_j)` (and optionally of the squared terms).
///
/// Terms are visited in mirror pairs `(k, N-1-k)`, so for an exactly
/// antisymmetric `x` the result for `N-1-i` is bitwise the negation of the
/// result for `i`.
#[inline]
pub(crate) fn row_sums<const SQ: bool>(x: &[f64], i: usize) -> (f64, f64) {
    let n = x.len();
    let half = n / 2;
    let xi = x[i];
    let own = if i < half { i } else { n - 1 - i };
    let (mut s, mut q) = (0.0, 0.0);
    for k in 0..own.min(half) {
        let a = 1.0 / (xi - x[k]);
        let b = 1.0 / (xi - x[n - 1 - k]);
        s += a + b;
        if SQ {
            q += a * a + b * b;
        }
    }
    if own < half {
        let j = if own == i { n - 1 - i } else { own };
        let a = 1.0 / (xi - x[j]);
        s += a;
        if SQ {
            q += a * a;
        }
        for k in own + 1..half {
            let a = 1.0 / (xi - x[k]);
            let b = 1.0 / (xi - x[n - 1 - k]);
            s += a + b;
            if SQ {
                q += a * a + b * b;
            }
        }
    }
    if n % 2 == 1 && i != half {
        let a = 1.0 / (xi - x[half]);
        s += a;
        if SQ {
            q += a * a;
        }
    }
    (s, q)
}

/// True when `x[i] == -x[N-1-i]` bitwise for all i.
pub(crate) fn exactly_antisymmetric(x: &[f64]) -> bool {
    let n = x.len();
    (0..n.div_ceil(2)).all(|i| x[i] == -x[n - 1 - i])
}

/// `H_i = (1/N) sum_{j != i} 1/(x_i - x_j)` for every particle.
pub(crate) fn hilbert_slice(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let inv_n = 1.0 / n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| row_sums::<false>(x, i).0 * inv_n)
        .collect()
}

/// Discrete Hilbert transform at particle `i`.
///
/// # Panics
/// If `i` is out of range.
pub fn hilbert_discrete(ensemble: &ParticleEnsemble, i: usize) -> f64 {
    let x = ensemble.positions();
    row_sums::<false>(x, i).0 / x.len() as f64
}

/// Discrete Hilbert transform at every particle.
pub fn hilbert_all(ensemble: &ParticleEnsemble) -> Vec<f64> {
    hilbert_slice(ensemble.positions())
}

/// `(2/N^2) sum_{i<j} log|x_i - x_j|`, i.e. the off-diagonal estimate of
/// the log double integral. Rows are summed in ascending j and combined in
/// ascending i regardless of thread count.
pub(crate) fn log_interaction(x: &[f64]) -> f64 {
    let n = x.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x[i];
            x[i + 1..].iter().map(|xj| (xj - xi).abs().ln()).sum::<f64>()
        })
        .collect();
    let total: f64 = rows.iter().sum();
    2.0 * total / (n as f64 * n as f64)
}

pub(crate) fn entropy_slice(x: &[f64], v: &Potential) -> f64 {
    let n = x.len() as f64;
    let ext: f64 = x.iter().map(|&xi| v.value(xi)).sum::<f64>() / n;
    ext - log_interaction(x)
}

/// `(1/N) sum V(x_i) - (2/N^2) sum_{i<j} log|x_i - x_j|`.
pub fn entropy_discrete(ensemble: &ParticleEnsemble, v: &Potential) -> Result<f64> {
    if ensemble.len() < 2 {
        return Err(Error::InvalidEnsemble("entropy needs at least two particles".into()));
    }
    Ok(entropy_slice(ensemble.positions(), v))
}

/// `(1/N) sum (V'(x_i) - 2 H_i)^2`.
pub fn fisher_discrete(ensemble: &ParticleEnsemble, v: &Potential) -> f64 {
    let x = ensemble.positions();
    let h = hilbert_slice(x);
    let s: f64 = x
        .iter()
        .zip(&h)
        .map(|(&xi, hi)| {
            let r = v.derivative(xi) - 2.0 * hi;
            r * r
        })
        .sum();
    s / x.len() as f64
}

const REL_MIN: f64 = 1e-13;

/// Principal-value Hilbert transform `p.v. int rho(y)/(x - y) dy` of an
/// equilibrium density, for x inside or outside the support.
///
/// Inside, the excision interval `[x - s, x + s]` is folded onto `s > 0`, so
/// the integral over `0 < s < d` (d the distance to the nearer edge) of
/// `(rho(x - s) - rho(x + s))/s` is the symmetric-excision limit taken
/// exactly; the rest of the support is an ordinary integral.
pub fn hilbert_density(eq: &EquilibriumDensity, x: f64) -> Result<f64> {
    let a = eq.half_width();
    if !x.is_finite() {
        return Err(Error::param("x", x, "must be finite"));
    }
    if x.abs() == a {
        return Err(Error::OnSupportEdge(x));
    }
    if x.abs() > a {
        let toward = if x > 0.0 { Toward::Right } else { Toward::Left };
        return Ok(graded(gl24(), -FRAC_PI_2, FRAC_PI_2, toward, REL_MIN, |t| {
            eq.weight_theta(t) / (x - a * t.sin())
        }));
    }
    let d = a - x.abs();
    let paired = graded(gl24(), 0.0, FRAC_PI_2, Toward::Right, REL_MIN, |p| {
        let (sp, cp) = p.sin_cos();
        let s = d * sp;
        (eq.density(x - s) - eq.density(x + s)) * cp / sp
    });
    let far = far_part(eq, x, d, |t| eq.weight_theta(t) / (x - a * t.sin()));
    Ok(paired + far)
}

/// Integral over the part of the support farther than `d` from x (in theta).
fn far_part<F: FnMut(f64) -> f64>(eq: &EquilibriumDensity, x: f64, d: f64, f: F) -> f64 {
    let a = eq.half_width();
    if x >= 0.0 {
        let hi = ((x - d) / a).clamp(-1.0, 1.0).asin();
        graded(gl24(), -FRAC_PI_2, hi, Toward::Right, REL_MIN, f)
    } else {
        let lo = ((x + d) / a).clamp(-1.0, 1.0).asin();
        graded(gl24(), lo, FRAC_PI_2, Toward::Left, REL_MIN, f)
    }
}

/// Logarithmic potential `int log|x - y| rho(y) dy` for `|x| <= A`.
pub fn log_potential(eq: &EquilibriumDensity, x: f64) -> f64 {
    let a = eq.half_width();
    let d = a - x.abs();
    let paired = if d > 0.0 {
        graded_both(gl24(), 0.0, FRAC_PI_2, REL_MIN, |p| {
            let (sp, cp) = p.sin_cos();
            let s = d * sp;
            (d * sp).ln() * (eq.density(x - s) + eq.density(x + s)) * d * cp
        })
    } else {
        0.0
    };
    let far = far_part(eq, x, d, |t| {
        // at an edge, sin(t) can round onto x where the integrand's limit is 0
        let gap = (x - a * t.sin()).abs();
        if gap == 0.0 {
            0.0
        } else {
            eq.weight_theta(t) * gap.ln()
        }
    });
    paired + far
}

/// `int V dmu - int int log|x - y| dmu dmu` for an equilibrium density.
pub fn entropy_density(eq: &EquilibriumDensity, v: &Potential) -> Result<f64> {
    let a = eq.half_width();
    let ext = eq.integrate(|x| v.value(x));
    let f = |t: f64| eq.weight_theta(t) * log_potential(eq, a * t.sin());
    let fine = gl64().integrate(-FRAC_PI_2, FRAC_PI_2, f);
    let coarse = gl32().integrate(-FRAC_PI_2, FRAC_PI_2, f);
    if (fine - coarse).abs() > 1e-8 {
        return Err(Error::Quadrature(format!(
            "log energy estimates {fine} and {coarse} disagree"
        )));
    }
    Ok(ext - fine)
}

/// Either kind of measure the entropy functionals accept.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    Ensemble(&'a ParticleEnsemble),
    Density(&'a EquilibriumDensity),
}

/// `Sigma(mu) - Sigma(nu)` with matching estimators: an ensemble is compared
/// with the same-size midpoint-quantile sample of `nu` (both by the discrete
/// estimator), a density with `nu` by quadrature.
pub fn relative_entropy(mu: Measure<'_>, nu: &EquilibriumDensity, v: &Potential) -> Result<f64> {
    match mu {
        Measure::Ensemble(e) => {
            let reference = nu.sample(e.len())?;
            Ok(entropy_discrete(e, v)? - entropy_discrete(&reference, v)?)
        }
        Measure::Density(d) => Ok(entropy_density(d, v)? - entropy_density(nu, v)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub entropy: f64,
    pub fisher: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relative_entropy: Option<f64>,
}

impl FunctionalReport {
    pub fn for_ensemble(
        ensemble: &ParticleEnsemble,
        v: &Potential,
        target: Option<&EquilibriumDensity>,
    ) -> Result<Self> {
        Ok(Self {
            entropy: entropy_discrete(ensemble, v)?,
            fisher: fisher_discrete(ensemble, v),
            relative_entropy: target
                .map(|t| relative_entropy(Measure::Ensemble(ensemble), t, v))
                .transpose()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(v: &[f64]) -> ParticleEnsemble {
        ParticleEnsemble::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hilbert_discrete_examples() {
        assert_eq!(hilbert_discrete(&ens(&[-1.0, 1.0]), 1), 0.25);
        assert_eq!(hilbert_discrete(&ens(&[-1.0, 0.0, 1.0]), 1), 0.0);
        let e = ens(&[-2.0, -0.5, 0.5, 2.0]);
        assert_eq!(hilbert_discrete(&e, 1), -hilbert_discrete(&e, 2));
    }

    #[test]
    fn row_sums_match_naive_order() {
        let x = [-1.7, -0.3, 0.2, 0.9, 1.1, 2.5, 4.0];
        for i in 0..x.len() {
            let naive: f64 = (0..x.len()).filter(|&j| j != i).map(|j| 1.0 / (x[i] - x[j])).sum();
            let sq: f64 = (0..x.len())
                .filter(|&j| j != i)
                .map(|j| (x[i] - x[j]).powi(-2))
                .sum();
            let (s, q) = row_sums::<true>(&x, i);
            assert!((s - naive).abs() < 1e-12 && (q - sq).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn entropy_examples() {
        let v = Potential::harmonic();
        let e = entropy_discrete(&ens(&[-1.0, 1.0]), &v).unwrap();
        assert!((e - (0.5 - 0.5 * 2f64.ln())).abs() < 1e-15);
        let i1 = log_interaction(&[-1.0, 1.0]);
        let i2 = log_interaction(&[-2.0, 2.0]);
        // scaling by 2 shifts each log by log 2, weighted 2/N^2 with N = 2
        assert!((i2 - i1 - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(entropy_discrete(&ens(&[0.0]), &v).is_err());
    }

    #[test]
    fn fisher_examples() {
        let v = Potential::harmonic();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(fisher_discrete(&ens(&[-r, r]), &v) < 1e-30);
        assert_eq!(fisher_discrete(&ens(&[0.0]), &v), 0.0);
    }

    #[test]
    fn edge_point_rejected() {
        let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
        assert!(matches!(hilbert_density(&eq, 2.0), Err(Error::OnSupportEdge(_))));
    }

    #[test]
    fn report_json_keys() {
        let r = FunctionalReport {
            entropy: 0.75,
            fisher: 0.0,
            relative_entropy: Some(0.0),
        };
        let j = serde_json::to_value(r).unwrap();
        assert!(j.get("entropy").is_some() && j.get("relative_entropy").is_some());
    }
}
