//! Even polynomial external potentials.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Even polynomial external potential.
///
/// * `QuarticConfining { c }`: `V(x) = x^4/4 + c x^2/2`
/// * `QuarticNonconfining { g }`: `V(x) = g x^4/4 + x^2/2`, `g <= 0`
/// * `GeneralEven { n, coeffs }`: `V(x) = x^{2n}/(2n) + sum_k coeffs[k-1] x^{2k}/(2k)` for `k = 1..n-1`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    QuarticConfining { c: f64 },
    QuarticNonconfining { g: f64 },
    GeneralEven { n: u32, coeffs: Vec<f64> },
}

/// Polynomial in `y = x^2`, optionally multiplied by `x` (odd parity).
#[derive(Debug, Clone, PartialEq)]
struct ParityPoly {
    odd: bool,
    /// `coeffs[j]` multiplies `x^(2j + odd)`.
    coeffs: Vec<f64>,
}

impl ParityPoly {
    fn eval(&self, x: f64) -> f64 {
        let y = x * x;
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * y + c;
        }
        if self.odd {
            x * acc
        } else {
            acc
        }
    }

    fn derivative(&self) -> ParityPoly {
        let mut out = Vec::with_capacity(self.coeffs.len());
        if self.odd {
            // x^(2j+1) -> (2j+1) x^(2j)
            for (j, c) in self.coeffs.iter().enumerate() {
                out.push((2 * j + 1) as f64 * c);
            }
        } else {
            // x^(2j) -> 2j x^(2j-1) = 2j x^(2(j-1)+1)
            for (j, c) in self.coeffs.iter().enumerate().skip(1) {
                out.push((2 * j) as f64 * c);
            }
        }
        ParityPoly {
            odd: !self.odd,
            coeffs: out,
        }
    }
}

impl Potential {
    pub fn quartic_confining(c: f64) -> Result<Self> {
        let p = Potential::QuarticConfining { c };
        p.validate()?;
        Ok(p)
    }

    pub fn quartic_nonconfining(g: f64) -> Result<Self> {
        let p = Potential::QuarticNonconfining { g };
        p.validate()?;
        Ok(p)
    }

    pub fn general_even(n: u32, coeffs: Vec<f64>) -> Result<Self> {
        let p = Potential::GeneralEven { n, coeffs };
        p.validate()?;
        Ok(p)
    }

    /// `V(x) = x^2 / 2`.
    pub fn harmonic() -> Self {
        Potential::GeneralEven {
            n: 1,
            coeffs: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::QuarticConfining { c } if !c.is_finite() => {
                Err(Error::param("c", *c, "must be finite"))
            }
            Potential::QuarticNonconfining { g } if !g.is_finite() || *g > 0.0 => {
                Err(Error::param("g", *g, "must be finite and <= 0"))
            }
            Potential::GeneralEven { n, coeffs } => {
                if *n == 0 {
                    return Err(Error::param("n", 0.0, "leading exponent 2n needs n >= 1"));
                }
                if coeffs.len() + 1 != *n as usize {
                    return Err(Error::InvalidConfig(format!(
                        "general_even with n={n} needs {} coefficients, got {}",
                        n - 1,
                        coeffs.len()
                    )));
                }
                if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
                    return Err(Error::param("coeffs", *c, "must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coefficients `v_k` of `V(x) = sum_k v_k x^(2k)` (constant term zero).
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        match self {
            Potential::QuarticConfining { c } => vec![0.0, 0.5 * c, 0.25],
            Potential::QuarticNonconfining { g } => vec![0.0, 0.5, 0.25 * g],
            Potential::GeneralEven { n, coeffs } => {
                let n = *n as usize;
                let mut v = vec![0.0; n + 1];
                for (i, c) in coeffs.iter().enumerate() {
                    let k = i + 1;
                    v[k] = c / (2 * k) as f64;
                }
                v[n] = 1.0 / (2 * n) as f64;
                v
            }
        }
    }

    fn derivative_poly(&self, order: u32) -> ParityPoly {
        let mut p = ParityPoly {
            odd: false,
            coeffs: self.monomial_coeffs(),
        };
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    /// `order`-th derivative of V at x. Odd orders are evaluated as
    /// `x * P(x^2)`, so they are exactly odd in floating point.
    pub fn eval(&self, x: f64, order: u32) -> f64 {
        match (self, order) {
            (Potential::QuarticConfining { c }, 0) => {
                let y = x * x;
                y * (0.25 * y + 0.5 * c)
            }
            (Potential::QuarticConfining { c }, 1) => x * (x * x + c),
            (Potential::QuarticConfining { c }, 2) => 3.0 * x * x + c,
            (Potential::QuarticNonconfining { g }, 0) => {
                let y = x * x;
                y * (0.25 * g * y + 0.5)
            }
            (Potential::QuarticNonconfining { g }, 1) => x * (g * x * x + 1.0),
            (Potential::QuarticNonconfining { g }, 2) => 3.0 * g * x * x + 1.0,
            _ => self.derivative_poly(order).eval(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x, 0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x, 1)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.eval(x, 2)
    }

    /// Degree of V as a polynomial.
    pub fn degree(&self) -> u32 {
        match self {
            Potential::QuarticConfining { .. } => 4,
            Potential::QuarticNonconfining { g } => {
                if *g == 0.0 {
                    2
                } else {
                    4
                }
            }
            Potential::GeneralEven { n, .. } => 2 * n,
        }
    }

    /// `(n, a_{2k})` such that `V = x^{2n}/(2n) + sum_{k<n} a_{2k} x^{2k}/(2k)`,
    /// or `None` when V is not in that normal form.
    pub fn normal_form(&self) -> Option<(u32, Vec<f64>)> {
        match self {
            Potential::QuarticConfining { c } => Some((2, vec![*c])),
            Potential::QuarticNonconfining { g } if *g == 0.0 => Some((1, Vec::new())),
            Potential::QuarticNonconfining { .. } => None,
            Potential::GeneralEven { n, coeffs } => Some((*n, coeffs.clone())),
        }
    }

    /// Infimum of V'' over `|x| >= r` (alpha) and `max(0, -inf_{|x|<=r} V'')` (beta).
    pub fn convexity_profile(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::param("r", r, "must be positive"));
        }
        match self {
            Potential::QuarticConfining { c } => Ok((3.0 * r * r + c, (-c).max(0.0))),
            Potential::QuarticNonconfining { g } => {
                if *g < 0.0 {
                    Err(Error::NonConfining(format!(
                        "V'' = 1 + 3({g})x^2 is unbounded below"
                    )))
                } else {
                    Ok((1.0, 0.0))
                }
            }
            Potential::GeneralEven { .. } => {
                // V'' = S(x^2); extremes of S on an interval are at end points
                // or at roots of S' (i.e. of V''' / x).
                let s = self.derivative_poly(2).coeffs;
                let lead = *s.last().unwrap_or(&0.0);
                if s.len() > 1 && lead < 0.0 {
                    return Err(Error::NonConfining("V'' is unbounded below".into()));
                }
                let ds: Vec<f64> = s
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(j, c)| j as f64 * c)
                    .collect();
                let eval = |coeffs: &[f64], y: f64| coeffs.iter().rev().fold(0.0, |a, c| a * y + c);
                let crit = real_roots(&ds);
                let r2 = r * r;
                let inner = crit
                    .iter()
                    .filter(|&&y| y > 0.0 && y < r2)
                    .map(|&y| eval(&s, y))
                    .chain([eval(&s, 0.0), eval(&s, r2)])
                    .fold(f64::INFINITY, f64::min);
                let outer = crit
                    .iter()
                    .filter(|&&y| y > r2)
                    .map(|&y| eval(&s, y))
                    .chain([eval(&s, r2)])
                    .fold(f64::INFINITY, f64::min);
                Ok((outer, (-inner).max(0.0)))
            }
        }
    }
}

/// Real roots of the polynomial `sum_j c_j y^j` on `y >= 0`, by sign-change
/// scanning inside the Cauchy bound followed by bisection.
fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let lead = *c.last().unwrap();
    let bound = 1.0
        + c[..c.len() - 1]
            .iter()
            .map(|a| (a / lead).abs())
            .fold(0.0, f64::max);
    let eval = |y: f64| c.iter().rev().fold(0.0, |a, k| a * y + k);
    let steps = 20_000;
    let mut roots = Vec::new();
    let mut y0 = 0.0;
    let mut f0 = eval(y0);
    for i in 1..=steps {
        let y1 = bound * i as f64 / steps as f64;
        let f1 = eval(y1);
        if f0 == 0.0 {
            roots.push(y0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi, mut flo) = (y0, y1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if fm == 0.0 || hi - lo <= 1e-15 * hi.abs().max(1.0) {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        y0 = y1;
        f0 = f1;
    }
    roots
}

/// Convex even base potential plus a lower-degree even perturbation
/// `sum_k b[k] x^(2k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPotential {
    pub base: Potential,
    pub perturbation: Vec<f64>,
}

impl PerturbedPotential {
    pub fn new(base: Potential, perturbation: Vec<f64>) -> Result<Self> {
        base.validate()?;
        if !perturbation.is_empty() && 2 * (perturbation.len() as u32 - 1) >= base.degree() {
            return Err(Error::InvalidConfig(format!(
                "perturbation of degree {} is not below the base degree {}",
                2 * (perturbation.len() - 1),
                base.degree()
            )));
        }
        Ok(Self { base, perturbation })
    }

    pub fn unperturbed(base: Potential) -> Self {
        Self {
            base,
            perturbation: Vec::new(),
        }
    }

    /// `sup_k |b_k|`.
    pub fn perturbation_norm(&self) -> f64 {
        self.perturbation.iter().fold(0.0, |m, b| m.max(b.abs()))
    }

    /// Base plus perturbation as a single potential (the constant term is dropped).
    pub fn combined(&self) -> Result<Potential> {
        let (n, mut a) = self
            .base
            .normal_form()
            .ok_or_else(|| Error::Unsupported("base potential has no normal form".into()))?;
        for (k, b) in self.perturbation.iter().enumerate().skip(1) {
            a[k - 1] += (2 * k) as f64 * b;
        }
        Potential::general_even(n, a)
    }
}

/// `sup_k |b_k|` of a perturbation.
pub fn perturbation_norm(p: &PerturbedPotential) -> f64 {
    p.perturbation_norm()
}
