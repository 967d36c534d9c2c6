//! Closed-form equilibrium measures of the quartic potentials.
//!
//! Both families have densities of the form `k * p(x) * sqrt(A^2 - x^2)` on
//! `[-A, A]` with `p` an even quadratic, so every integral against them is
//! done in the variable `x = A sin(theta)`, where the edge factor is smooth.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::measures::{check_level, midpoint_levels, ParticleEnsemble, QuantileFunction};
use crate::potentials::Potential;
use crate::quadrature::{gl128, gl32, gl64};
use crate::{Error, Result};

/// Parameter-level description of an equilibrium measure, as used in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EquilibriumSpec {
    /// Equilibrium of `x^4/4 + c x^2/2`.
    Confining { c: f64 },
    /// Equilibrium of `g x^4/4 + x^2/2`.
    Nonconfining { g: f64 },
}

impl EquilibriumSpec {
    pub fn build(&self) -> Result<EquilibriumDensity> {
        match *self {
            EquilibriumSpec::Confining { c } => EquilibriumDensity::confining(c),
            EquilibriumSpec::Nonconfining { g } => EquilibriumDensity::nonconfining(g),
        }
    }

    pub fn potential(&self) -> Potential {
        match *self {
            EquilibriumSpec::Confining { c } => Potential::QuarticConfining { c },
            EquilibriumSpec::Nonconfining { g } => Potential::QuarticNonconfining { g },
        }
    }

    /// The equilibrium of `v`, when `v` is one of the quartic families.
    pub fn for_potential(v: &Potential) -> Option<Self> {
        match *v {
            Potential::QuarticConfining { c } => Some(EquilibriumSpec::Confining { c }),
            Potential::QuarticNonconfining { g } => Some(EquilibriumSpec::Nonconfining { g }),
            Potential::GeneralEven { n: 1, .. } => Some(EquilibriumSpec::Nonconfining { g: 0.0 }),
            Potential::GeneralEven { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Support `[-a, a]`, density `(1/pi)(x^2/2 + b) sqrt(a^2 - x^2)`.
    Confining { c: f64, a: f64, b: f64 },
    /// Support `[-2a, 2a]`, density `(1/2pi)(1 + 2ga^2 + gx^2) sqrt(4a^2 - x^2)`.
    Nonconfining { g: f64, a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumDensity {
    family: Family,
    half_width: f64,
    prefactor: f64,
    p0: f64,
    p2: f64,
}

impl EquilibriumDensity {
    pub fn confining(c: f64) -> Result<Self> {
        if !c.is_finite() || c <= -2.0 {
            return Err(Error::param("c", c, "confining equilibrium needs c > -2"));
        }
        let root = (4.0 * c * c + 48.0).sqrt();
        let a2 = if c >= 0.0 {
            16.0 / (root + 2.0 * c)
        } else {
            (root - 2.0 * c) / 3.0
        };
        let a = a2.sqrt();
        let b = (c + (0.25 * c * c + 3.0).sqrt()) / 3.0;
        Self::checked(Family::Confining { c, a, b }, a, 1.0 / PI, b, 0.5)
    }

    pub fn nonconfining(g: f64) -> Result<Self> {
        if !g.is_finite() || g <= -1.0 / 12.0 {
            return Err(Error::param("g", g, "non-confining equilibrium needs g > -1/12"));
        }
        // root of 3g a^4 + a^2 = 1 continuous at g = 0, in cancellation-free form
        let a2 = 2.0 / (1.0 + (1.0 + 12.0 * g).sqrt());
        let a = a2.sqrt();
        Self::checked(
            Family::Nonconfining { g, a },
            2.0 * a,
            0.5 / PI,
            1.0 + 2.0 * g * a2,
            g,
        )
    }

    fn checked(family: Family, half_width: f64, prefactor: f64, p0: f64, p2: f64) -> Result<Self> {
        let eq = Self {
            family,
            half_width,
            prefactor,
            p0,
            p2,
        };
        let edge = p0 + p2 * half_width * half_width;
        if p0 < 0.0 || edge < 0.0 {
            return Err(Error::Quadrature(format!(
                "density polynomial negative on the support (centre {p0}, edge {edge})"
            )));
        }
        let mass = eq.normalization();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Quadrature(format!("total mass {mass} differs from 1")));
        }
        Ok(eq)
    }

    pub fn from_spec(spec: EquilibriumSpec) -> Result<Self> {
        spec.build()
    }

    pub fn spec(&self) -> EquilibriumSpec {
        match self.family {
            Family::Confining { c, .. } => EquilibriumSpec::Confining { c },
            Family::Nonconfining { g, .. } => EquilibriumSpec::Nonconfining { g },
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// The potential this measure is the equilibrium of.
    pub fn potential(&self) -> Potential {
        self.spec().potential()
    }

    /// A, the support being `[-A, A]`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn poly(&self, x: f64) -> f64 {
        self.p0 + self.p2 * x * x
    }

    /// Minimum over the support of the polynomial factor multiplying the edge
    /// square root; the density is non-negative iff this is.
    pub fn min_polynomial_factor(&self) -> f64 {
        self.p0.min(self.poly(self.half_width))
    }

    pub fn density(&self, x: f64) -> f64 {
        let a = self.half_width;
        if x.abs() >= a {
            return 0.0;
        }
        self.prefactor * self.poly(x) * ((a - x) * (a + x)).sqrt()
    }

    /// Density times dx/dtheta in the variable `x = A sin(theta)`.
    pub(crate) fn weight_theta(&self, theta: f64) -> f64 {
        let a = self.half_width;
        let c = theta.cos();
        self.prefactor * self.poly(a * theta.sin()) * a * a * c * c
    }

    /// `int f dmu` for smooth `f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let a = self.half_width;
        gl128().integrate(-FRAC_PI_2, FRAC_PI_2, |t| f(a * t.sin()) * self.weight_theta(t))
    }

    pub fn normalization(&self) -> f64 {
        gl64().integrate(-FRAC_PI_2, FRAC_PI_2, |t| self.weight_theta(t))
    }

    fn cdf_theta(&self, theta: f64) -> f64 {
        gl32().integrate(-FRAC_PI_2, theta, |t| self.weight_theta(t))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let a = self.half_width;
        if x <= -a {
            0.0
        } else if x >= a {
            1.0
        } else {
            self.cdf_theta((x / a).asin())
        }
    }

    /// Quantile midpoints `q((i - 1/2)/N)`, mirrored so the result is exactly
    /// antisymmetric.
    pub fn quantile_points(&self, n: usize) -> Result<Vec<f64>> {
        let levels: Vec<f64> = midpoint_levels(n).collect();
        let mut x = vec![0.0; n];
        for i in 0..n / 2 {
            let q = self.quantile(levels[i])?;
            x[i] = q;
            x[n - 1 - i] = -q;
        }
        Ok(x)
    }

    /// The N-point midpoint-quantile ensemble.
    pub fn sample(&self, n: usize) -> Result<ParticleEnsemble> {
        if n == 0 {
            return Err(Error::InvalidEnsemble("no particles".into()));
        }
        ParticleEnsemble::new(self.quantile_points(n)?)
    }

    /// `int mu(dx) / (z - x)` in closed form, for non-real z.
    pub fn cauchy_transform(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::RealArgument(z.re));
        }
        let a = self.half_width;
        let half_dv = 0.5 * self.potential_derivative(z);
        let p = self.p0 + self.p2 * z * z;
        let root = (z - a).sqrt() * (z + a).sqrt();
        Ok(half_dv - PI * self.prefactor * p * root)
    }

    fn potential_derivative(&self, z: Complex64) -> Complex64 {
        match self.family {
            Family::Confining { c, .. } => z * (z * z + c),
            Family::Nonconfining { g, .. } => z * (g * z * z + 1.0),
        }
    }
}

impl QuantileFunction for EquilibriumDensity {
    fn quantile(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
        // starting guess from the semicircle-shaped CDF is good enough for Newton
        let mut t = (2.0 * u - 1.0) * FRAC_PI_2;
        for _ in 0..200 {
            let r = self.cdf_theta(t) - u;
            if r.abs() <= 1e-14 {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if hi - lo <= 1e-15 {
                break;
            }
            let d = self.weight_theta(t);
            let newton = t - r / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let x = self.half_width * t.sin();
        if (self.cdf(x) - u).abs() > 1e-10 {
            return Err(Error::Quadrature(format!("quantile at u={u} did not converge")));
        }
        Ok(x)
    }

    fn support(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confining_parameters() {
        let eq = EquilibriumDensity::confining(0.0).unwrap();
        let Family::Confining { a, b, .. } = eq.family() else { panic!() };
        assert!((a * a - 4.0 * 3f64.sqrt() / 3.0).abs() < 1e-14);
        assert!((b - 3f64.sqrt() / 3.0).abs() < 1e-15);
        let eq = EquilibriumDensity::confining(1.0).unwrap();
        let Family::Confining { a, b, .. } = eq.family() else { panic!() };
        assert!((a * a - 1.737034).abs() < 1e-6, "{}", a * a);
        assert!((b - 0.934259).abs() < 1e-6, "{b}");
        assert!(EquilibriumDensity::confining(-2.0).is_err());
    }

    #[test]
    fn nonconfining_parameters() {
        let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
        assert_eq!(eq.half_width(), 2.0);
        let g = -0.05;
        let eq = EquilibriumDensity::nonconfining(g).unwrap();
        let Family::Nonconfining { a, .. } = eq.family() else { panic!() };
        let a2 = a * a;
        assert!((a2 - 1.225148).abs() < 1e-6, "{a2}");
        assert!((3.0 * g * a2 * a2 + a2 - 1.0).abs() < 1e-12);
        assert!(EquilibriumDensity::nonconfining(-1.0 / 12.0).is_err());
        let edge = EquilibriumDensity::nonconfining(-1.0 / 12.0 + 1e-9).unwrap();
        let Family::Nonconfining { a, .. } = edge.family() else { panic!() };
        assert!((a * a - 2.0).abs() < 1e-3);
        assert!(edge.min_polynomial_factor() < 1e-3);
    }

    #[test]
    fn real_argument_rejected() {
        let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
        assert!(eq.cauchy_transform(Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn quantile_bounds() {
        let eq = EquilibriumDensity::nonconfining(0.0).unwrap();
        assert!(eq.quantile(0.0).is_err());
        assert!(eq.quantile(1.0).is_err());
        assert_eq!(eq.quantile(0.5).unwrap().abs(), 0.0);
    }
}
