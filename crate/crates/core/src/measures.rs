//! Uniform-weight particle measures and 1D Wasserstein-2 distances.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sorted, strictly increasing particle positions, each carrying mass 1/N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidEnsemble("no particles".into()));
        }
        if let Some(x) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidEnsemble(format!("non-finite position {x}")));
        }
        if let Some(i) = positions.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidEnsemble(format!(
                "positions not strictly increasing at index {i}: {} >= {}",
                positions[i],
                positions[i + 1]
            )));
        }
        Ok(Self { positions })
    }

    /// Sorts first; still rejects coincident particles.
    pub fn from_unsorted(mut positions: Vec<f64>) -> Result<Self> {
        positions.sort_by(f64::total_cmp);
        Self::new(positions)
    }

    pub(crate) fn from_sorted_unchecked(positions: Vec<f64>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        Self { positions }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `max_i |x_i|`.
    pub fn support_radius(&self) -> f64 {
        self.positions[0].abs().max(self.positions[self.len() - 1].abs())
    }

    /// `max_i |x_i + x_{N+1-i}|`; zero for an exactly symmetric ensemble.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n.div_ceil(2))
            .map(|i| (self.positions[i] + self.positions[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    pub fn min_gap(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for ParticleEnsemble {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParticleEnsemble> for Vec<f64> {
    fn from(e: ParticleEnsemble) -> Self {
        e.positions
    }
}

/// Inverse CDF of a probability measure on the line.
pub trait QuantileFunction {
    /// The x with CDF(x) = u, for u in (0, 1).
    fn quantile(&self, u: f64) -> Result<f64>;
    /// Closed interval containing all quantile values.
    fn support(&self) -> (f64, f64);
}

/// Uniform distribution on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl QuantileFunction for Uniform {
    fn quantile(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        Ok(self.lo + u * (self.hi - self.lo))
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

pub(crate) fn check_level(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::param("u", u, "quantile level must lie in (0, 1)"))
    }
}

/// `(1/N) sum_i |x_i|^p`.
pub fn moment(ensemble: &ParticleEnsemble, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param("p", p, "moment order must be >= 1"));
    }
    let n = ensemble.len() as f64;
    let s: f64 = if p == 2.0 {
        ensemble.positions.iter().map(|x| x * x).sum()
    } else {
        ensemble.positions.iter().map(|x| x.abs().powf(p)).sum()
    };
    Ok(s / n)
}

/// Replaces each mirror pair `(x_i, x_{N+1-i})` by `-s, s` with
/// `s = (|x_i| + |x_{N+1-i}|)/2`.
pub fn symmetrize(ensemble: &ParticleEnsemble) -> Result<ParticleEnsemble> {
    let n = ensemble.len();
    if n % 2 == 1 {
        return Err(Error::InvalidEnsemble(format!(
            "symmetrize needs an even particle count, got {n}"
        )));
    }
    let x = &ensemble.positions;
    let mut out = vec![0.0; n];
    for i in 0..n / 2 {
        let s = 0.5 * (x[i].abs() + x[n - 1 - i].abs());
        out[i] = -s;
        out[n - 1 - i] = s;
    }
    ParticleEnsemble::new(out)
}

/// Exact W2 between two uniform discrete measures through the monotone
/// (quantile) coupling. Unequal sizes are handled by merging the two step
/// quantile functions, which is the same as duplicating each point to a
/// common multiple of the sizes.
pub fn w2(a: &ParticleEnsemble, b: &ParticleEnsemble) -> f64 {
    let (x, y) = (&a.positions, &b.positions);
    if x.len() == y.len() {
        let s: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
        return (s / x.len() as f64).sqrt();
    }
    let (na, nb) = (x.len() as u128, y.len() as u128);
    let total = na * nb;
    // breakpoints in units of 1/(na*nb)
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let mut s = 0.0;
    while i < x.len() && j < y.len() {
        let next_a = (i as u128 + 1) * nb;
        let next_b = (j as u128 + 1) * na;
        let next = next_a.min(next_b);
        let d = x[i] - y[j];
        s += d * d * (next - prev) as f64;
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    (s / total as f64).sqrt()
}

/// Midpoint quantile levels `(i - 1/2)/N`.
pub fn midpoint_levels(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

/// W2 between an ensemble and a continuous measure, using the midpoint
/// quantiles `q((i - 1/2)/N)` as the coupled points.
pub fn w2_to_density<Q: QuantileFunction + ?Sized>(a: &ParticleEnsemble, q: &Q) -> Result<f64> {
    let n = a.len();
    let mut s = 0.0;
    for (x, u) in a.positions.iter().zip(midpoint_levels(n)) {
        let d = x - q.quantile(u)?;
        s += d * d;
    }
    Ok((s / n as f64).sqrt())
}

/// W2 against precomputed target points (same length).
pub fn w2_to_points(a: &ParticleEnsemble, target: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), target.len());
    let s: f64 = a
        .positions
        .iter()
        .zip(target)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    (s / a.len() as f64).sqrt()
}
