//! Gauss-Legendre rules and geometrically graded composite quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// An n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(m + h * x);
        }
        s * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

macro_rules! cached_rule {
    ($name:ident, $n:expr) => {
        pub fn $name() -> &'static GaussLegendre {
            static RULE: OnceLock<GaussLegendre> = OnceLock::new();
            RULE.get_or_init(|| GaussLegendre::new($n))
        }
    };
}

cached_rule!(gl16, 16);
cached_rule!(gl24, 24);
cached_rule!(gl32, 32);
cached_rule!(gl64, 64);
cached_rule!(gl128, 128);

/// Which end of the interval a graded integral refines toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toward {
    Left,
    Right,
}

/// Composite rule whose panels shrink geometrically (ratio 1/4) toward one
/// end of [a, b], down to a panel width of `rel_min * (b - a)`. Exponentially
/// convergent for integrands analytic away from that end point, including
/// log and square-root endpoint behaviour.
pub fn graded<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    toward: Toward,
    rel_min: f64,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    const RATIO: f64 = 0.25;
    let len = b - a;
    let mut total = 0.0;
    let mut outer = len;
    loop {
        let inner = outer * RATIO;
        let last = inner < rel_min * len;
        let (lo, hi) = if last { (0.0, outer) } else { (inner, outer) };
        let (pa, pb) = match toward {
            Toward::Right => (b - hi, b - lo),
            Toward::Left => (a + lo, a + hi),
        };
        total += rule.integrate(pa, pb, &mut f);
        if last {
            break;
        }
        outer = inner;
    }
    total
}

/// Graded toward both ends, split at the midpoint.
pub fn graded_both<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    rel_min: f64,
    mut f: F,
) -> f64 {
    let m = 0.5 * (a + b);
    graded(rule, a, m, Toward::Left, rel_min, &mut f)
        + graded(rule, m, b, Toward::Right, rel_min, &mut f)
}
