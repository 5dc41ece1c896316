//! Adaptive Gauss-Legendre quadrature for complex integrands on an interval.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn apply<F>(&self, f: &mut F, a: f64, b: f64) -> Result<C64>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x)? * *w;
        }
        Ok(acc * half)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed order-16 rule with dyadic subdivision until the estimated error is
/// below `rel_tol·(1 + (b − a))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_depth: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: C64,
    pub error_estimate: f64,
}

impl QuadratureRule {
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<C64>,
    {
        if a == b {
            return Ok(QuadratureResult {
                value: C64::new(0.0, 0.0),
                error_estimate: 0.0,
            });
        }
        let rule = GaussLegendre::order16();
        let tol = self.rel_tol * (1.0 + (b - a).abs());
        let whole = rule.apply(&mut f, a, b)?;
        let mut stack = vec![(a, b, whole, tol, 0u32)];
        let mut value = C64::new(0.0, 0.0);
        let mut error_estimate = 0.0;
        while let Some((lo, hi, coarse, tol, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = rule.apply(&mut f, lo, mid)?;
            let right = rule.apply(&mut f, mid, hi)?;
            let fine = left + right;
            let err = (fine - coarse).norm();
            if !err.is_finite() {
                return Err(Error::NonFinite("quadrature integrand"));
            }
            if err <= tol {
                value += fine;
                error_estimate += err;
            } else if depth >= self.max_depth {
                return Err(Error::Quadrature {
                    estimate: err,
                    tolerance: tol,
                });
            } else {
                stack.push((lo, mid, left, 0.5 * tol, depth + 1));
                stack.push((mid, hi, right, 0.5 * tol, depth + 1));
            }
        }
        Ok(QuadratureResult {
            value,
            error_estimate,
        })
    }
}
