//! Gauss panel rules used by the kernel routines.
//!
//! Every panel is integrated twice, with `n` and `2n` nodes; the higher-order
//! value is returned and the difference is the error estimate.

use std::num::NonZeroUsize;

use gauss_quad::{GaussJacobi, GaussLegendre};

/// A value together with an additive error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate { value: 0.0, error: 0.0 };

    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl std::ops::AddAssign for Estimate {
    fn add_assign(&mut self, rhs: Estimate) {
        *self = *self + rhs;
    }
}

impl std::ops::Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, rhs: f64) -> Estimate {
        Estimate::new(self.value * rhs, self.error * rhs.abs())
    }
}

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let (nodes, weights) = pairs.iter().copied().unzip();
        Rule { nodes, weights }
    }

    /// Returns (sum, sum of absolute terms).
    fn apply(&self, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let term = w * f(x);
            sum += term;
            abs += term.abs();
        }
        (sum, abs)
    }
}

fn nonzero(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n.max(1)).expect("positive")
}

/// Paired Gauss–Legendre rules with `n` and `2n` nodes.
#[derive(Debug, Clone)]
pub(crate) struct LegendrePair {
    coarse: Rule,
    fine: Rule,
}

impl LegendrePair {
    pub fn new(n: usize) -> Self {
        let coarse = GaussLegendre::new(nonzero(n));
        let fine = GaussLegendre::new(nonzero(2 * n));
        LegendrePair {
            coarse: Rule::from_pairs(coarse.as_node_weight_pairs()),
            fine: Rule::from_pairs(fine.as_node_weight_pairs()),
        }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn panel(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> Estimate {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (coarse, _) = self.coarse.apply(|x| f(mid + half * x));
        let (fine, abs) = self.fine.apply(|x| f(mid + half * x));
        let rounding = 8.0 * f64::EPSILON * abs * half.abs();
        Estimate::new(half * fine, (half * (fine - coarse)).abs() + rounding)
    }

    /// Adaptive bisection until each panel's estimate is below its share of `tol`.
    pub fn adaptive(&self, a: f64, b: f64, tol: f64, max_depth: usize, f: &mut impl FnMut(f64) -> f64) -> Estimate {
        let whole = self.panel(a, b, &mut *f);
        if whole.error <= tol || max_depth == 0 {
            return whole;
        }
        let mid = 0.5 * (a + b);
        self.adaptive(a, mid, 0.5 * tol, max_depth - 1, f) + self.adaptive(mid, b, 0.5 * tol, max_depth - 1, f)
    }
}

/// Paired Gauss–Jacobi rules for `∫_0^τ t^β h(t) dt` with a smooth `h`.
#[derive(Debug, Clone)]
pub(crate) struct JacobiPair {
    beta: f64,
    coarse: Rule,
    fine: Rule,
}

impl JacobiPair {
    /// `beta > -1`. Node counts are rounded up to even: the underlying
    /// eigenvalue solver pins the middle node of odd rules at 0, which is only
    /// right for symmetric weights.
    pub fn new(n: usize, beta: f64) -> Self {
        let n = n + n % 2;
        let build = |deg: usize| {
            let weight_exp = gauss_quad::FiniteAboveNegOneF64::new(beta).expect("beta > -1");
            let zero = gauss_quad::FiniteAboveNegOneF64::new(0.0).expect("0 > -1");
            let rule = GaussJacobi::new(nonzero(deg), zero, weight_exp);
            Rule::from_pairs(rule.as_node_weight_pairs())
        };
        JacobiPair {
            beta,
            coarse: build(n),
            fine: build(2 * n),
        }
    }

    /// `∫_0^τ t^β h(t) dt`.
    pub fn panel(&self, tau: f64, mut h: impl FnMut(f64) -> f64) -> Estimate {
        let half = 0.5 * tau;
        let scale = half.powf(self.beta + 1.0);
        let (coarse, _) = self.coarse.apply(|x| h(half * (1.0 + x)));
        let (fine, abs) = self.fine.apply(|x| h(half * (1.0 + x)));
        let rounding = 8.0 * f64::EPSILON * abs * scale;
        Estimate::new(scale * fine, (scale * (fine - coarse)).abs() + rounding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = LegendrePair::new(8);
        let est = rule.panel(0.0, 2.0, |x| x.powi(7) + 3.0 * x * x);
        assert!((est.value - (256.0 / 8.0 + 8.0)).abs() < 1e-12);
        assert!(est.error < 1e-11);
    }

    #[test]
    fn jacobi_moments_match_beta_function() {
        for &beta in &[-0.75, -0.5, -0.1, 0.3] {
            let rule = JacobiPair::new(12, beta);
            for k in 0..6 {
                let est = rule.panel(1.0, |t| t.powi(k));
                let exact = 1.0 / (beta + k as f64 + 1.0);
                assert!(
                    (est.value - exact).abs() < 1e-13,
                    "beta {beta} k {k}: {} vs {exact}",
                    est.value
                );
            }
            // scaling to [0, τ]
            let est = rule.panel(0.5, |_| 1.0);
            assert!((est.value - 0.5f64.powf(beta + 1.0) / (beta + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_resolves_a_peak() {
        let rule = LegendrePair::new(10);
        let mut f = |x: f64| 1.0 / (1e-4 + x * x);
        let est = rule.adaptive(-1.0, 1.0, 1e-10, 40, &mut f);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((est.value - exact).abs() < 1e-8, "{} vs {exact}", est.value);
    }
}
