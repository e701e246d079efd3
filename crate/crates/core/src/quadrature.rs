//! Quadrature rules: Gauss–Legendre panels and composite Simpson.

use alloc::vec::Vec;

use crate::linalg::SymTridiag;
use crate::{Error, Result};

/// Nodes and weights on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss–Legendre rule of the given order on [-1, 1] (Golub–Welsch).
pub fn gauss_legendre(order: usize) -> Result<Rule> {
    if order == 0 {
        return Err(Error::Domain("Gauss rule needs at least one node".into()));
    }
    let off: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            k / libm::sqrt(4.0 * k * k - 1.0)
        })
        .collect();
    let jacobi = SymTridiag::new(alloc::vec![0.0; order], off)?;
    let eig = jacobi.eigen()?;
    let weights = (0..order).map(|j| 2.0 * eig.vector(j)[0] * eig.vector(j)[0]).collect();
    Ok(Rule { nodes: eig.values, weights })
}

/// Gauss–Legendre panels of `order` nodes on consecutive intervals
/// [edges[i], edges[i+1]].
pub fn composite_gauss(edges: &[f64], order: usize) -> Result<Rule> {
    let base = gauss_legendre(order)?;
    let mut nodes = Vec::with_capacity(order * edges.len());
    let mut weights = Vec::with_capacity(order * edges.len());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    Ok(Rule { nodes, weights })
}

/// Composite Simpson on equally spaced samples (odd count). With an even
/// count the last interval is closed with the trapezoid rule.
pub fn simpson(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut i = 0;
    while i < even {
        acc += values[i] + 4.0 * values[i + 1] + values[i + 2];
        i += 2;
    }
    acc *= step / 3.0;
    if even < intervals {
        acc += 0.5 * step * (values[n - 2] + values[n - 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let rule = gauss_legendre(6).unwrap();
        // degree 11 is the exactness limit for six nodes
        let exact = 2.0 / 11.0 + 2.0 / 3.0;
        let got = rule.integrate(|x| libm::pow(x, 10.0) + x * x + libm::pow(x, 11.0));
        assert!((got - exact).abs() < 1e-14, "{got} vs {exact}");
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_integrates_over_panels() {
        let rule = composite_gauss(&[0.0, 0.5, 1.0, 3.0], 8).unwrap();
        assert_eq!(rule.len(), 24);
        let got = rule.integrate(libm::exp);
        assert!((got - (libm::exp(3.0) - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn simpson_handles_both_parities() {
        let step = 0.01;
        let odd: Vec<f64> = (0..=100).map(|i| libm::sin(i as f64 * step)).collect();
        assert!((simpson(&odd, step) - (1.0 - libm::cos(1.0))).abs() < 1e-9);
        let even: Vec<f64> = (0..=101).map(|i| (i as f64 * step).powi(2)).collect();
        let exact = libm::pow(1.01, 3.0) / 3.0;
        assert!((simpson(&even, step) - exact).abs() < 1e-5);
    }
}
