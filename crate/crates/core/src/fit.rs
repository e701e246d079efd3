//! Log-log least-squares fits for scaling exponents.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Fits below this coefficient of determination are reported as inconclusive.
pub const MIN_R_SQUARED: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerFit {
    pub fn conclusive(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }

    /// Fitted value c·x^slope.
    pub fn eval(&self, x: f64) -> f64 {
        libm::exp(self.intercept) * libm::pow(x, self.slope)
    }
}

/// Least-squares line through (ln x, ln y); points with y ≤ 0 are dropped.
pub fn loglog(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (libm::log(*x), libm::log(*y)))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 2, found: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(PowerFit { slope, intercept, r_squared, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let xs = [4.0, 8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * libm::pow(*x, -1.5)).collect();
        let fit = loglog(&xs, &ys).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.eval(10.0) - 3.0 * libm::pow(10.0, -1.5)).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_are_dropped() {
        let fit = loglog(&[1.0, 2.0, 4.0], &[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(fit.points, 2);
        assert!(loglog(&[1.0], &[1.0]).is_err());
    }
}
