//! Rayleigh-quotient minima behind the Hardy, Poincaré, interpolation and
//! b-derivative inequalities, and the localized pairing gain.
//!
//! Every quotient is a generalized eigenproblem N u = κ D u. Radial
//! problems with diagonal D reduce to a symmetric tridiagonal matrix
//! D^{−1/2} N D^{−1/2}; the rest are solved densely.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{radial_derivative, RadialGrid, WeightedB};
use crate::fit::{loglog, PowerFit};
use crate::geometry::{AngularMode, ManifoldModel, Potential};
use crate::linalg::{dot, Mat, SymTridiag};
use crate::spectral::{for_each_window_mode, SpectralWindow, WindowGrid};
use crate::{Error, Result};

/// Quotient uᵀNu / uᵀDu with tridiagonal symmetric N and diagonal D > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientProblem {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl QuotientProblem {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn reduced(&self) -> Result<SymTridiag> {
        if let Some(bad) = self.denominator.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::Domain(format!("denominator weight {bad} is not positive")));
        }
        let root: Vec<f64> = self.denominator.iter().map(|d| libm::sqrt(*d)).collect();
        let diag = self.diag.iter().zip(&root).map(|(a, r)| a / (r * r)).collect();
        let off = self.off.iter().enumerate().map(|(i, e)| e / (root[i] * root[i + 1])).collect();
        SymTridiag::new(diag, off)
    }

    /// Smallest κ.
    pub fn min(&self) -> Result<f64> {
        Ok(self.reduced()?.min_eigenvalue())
    }

    pub fn numerator(&self, u: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * u[i] * u[i];
            if i + 1 < n {
                acc += 2.0 * self.off[i] * u[i] * u[i + 1];
            }
        }
        acc
    }

    pub fn denominator(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.denominator).map(|(x, d)| d * x * x).sum()
    }

    /// Dense forms (N, D), for brute-force cross-checks.
    pub fn to_dense(&self) -> (Mat, Mat) {
        let n = self.dim();
        let num = Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.off[i]
            } else if i == j + 1 {
                self.off[j]
            } else {
                0.0
            }
        });
        (num, Mat::diagonal(&self.denominator))
    }
}

/// Uniform grid in t = ln x on [x_a, x_b], endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub x_a: f64,
    pub x_b: f64,
    pub nodes: usize,
}

impl LogGrid {
    pub fn new(x_a: f64, x_b: f64, nodes: usize) -> Result<Self> {
        if !(x_a > 0.0 && x_b > x_a) {
            return Err(Error::Domain(format!("need 0 < x_a < x_b, got [{x_a}, {x_b}]")));
        }
        if nodes < 3 {
            return Err(Error::Resolution(format!("{nodes} nodes leave no interior")));
        }
        Ok(LogGrid { x_a, x_b, nodes })
    }

    /// Grid on [1/ratio, 1].
    pub fn with_ratio(ratio: f64, nodes: usize) -> Result<Self> {
        LogGrid::new(1.0 / ratio, 1.0, nodes)
    }

    pub fn ratio(&self) -> f64 {
        self.x_b / self.x_a
    }

    pub fn step(&self) -> f64 {
        libm::log(self.ratio()) / (self.nodes - 1) as f64
    }
}

fn hardy_exponent(n: usize, s: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Parameter { name: "n", value: n as f64, hypothesis: "n ≥ 3" });
    }
    if !(s < (n as f64 - 2.0) / 2.0) {
        return Err(Error::Parameter { name: "s", value: s, hypothesis: "s < (n−2)/2" });
    }
    Ok(n as f64 - 2.0 - 2.0 * s)
}

/// The sharp constant ((n−2−2s)/2)² of the Hardy quotient.
pub fn hardy_sharp(n: usize, s: f64) -> Result<f64> {
    let a = hardy_exponent(n, s)?;
    Ok(0.25 * a * a)
}

/// Continuum minimum of the Hardy quotient on x ∈ (x_b/ratio, x_b) with
/// Dirichlet ends: with t = ln x both forms carry the weight e^{−at},
/// a = n−2−2s, and u = e^{at/2}v turns the problem into −v″ + a²v/4 on an
/// interval of length ln(ratio).
pub fn hardy_truncated_min(n: usize, s: f64, ratio: f64) -> Result<f64> {
    let a = hardy_exponent(n, s)?;
    let l = libm::log(ratio);
    Ok(0.25 * a * a + (PI / l) * (PI / l))
}

/// Hardy quotient ‖x^{2+s}u′‖²_μ / ‖x^{1+s}u‖²_μ, dμ = x^{−n−1}dx, as a
/// tridiagonal pencil on the log grid. In t = ln x both forms have density
/// e^{−at}; the flux weight is sampled at cell midpoints.
pub fn hardy_problem(n: usize, s: f64, grid: &LogGrid) -> Result<QuotientProblem> {
    let a = hardy_exponent(n, s)?;
    let h = grid.step();
    let m = grid.nodes - 2;
    // density relative to the left end avoids overflow for long intervals
    let omega = |i: f64| libm::exp(-a * h * i);
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    let mut denominator = vec![0.0; m];
    for k in 0..m {
        let i = (k + 1) as f64;
        diag[k] = (omega(i - 0.5) + omega(i + 0.5)) / h;
        denominator[k] = omega(i) * h;
        if k + 1 < m {
            off[k] = -omega(i + 0.5) / h;
        }
    }
    Ok(QuotientProblem { diag, off, denominator })
}

pub fn hardy_rayleigh_min(n: usize, s: f64, grid: &LogGrid) -> Result<f64> {
    hardy_problem(n, s, grid)?.min()
}

/// Weights of the Poincaré quotient ‖x^s∇u‖² / ‖x^{1+s+ε}u‖².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareWeights {
    pub s: f64,
    pub eps: f64,
}

impl PoincareWeights {
    /// The sharp form (ε = 0), valid for 0 ≤ s < (n−2)/2.
    pub fn sharp(n: usize, s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::Parameter { name: "s", value: s, hypothesis: "s ≥ 0" });
        }
        hardy_exponent(n, s)?;
        Ok(PoincareWeights { s, eps: 0.0 })
    }

    /// ‖xu‖_{x^{l′}L²_b} ≤ C‖∇u‖_{x^l L²_b} rewritten in L²_g: since
    /// L²_g = x^{n/2}L²_b this is s = n/2 − l and ε = l − l′.
    pub fn from_b_orders(n: usize, l: f64, l_prime: f64) -> Result<Self> {
        if !(l > 1.0) {
            return Err(Error::Parameter { name: "l", value: l, hypothesis: "l > 1" });
        }
        if !(l > l_prime) {
            return Err(Error::Parameter { name: "l_prime", value: l_prime, hypothesis: "l > l′" });
        }
        Ok(PoincareWeights { s: n as f64 / 2.0 - l, eps: l - l_prime })
    }
}

/// ∫x^{2s}(|u_r|² + λ|u|²/w²) dvol against ∫x^{2+2s+2ε}|u|² dvol on one
/// mode, x = r_min/r, Dirichlet at both ends.
pub fn poincare_problem(model: &ManifoldModel, grid: &RadialGrid, weights: PoincareWeights, lambda: f64) -> Result<QuotientProblem> {
    let h = grid.h();
    let n1 = model.n as f64 - 1.0;
    let r_min = model.r_min;
    let x = |r: f64| r_min / r;
    let flux = |r: f64| libm::pow(x(r), 2.0 * weights.s) * libm::pow(model.warp_at(r).w, n1) / h;
    let radii = grid.interior();
    let m = grid.interior_weights();
    let dim = radii.len();
    let mut diag = vec![0.0; dim];
    let mut off = vec![0.0; dim.saturating_sub(1)];
    let mut denominator = vec![0.0; dim];
    for (i, &r) in radii.iter().enumerate() {
        let w = model.warp_at(r).w;
        let xs = libm::pow(x(r), 2.0 * weights.s);
        diag[i] = flux(r - 0.5 * h) + flux(r + 0.5 * h) + xs * lambda / (w * w) * m[i];
        if i + 1 < dim {
            off[i] = -flux(r + 0.5 * h);
        }
        denominator[i] = libm::pow(x(r), 2.0 + 2.0 * weights.s + 2.0 * weights.eps) * m[i];
    }
    Ok(QuotientProblem { diag, off, denominator })
}

/// Minimum of a quotient over a set of modes, with the minimizing mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientMin {
    pub value: f64,
    pub mode: usize,
}

fn min_over_modes(modes: &[AngularMode], mut per_mode: impl FnMut(&AngularMode) -> Result<f64>) -> Result<QuotientMin> {
    let mut best: Option<QuotientMin> = None;
    for mode in modes {
        let value = per_mode(mode)?;
        if best.map_or(true, |b| value < b.value) {
            best = Some(QuotientMin { value, mode: mode.index });
        }
    }
    best.ok_or_else(|| Error::Domain("no angular modes supplied".into()))
}

/// Poincaré minimum, aggregated over the supplied modes (the forms are
/// block diagonal in the angular decomposition).
pub fn poincare_min(model: &ManifoldModel, grid: &RadialGrid, weights: PoincareWeights, modes: &[AngularMode]) -> Result<QuotientMin> {
    min_over_modes(modes, |mode| poincare_problem(model, grid, weights, mode.lambda)?.min())
}

/// Smooth bumps exp(−1/(1−τ²)) with random centers and widths, each of at
/// least 8 cells, deterministic in the seed.
pub fn random_bumps(grid: &RadialGrid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (grid.r_min(), grid.r_max());
    let len = hi - lo;
    let min_half = 8.0 * grid.h();
    (0..count)
        .map(|_| {
            let half = rng.gen_range(min_half..(0.25 * len).max(min_half * 1.01));
            let center = rng.gen_range(lo + half..(hi - half).max(lo + half + grid.h()));
            grid.interior()
                .iter()
                .map(|r| {
                    let tau = (r - center) / half;
                    if tau.abs() < 1.0 {
                        libm::exp(-1.0 / (1.0 - tau * tau))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// max over samples of ‖x^θu‖ / (‖∇u‖^θ‖u‖^{1−θ}) on one mode.
pub fn interpolation_check(model: &ManifoldModel, grid: &RadialGrid, lambda: f64, theta: f64, samples: &[Vec<f64>]) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Parameter { name: "theta", value: theta, hypothesis: "θ ∈ [0, 1]" });
    }
    let dim = grid.interior().len();
    let gradient = poincare_problem(model, grid, PoincareWeights { s: 0.0, eps: 0.0 }, lambda)?;
    let m = grid.interior_weights();
    let radii = grid.interior();
    let mut worst = 0.0f64;
    for u in samples {
        if u.len() != dim {
            return Err(Error::Dimension { expected: dim, found: u.len() });
        }
        let l2: f64 = u.iter().zip(m).map(|(v, w)| w * v * v).sum();
        if l2 == 0.0 {
            return Err(Error::Domain("zero vector among the samples".into()));
        }
        if theta == 0.0 {
            worst = worst.max(1.0);
            continue;
        }
        let weighted: f64 = u
            .iter()
            .zip(m)
            .zip(radii)
            .map(|((v, w), r)| libm::pow(model.r_min / r, 2.0 * theta) * w * v * v)
            .sum();
        let grad = gradient.numerator(u);
        let ratio = libm::sqrt(weighted) / (libm::pow(grad, 0.5 * theta) * libm::pow(l2, 0.5 * (1.0 - theta)));
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// min over modes of ‖Δ_g u‖² / (‖x²u‖² + ‖x²r∂_r u‖² + λ‖x²u‖²), the
/// b-derivatives being r∂_r and the angular factor √λ. Needs n ≥ 5.
pub fn vb_lower_bound(model: &ManifoldModel, grid: &RadialGrid, modes: &[AngularMode]) -> Result<QuotientMin> {
    if model.n < 5 {
        return Err(Error::Parameter { name: "n", value: model.n as f64, hypothesis: "n ≥ 5" });
    }
    let laplacian = ManifoldModel { potential: Potential::ZERO, ..model.clone() };
    let radii = grid.interior();
    let m = grid.interior_weights();
    let dim = radii.len();
    let x2: Vec<f64> = radii.iter().map(|r| libm::pow(model.r_min / r, 2.0)).collect();
    let rd = radial_derivative(grid);
    let rd_dense = Mat::from_fn(dim, dim, |i, j| rd.get(i, j));
    let weighted_gram = |b: &Mat, weight: &dyn Fn(usize) -> f64| -> Result<Mat> {
        let wb = Mat::from_fn(dim, dim, |i, j| weight(i) * b[(i, j)]);
        b.transpose().matmul(&wb)
    };
    let radial = weighted_gram(&rd_dense, &|i| x2[i] * x2[i] * m[i])?;
    min_over_modes(modes, |mode| {
        let p = crate::discretize::assemble_p(&laplacian, grid, mode.lambda)?;
        let pd = Mat::from_fn(dim, dim, |i, j| p.get(i, j));
        let num = weighted_gram(&pd, &|i| m[i])?;
        let den = radial.add(&Mat::diagonal(
            &(0..dim).map(|i| (1.0 + mode.lambda) * x2[i] * x2[i] * m[i]).collect::<Vec<_>>(),
        ));
        Ok(num.generalized_eigenvalues(&den)?[0])
    })
}

/// sup |⟨Lu, u⟩|/‖u‖² over u in the range of χ_I(H²P), per H.
#[derive(Debug, Clone, PartialEq)]
pub struct GainCurve {
    pub h_values: Vec<f64>,
    pub sup: Vec<f64>,
    /// Scales whose window was empty in every mode.
    pub skipped: Vec<f64>,
    pub fit: Option<PowerFit>,
}

/// Largest singular value of the window compression E*LE, maximized over
/// modes, for L = x^{2+σ}·(r∂_r)^j.
pub fn pairing_sup(model: &ManifoldModel, window: &SpectralWindow, rule: &WindowGrid, l: &WeightedB) -> Result<Option<f64>> {
    let grid = rule.grid(model, window)?;
    let rd = radial_derivative(&grid);
    let mut best: Option<f64> = None;
    for_each_window_mode(model, &grid, window, |wm| {
        let k = wm.spectrum.len();
        let radii = &wm.op.radii;
        let m = &wm.op.weights;
        let le: Vec<Vec<f64>> = wm
            .spectrum
            .eigen
            .vectors()
            .map(|e| l.apply_symmetric(radii, model.r_min, &rd, m, e))
            .collect();
        let c = Mat::from_fn(k, k, |a, b| dot(wm.spectrum.eigen.vector(a), &le[b]));
        let norm = c.norm2()?;
        best = Some(best.map_or(norm, |v: f64| v.max(norm)));
        Ok(())
    })?;
    Ok(best)
}

/// Pairing gain over a schedule of H; the fit is attempted when at least
/// two scales have nonempty windows and nonzero pairings.
pub fn weighted_gain_fit(
    model: &ManifoldModel,
    interval: (f64, f64),
    sigma: f64,
    derivatives: usize,
    h_list: &[f64],
    rule: &WindowGrid,
) -> Result<GainCurve> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::Parameter { name: "sigma", value: sigma, hypothesis: "σ ∈ [0, 1)" });
    }
    if derivatives > 2 {
        return Err(Error::Parameter { name: "derivatives", value: derivatives as f64, hypothesis: "L ∈ Diff_b²" });
    }
    let l = WeightedB::new(2.0 + sigma, derivatives);
    gain_curve(model, interval, h_list, rule, &l)
}

pub fn gain_curve(model: &ManifoldModel, interval: (f64, f64), h_list: &[f64], rule: &WindowGrid, l: &WeightedB) -> Result<GainCurve> {
    let mut curve = GainCurve { h_values: Vec::new(), sup: Vec::new(), skipped: Vec::new(), fit: None };
    for &h in h_list {
        let window = SpectralWindow::new(interval.0, interval.1, h)?;
        match pairing_sup(model, &window, rule, l)? {
            Some(v) => {
                curve.h_values.push(h);
                curve.sup.push(v);
            }
            None => curve.skipped.push(h),
        }
    }
    curve.fit = loglog(&curve.h_values, &curve.sup).ok();
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardy_matches_discrete_closed_form() {
        // u = e^{at/2} sin(πk t/L) diagonalizes the pencil exactly:
        // κ = (2cosh(ah/2) − 2cos(πh/L))/h²
        for (n, s) in [(3, 0.0), (5, 1.0), (6, 0.3)] {
            let grid = LogGrid::with_ratio(100.0, 201).unwrap();
            let a = n as f64 - 2.0 - 2.0 * s;
            let h = grid.step();
            let l = libm::log(grid.ratio());
            let expected = (2.0 * libm::cosh(a * h / 2.0) - 2.0 * libm::cos(PI * h / l)) / (h * h);
            let got = hardy_rayleigh_min(n, s, &grid).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected, "{n} {s}: {got} vs {expected}");
        }
    }

    #[test]
    fn hardy_rejects_critical_weight() {
        let grid = LogGrid::with_ratio(100.0, 50).unwrap();
        assert!(matches!(hardy_rayleigh_min(3, 0.5, &grid), Err(Error::Parameter { name: "s", .. })));
        assert!(hardy_sharp(4, 0.5).unwrap() == 0.25);
        assert!(hardy_sharp(5, 0.0).unwrap() == 2.25);
    }

    #[test]
    fn quotient_agrees_with_dense_oracle() {
        let model = ManifoldModel::perturbed(4, 0.2, 1.0, 0.5, 1.0);
        let grid = RadialGrid::new(&model, 12.0, 120).unwrap();
        let q = poincare_problem(&model, &grid, PoincareWeights { s: 0.3, eps: 0.1 }, 8.0).unwrap();
        let (num, den) = q.to_dense();
        let dense = num.generalized_eigenvalues(&den).unwrap()[0];
        assert!((q.min().unwrap() - dense).abs() < 1e-9 * dense);
    }

    #[test]
    fn b_orders_translate_to_weights() {
        let w = PoincareWeights::from_b_orders(3, 1.5, 1.2).unwrap();
        assert!((w.s - 0.0).abs() < 1e-15 && (w.eps - 0.3).abs() < 1e-12);
        assert!(PoincareWeights::from_b_orders(3, 1.0, 0.5).is_err());
        assert!(PoincareWeights::from_b_orders(3, 1.5, 1.5).is_err());
    }

    #[test]
    fn random_bumps_are_reproducible() {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::new(&model, 20.0, 200).unwrap();
        let a = random_bumps(&grid, 5, 7);
        assert_eq!(a, random_bumps(&grid, 5, 7));
        assert!(a.iter().all(|u| u.iter().any(|v| *v > 0.0)));
    }
}
