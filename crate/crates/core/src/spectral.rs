//! Spectral calculus per angular mode: eigenpairs, projectors χ_I(H²P),
//! smooth localizations ψ(H²P), resolvents and √P.
//!
//! Eigenvectors are stored in symmetric coordinates s = m^{1/2}u, where
//! the weighted inner product becomes the Euclidean one. Matrices returned
//! by the functional calculus act on nodal values u.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::discretize::{from_symmetric_vector, ModeOperator, RadialGrid};
use crate::geometry::{smooth_step, AngularMode, ManifoldModel};
use crate::linalg::{cnorm, Eigen, Mat, SymTridiag, TridiagLu};
use crate::quadrature::{composite_gauss, Rule};
use crate::{Error, Result};

/// Compact spectral interval I = [a, b] ⊂ (0, ∞) and scale H; eigenvalue
/// μ of P is in the window when H²μ ∈ I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWindow {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl SpectralWindow {
    pub fn new(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Parameter { name: "I.inf", value: a, hypothesis: "I ⊂ (0, ∞) compact" });
        }
        if !(b > a) {
            return Err(Error::Parameter { name: "I.sup", value: b, hypothesis: "inf I < sup I" });
        }
        if !(h > 0.0) {
            return Err(Error::Parameter { name: "H", value: h, hypothesis: "H > 0" });
        }
        Ok(SpectralWindow { a, b, h })
    }

    pub fn contains(&self, mu: f64) -> bool {
        let t = self.h * self.h * mu;
        t >= self.a && t <= self.b
    }

    /// The window in units of P: [a/H², b/H²].
    pub fn unscaled(&self) -> (f64, f64) {
        let h2 = self.h * self.h;
        (self.a / h2, self.b / h2)
    }
}

/// Eigenpairs of one angular mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub mode: AngularMode,
    pub weights: Vec<f64>,
    /// Orthonormal eigenvectors in symmetric coordinates.
    pub eigen: Eigen,
}

impl ModeSpectrum {
    /// Complete spectrum by implicit QL.
    pub fn full(op: &ModeOperator, mode: AngularMode) -> Result<Self> {
        let eigen = op.p_symmetric()?.eigen()?;
        Ok(ModeSpectrum { mode, weights: op.weights.clone(), eigen })
    }

    /// Eigenpairs with μ in [lo, hi) by bisection and inverse iteration.
    pub fn window(op: &ModeOperator, mode: AngularMode, lo: f64, hi: f64) -> Result<Self> {
        let eigen = op.p_symmetric()?.window(lo, hi)?;
        Ok(ModeSpectrum { mode, weights: op.weights.clone(), eigen })
    }

    pub fn values(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn len(&self) -> usize {
        self.eigen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigen.is_empty()
    }

    /// Eigenvector j as nodal values, normalized in ⟨·,·⟩_m.
    pub fn nodal_vector(&self, j: usize) -> Vec<f64> {
        from_symmetric_vector(self.eigen.vector(j), &self.weights)
    }

    /// max_j ‖P e_j − μ_j e_j‖_m / max|μ| and the orthonormality defect.
    pub fn quality(&self, op: &ModeOperator) -> Result<(f64, f64)> {
        let s = op.p_symmetric()?;
        let scale = self.values().iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v))).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for (j, mu) in self.values().iter().enumerate() {
            let v = self.eigen.vector(j);
            let sv = s.apply(v);
            let res: f64 = sv.iter().zip(v).map(|(a, b)| (a - mu * b) * (a - mu * b)).sum();
            worst = worst.max(libm::sqrt(res));
        }
        Ok((worst / scale, self.eigen.orthonormality_defect()))
    }

    /// Σ_j f(μ_j) s_j s_jᵀ in symmetric coordinates.
    fn symmetric_function(&self, f: impl Fn(f64) -> f64) -> Result<Mat> {
        let n = self.eigen.dim();
        let mut out = Mat::zeros(n, n);
        for (j, &mu) in self.values().iter().enumerate() {
            let fv = f(mu);
            if !fv.is_finite() {
                return Err(Error::Evaluation(mu));
            }
            if fv == 0.0 {
                continue;
            }
            let v = self.eigen.vector(j);
            for a in 0..n {
                let va = fv * v[a];
                for b in 0..n {
                    out[(a, b)] += va * v[b];
                }
            }
        }
        Ok(out)
    }

    /// Converts a matrix from symmetric to nodal coordinates: D^{−1/2} X D^{1/2}.
    pub fn to_nodal(&self, x: &Mat) -> Mat {
        let m = &self.weights;
        Mat::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * libm::sqrt(m[j] / m[i]))
    }
}

/// Spectra of all modes retained in an experiment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralData {
    pub modes: Vec<ModeSpectrum>,
}

impl SpectralData {
    /// Rank of χ_I(H²P) counted with angular multiplicity.
    pub fn window_rank(&self, window: &SpectralWindow) -> u64 {
        self.modes
            .iter()
            .map(|m| m.values().iter().filter(|mu| window.contains(**mu)).count() as u64 * m.mode.multiplicity)
            .sum()
    }
}

/// Grid rule for window experiments: r_max = q·π·H/√(inf I) keeps about q
/// half-wavelengths of the lowest window frequency inside the domain, so the
/// window population stays roughly constant as H grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowGrid {
    pub oversampling: f64,
    pub spacing: f64,
}

impl WindowGrid {
    pub fn r_max(&self, window: &SpectralWindow) -> f64 {
        self.oversampling * PI * window.h / libm::sqrt(window.a)
    }

    pub fn grid(&self, model: &ManifoldModel, window: &SpectralWindow) -> Result<RadialGrid> {
        if !(self.oversampling > 0.0) {
            return Err(Error::Parameter { name: "q", value: self.oversampling, hypothesis: "oversampling q > 0" });
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Parameter { name: "h", value: self.spacing, hypothesis: "grid spacing h > 0" });
        }
        RadialGrid::with_spacing(model, self.r_max(window), self.spacing)
    }
}

/// One angular mode with a nonempty window: its operators and the window
/// eigenpairs of P.
#[derive(Debug, Clone)]
pub struct WindowMode {
    pub op: ModeOperator,
    pub spectrum: ModeSpectrum,
}

impl WindowMode {
    /// H²μ for each window eigenvalue.
    pub fn scaled_values(&self, h: f64) -> Vec<f64> {
        self.spectrum.values().iter().map(|mu| h * h * mu).collect()
    }

    /// Window eigenvectors as columns (symmetric coordinates).
    pub fn basis(&self) -> Mat {
        Mat::from_columns(self.op.dim(), self.spectrum.eigen.vectors())
    }
}

/// Visits every angular mode whose window is nonempty, in ascending λ.
/// Modes are scanned until H²·min spec(P_λ) exceeds sup I + |I|; the bottom
/// of the spectrum increases with λ, so no later mode can reach the window.
/// Returns the number of modes scanned.
pub fn for_each_window_mode(
    model: &ManifoldModel,
    grid: &RadialGrid,
    window: &SpectralWindow,
    mut visit: impl FnMut(WindowMode) -> Result<()>,
) -> Result<usize> {
    let (lo, hi) = window.unscaled();
    let stop = (window.b + (window.b - window.a)) / (window.h * window.h);
    let mut scanned = 0;
    for mode in model.modes() {
        let op = ModeOperator::assemble(model, grid, mode.lambda)?;
        let s = op.p_symmetric()?;
        if s.min_eigenvalue() > stop {
            break;
        }
        scanned += 1;
        // the window is closed; nudge the upper end past b/H²
        let eigen = s.window(lo, hi * (1.0 + 4.0 * f64::EPSILON))?;
        if eigen.is_empty() {
            continue;
        }
        let spectrum = ModeSpectrum { mode, weights: op.weights.clone(), eigen };
        visit(WindowMode { op, spectrum })?;
    }
    Ok(scanned)
}

/// χ_I(H²P) on one mode, acting on nodal values.
pub fn projector(spec: &ModeSpectrum, window: &SpectralWindow) -> Mat {
    let x = spec
        .symmetric_function(|mu| if window.contains(mu) { 1.0 } else { 0.0 })
        .expect("indicator is finite");
    spec.to_nodal(&x)
}

/// f(P) = Σ f(μ_j) e_j e_j* on one mode, acting on nodal values.
pub fn apply_spectral_function(spec: &ModeSpectrum, f: impl Fn(f64) -> f64) -> Result<Mat> {
    Ok(spec.to_nodal(&spec.symmetric_function(f)?))
}

/// C^∞ cutoff supported in I = [a, b], equal to 1 on the middle third.
pub fn psi_bump(t: f64, a: f64, b: f64) -> f64 {
    let d = (b - a) / 3.0;
    smooth_step((t - a) / d) * smooth_step((b - t) / d)
}

/// Distance from w to the spectrum of a symmetric tridiagonal matrix.
pub fn distance_to_spectrum(s: &SymTridiag, w: Complex64) -> f64 {
    let n = s.dim();
    let k = s.count_below(w.re);
    let mut dist = f64::INFINITY;
    if k > 0 {
        dist = dist.min((w - s.kth_eigenvalue(k - 1)).norm());
    }
    if k < n {
        dist = dist.min((w - s.kth_eigenvalue(k)).norm());
    }
    dist
}

/// Factored P − w for repeated complex solves.
#[derive(Debug, Clone)]
pub struct Resolvent {
    lu: TridiagLu<Complex64>,
    pub w: Complex64,
    pub distance: f64,
}

impl Resolvent {
    /// (T − w)⁻¹ for a symmetric tridiagonal T (symmetric coordinates).
    pub fn new(s: &SymTridiag, w: Complex64) -> Result<Self> {
        let distance = distance_to_spectrum(s, w);
        if distance < 1e-12 * w.norm().max(1.0) {
            return Err(Error::Singular { distance });
        }
        let off: Vec<Complex64> = s.off.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let diag: Vec<Complex64> = s.diag.iter().map(|v| Complex64::new(*v, 0.0) - w).collect();
        let lu = TridiagLu::factor(&off, &diag, &off, 0.0)?;
        Ok(Resolvent { lu, w, distance })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut u = v.to_vec();
        self.lu.solve(&mut u);
        u
    }
}

/// Solves (P − w)u = v on nodal values, checking the residual and the
/// bound ‖u‖ ≤ ‖v‖/dist(w, spec P) in the weighted norm.
pub fn resolvent_apply(op: &ModeOperator, w: Complex64, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = op.dim();
    if v.len() != n {
        return Err(Error::Dimension { expected: n, found: v.len() });
    }
    let s = op.p_symmetric()?;
    let res = Resolvent::new(&s, w)?;
    let root: Vec<f64> = op.weights.iter().map(|m| libm::sqrt(*m)).collect();
    let vs: Vec<Complex64> = v.iter().zip(&root).map(|(x, r)| x * r).collect();
    let us = res.apply(&vs);
    let u: Vec<Complex64> = us.iter().zip(&root).map(|(x, r)| x / r).collect();

    let p = &op.p;
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = (p.diag[i] - w) * u[i];
        if i > 0 {
            acc += p.lower[i - 1] * u[i - 1];
        }
        if i + 1 < n {
            acc += p.upper[i] * u[i + 1];
        }
        r[i] = (acc - v[i]) * root[i];
    }
    let vnorm = cnorm(&vs);
    let residual = cnorm(&r) / vnorm.max(f64::MIN_POSITIVE);
    if residual > 1e-10 {
        return Err(Error::Accuracy { what: "resolvent residual", value: residual, tolerance: 1e-10 });
    }
    let bound = vnorm / res.distance;
    let unorm = cnorm(&us);
    if unorm > bound * (1.0 + 1e-10) {
        return Err(Error::Accuracy { what: "resolvent norm excess", value: unorm / bound - 1.0, tolerance: 1e-10 });
    }
    Ok(u)
}

/// Node layout for √P = π⁻¹∫₀^∞ λ^{−1/2} P(P+λ)⁻¹ dλ after λ = c·tan²θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Number of geometric panel halvings toward each end of (0, π/2);
    /// None picks it from the condition number of P.
    pub levels: Option<usize>,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { order: 8, levels: None }
    }
}

impl QuadSpec {
    /// Composite rule on (0, π/2) for spectra with max/min ratio `kappa`.
    /// After scaling by c = √(μ_min μ_max) the integrand concentrates within
    /// ~κ^{−1/4} of the ends, so panels are graded geometrically there.
    pub fn theta_rule(&self, kappa: f64) -> Result<Rule> {
        let quarter = PI / 4.0;
        let levels = self.levels.unwrap_or_else(|| {
            let need = libm::log2(quarter * libm::pow(kappa.max(1.0), 0.25));
            libm::ceil(need.max(0.0)) as usize + 1
        });
        let mut edges = vec![0.0];
        for l in (1..=levels).rev() {
            edges.push(quarter * libm::pow(2.0, -(l as f64)));
        }
        edges.push(quarter);
        let left = edges.clone();
        for e in left.iter().rev().skip(1) {
            edges.push(PI / 2.0 - e);
        }
        composite_gauss(&edges, self.order)
    }
}

/// √S by quadrature of resolvents, S symmetric positive definite. Each node
/// costs one tridiagonal factorization and N solves.
pub fn sqrt_via_quadrature(s: &SymTridiag, spec: &QuadSpec) -> Result<Mat> {
    let n = s.dim();
    let lo = s.min_eigenvalue();
    if !(lo > 0.0) {
        return Err(Error::Domain(format!("√P needs P > 0; smallest eigenvalue {lo:e}")));
    }
    let hi = s.max_eigenvalue();
    let c = libm::sqrt(lo * hi);
    let rule = spec.theta_rule(hi / lo)?;
    let mut acc = Mat::zeros(n, n);
    let mut col = vec![0.0; n];
    for (theta, wt) in rule.nodes.iter().zip(&rule.weights) {
        let (sn, cs) = (libm::sin(*theta), libm::cos(*theta));
        let diag: Vec<f64> = s.diag.iter().map(|d| d * cs * cs + c * sn * sn).collect();
        let off: Vec<f64> = s.off.iter().map(|e| e * cs * cs).collect();
        let lu = TridiagLu::factor(&off, &diag, &off, 0.0)?;
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = s.diag[j];
            if j > 0 {
                col[j - 1] = s.off[j - 1];
            }
            if j + 1 < n {
                col[j + 1] = s.off[j];
            }
            lu.solve(&mut col);
            for i in 0..n {
                acc[(i, j)] += wt * col[i];
            }
        }
    }
    Ok(acc.scale(2.0 * libm::sqrt(c) / PI).symmetric_part())
}

/// π⁻¹∫₀^∞ λ^{1/2}(t_a+λ)⁻¹(t_b+λ)⁻¹ dλ = 1/(√t_a + √t_b): the kernel that
/// turns [T, X] into [√T, X] in an eigenbasis of T.
pub fn sqrt_kernel(ta: f64, tb: f64) -> f64 {
    1.0 / (libm::sqrt(ta) + libm::sqrt(tb))
}

/// The same kernel by quadrature (λ = c·tan²θ), for cross-checks.
pub fn sqrt_kernel_quadrature(ta: f64, tb: f64, c: f64, rule: &Rule) -> f64 {
    let pre = 2.0 * c * libm::sqrt(c) / PI;
    pre * rule.integrate(|theta| {
        let (sn, cs) = (libm::sin(theta), libm::cos(theta));
        let (s2, c2) = (sn * sn, cs * cs);
        s2 / ((ta * c2 + c * s2) * (tb * c2 + c * s2))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::RadialGrid;
    use crate::geometry::ManifoldModel;

    fn flat_mode(nodes: usize) -> (ModeOperator, ModeSpectrum) {
        let model = ManifoldModel::cone(3);
        let grid = RadialGrid::new(&model, 21.0, nodes).unwrap();
        let op = ModeOperator::assemble(&model, &grid, 0.0).unwrap();
        let mode = model.modes()[0];
        let spec = ModeSpectrum::full(&op, mode).unwrap();
        (op, spec)
    }

    fn weighted_adjoint(x: &Mat, m: &[f64]) -> Mat {
        Mat::from_fn(x.rows(), x.cols(), |i, j| m[j] * x[(j, i)] / m[i])
    }

    #[test]
    fn spectrum_meets_quality_invariants() {
        let (op, spec) = flat_mode(120);
        let (res, orth) = spec.quality(&op).unwrap();
        assert!(res < 1e-10 && orth < 1e-10, "{res} {orth}");
        assert!(spec.values()[0] > 0.0);
    }

    #[test]
    fn projector_is_an_orthogonal_idempotent_commuting_with_p() {
        let (op, spec) = flat_mode(100);
        let window = SpectralWindow::new(0.5, 2.0, 3.0).unwrap();
        let pi = projector(&spec, &window);
        assert!(pi.matmul(&pi).unwrap().sub(&pi).max_abs() < 1e-10);
        assert!(weighted_adjoint(&pi, &op.weights).sub(&pi).max_abs() < 1e-10);
        let p = op.p.clone();
        let pd = Mat::from_fn(p.dim(), p.dim(), |i, j| p.get(i, j));
        let comm = pd.matmul(&pi).unwrap().sub(&pi.matmul(&pd).unwrap());
        assert!(comm.max_abs() < 1e-10 * pd.max_abs());
        let rank = spec.values().iter().filter(|m| window.contains(**m)).count();
        let trace: f64 = (0..pi.rows()).map(|i| pi[(i, i)]).sum();
        assert!((trace - rank as f64).abs() < 1e-9);

        let empty = SpectralWindow::new(1e6, 2e6, 1.0).unwrap();
        assert_eq!(projector(&spec, &empty).max_abs(), 0.0);
        let all = SpectralWindow::new(1e-9, 1e9, 1.0).unwrap();
        assert!(projector(&spec, &all).sub(&Mat::identity(op.dim())).max_abs() < 1e-10);
    }

    #[test]
    fn functional_calculus_identities() {
        let (op, spec) = flat_mode(80);
        let p = Mat::from_fn(op.dim(), op.dim(), |i, j| op.p.get(i, j));
        let id = apply_spectral_function(&spec, |mu| mu).unwrap();
        assert!(id.sub(&p).max_abs() < 1e-10 * p.max_abs());
        let root = apply_spectral_function(&spec, libm::sqrt).unwrap();
        assert!(root.matmul(&root).unwrap().sub(&p).max_abs() < 1e-10 * p.max_abs());
        assert!(matches!(apply_spectral_function(&spec, |mu| 1.0 / (mu - spec.values()[3])), Err(Error::Evaluation(_))));
    }

    #[test]
    fn resolvent_bounds_and_eigenvector_action() {
        let (op, spec) = flat_mode(90);
        let v: Vec<Complex64> = (0..op.dim()).map(|i| Complex64::new(libm::sin(i as f64), 0.3)).collect();
        let norm = |u: &[Complex64]| -> f64 {
            libm::sqrt(u.iter().zip(&op.weights).map(|(z, m)| z.norm_sqr() * m).sum())
        };
        let w = Complex64::new(-1.0, 0.0);
        let u = resolvent_apply(&op, w, &v).unwrap();
        assert!(norm(&u) <= norm(&v) / (1.0 + spec.values()[0]) + 1e-12);
        let u = resolvent_apply(&op, Complex64::new(0.0, 1.0), &v).unwrap();
        assert!(norm(&u) <= norm(&v));

        let e: Vec<Complex64> = spec.nodal_vector(4).iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let w = Complex64::new(0.1, 0.2);
        let u = resolvent_apply(&op, w, &e).unwrap();
        let factor = Complex64::new(1.0, 0.0) / (spec.values()[4] - w);
        for (a, b) in u.iter().zip(&e) {
            assert!((a - b * factor).norm() < 1e-10);
        }
        let hit = Complex64::new(spec.values()[2], 0.0);
        assert!(matches!(resolvent_apply(&op, hit, &e), Err(Error::Singular { .. })));
    }

    #[test]
    fn scalar_square_roots_by_quadrature() {
        for (x, root) in [(4.0, 2.0), (1.0, 1.0), (0.01, 0.1)] {
            let s = SymTridiag::new(vec![x], vec![]).unwrap();
            let q = sqrt_via_quadrature(&s, &QuadSpec::default()).unwrap();
            assert!((q[(0, 0)] - root).abs() < 1e-12);
        }
        let neg = SymTridiag::new(vec![-1.0], vec![]).unwrap();
        assert!(sqrt_via_quadrature(&neg, &QuadSpec::default()).is_err());
    }

    #[test]
    fn kernel_quadrature_matches_closed_form() {
        let rule = QuadSpec { order: 16, levels: None }.theta_rule(4.0).unwrap();
        for (a, b) in [(0.5, 0.5), (0.5, 2.0), (1.3, 0.7)] {
            let q = sqrt_kernel_quadrature(a, b, 1.0, &rule);
            assert!((q - sqrt_kernel(a, b)).abs() < 1e-10, "{a} {b}");
        }
    }
}
