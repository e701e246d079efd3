//! Positive-commutator estimates on spectral windows.
//!
//! All window computations work in an orthonormal eigenbasis E of the
//! window (symmetric coordinates), where H²P = diag(t) with t = H²μ and
//! every sandwiched operator is a small dense matrix. Commutators with P
//! are always taken through the assembled K = (i/2)[P, A].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::discretize::{radial_derivative, ModeOperator, WeightedB};
use crate::fit::{loglog, PowerFit};
use crate::geometry::ManifoldModel;
use crate::linalg::{cdot, cnorm, dot, Mat, SymTridiag, TridiagLu};
use crate::quadrature::Rule;
use crate::spectral::{for_each_window_mode, psi_bump, sqrt_kernel, QuadSpec, Resolvent, SpectralWindow, WindowGrid, WindowMode};
use crate::{Error, Result};

/// Minimum number of nonempty windows needed to fit a deviation exponent.
pub const MIN_FIT_POINTS: usize = 4;

fn window_matrix(wm: &WindowMode, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Mat {
    let k = wm.spectrum.len();
    let images: Vec<Vec<f64>> = wm.spectrum.eigen.vectors().map(&mut apply).collect();
    Mat::from_fn(k, k, |a, b| dot(wm.spectrum.eigen.vector(a), &images[b])).symmetric_part()
}

/// H²·E*KE, the window compression of K_H = (i/2)[H²P, A].
fn sandwiched_k(wm: &WindowMode, h: f64) -> Mat {
    let ks = wm.op.k_symmetric();
    window_matrix(wm, |e| ks.apply(e)).scale(h * h)
}

fn min_eig(m: &Mat) -> Result<f64> {
    Ok(m.sym_eigen()?.values.first().copied().unwrap_or(f64::INFINITY))
}

/// One scale of the H²P Mourre scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    pub h: f64,
    /// Minimum eigenvalue of χ K_H χ on ran χ; None if every window is empty.
    pub c: Option<f64>,
    /// −λ_min(χ H²(K − P) χ): how far the commutator falls below H²P on the
    /// window. Zero in the continuum on the exact cone.
    pub deviation: Option<f64>,
    /// Smallest H²μ in the window.
    pub window_bottom: Option<f64>,
    /// Rank of χ_I(H²P) counted with angular multiplicity.
    pub rank: u64,
    pub modes_scanned: usize,
}

pub fn mourre_sandwich_min(model: &ManifoldModel, window: &SpectralWindow, rule: &WindowGrid) -> Result<Sandwich> {
    let grid = rule.grid(model, window)?;
    let h = window.h;
    let mut out = Sandwich { h, c: None, deviation: None, window_bottom: None, rank: 0, modes_scanned: 0 };
    out.modes_scanned = for_each_window_mode(model, &grid, window, |wm| {
        let kw = sandwiched_k(&wm, h);
        let t = wm.scaled_values(h);
        let c = min_eig(&kw)?;
        let dev = -min_eig(&kw.sub(&Mat::diagonal(&t)))?;
        out.c = Some(out.c.map_or(c, |v: f64| v.min(c)));
        out.deviation = Some(out.deviation.map_or(dev, |v: f64| v.max(dev)));
        let bottom = t[0];
        out.window_bottom = Some(out.window_bottom.map_or(bottom, |v: f64| v.min(bottom)));
        out.rank += wm.spectrum.len() as u64 * wm.spectrum.mode.multiplicity;
        Ok(())
    })?;
    Ok(out)
}

fn check_schedule(h_list: &[f64]) -> Result<()> {
    if let Some(w) = h_list.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter { name: "H", value: w[1], hypothesis: "H schedule strictly increasing" });
    }
    Ok(())
}

/// Smallest scheduled H from which on every c(H) reaches `threshold`.
pub fn locate_h0(points: &[(f64, Option<f64>)], threshold: f64) -> Option<f64> {
    let mut h0 = None;
    for &(h, c) in points.iter().rev() {
        match c {
            Some(c) if c >= threshold => h0 = Some(h),
            _ => break,
        }
    }
    h0
}

#[derive(Debug, Clone, PartialEq)]
pub struct MourreScan {
    pub interval: (f64, f64),
    pub points: Vec<Sandwich>,
    /// First H past which c(H) ≥ inf I/2.
    pub h0: Option<f64>,
    /// Fit of the deviation δ(H) against H.
    pub deviation_fit: Option<PowerFit>,
    /// Fit of inf I − c(H) against H (includes the window-edge offset).
    pub gap_fit: Option<PowerFit>,
    /// Fewer than [`MIN_FIT_POINTS`] nonempty windows.
    pub fit_aborted: bool,
    /// On the exact cone the deviation is pure discretization noise.
    pub exact_model: bool,
}

pub fn scan_h(model: &ManifoldModel, interval: (f64, f64), h_list: &[f64], rule: &WindowGrid) -> Result<MourreScan> {
    check_schedule(h_list)?;
    let mut points = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let window = SpectralWindow::new(interval.0, interval.1, h)?;
        points.push(mourre_sandwich_min(model, &window, rule)?);
    }
    let usable: Vec<&Sandwich> = points.iter().filter(|p| p.c.is_some()).collect();
    let fit_aborted = usable.len() < MIN_FIT_POINTS;
    let hs: Vec<f64> = usable.iter().map(|p| p.h).collect();
    let (deviation_fit, gap_fit) = if fit_aborted {
        (None, None)
    } else {
        let dev: Vec<f64> = usable.iter().map(|p| p.deviation.unwrap_or(0.0).max(0.0)).collect();
        let gap: Vec<f64> = usable.iter().map(|p| (interval.0 - p.c.unwrap_or(0.0)).max(0.0)).collect();
        (loglog(&hs, &dev).ok(), loglog(&hs, &gap).ok())
    };
    let h0 = locate_h0(&points.iter().map(|p| (p.h, p.c)).collect::<Vec<_>>(), 0.5 * interval.0);
    Ok(MourreScan {
        interval,
        points,
        h0,
        deviation_fit,
        gap_fit,
        fit_aborted,
        exact_model: model.is_exact_cone(),
    })
}

/// Quadrature rule for resolvent integrals over a window with c = √(ab).
fn window_rule(window: &SpectralWindow, quad: &QuadSpec) -> Result<(Rule, f64)> {
    Ok((quad.theta_rule(window.b / window.a)?, libm::sqrt(window.a * window.b)))
}

/// Z(θ) = E*(H²S cos²θ + c sin²θ)⁻¹E for each node of the rule, by
/// tridiagonal solves against the window vectors.
fn resolvent_compressions(wm: &WindowMode, h: f64, rule: &Rule, c: f64) -> Result<Vec<Mat>> {
    let s = wm.op.p_symmetric()?;
    let k = wm.spectrum.len();
    let mut out = Vec::with_capacity(rule.len());
    for theta in &rule.nodes {
        let (sn, cs) = (libm::sin(*theta), libm::cos(*theta));
        let scale = h * h * cs * cs;
        let diag: Vec<f64> = s.diag.iter().map(|d| d * scale + c * sn * sn).collect();
        let off: Vec<f64> = s.off.iter().map(|e| e * scale).collect();
        let lu = TridiagLu::factor(&off, &diag, &off, 0.0)?;
        let solved: Vec<Vec<f64>> = wm
            .spectrum
            .eigen
            .vectors()
            .map(|e| {
                let mut x = e.to_vec();
                lu.solve(&mut x);
                x
            })
            .collect();
        out.push(Mat::from_fn(k, k, |a, b| dot(wm.spectrum.eigen.vector(a), &solved[b])).symmetric_part());
    }
    Ok(out)
}

/// π⁻¹∫λ^{1/2}R(λ) X R(λ) dλ on the window, λ = c·tan²θ.
fn sqrt_integral(z: &[Mat], rule: &Rule, c: f64, x: &Mat) -> Result<Mat> {
    let k = x.rows();
    let mut acc = Mat::zeros(k, k);
    for ((theta, wt), zt) in rule.nodes.iter().zip(&rule.weights).zip(z) {
        let sn = libm::sin(*theta);
        let term = zt.matmul(x)?.matmul(zt)?;
        acc = acc.add(&term.scale(wt * sn * sn));
    }
    Ok(acc.scale(2.0 * c * libm::sqrt(c) / PI))
}

/// K′ = (i/2)[H√P, A] on the window from K_H: K′_{αβ} = K_{αβ}/(√t_α + √t_β).
fn sqrt_commutator(kw: &Mat, t: &[f64]) -> Mat {
    Mat::from_fn(kw.rows(), kw.cols(), |a, b| kw[(a, b)] * sqrt_kernel(t[a], t[b]))
}

/// One scale of the H√P Mourre check.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtSandwich {
    pub h: f64,
    pub c_sqrt: Option<f64>,
    pub c: Option<f64>,
    /// max|quadrature K′ − eigen K′| / max|eigen K′| over modes.
    pub quadrature_defect: f64,
    /// c(H)·π⁻¹∫λ^{1/2}(sup I + λ)⁻²dλ, the lower bound of the proof.
    pub mechanism_bound: Option<f64>,
    pub rank: u64,
}

impl SqrtSandwich {
    pub fn mechanism_holds(&self) -> bool {
        match (self.c_sqrt, self.mechanism_bound) {
            (Some(v), Some(b)) => v >= b,
            _ => false,
        }
    }
}

pub fn sqrt_mourre_min(model: &ManifoldModel, window: &SpectralWindow, rule: &WindowGrid, quad: &QuadSpec) -> Result<SqrtSandwich> {
    let grid = rule.grid(model, window)?;
    let h = window.h;
    let (theta, c_mid) = window_rule(window, quad)?;
    let mut out = SqrtSandwich { h, c_sqrt: None, c: None, quadrature_defect: 0.0, mechanism_bound: None, rank: 0 };
    for_each_window_mode(model, &grid, window, |wm| {
        let kw = sandwiched_k(&wm, h);
        let t = wm.scaled_values(h);
        let eigen_built = sqrt_commutator(&kw, &t);
        let z = resolvent_compressions(&wm, h, &theta, c_mid)?;
        let quad_built = sqrt_integral(&z, &theta, c_mid, &kw)?;
        let scale = eigen_built.max_abs().max(f64::MIN_POSITIVE);
        out.quadrature_defect = out.quadrature_defect.max(quad_built.sub(&eigen_built).max_abs() / scale);
        let cs = min_eig(&eigen_built)?;
        let c = min_eig(&kw)?;
        out.c_sqrt = Some(out.c_sqrt.map_or(cs, |v: f64| v.min(cs)));
        out.c = Some(out.c.map_or(c, |v: f64| v.min(c)));
        out.rank += wm.spectrum.len() as u64 * wm.spectrum.mode.multiplicity;
        Ok(())
    })?;
    // π⁻¹∫λ^{1/2}(b+λ)⁻²dλ by the same quadrature
    let factor = crate::spectral::sqrt_kernel_quadrature(window.b, window.b, c_mid, &theta);
    out.mechanism_bound = out.c.map(|c| c * factor);
    Ok(out)
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by
/// Lanczos with full reorthogonalization.
pub fn lanczos_top(n: usize, mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>, max_iter: usize) -> Result<f64> {
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.5 * libm::sin(0.7 * i as f64), 0.0)).collect();
    let nv = cnorm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut prev = f64::NAN;
    let limit = max_iter.min(n);
    for it in 0..limit {
        let mut w = apply(&v);
        alpha.push(cdot(&v, &w).re);
        basis.push(v);
        for _ in 0..2 {
            for q in &basis {
                let c = cdot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let b = cnorm(&w);
        let top = SymTridiag::new(alpha.clone(), beta.clone())?.max_eigenvalue();
        if b <= 1e-14 * top.abs() || it + 1 == n || (top - prev).abs() <= 1e-11 * top.abs() {
            return Ok(top);
        }
        prev = top;
        beta.push(b);
        v = w.into_iter().map(|x| x / b).collect();
    }
    Err(Error::NonConvergence { index: 0, iterations: limit })
}

fn split_apply(v: &[Complex64], mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<Complex64> {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    f(&re).into_iter().zip(f(&im)).map(|(a, b)| Complex64::new(a, b)).collect()
}

/// ‖L(H²P − w)⁻¹‖ maximized over the model's modes on the given grid.
pub fn resolvent_norm(model: &ManifoldModel, grid: &crate::discretize::RadialGrid, h: f64, w: Complex64, l: &WeightedB) -> Result<f64> {
    let rd = radial_derivative(grid);
    let mut best = 0.0f64;
    for mode in model.modes() {
        let op = ModeOperator::assemble(model, grid, mode.lambda)?;
        let s = op.p_symmetric()?;
        let scaled = SymTridiag::new(s.diag.iter().map(|d| d * h * h).collect(), s.off.iter().map(|e| e * h * h).collect())?;
        let res = Resolvent::new(&scaled, w)?;
        let (radii, m) = (&op.radii, &op.weights);
        let norm2 = lanczos_top(
            op.dim(),
            |v| {
                let y = res.apply(v);
                let z = split_apply(&y, |x| l.apply_symmetric(radii, model.r_min, &rd, m, x));
                let back = split_apply(&z, |x| l.apply_symmetric_transpose(radii, model.r_min, &rd, m, x));
                // (T − w)⁻* v = conj((T − w)⁻¹ conj v) for real symmetric T
                let conj: Vec<Complex64> = back.iter().map(|x| x.conj()).collect();
                res.apply(&conj).into_iter().map(|x| x.conj()).collect()
            },
            400,
        )?;
        best = best.max(libm::sqrt(norm2.max(0.0)));
    }
    Ok(best)
}

fn check_resolvent_parameters(s: f64, w: Complex64) -> Result<()> {
    if !(0.0..0.5).contains(&s) {
        return Err(Error::Parameter { name: "s", value: s, hypothesis: "s ∈ [0, 1/2)" });
    }
    if w.im == 0.0 && !(w.re < 0.0) {
        return Err(Error::Parameter { name: "w", value: w.re, hypothesis: "Im w ≠ 0 or Re w < 0" });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventGain {
    pub s: f64,
    pub w: Complex64,
    pub h_values: Vec<f64>,
    pub norms: Vec<f64>,
    pub fit: Option<PowerFit>,
}

/// ‖x^{1+s}(r∂_r)^j (H²P − w)⁻¹‖ over a schedule of H, grids from `rule`
/// applied to the window `interval`.
pub fn resolvent_gain_fit(
    model: &ManifoldModel,
    derivatives: usize,
    s: f64,
    w: Complex64,
    interval: (f64, f64),
    h_list: &[f64],
    rule: &WindowGrid,
) -> Result<ResolventGain> {
    check_resolvent_parameters(s, w)?;
    check_schedule(h_list)?;
    if derivatives > 1 {
        return Err(Error::Parameter { name: "derivatives", value: derivatives as f64, hypothesis: "L ∈ Diff_b¹" });
    }
    let l = WeightedB::new(1.0 + s, derivatives);
    let mut norms = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let window = SpectralWindow::new(interval.0, interval.1, h)?;
        let grid = rule.grid(model, &window)?;
        norms.push(resolvent_norm(model, &grid, h, w, &l)?);
    }
    let fit = loglog(h_list, &norms).ok();
    Ok(ResolventGain { s, w, h_values: h_list.to_vec(), norms, fit })
}

/// Norms at w = re + iη across η at fixed H: the Re w < 0 branch of the
/// estimate has no blow-up as Im w → 0.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_uniformity(
    model: &ManifoldModel,
    derivatives: usize,
    s: f64,
    re: f64,
    etas: &[f64],
    interval: (f64, f64),
    h: f64,
    rule: &WindowGrid,
) -> Result<Vec<f64>> {
    let l = WeightedB::new(1.0 + s, derivatives);
    let window = SpectralWindow::new(interval.0, interval.1, h)?;
    let grid = rule.grid(model, &window)?;
    etas.iter()
        .map(|eta| {
            let w = Complex64::new(re, *eta);
            check_resolvent_parameters(s, w)?;
            resolvent_norm(model, &grid, h, w, &l)
        })
        .collect()
}

/// Real 2k×2k form [[X, −Y], [Y, X]] of the Hermitian matrix X + iY.
fn embed(x: &Mat, y: &Mat) -> Mat {
    let k = x.rows();
    Mat::from_fn(2 * k, 2 * k, |i, j| match (i < k, j < k) {
        (true, true) => x[(i, j)],
        (true, false) => -y[(i, j - k)],
        (false, true) => y[(i - k, j)],
        (false, false) => x[(i - k, j - k)],
    })
}

fn block_diag(x: &Mat) -> Mat {
    embed(x, &Mat::zeros(x.rows(), x.cols()))
}

/// Largest eigenvalue of F G Fᵀ.
fn sandwich_top(f: &Mat, g: &Mat) -> Result<f64> {
    let m = f.matmul(g)?.matmul(&f.transpose())?.symmetric_part();
    Ok(m.sym_eigen()?.values.last().copied().unwrap_or(0.0).max(0.0))
}

fn sym_norm(m: &Mat) -> Result<f64> {
    let v = m.symmetric_part().sym_eigen()?.values;
    Ok(v.iter().fold(0.0f64, |a, x| a.max(libm::fabs(*x))))
}

/// Per-H norms of the §6 operators, maximized over modes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPoint {
    pub h: f64,
    /// ‖[𝒜_H, H√P]‖ with 𝒜_H = ψ(H²P) A ψ(H²P).
    pub ad1: f64,
    /// ‖[𝒜_H, [𝒜_H, H√P]]‖.
    pub ad2: f64,
    /// ‖|𝒜_H|^μ x^μ‖ per μ.
    pub mourre1: Vec<f64>,
    /// ‖⟨𝒜_H⟩^μ ψ(H²P) x^μ‖ per μ.
    pub mourre2: Vec<f64>,
    /// Relative residual of [𝒜_H, H√P] = iψ²H√P + ℬ, ℬ built by quadrature.
    pub identity_residual: f64,
    /// The same with the coefficient 2i in front of ψ²H√P.
    pub literal_identity_residual: f64,
    pub rank: u64,
}

/// Adjoint bounds over a schedule of H. ψ is [`psi_bump`] on I.
pub fn adjoint_bounds_check(
    model: &ManifoldModel,
    interval: (f64, f64),
    mu_list: &[f64],
    h_list: &[f64],
    rule: &WindowGrid,
    quad: &QuadSpec,
) -> Result<Vec<AdjointPoint>> {
    check_schedule(h_list)?;
    if let Some(mu) = mu_list.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::Parameter { name: "mu", value: *mu, hypothesis: "μ ∈ [0, 1]" });
    }
    let mut out = Vec::new();
    for &h in h_list {
        let window = SpectralWindow::new(interval.0, interval.1, h)?;
        if let Some(p) = adjoint_point(model, &window, mu_list, rule, quad)? {
            out.push(p);
        }
    }
    Ok(out)
}

fn adjoint_point(
    model: &ManifoldModel,
    window: &SpectralWindow,
    mu_list: &[f64],
    rule: &WindowGrid,
    quad: &QuadSpec,
) -> Result<Option<AdjointPoint>> {
    let grid = rule.grid(model, window)?;
    let h = window.h;
    let (theta, c_mid) = window_rule(window, quad)?;
    let mut p = AdjointPoint {
        h,
        ad1: 0.0,
        ad2: 0.0,
        mourre1: vec![0.0; mu_list.len()],
        mourre2: vec![0.0; mu_list.len()],
        identity_residual: 0.0,
        literal_identity_residual: 0.0,
        rank: 0,
    };
    let mut any = false;
    for_each_window_mode(model, &grid, window, |wm| {
        any = true;
        let k = wm.spectrum.len();
        p.rank += k as u64 * wm.spectrum.mode.multiplicity;
        let t = wm.scaled_values(h);
        let psi: Vec<f64> = t.iter().map(|v| psi_bump(*v, window.a, window.b)).collect();
        let big_psi = Mat::diagonal(&psi);
        let root_t: Vec<f64> = t.iter().map(|v| libm::sqrt(*v)).collect();
        let x: Vec<f64> = wm.op.radii.iter().map(|r| model.r_min / r).collect();

        // A = i·A_r; on the window 𝒜_H = i·X with X real antisymmetric
        let ar = wm.op.a_symmetric();
        let a_w = {
            let images: Vec<Vec<f64>> = wm.spectrum.eigen.vectors().map(|e| ar.apply(e)).collect();
            let raw = Mat::from_fn(k, k, |a, b| dot(wm.spectrum.eigen.vector(a), &images[b]));
            Mat::from_fn(k, k, |a, b| 0.5 * (raw[(a, b)] - raw[(b, a)]))
        };
        let x_a = big_psi.matmul(&a_w)?.matmul(&big_psi)?;

        // [𝒜_H, H√P] = 2iψK′ψ; write it as i·Y with Y real symmetric
        let kw = sandwiched_k(&wm, h);
        let y = big_psi.matmul(&sqrt_commutator(&kw, &t))?.matmul(&big_psi)?.scale(2.0);
        p.ad1 = p.ad1.max(sym_norm(&y)?);
        // [iX, iY] = −(XY − YX), real symmetric
        let ad2 = x_a.matmul(&y)?.sub(&y.matmul(&x_a)?).scale(-1.0);
        p.ad2 = p.ad2.max(sym_norm(&ad2)?);

        // ℬ/i = π⁻¹∫λ^{1/2}R ψ·2(K_H − H²P)·ψ R
        let m_part = big_psi.matmul(&kw.sub(&Mat::diagonal(&t)).scale(2.0))?.matmul(&big_psi)?;
        let z = resolvent_compressions(&wm, h, &theta, c_mid)?;
        let b_part = sqrt_integral(&z, &theta, c_mid, &m_part)?;
        let psi2_root = Mat::diagonal(&psi.iter().zip(&root_t).map(|(s, r)| s * s * r).collect::<Vec<_>>());
        let scale = y.max_abs().max(f64::MIN_POSITIVE);
        let corrected = psi2_root.add(&b_part).sub(&y).max_abs() / scale;
        let literal = psi2_root.scale(2.0).add(&b_part).sub(&y).max_abs() / scale;
        p.identity_residual = p.identity_residual.max(corrected);
        p.literal_identity_residual = p.literal_identity_residual.max(literal);

        // functions of 𝒜_H through the real embedding
        let emb = embed(&Mat::zeros(k, k), &x_a);
        let eig = emb.sym_eigen()?;
        let u = Mat::from_columns(2 * k, eig.vectors());
        let psi_emb = block_diag(&big_psi);
        for (idx, mu) in mu_list.iter().enumerate() {
            let gram = block_diag(&window_matrix(&wm, |e| {
                e.iter().zip(&x).map(|(v, xi)| v * libm::pow(*xi, 2.0 * mu)).collect()
            }));
            let f1 = u
                .matmul(&Mat::diagonal(&eig.values.iter().map(|v| libm::pow(libm::fabs(*v), *mu)).collect::<Vec<_>>()))?
                .matmul(&u.transpose())?;
            let f2 = u
                .matmul(&Mat::diagonal(&eig.values.iter().map(|v| libm::pow(1.0 + v * v, 0.5 * mu)).collect::<Vec<_>>()))?
                .matmul(&u.transpose())?
                .matmul(&psi_emb)?;
            p.mourre1[idx] = p.mourre1[idx].max(libm::sqrt(sandwich_top(&f1, &gram)?));
            p.mourre2[idx] = p.mourre2[idx].max(libm::sqrt(sandwich_top(&f2, &gram)?));
        }
        Ok(())
    })?;
    Ok(any.then_some(p))
}

/// Norms of x⁻¹ψ(H²P)L and its adjoint L*ψ(H²P)x⁻¹, computed independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateProjector {
    pub h: f64,
    pub forward: f64,
    pub adjoint: f64,
}

/// ψ(H²P) = Eψ(t)E* has rank k, so with W = x⁻¹E and Y = E*L both norms
/// reduce to k×k problems: ‖WΨY‖² = λ_max(G^{1/2}ΨTΨG^{1/2}) with
/// G = W*W, T = YY*, and ‖Y*ΨW*‖² = λ_max(T^{1/2}ΨGΨT^{1/2}).
pub fn conjugate_projector_norms(
    model: &ManifoldModel,
    interval: (f64, f64),
    l: &WeightedB,
    h_list: &[f64],
    rule: &WindowGrid,
) -> Result<Vec<ConjugateProjector>> {
    check_schedule(h_list)?;
    let mut out = Vec::new();
    for &h in h_list {
        let window = SpectralWindow::new(interval.0, interval.1, h)?;
        let grid = rule.grid(model, &window)?;
        let rd = radial_derivative(&grid);
        let mut point = ConjugateProjector { h, forward: 0.0, adjoint: 0.0 };
        let mut any = false;
        for_each_window_mode(model, &grid, &window, |wm| {
            any = true;
            let k = wm.spectrum.len();
            let t = wm.scaled_values(h);
            let psi = Mat::diagonal(&t.iter().map(|v| psi_bump(*v, window.a, window.b)).collect::<Vec<_>>());
            let (radii, m) = (&wm.op.radii, &wm.op.weights);
            let g = window_matrix(&wm, |e| e.iter().zip(radii).map(|(v, r)| v * libm::pow(r / model.r_min, 2.0)).collect());
            // rows of Y are (Lᵀe_α)ᵀ
            let lt: Vec<Vec<f64>> = wm
                .spectrum
                .eigen
                .vectors()
                .map(|e| l.apply_symmetric_transpose(radii, model.r_min, &rd, m, e))
                .collect();
            let tt = Mat::from_fn(k, k, |a, b| dot(&lt[a], &lt[b]));
            let g_half = psd_sqrt(&g)?;
            let t_half = psd_sqrt(&tt)?;
            let fwd = g_half.matmul(&psi)?.matmul(&tt)?.matmul(&psi)?.matmul(&g_half)?;
            let adj = t_half.matmul(&psi)?.matmul(&g)?.matmul(&psi)?.matmul(&t_half)?;
            point.forward = point.forward.max(libm::sqrt(sym_norm(&fwd)?));
            point.adjoint = point.adjoint.max(libm::sqrt(sym_norm(&adj)?));
            Ok(())
        })?;
        if any {
            out.push(point);
        }
    }
    Ok(out)
}

fn psd_sqrt(m: &Mat) -> Result<Mat> {
    let eig = m.symmetric_part().sym_eigen()?;
    let u = Mat::from_columns(m.rows(), eig.vectors());
    let d = Mat::diagonal(&eig.values.iter().map(|v| libm::sqrt(v.max(0.0))).collect::<Vec<_>>());
    u.matmul(&d)?.matmul(&u.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h0_is_the_start_of_the_final_run() {
        let pts = [(4.0, Some(0.1)), (8.0, Some(0.3)), (16.0, Some(0.2)), (32.0, Some(0.4)), (64.0, Some(0.45))];
        assert_eq!(locate_h0(&pts, 0.25), Some(32.0));
        assert_eq!(locate_h0(&pts[..3], 0.25), None);
        assert_eq!(locate_h0(&[(4.0, None), (8.0, Some(1.0))], 0.25), Some(8.0));
    }

    #[test]
    fn lanczos_finds_top_of_diagonal() {
        let d: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 0.1).collect();
        let top = lanczos_top(50, |v| v.iter().zip(&d).map(|(x, s)| x * s).collect(), 100).unwrap();
        assert!((top - d[49]).abs() < 1e-10);
    }

    #[test]
    fn embedding_preserves_hermitian_spectrum() {
        // [[0, −i], [i, 0]] has eigenvalues ±1
        let x = Mat::zeros(2, 2);
        let y = Mat::from_fn(2, 2, |i, j| if i == 1 && j == 0 { 1.0 } else if i == 0 && j == 1 { -1.0 } else { 0.0 });
        let v = embed(&x, &y).sym_eigen().unwrap().values;
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[3] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schedule_must_increase() {
        assert!(check_schedule(&[4.0, 8.0, 8.0]).is_err());
        assert!(check_resolvent_parameters(0.0, Complex64::new(1.0, 0.0)).is_err());
        assert!(check_resolvent_parameters(0.5, Complex64::new(0.0, 1.0)).is_err());
        assert!(check_resolvent_parameters(0.4, Complex64::new(-1.0, 0.0)).is_ok());
    }
}
