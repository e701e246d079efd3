//! Warped-product model g = dr² + w(r)² h₀ with a radial potential, the
//! collar cutoff φ of the conjugate operator, and the weight f = 𝗀^{2s}.

use alloc::format;
use alloc::vec::Vec;

use crate::discretize::RadialGrid;
use crate::{Error, Result};

/// Warp w(r) = r·(1 + a(r)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warp {
    /// a = 0: the exact cone.
    Flat,
    /// a(r) = c·(1+r)^{−ρ}, a symbol of order −ρ.
    Decay { c: f64 },
    /// a(r) = c·exp(−((r − center)/width)²). For large c the warp has an
    /// interior maximum, which traps geodesics; used as a negative control.
    Trapping { c: f64, center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValue {
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
}

/// V(r) = v₀·(1+r)^{−2−ρ′}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub v0: f64,
    pub rho_prime: f64,
}

impl Potential {
    pub const ZERO: Potential = Potential { v0: 0.0, rho_prime: 1.0 };
}

/// Support of the conjugate-operator cutoff φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// φ = 0 on [r_min, r₀], φ = 1 on [r₁, ∞).
    Collar { r0: f64, r1: f64 },
    /// φ ≡ 1; only meaningful on the exact cone, where the dilation
    /// generator needs no localization.
    Everywhere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularMode {
    /// Index in the angular spectrum (the degree k for spheres).
    pub index: usize,
    pub lambda: f64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AngularSpectrum {
    /// Spherical harmonics on S^{n−1}: λ_k = k(k+n−2), k ≤ k_max.
    Sphere { k_max: usize },
    /// Explicit (λ, multiplicity) list.
    Custom(Vec<(f64, u64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    pub n: usize,
    pub r_min: f64,
    pub warp: Warp,
    /// Decay order of the warp perturbation.
    pub rho: f64,
    pub potential: Potential,
    pub cutoff: Cutoff,
    pub spectrum: AngularSpectrum,
}

fn param(name: &'static str, value: f64, hypothesis: &'static str) -> Error {
    Error::Parameter { name, value, hypothesis }
}

impl ManifoldModel {
    /// The exact cone over S^{n−1} with r_min = 1, no potential and the
    /// default collar (2, 4).
    pub fn cone(n: usize) -> Self {
        ManifoldModel {
            n,
            r_min: 1.0,
            warp: Warp::Flat,
            rho: 1.0,
            potential: Potential::ZERO,
            cutoff: Cutoff::Collar { r0: 2.0, r1: 4.0 },
            spectrum: AngularSpectrum::Sphere { k_max: 256 },
        }
    }

    /// Decaying warp c_w·(1+r)^{−ρ} and potential v₀(1+r)^{−2−ρ′} over S^{n−1}.
    pub fn perturbed(n: usize, c_w: f64, rho: f64, v0: f64, rho_prime: f64) -> Self {
        ManifoldModel {
            warp: Warp::Decay { c: c_w },
            rho,
            potential: Potential { v0, rho_prime },
            ..ManifoldModel::cone(n)
        }
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_warp(mut self, warp: Warp) -> Self {
        self.warp = warp;
        self
    }

    pub fn with_spectrum(mut self, spectrum: AngularSpectrum) -> Self {
        self.spectrum = spectrum;
        self
    }

    pub fn with_r_min(mut self, r_min: f64) -> Self {
        self.r_min = r_min;
        self
    }

    /// Checks every standing hypothesis of the model.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(param("n", self.n as f64, "n ≥ 3 (standing dimension assumption)"));
        }
        if !(self.r_min > 0.0) {
            return Err(param("r_min", self.r_min, "r_min > 0"));
        }
        if !(self.rho > 0.0) {
            return Err(param("rho", self.rho, "ρ > 0 (short-range perturbation)"));
        }
        match self.warp {
            Warp::Flat => {}
            Warp::Decay { c } => {
                if !(c > -1.0) {
                    return Err(param("warp.c", c, "c > −1 so that w > 0"));
                }
            }
            Warp::Trapping { c, width, .. } => {
                if !(c > -1.0) {
                    return Err(param("warp.c", c, "c > −1 so that w > 0"));
                }
                if !(width > 0.0) {
                    return Err(param("warp.width", width, "width > 0"));
                }
            }
        }
        let Potential { v0, rho_prime } = self.potential;
        if !(v0 >= 0.0) {
            return Err(param("potential.v0", v0, "V ≥ 0"));
        }
        if !(rho_prime >= self.rho) {
            return Err(param("potential.rho_prime", rho_prime, "ρ′ ≥ ρ (V ∈ S^{−2−ρ})"));
        }
        if let Cutoff::Collar { r0, r1 } = self.cutoff {
            if !(r0 > self.r_min) {
                return Err(param("cutoff.r0", r0, "r_min < r₀ (φ vanishes near the core)"));
            }
            if !(r1 > r0) {
                return Err(param("cutoff.r1", r1, "r₀ < r₁"));
            }
        }
        if let AngularSpectrum::Custom(list) = &self.spectrum {
            if list.first().map(|m| m.0) != Some(0.0) {
                return Err(Error::Domain("angular spectrum must start with λ₀ = 0".into()));
            }
            for pair in list.windows(2) {
                if !(pair[1].0 >= pair[0].0) {
                    return Err(Error::Domain("angular spectrum must be sorted ascending".into()));
                }
            }
            if list.iter().any(|m| m.1 == 0 || !(m.0 >= 0.0)) {
                return Err(Error::Domain(
                    "angular eigenvalues must be ≥ 0 with positive multiplicity".into(),
                ));
            }
        }
        Ok(())
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if r >= self.r_min {
            Ok(())
        } else {
            Err(Error::Domain(format!("r = {r} lies below r_min = {}", self.r_min)))
        }
    }

    /// w, w′, w″ at r ≥ r_min.
    pub fn eval_warp(&self, r: f64) -> Result<WarpValue> {
        self.check_domain(r)?;
        Ok(self.warp_at(r))
    }

    /// w, w′, w″ without the domain check; the discretization evaluates at
    /// half-nodes just inside the inner boundary.
    pub fn warp_at(&self, r: f64) -> WarpValue {
        let (a, da, d2a) = match self.warp {
            Warp::Flat => (0.0, 0.0, 0.0),
            Warp::Decay { c } => {
                let rho = self.rho;
                let base = libm::pow(1.0 + r, -rho);
                (c * base, -c * rho * base / (1.0 + r), c * rho * (rho + 1.0) * base / ((1.0 + r) * (1.0 + r)))
            }
            Warp::Trapping { c, center, width } => {
                let s = (r - center) / width;
                let e = c * libm::exp(-s * s);
                (e, -2.0 * s * e / width, (4.0 * s * s - 2.0) * e / (width * width))
            }
        };
        WarpValue { w: r * (1.0 + a), dw: 1.0 + a + r * da, d2w: 2.0 * da + r * d2a }
    }

    pub fn eval_potential(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        Ok(self.potential_at(r))
    }

    pub fn potential_at(&self, r: f64) -> f64 {
        let Potential { v0, rho_prime } = self.potential;
        if v0 == 0.0 {
            0.0
        } else {
            v0 * libm::pow(1.0 + r, -2.0 - rho_prime)
        }
    }

    pub fn eval_cutoff_phi(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        Ok(self.phi_at(r))
    }

    pub fn phi_at(&self, r: f64) -> f64 {
        match self.cutoff {
            Cutoff::Everywhere => 1.0,
            Cutoff::Collar { r0, r1 } => smooth_step((r - r0) / (r1 - r0)),
        }
    }

    /// Angular modes in ascending order of λ.
    pub fn modes(&self) -> Vec<AngularMode> {
        match &self.spectrum {
            AngularSpectrum::Sphere { k_max } => (0..=*k_max)
                .map(|k| AngularMode {
                    index: k,
                    lambda: (k * (k + self.n - 2)) as f64,
                    multiplicity: sphere_multiplicity(self.n, k),
                })
                .collect(),
            AngularSpectrum::Custom(list) => list
                .iter()
                .enumerate()
                .map(|(index, &(lambda, multiplicity))| AngularMode { index, lambda, multiplicity })
                .collect(),
        }
    }

    pub fn is_exact_cone(&self) -> bool {
        let flat = match self.warp {
            Warp::Flat => true,
            Warp::Decay { c } | Warp::Trapping { c, .. } => c == 0.0,
        };
        flat && self.potential.v0 == 0.0
    }

    /// Decay order governing commutator defects: the smaller of ρ (if the
    /// warp is perturbed) and ρ′ (if V ≠ 0). None on the exact cone.
    pub fn effective_decay(&self) -> Option<f64> {
        let warp = match self.warp {
            Warp::Decay { c } if c != 0.0 => Some(self.rho),
            _ => None,
        };
        let pot = (self.potential.v0 != 0.0).then_some(self.potential.rho_prime);
        match (warp, pot) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// w′ > 0 at every sample of [r_min, r_max]: warped products with
    /// increasing warp have no trapped geodesics.
    pub fn is_non_trapping(&self, r_max: f64) -> bool {
        let samples = 4096;
        (0..=samples).all(|i| {
            let r = self.r_min + (r_max - self.r_min) * i as f64 / samples as f64;
            self.warp_at(r).dw > 0.0
        })
    }
}

/// Number of linearly independent spherical harmonics of degree k on S^{n−1}.
pub fn sphere_multiplicity(n: usize, k: usize) -> u64 {
    let binom = |top: usize, bottom: usize| -> u64 {
        if bottom > top {
            return 0;
        }
        let mut acc: u64 = 1;
        for i in 0..bottom {
            acc = acc * (top - i) as u64 / (i as u64 + 1);
        }
        acc
    };
    let d = n - 1;
    if k < 2 {
        return binom(k + d, d);
    }
    binom(k + d, d) - binom(k + d - 2, d)
}

/// C^∞ monotone step: 0 for t ≤ 0, 1 for t ≥ 1, built from e^{−1/t}.
pub fn smooth_step(t: f64) -> f64 {
    let e = |t: f64| if t > 0.0 { libm::exp(-1.0 / t) } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = e(t);
        a / (a + e(1.0 - t))
    }
}

/// Parameters of f = 𝗀(x/ε)^{2s}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    pub t0: f64,
    pub s: f64,
    pub eps: f64,
}

impl WeightFunction {
    pub fn new(t0: f64, s: f64, eps: f64, n: usize) -> Result<Self> {
        if !(t0 > 0.0 && t0 < 0.5) {
            return Err(param("t0", t0, "0 < t₀ < 1/2 (positivity of the model Laplacian)"));
        }
        let s_max = (n as f64 - 2.0) / 2.0;
        if !(s > 0.0 && s < s_max) {
            return Err(param("s", s, "0 < s < (n−2)/2 (sharp Poincaré inequality)"));
        }
        if !(eps > 0.0) {
            return Err(param("eps", eps, "ε > 0"));
        }
        Ok(WeightFunction { t0, s, eps })
    }

    /// χ(0)^{2s}: the value of f on the region x ≥ ε t₀.
    pub fn plateau(&self) -> f64 {
        libm::exp(-2.0 * self.s / self.t0)
    }

    /// lim_{x→0} f/x^{2s} = (𝗀′(0)/ε)^{2s}.
    pub fn small_x_limit(&self) -> f64 {
        let dg0 = libm::exp(-1.0 / self.t0) / (self.t0 * self.t0);
        libm::pow(dg0 / self.eps, 2.0 * self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

/// 𝗀(t) = χ(0) − χ(t) with χ(t) = e^{1/(t−t₀)} for t < t₀ and 0 after,
/// together with its first two t-derivatives. Requires t ≥ 0.
pub fn weight_g(t: f64, t0: f64) -> GValue {
    let chi0 = libm::exp(-1.0 / t0);
    if t >= t0 {
        return GValue { g: chi0, dg: 0.0, d2g: 0.0 };
    }
    let tau = t - t0;
    let chi = libm::exp(1.0 / tau);
    let tau2 = tau * tau;
    GValue { g: chi0 - chi, dg: chi / tau2, d2g: -chi * (1.0 + 2.0 * tau) / (tau2 * tau2) }
}

/// f and its b-derivatives (x∂_x)f, (x∂_x)²f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub f: f64,
    pub xdf: f64,
    pub xdx2f: f64,
}

/// f = 𝗀(x/ε)^{2s} at x = 1/r.
pub fn weight_f(x: f64, weight: &WeightFunction) -> FValue {
    let t = x / weight.eps;
    let GValue { g, dg, d2g } = weight_g(t, weight.t0);
    let two_s = 2.0 * weight.s;
    if g <= 0.0 {
        return FValue { f: 0.0, xdf: 0.0, xdx2f: 0.0 };
    }
    let f = libm::pow(g, two_s);
    let ratio = t * dg / g;
    let xdf = two_s * f * ratio;
    let xdx2f = two_s * f * (ratio + t * t * d2g / g + (two_s - 1.0) * ratio * ratio);
    FValue { f, xdf, xdx2f }
}

/// Values of the model b-Laplacian (−t²∂_t² + (n−3)t∂_t)𝗀^{2s} and of its
/// reduced lower form at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPositivity {
    pub t: f64,
    pub full: f64,
    pub reduced: f64,
}

pub fn model_weight_positivity(n: usize, weight: &WeightFunction, t_grid: &[f64]) -> Result<Vec<ModelPositivity>> {
    let WeightFunction { t0, s, .. } = *weight;
    let nf = n as f64;
    t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t < t0) {
                return Err(Error::Domain(format!("t = {t} outside [0, t₀ = {t0})")));
            }
            let GValue { g, dg, d2g } = weight_g(t, t0);
            if g == 0.0 {
                return Ok(ModelPositivity { t, full: 0.0, reduced: 0.0 });
            }
            let pre = 2.0 * s * libm::pow(g, 2.0 * s - 2.0);
            let full = pre * (-(2.0 * s - 1.0) * t * t * dg * dg + (nf - 3.0) * t * g * dg - t * t * g * d2g);
            let reduced = pre * ((nf - 2.0 * s - 2.0) * t * dg * g - t * t * g * d2g);
            Ok(ModelPositivity { t, full, reduced })
        })
        .collect()
}

/// Outcome of the pointwise positivity checks on a t-grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPositivity {
    pub min_full: f64,
    pub min_reduced: f64,
    /// 𝗀″ < 0 at every sample.
    pub concave: bool,
    /// t𝗀′ ≤ 𝗀 at every sample.
    pub tg_below_g: bool,
}

impl WeightPositivity {
    pub fn holds(&self) -> bool {
        self.min_full >= 0.0 && self.min_reduced >= 0.0 && self.concave && self.tg_below_g
    }
}

pub fn check_weight_positivity(n: usize, weight: &WeightFunction, t_grid: &[f64]) -> Result<WeightPositivity> {
    let values = model_weight_positivity(n, weight, t_grid)?;
    let mut out = WeightPositivity {
        min_full: f64::INFINITY,
        min_reduced: f64::INFINITY,
        concave: true,
        tg_below_g: true,
    };
    for v in &values {
        out.min_full = out.min_full.min(v.full);
        out.min_reduced = out.min_reduced.min(v.reduced);
        let GValue { g, dg, d2g } = weight_g(v.t, weight.t0);
        // near t₀ the factor e^{1/(t−t₀)} underflows and 𝗀″ rounds to −0
        let underflow = libm::exp(1.0 / (v.t - weight.t0)) == 0.0;
        out.concave &= d2g < 0.0 || underflow;
        // relative slack for round-off in the subtraction χ(0) − χ(t)
        out.tg_below_g &= v.t * dg <= g + 4.0 * f64::EPSILON * libm::exp(-1.0 / weight.t0);
    }
    Ok(out)
}

/// Δ_g f at the interior nodes, from the λ = 0 flux stencil applied to the
/// nodal values of f = 𝗀(1/(rε))^{2s} (no Dirichlet truncation: f need not
/// vanish at the ends).
pub fn full_laplacian_on_f(model: &ManifoldModel, weight: &WeightFunction, grid: &RadialGrid) -> Result<Vec<f64>> {
    let r_c = 1.0 / (weight.eps * weight.t0);
    if grid.r_max() < 2.0 * r_c {
        return Err(Error::Resolution(format!(
            "collar x ≤ εt₀ starts at r = {r_c:.3}; grid ends at {:.3}",
            grid.r_max()
        )));
    }
    if grid.h() > r_c / 20.0 {
        return Err(Error::Resolution(format!("spacing {} too coarse for collar scale {r_c:.3}", grid.h())));
    }
    let f: Vec<f64> = grid.nodes().iter().map(|r| weight_f(1.0 / r, weight).f).collect();
    let n1 = model.n as f64 - 1.0;
    let h = grid.h();
    let nodes = grid.nodes();
    let out = (1..nodes.len() - 1)
        .map(|i| {
            let wi = libm::pow(model.warp_at(nodes[i]).w, n1);
            let wp = libm::pow(model.warp_at(nodes[i] + 0.5 * h).w, n1);
            let wm = libm::pow(model.warp_at(nodes[i] - 0.5 * h).w, n1);
            -(wp * (f[i + 1] - f[i]) - wm * (f[i] - f[i - 1])) / (h * h * wi)
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianPositivity {
    pub min_value: f64,
    /// Discretization allowance C·h², C from a Richardson pair (h, h/2).
    pub tol_pos: f64,
}

impl LaplacianPositivity {
    pub fn holds(&self) -> bool {
        self.min_value >= -self.tol_pos
    }
}

/// min Δ_g f on a grid whose spacing resolves the collar, with the
/// discretization allowance estimated from the same grid refined once.
pub fn laplacian_positivity(model: &ManifoldModel, weight: &WeightFunction) -> Result<LaplacianPositivity> {
    let r_c = 1.0 / (weight.eps * weight.t0);
    let r_max = model.r_min.max(r_c) * 4.0;
    let nodes = libm::ceil((r_max - model.r_min) / (r_c / 40.0)) as usize + 1;
    let nodes = nodes.max(64);
    let coarse = RadialGrid::new(model, r_max, nodes)?;
    let fine = RadialGrid::new(model, r_max, 2 * nodes - 1)?;
    let lc = full_laplacian_on_f(model, weight, &coarse)?;
    let lf = full_laplacian_on_f(model, weight, &fine)?;
    // coarse interior node i sits at fine interior node 2i + 1
    let diff = lc
        .iter()
        .enumerate()
        .map(|(i, v)| libm::fabs(v - lf[2 * i + 1]))
        .fold(0.0f64, f64::max);
    let min_value = lc.iter().copied().fold(f64::INFINITY, f64::min);
    // error of the coarse values is (4/3)·diff; the factor 2 is a safety margin
    Ok(LaplacianPositivity { min_value, tol_pos: 2.0 * (4.0 / 3.0) * diff })
}

/// Empirical ε₀: largest ε in [eps_lo, eps_hi] (to relative accuracy 1%)
/// for which Δ_g f ≥ −tol_pos. Returns eps_hi if positivity holds there and
/// None if it already fails at eps_lo.
pub fn epsilon_threshold(model: &ManifoldModel, s: f64, t0: f64, eps_lo: f64, eps_hi: f64) -> Result<Option<f64>> {
    let holds = |eps: f64| -> Result<bool> {
        let weight = WeightFunction::new(t0, s, eps, model.n)?;
        Ok(laplacian_positivity(model, &weight)?.holds())
    };
    if holds(eps_hi)? {
        return Ok(Some(eps_hi));
    }
    if !holds(eps_lo)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (eps_lo, eps_hi);
    while hi / lo > 1.01 {
        let mid = libm::sqrt(lo * hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// sup over the nodes of |(r∂_r)^j fn(r)|·r^{order}, j = 0, 1, 2, where
/// `fun` returns (fn, fn′, fn″).
pub fn check_symbol_decay(fun: impl Fn(f64) -> (f64, f64, f64), order: f64, nodes: &[f64]) -> [f64; 3] {
    let mut sup = [0.0f64; 3];
    for &r in nodes {
        let (f, df, d2f) = fun(r);
        let weight = libm::pow(r, order);
        let derivs = [f, r * df, r * df + r * r * d2f];
        for (s, d) in sup.iter_mut().zip(derivs) {
            *s = s.max(libm::fabs(d) * weight);
        }
    }
    sup
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDecay {
    pub sup: [f64; 3],
    pub sup_extended: [f64; 3],
}

impl SymbolDecay {
    /// Finite and not growing (beyond 10%) when the range is doubled.
    pub fn bounded(&self) -> bool {
        self.sup
            .iter()
            .zip(&self.sup_extended)
            .all(|(a, b)| a.is_finite() && b.is_finite() && *b <= 1.1 * a + 1e-12)
    }
}

pub fn symbol_decay(fun: impl Fn(f64) -> (f64, f64, f64), order: f64, r_min: f64, r_max: f64, samples: usize) -> SymbolDecay {
    let nodes = |hi: f64| -> Vec<f64> {
        (0..samples).map(|i| r_min + (hi - r_min) * i as f64 / (samples - 1) as f64).collect()
    };
    SymbolDecay {
        sup: check_symbol_decay(&fun, order, &nodes(r_max)),
        sup_extended: check_symbol_decay(&fun, order, &nodes(2.0 * r_max)),
    }
}
