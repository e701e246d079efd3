//! Uniform radial grids and the per-mode operators P = Δ_g + V, the
//! generator G = φ·r∂_r of the conjugate operator, and K = (i/2)[P, A].
//!
//! Unknowns live on interior nodes (Dirichlet at both ends). Matrices act
//! on nodal values and are self-adjoint in ⟨u, v⟩_m = Σ m_i u_i v_i with
//! m_i = w(r_i)^{n−1}·h.

use alloc::format;
use alloc::vec::Vec;

use crate::geometry::ManifoldModel;
use crate::linalg::{Banded, SymTridiag, Tridiag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Uniform grid of `n_nodes` nodes on [r_min, r_max] with trapezoid
    /// measure weights.
    pub fn new(model: &ManifoldModel, r_max: f64, n_nodes: usize) -> Result<Self> {
        let r_min = model.r_min;
        if n_nodes < 3 {
            return Err(Error::Resolution(format!("{n_nodes} nodes leave no interior")));
        }
        if !(r_max > r_min) {
            return Err(Error::Domain(format!("r_max = {r_max} must exceed r_min = {r_min}")));
        }
        let h = (r_max - r_min) / (n_nodes - 1) as f64;
        let n1 = model.n as f64 - 1.0;
        let nodes: Vec<f64> = (0..n_nodes).map(|i| r_min + h * i as f64).collect();
        let mut weights: Vec<f64> = nodes.iter().map(|r| libm::pow(model.warp_at(*r).w, n1) * h).collect();
        weights[0] *= 0.5;
        weights[n_nodes - 1] *= 0.5;
        Ok(RadialGrid { r_min, r_max, h, nodes, weights })
    }

    /// Grid for the commutator experiments: the collar must lie inside and
    /// the grid must not be trivially coarse.
    pub fn build(model: &ManifoldModel, r_max: f64, n_nodes: usize) -> Result<Self> {
        if let crate::geometry::Cutoff::Collar { r1, .. } = model.cutoff {
            if !(r_max > r1) {
                return Err(Error::Domain(format!("r_max = {r_max} does not exceed the collar end r₁ = {r1}")));
            }
        }
        if n_nodes < 16 {
            return Err(Error::Resolution(format!("{n_nodes} nodes < 16")));
        }
        RadialGrid::new(model, r_max, n_nodes)
    }

    /// Grid with spacing at most `h`.
    pub fn with_spacing(model: &ManifoldModel, r_max: f64, h: f64) -> Result<Self> {
        let n = libm::ceil((r_max - model.r_min) / h) as usize + 1;
        RadialGrid::build(model, r_max, n)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn h(&self) -> f64 {
        self.h
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
    pub fn interior(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }
    pub fn interior_weights(&self) -> &[f64] {
        &self.weights[1..self.weights.len() - 1]
    }
}

/// Three-point operator on all grid nodes. Row j couples nodes j−1, j, j+1;
/// the boundary rows also reach the ghost nodes −1 and N.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub rows: Tridiag,
    pub ghost_left: f64,
    pub ghost_right: f64,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.rows.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.dim() == 0
    }

    /// Coefficient of row j (0 ≤ j < N) on node c (−1 ≤ c ≤ N).
    pub fn coef(&self, j: usize, c: isize) -> f64 {
        let n = self.len() as isize;
        if c == -1 {
            return if j == 0 { self.ghost_left } else { 0.0 };
        }
        if c == n {
            return if j as isize == n - 1 { self.ghost_right } else { 0.0 };
        }
        self.rows.get(j, c as usize)
    }

    /// Restriction to interior rows and columns (Dirichlet truncation).
    pub fn interior(&self) -> Tridiag {
        let n = self.len();
        Tridiag {
            lower: self.rows.lower[1..n - 2].to_vec(),
            diag: self.rows.diag[1..n - 1].to_vec(),
            upper: self.rows.upper[1..n - 2].to_vec(),
        }
    }
}

/// Flux-form P = −W⁻¹(W u′)′ + λ/w² + V on all nodes.
pub fn assemble_p_stencil(model: &ManifoldModel, grid: &RadialGrid, lambda: f64) -> Result<Stencil> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter { name: "lambda", value: lambda, hypothesis: "λ ≥ 0 (Δ₀ is nonnegative)" });
    }
    let h = grid.h();
    if model.warp_at(grid.r_min() - 0.5 * h).w <= 0.0 || grid.r_min() - 0.5 * h <= 0.0 {
        return Err(Error::Resolution(format!("spacing {h} reaches past r = 0")));
    }
    let n1 = model.n as f64 - 1.0;
    let nodes = grid.nodes();
    let n = nodes.len();
    let flux = |r: f64| libm::pow(model.warp_at(r).w, n1) / (h * h);
    let mut rows = Tridiag::zeros(n);
    let mut ghost_left = 0.0;
    let mut ghost_right = 0.0;
    for (j, &r) in nodes.iter().enumerate() {
        let wv = model.warp_at(r).w;
        let big_w = libm::pow(wv, n1);
        let bp = flux(r + 0.5 * h);
        let bm = flux(r - 0.5 * h);
        rows.diag[j] = (bp + bm) / big_w + lambda / (wv * wv) + model.potential_at(r);
        if j + 1 < n {
            rows.upper[j] = -bp / big_w;
        } else {
            ghost_right = -bp / big_w;
        }
        if j > 0 {
            rows.lower[j - 1] = -bm / big_w;
        } else {
            ghost_left = -bm / big_w;
        }
    }
    Ok(Stencil { rows, ghost_left, ghost_right })
}

/// P on the interior unknowns.
pub fn assemble_p(model: &ManifoldModel, grid: &RadialGrid, lambda: f64) -> Result<Tridiag> {
    Ok(assemble_p_stencil(model, grid, lambda)?.interior())
}

/// Centered-difference generator G = φ·r∂_r on all nodes.
pub fn assemble_g_stencil(model: &ManifoldModel, grid: &RadialGrid) -> Stencil {
    let h = grid.h();
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut rows = Tridiag::zeros(n);
    let c = |r: f64| model.phi_at(r) * r / (2.0 * h);
    for (j, &r) in nodes.iter().enumerate() {
        if j + 1 < n {
            rows.upper[j] = c(r);
        }
        if j > 0 {
            rows.lower[j - 1] = -c(r);
        }
    }
    Stencil { rows, ghost_left: -c(nodes[0]), ghost_right: c(nodes[n - 1]) }
}

pub fn assemble_g(model: &ManifoldModel, grid: &RadialGrid) -> Tridiag {
    assemble_g_stencil(model, grid).interior()
}

/// Centered r∂_r on the interior (no cutoff); used for b-derivative weights.
pub fn radial_derivative(grid: &RadialGrid) -> Tridiag {
    let h = grid.h();
    let r = grid.interior();
    let n = r.len();
    let mut t = Tridiag::zeros(n);
    for (i, ri) in r.iter().enumerate() {
        if i + 1 < n {
            t.upper[i] = ri / (2.0 * h);
        }
        if i > 0 {
            t.lower[i - 1] = -ri / (2.0 * h);
        }
    }
    t
}

/// K = (i/2)[P, A] with A = (i/2)(G* − G), i.e. K = ½(M + M*) with
/// M = ½(PG − GP).
///
/// The products are formed on the grid with one ghost layer and the result
/// is folded back through the odd reflection about each end (u₀ = 0,
/// u₋₁ = −u₁, and likewise on the right). Truncating the matrix product to
/// the interior instead leaves an O(1) boundary defect that destroys the
/// identity K = P on the exact cone; the reflected closure keeps it to
/// second order.
pub fn commutator_k(p: &Stencil, g: &Stencil, m: &[f64]) -> Result<Banded> {
    let n = p.len();
    if g.len() != n {
        return Err(Error::Dimension { expected: n, found: g.len() });
    }
    if m.len() + 2 != n {
        return Err(Error::Dimension { expected: n.saturating_sub(2), found: m.len() });
    }
    let ni = m.len();
    let mut half = Banded::zeros(ni, 2);
    for i in 1..n - 1 {
        let ii = i as isize;
        for c in ii - 2..=ii + 2 {
            let mut pg = 0.0;
            let mut gp = 0.0;
            for j in i - 1..=i + 1 {
                pg += p.coef(i, j as isize) * g.coef(j, c);
                gp += g.coef(i, j as isize) * p.coef(j, c);
            }
            let value = 0.5 * (pg - gp);
            if value == 0.0 {
                continue;
            }
            let (col, sign) = if c == -1 {
                (0, -1.0)
            } else if c == n as isize {
                (ni - 1, -1.0)
            } else if c == 0 || c == n as isize - 1 {
                continue;
            } else {
                (c as usize - 1, 1.0)
            };
            half.add(i - 1, col, sign * value);
        }
    }
    Ok(half.map(|i, j, v| 0.5 * (v + m[j] * half.get(j, i) / m[i])))
}

/// Adjoint in the m-weighted inner product.
pub fn weighted_adjoint_banded(b: &Banded, m: &[f64]) -> Banded {
    b.map(|i, j, _| m[j] * b.get(j, i) / m[i])
}

/// Relative size of B − B* in the m-weighted sense.
pub fn banded_adjoint_residual(b: &Banded, m: &[f64]) -> f64 {
    let adj = weighted_adjoint_banded(b, m);
    let scale = b.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0f64;
    for i in 0..b.dim() {
        for j in b.row_span(i) {
            diff = diff.max(libm::fabs(b.get(i, j) - adj.get(i, j)));
        }
    }
    diff / scale
}

/// Tolerance for accepting an operator as m-self-adjoint.
const SELF_ADJOINT_TOL: f64 = 1e-12;

/// S = D^{1/2} T D^{−1/2} with D = diag(m), for T self-adjoint in ⟨·,·⟩_m.
pub fn symmetrize(t: &Tridiag, m: &[f64]) -> Result<SymTridiag> {
    if m.len() != t.dim() {
        return Err(Error::Dimension { expected: t.dim(), found: m.len() });
    }
    let residual = t.adjoint_residual(m);
    if residual > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint(residual));
    }
    let off = t
        .upper
        .iter()
        .zip(&t.lower)
        .map(|(u, l)| {
            let mag = libm::sqrt(u * l);
            if *u < 0.0 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    SymTridiag::new(t.diag.clone(), off)
}

/// D^{1/2} T D^{−1/2} for an arbitrary tridiagonal T.
pub fn to_symmetric_coords(t: &Tridiag, m: &[f64]) -> Tridiag {
    let n = t.dim();
    let mut out = t.clone();
    for i in 0..n.saturating_sub(1) {
        let ratio = libm::sqrt(m[i] / m[i + 1]);
        out.upper[i] = t.upper[i] * ratio;
        out.lower[i] = t.lower[i] / ratio;
    }
    out
}

/// D^{1/2} B D^{−1/2}, symmetrized exactly (B must be m-self-adjoint).
pub fn symmetrize_banded(b: &Banded, m: &[f64]) -> Banded {
    let s = b.map(|i, j, v| v * libm::sqrt(m[i] / m[j]));
    s.map(|i, j, v| 0.5 * (v + s.get(j, i)))
}

/// Residuals of P − P*, A − A*, K − K* in the weighted inner product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointResiduals {
    pub p: f64,
    pub a: f64,
    pub k: f64,
}

/// All operators of one angular mode on the interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    pub p: Tridiag,
    pub g: Tridiag,
    pub k: Banded,
}

impl ModeOperator {
    pub fn assemble(model: &ManifoldModel, grid: &RadialGrid, lambda: f64) -> Result<Self> {
        let p_st = assemble_p_stencil(model, grid, lambda)?;
        let g_st = assemble_g_stencil(model, grid);
        let weights = grid.interior_weights().to_vec();
        let k = commutator_k(&p_st, &g_st, &weights)?;
        Ok(ModeOperator {
            lambda,
            radii: grid.interior().to_vec(),
            weights,
            p: p_st.interior(),
            g: g_st.interior(),
            k,
        })
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    /// Real part of A/i: A = i·A_r with A_r = ½(G* − G).
    pub fn a_real(&self) -> Tridiag {
        let adj = self.g.weighted_adjoint(&self.weights);
        let n = self.dim();
        let mut a = Tridiag::zeros(n);
        for i in 0..n {
            a.diag[i] = 0.5 * (adj.diag[i] - self.g.diag[i]);
        }
        for i in 0..n.saturating_sub(1) {
            a.upper[i] = 0.5 * (adj.upper[i] - self.g.upper[i]);
            a.lower[i] = 0.5 * (adj.lower[i] - self.g.lower[i]);
        }
        a
    }

    pub fn p_symmetric(&self) -> Result<SymTridiag> {
        symmetrize(&self.p, &self.weights)
    }

    pub fn k_symmetric(&self) -> Banded {
        symmetrize_banded(&self.k, &self.weights)
    }

    /// A_r in symmetric coordinates (an antisymmetric matrix).
    pub fn a_symmetric(&self) -> Tridiag {
        let a = to_symmetric_coords(&self.a_real(), &self.weights);
        let n = a.dim();
        let mut out = a.clone();
        for i in 0..n.saturating_sub(1) {
            let v = 0.5 * (a.upper[i] - a.lower[i]);
            out.upper[i] = v;
            out.lower[i] = -v;
        }
        out
    }

    pub fn residuals(&self) -> AdjointResiduals {
        let a = self.a_real();
        // A = iA_r is self-adjoint iff A_r is m-antisymmetric
        let adj = a.weighted_adjoint(&self.weights);
        let scale = a.upper.iter().chain(&a.lower).fold(0.0f64, |s, v| s.max(libm::fabs(*v)));
        let a_res = if scale == 0.0 {
            0.0
        } else {
            a.upper
                .iter()
                .zip(&adj.upper)
                .chain(a.lower.iter().zip(&adj.lower))
                .chain(a.diag.iter().zip(&adj.diag))
                .fold(0.0f64, |s, (x, y)| s.max(libm::fabs(x + y)))
                / scale
        };
        AdjointResiduals {
            p: self.p.adjoint_residual(&self.weights),
            a: a_res,
            k: banded_adjoint_residual(&self.k, &self.weights),
        }
    }
}

/// c·x^γ·(r∂_r)^j with x = r_min/r: the sampled generators of the weighted
/// b-operator classes x^γ Diff_b^j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedB {
    pub coefficient: f64,
    pub weight: f64,
    pub derivatives: usize,
}

impl WeightedB {
    pub fn new(weight: f64, derivatives: usize) -> Self {
        WeightedB { coefficient: 1.0, weight, derivatives }
    }

    /// The zero operator of the same class.
    pub fn zero(self) -> Self {
        WeightedB { coefficient: 0.0, ..self }
    }

    /// Acts on nodal values; `rd` is [`radial_derivative`] of the grid.
    pub fn apply(&self, radii: &[f64], r_min: f64, rd: &Tridiag, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        for _ in 0..self.derivatives {
            v = rd.apply(&v);
        }
        for (x, r) in v.iter_mut().zip(radii) {
            *x *= self.coefficient * libm::pow(r_min / r, self.weight);
        }
        v
    }

    /// Acts on symmetric coordinates with weights m.
    pub fn apply_symmetric(&self, radii: &[f64], r_min: f64, rd: &Tridiag, m: &[f64], s: &[f64]) -> Vec<f64> {
        let u = from_symmetric_vector(s, m);
        to_symmetric_vector(&self.apply(radii, r_min, rd, &u), m)
    }

    /// Transpose of [`WeightedB::apply_symmetric`], i.e. the m-adjoint in
    /// symmetric coordinates.
    pub fn apply_symmetric_transpose(&self, radii: &[f64], r_min: f64, rd: &Tridiag, m: &[f64], s: &[f64]) -> Vec<f64> {
        let rd_t = Tridiag { lower: rd.upper.clone(), diag: rd.diag.clone(), upper: rd.lower.clone() };
        let mut v: Vec<f64> = s
            .iter()
            .zip(m)
            .zip(radii)
            .map(|((x, w), r)| x * libm::sqrt(*w) * self.coefficient * libm::pow(r_min / r, self.weight))
            .collect();
        for _ in 0..self.derivatives {
            v = rd_t.apply(&v);
        }
        v.iter().zip(m).map(|(x, w)| x / libm::sqrt(*w)).collect()
    }
}

/// Multiplication by f(r_i) on interior nodes as a vector of values.
pub fn multiplier(grid_radii: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid_radii.iter().map(|r| f(*r)).collect()
}

/// Nodal vector u ↦ m^{1/2}u (symmetric coordinates).
pub fn to_symmetric_vector(u: &[f64], m: &[f64]) -> Vec<f64> {
    u.iter().zip(m).map(|(x, w)| x * libm::sqrt(*w)).collect()
}

/// Symmetric coordinates back to nodal values.
pub fn from_symmetric_vector(s: &[f64], m: &[f64]) -> Vec<f64> {
    s.iter().zip(m).map(|(x, w)| x / libm::sqrt(*w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cutoff, ManifoldModel};
    use crate::linalg::dot;
    use alloc::vec;
    use core::f64::consts::PI;

    fn cone3() -> ManifoldModel {
        ManifoldModel::cone(3)
    }

    #[test]
    fn grid_layout_and_weights() {
        let g = RadialGrid::new(&cone3(), 2.0, 3).unwrap();
        assert_eq!(g.nodes(), &[1.0, 1.5, 2.0]);
        assert_eq!(g.h(), 0.5);
        // w = r, n = 3: m = r²h with halved ends
        assert_eq!(g.weights(), &[0.25, 1.125, 1.0]);
        assert!(RadialGrid::build(&cone3(), 3.0, 64).is_err());
        assert!(RadialGrid::build(&cone3(), 10.0, 8).is_err());
    }

    #[test]
    fn flat_cone_radial_eigenvalues_converge_at_second_order() {
        let model = cone3();
        let err = |nodes: usize| {
            let grid = RadialGrid::new(&model, 11.0, nodes).unwrap();
            let s = symmetrize(&assemble_p(&model, &grid, 0.0).unwrap(), grid.interior_weights()).unwrap();
            let vals = s.eigenvalues().unwrap();
            (0..5)
                .map(|j| {
                    let exact = ((j + 1) as f64 * PI / 10.0).powi(2);
                    (vals[j] - exact).abs() / exact
                })
                .fold(0.0f64, f64::max)
        };
        let coarse = err(201);
        let fine = err(401);
        assert!(fine < 2e-4, "{coarse} {fine}");
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn operators_are_self_adjoint_to_rounding() {
        let model = ManifoldModel::perturbed(3, 0.2, 1.0, 0.5, 1.0);
        let grid = RadialGrid::new(&model, 30.0, 300).unwrap();
        for lambda in [0.0, 2.0, 30.0] {
            let op = ModeOperator::assemble(&model, &grid, lambda).unwrap();
            let res = op.residuals();
            assert!(res.p < 4.0 * f64::EPSILON, "{res:?}");
            assert!(res.a < 4.0 * f64::EPSILON, "{res:?}");
            assert!(res.k < 4.0 * f64::EPSILON, "{res:?}");
        }
    }

    #[test]
    fn generator_kills_constants_and_vanishes_before_collar() {
        let model = cone3();
        let grid = RadialGrid::new(&model, 10.0, 91).unwrap();
        let g = assemble_g(&model, &grid);
        let gu = g.apply(&vec![1.0; g.dim()]);
        assert!(gu[1..gu.len() - 1].iter().all(|v| v.abs() < 1e-12));
        for (i, r) in grid.interior().iter().enumerate() {
            if *r <= 2.0 {
                assert_eq!(g.diag[i], 0.0);
                assert!(i == 0 || g.lower[i - 1] == 0.0);
                assert!(i + 1 == g.dim() || g.upper[i] == 0.0);
            }
        }
    }

    #[test]
    fn commutator_with_scalar_vanishes() {
        let model = cone3();
        let grid = RadialGrid::new(&model, 10.0, 40).unwrap();
        let n = grid.len();
        let p = Stencil { rows: Tridiag::new(vec![0.0; n - 1], vec![3.5; n], vec![0.0; n - 1]).unwrap(), ghost_left: 0.0, ghost_right: 0.0 };
        let g = assemble_g_stencil(&model, &grid);
        let k = commutator_k(&p, &g, grid.interior_weights()).unwrap();
        assert_eq!(k.max_abs(), 0.0);
        assert!(commutator_k(&p, &g, &grid.interior_weights()[1..]).is_err());
    }

    /// ‖Π(K − P)Π‖ / ‖ΠPΠ‖ on the exact cone with φ ≡ 1.
    fn cone_defect(nodes: usize, lambda: f64) -> f64 {
        let model = cone3().with_cutoff(Cutoff::Everywhere);
        let grid = RadialGrid::new(&model, 40.0, nodes).unwrap();
        let op = ModeOperator::assemble(&model, &grid, lambda).unwrap();
        let s = op.p_symmetric().unwrap();
        let ks = op.k_symmetric();
        let win = s.window(0.05, 0.2).unwrap();
        let mut worst = 0.0f64;
        for a in 0..win.len() {
            let kv = ks.apply(win.vector(a));
            for b in 0..win.len() {
                let target = if a == b { win.values[a] } else { 0.0 };
                worst = worst.max((dot(win.vector(b), &kv) - target).abs());
            }
        }
        worst / win.values.last().unwrap()
    }

    #[test]
    fn commutator_reproduces_p_on_exact_cone() {
        for lambda in [0.0, 6.0] {
            let coarse = cone_defect(1025, lambda);
            let fine = cone_defect(2049, lambda);
            let ratio = coarse / fine;
            assert!(fine < 1e-3, "λ={lambda}: {fine}");
            assert!((3.5..4.5).contains(&ratio), "λ={lambda}: ratio {ratio}");
        }
    }

    #[test]
    fn minimum_eigenvalue_grows_with_angular_mode() {
        let model = ManifoldModel::perturbed(3, 0.2, 1.0, 0.5, 1.0);
        let grid = RadialGrid::new(&model, 20.0, 200).unwrap();
        let mins: Vec<f64> = model
            .modes()
            .iter()
            .take(6)
            .map(|m| symmetrize(&assemble_p(&model, &grid, m.lambda).unwrap(), grid.interior_weights()).unwrap().min_eigenvalue())
            .collect();
        assert!(mins[0] > 0.0);
        assert!(mins.windows(2).all(|w| w[0] <= w[1]));
    }
}
