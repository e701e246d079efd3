use alloc::vec;
use alloc::vec::Vec;

use super::{dot, hypot, TridiagLu};
use crate::{Error, Result};

/// Iteration cap per eigenvalue in the QL sweep.
const QL_MAX_ITER: usize = 30;

/// Eigenpairs stored with each eigenvector contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    dim: usize,
}

impl Eigen {
    pub(crate) fn from_parts(values: Vec<f64>, vectors: Vec<f64>, dim: usize) -> Self {
        debug_assert_eq!(values.len() * dim, vectors.len());
        Eigen { values, vectors, dim }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Length of each eigenvector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim.max(1)).take(self.values.len())
    }

    /// Largest |⟨e_i, e_j⟩ − δ_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(dot(self.vector(i), self.vector(j)) - target));
            }
        }
        worst
    }
}

/// General real tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let off = diag.len().saturating_sub(1);
        for len in [lower.len(), upper.len()] {
            if len != off {
                return Err(Error::Dimension { expected: off, found: len });
            }
        }
        Ok(Tridiag { lower, diag, upper })
    }

    pub fn zeros(n: usize) -> Self {
        Tridiag {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[j]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.mul_vec(x, &mut y);
        y
    }

    /// Adjoint in ⟨u, v⟩_m = Σ m_i u_i v_i: (T*)_ij = m_j T_ji / m_i.
    pub fn weighted_adjoint(&self, m: &[f64]) -> Tridiag {
        let n = self.dim();
        let mut out = Tridiag::zeros(n);
        out.diag.copy_from_slice(&self.diag);
        for i in 0..n.saturating_sub(1) {
            out.upper[i] = m[i + 1] * self.lower[i] / m[i];
            out.lower[i] = m[i] * self.upper[i] / m[i + 1];
        }
        out
    }

    /// max |T − T*|_ij relative to max |T|_ij in the m-weighted sense.
    pub fn adjoint_residual(&self, m: &[f64]) -> f64 {
        let adj = self.weighted_adjoint(m);
        let scale = self
            .diag
            .iter()
            .chain(&self.upper)
            .chain(&self.lower)
            .fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
        if scale == 0.0 {
            return 0.0;
        }
        let diff = self
            .upper
            .iter()
            .zip(&adj.upper)
            .chain(self.lower.iter().zip(&adj.lower))
            .fold(0.0f64, |a, (x, y)| a.max(libm::fabs(x - y)));
        diff / scale
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let expected = diag.len().saturating_sub(1);
        if off.len() != expected {
            return Err(Error::Dimension { expected, found: off.len() });
        }
        Ok(SymTridiag { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.mul_vec(x, &mut y);
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += libm::fabs(self.off[i - 1]);
            }
            if i + 1 < n {
                radius += libm::fabs(self.off[i]);
            }
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        (lo, hi)
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off.iter().fold(1.0f64, |a, e| a.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / q };
            q = self.diag[i] - x - coupling;
            if libm::fabs(q) <= pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (0-based) by bisection.
    pub fn kth_eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pivmin = self.pivmin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 2.0 * f64::EPSILON * (libm::fabs(lo) + libm::fabs(hi)) + pivmin
                || mid <= lo
                || mid >= hi
            {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.kth_eigenvalue(0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.kth_eigenvalue(self.dim() - 1)
    }

    /// Eigenvalues in [lo, hi), ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let first = self.count_below(lo);
        let last = self.count_below(hi);
        (first..last).map(|k| self.kth_eigenvalue(k)).collect()
    }

    /// Eigenvector for an accurate eigenvalue estimate `mu`, orthogonalized
    /// against `previous` (which should hold the already computed members of
    /// its cluster).
    pub fn inverse_iteration(&self, mu: f64, previous: &[&[f64]]) -> Result<Vec<f64>> {
        let n = self.dim();
        let (glo, ghi) = self.gershgorin();
        let scale = libm::fabs(glo).max(libm::fabs(ghi)).max(f64::MIN_POSITIVE);
        let shifted: Vec<f64> = self.diag.iter().map(|d| d - mu).collect();
        let lu = TridiagLu::factor(&self.off, &shifted, &self.off, f64::EPSILON * scale)?;
        // Deterministic start vector with no special symmetry.
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * libm::sin(1.618_033_988_75 * (i as f64 + 1.0)))
            .collect();
        for _ in 0..3 {
            lu.solve(&mut x);
            for p in previous {
                let c = dot(p, &x);
                for (xi, pi) in x.iter_mut().zip(p.iter()) {
                    *xi -= c * pi;
                }
            }
            let nrm = libm::sqrt(dot(&x, &x));
            if !(nrm.is_finite() && nrm > 0.0) {
                return Err(Error::NonConvergence { index: 0, iterations: 3 });
            }
            for xi in x.iter_mut() {
                *xi /= nrm;
            }
        }
        Ok(x)
    }

    /// Eigenpairs with eigenvalue in [lo, hi) by bisection and inverse
    /// iteration; cost is linear in the dimension per eigenpair.
    pub fn window(&self, lo: f64, hi: f64) -> Result<Eigen> {
        let values = self.eigenvalues_in(lo, hi);
        let n = self.dim();
        let mut vectors: Vec<f64> = Vec::with_capacity(values.len() * n);
        for (j, &mu) in values.iter().enumerate() {
            let previous: Vec<&[f64]> = vectors.chunks_exact(n).take(j).collect();
            let v = self.inverse_iteration(mu, &previous)?;
            vectors.extend_from_slice(&v);
        }
        Ok(Eigen::from_parts(values, vectors, n))
    }

    /// All eigenvalues (ascending), no vectors.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        e[1..n].copy_from_slice(&self.off);
        tql2(&mut d, &mut e, None)?;
        Ok(d)
    }

    /// Full eigendecomposition by implicit-shift QL.
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        if n > 1 {
            e[1..n].copy_from_slice(&self.off);
        }
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        tql2(&mut d, &mut e, Some(&mut z))?;
        Ok(Eigen::from_parts(d, z, n))
    }
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix
/// (diagonal `d`, subdiagonal `e[1..]`), after the EISPACK routine tql2.
/// `z` holds the accumulated transformation with one vector per row of
/// length n; on exit row j is the eigenvector of `d[j]`. Values are sorted
/// ascending.
pub(crate) fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n - 1 {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::NonConvergence { index: l, iterations: QL_MAX_ITER });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (head, tail) = z.split_at_mut((i + 1) * n);
                        let zi = &mut head[i * n..];
                        let zi1 = &mut tail[..n];
                        for k in 0..n {
                            let t = zi1[k];
                            zi1[k] = s * zi[k] + c * t;
                            zi[k] = c * zi[k] - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(z) = z.as_deref_mut() {
                for c in 0..n {
                    z.swap(i * n + c, k * n + c);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let t = SymTridiag::new(vec![3.0, 1.0, 2.0], vec![0.0, 0.0]).unwrap();
        let eig = t.eigen().unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        assert!(eig.orthonormality_defect() < 1e-15);
    }

    #[test]
    fn second_difference_matches_closed_form() {
        let n = 50;
        let eig = laplacian(n).eigen().unwrap();
        for (j, mu) in eig.values.iter().enumerate() {
            let theta = (j + 1) as f64 * core::f64::consts::PI / (2.0 * (n + 1) as f64);
            let exact = 4.0 * libm::sin(theta) * libm::sin(theta);
            assert!((mu - exact).abs() < 1e-13, "{j}: {mu} vs {exact}");
        }
        for j in 0..n {
            let v = eig.vector(j);
            let r = laplacian(n).apply(v);
            let res: f64 = r.iter().zip(v).map(|(a, b)| (a - eig.values[j] * b).powi(2)).sum();
            assert!(res.sqrt() < 1e-13);
        }
    }

    #[test]
    fn sturm_count_brackets_eigenvalues() {
        let t = laplacian(20);
        let vals = t.eigenvalues().unwrap();
        for (k, mu) in vals.iter().enumerate() {
            assert_eq!(t.count_below(mu - 1e-9), k);
            assert_eq!(t.count_below(mu + 1e-9), k + 1);
            assert!((t.kth_eigenvalue(k) - mu).abs() < 1e-14);
        }
    }

    #[test]
    fn window_pairs_match_full_decomposition() {
        let t = laplacian(200);
        let full = t.eigen().unwrap();
        let win = t.window(0.5, 1.0).unwrap();
        assert!(!win.is_empty());
        assert!(win.orthonormality_defect() < 1e-12);
        let first = t.count_below(0.5);
        for j in 0..win.len() {
            assert!((win.values[j] - full.values[first + j]).abs() < 1e-13);
            let overlap = dot(win.vector(j), full.vector(first + j)).abs();
            assert!((overlap - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn weighted_adjoint_round_trips() {
        let t = Tridiag::new(vec![1.0, 2.0], vec![3.0, 4.0, 5.0], vec![6.0, 7.0]).unwrap();
        let m = [1.0, 2.0, 4.0];
        let back = t.weighted_adjoint(&m).weighted_adjoint(&m);
        for (a, b) in back.upper.iter().zip(&t.upper) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(t.adjoint_residual(&m) > 0.1);
    }
}
