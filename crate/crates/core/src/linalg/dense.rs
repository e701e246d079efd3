use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use super::tridiag::tql2;
use super::Eigen;
use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns<'a>(rows: usize, columns: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let cols: Vec<&[f64]> = columns.into_iter().collect();
        Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dimension { expected: self.cols, found: other.rows });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| super::dot(self.row(i), x)).collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)))
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// (A + Aᵀ)/2, exact symmetrization of a nearly symmetric matrix.
    pub fn symmetric_part(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Eigendecomposition of a symmetric matrix (Householder reduction
    /// followed by implicit QL). Only the lower triangle is read.
    pub fn sym_eigen(&self) -> Result<Eigen> {
        if self.rows != self.cols {
            return Err(Error::Dimension { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Eigen::from_parts(Vec::new(), Vec::new(), 0));
        }
        let mut v = Mat::from_fn(n, n, |i, j| if j <= i { self[(i, j)] } else { self[(j, i)] });
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tred2(&mut v, &mut d, &mut e);
        let mut z = v.transpose().data;
        tql2(&mut d, &mut e, Some(&mut z))?;
        Ok(Eigen::from_parts(d, z, n))
    }

    /// Spectral norm, via the largest eigenvalue of the smaller Gram matrix.
    pub fn norm2(&self) -> Result<f64> {
        let gram = if self.rows <= self.cols {
            self.matmul(&self.transpose())?
        } else {
            self.transpose().matmul(self)?
        };
        if gram.rows == 0 {
            return Ok(0.0);
        }
        let top = gram.sym_eigen()?.values.last().copied().unwrap_or(0.0);
        Ok(libm::sqrt(top.max(0.0)))
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Mat> {
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut diag = self[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) {
                return Err(Error::Domain(alloc::format!(
                    "matrix is not positive definite (pivot {diag:e} at {j})"
                )));
            }
            let ljj = libm::sqrt(diag);
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }

    /// Eigenvalues κ of A v = κ B v for symmetric A and positive definite B
    /// (reduction through the Cholesky factor of B).
    pub fn generalized_eigenvalues(&self, b: &Mat) -> Result<Vec<f64>> {
        if self.rows != b.rows || self.cols != b.cols {
            return Err(Error::Dimension { expected: b.rows, found: self.rows });
        }
        let l = b.cholesky()?;
        let x = l.solve_lower(&self.symmetric_part());
        let c = l.solve_lower(&x.transpose());
        Ok(c.symmetric_part().sym_eigen()?.values)
    }

    /// Solves L X = B for lower-triangular L (self), column by column.
    pub fn solve_lower(&self, b: &Mat) -> Mat {
        let n = self.rows;
        let mut x = b.clone();
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self[(i, i)];
            }
        }
        x
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form, after
/// the EISPACK routine tred2. On exit `v` holds the orthogonal
/// transformation, `d` the diagonal and `e[1..]` the subdiagonal.
fn tred2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += libm::fabs(*dk);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_eigen_reconstructs_matrix() {
        let a = Mat::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 });
        let eig = a.sym_eigen().unwrap();
        assert!(eig.orthonormality_defect() < 1e-13);
        let v = Mat::from_columns(6, eig.vectors());
        let back = v.matmul(&Mat::diagonal(&eig.values)).unwrap().matmul(&v.transpose()).unwrap();
        assert!(back.sub(&a).max_abs() < 1e-13);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn cholesky_factor_and_solve() {
        let a = Mat::from_fn(4, 4, |i, j| if i == j { 4.0 } else { 1.0 });
        let l = a.cholesky().unwrap();
        assert!(l.matmul(&l.transpose()).unwrap().sub(&a).max_abs() < 1e-14);
        let x = l.solve_lower(&Mat::identity(4));
        assert!(l.matmul(&x).unwrap().sub(&Mat::identity(4)).max_abs() < 1e-14);
        assert!(Mat::diagonal(&[1.0, -1.0]).cholesky().is_err());
    }

    #[test]
    fn spectral_norm_of_rank_one() {
        let a = Mat::from_fn(3, 2, |i, j| (i + 1) as f64 * (j + 1) as f64);
        // ‖u vᵀ‖ = |u||v| with u = (1,2,3), v = (1,2)
        let expected = libm::sqrt(14.0) * libm::sqrt(5.0);
        assert!((a.norm2().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn generalized_eigenvalues_of_diagonal_pencil() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [2.0, 6.0][i] } else { 0.0 });
        let b = Mat::diagonal(&[1.0, 2.0]);
        let k = a.generalized_eigenvalues(&b).unwrap();
        assert!((k[0] - 2.0).abs() < 1e-14 && (k[1] - 3.0).abs() < 1e-14);
    }
}
