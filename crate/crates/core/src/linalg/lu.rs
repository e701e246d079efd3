use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Field operations needed by the tridiagonal factorization.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        libm::fabs(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// LU factorization of a general tridiagonal matrix with partial pivoting
/// (the LAPACK `gttrf` scheme: U gains a second superdiagonal).
#[derive(Debug, Clone)]
pub struct TridiagLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TridiagLu<T> {
    /// Factors the matrix with subdiagonal `lower`, diagonal `diag` and
    /// superdiagonal `upper`. Exact zero pivots are replaced by `pivot_floor`
    /// when it is positive (inverse iteration) and rejected otherwise.
    pub fn factor(lower: &[T], diag: &[T], upper: &[T], pivot_floor: f64) -> Result<Self> {
        let n = diag.len();
        if lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
            return Err(Error::Dimension {
                expected: n.saturating_sub(1),
                found: lower.len().min(upper.len()),
            });
        }
        let mut dl = lower.to_vec();
        let mut d = diag.to_vec();
        let mut du = upper.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n.saturating_sub(1) {
            if d[i].modulus() >= dl[i].modulus() {
                if d[i].modulus() > 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] = d[i + 1] - fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        for p in d.iter_mut() {
            if p.modulus() == 0.0 {
                if pivot_floor > 0.0 {
                    *p = T::from_real(pivot_floor);
                } else {
                    return Err(Error::Singular { distance: 0.0 });
                }
            }
        }
        Ok(TridiagLu { dl, d, du, du2, swapped })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [T]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        if n == 0 {
            return;
        }
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // [[0, 1, 0], [1, 0, 1], [0, 1, 1]]
        let lu = TridiagLu::factor(&[1.0, 1.0], &[0.0, 0.0, 1.0], &[1.0, 1.0], 0.0).unwrap();
        let mut b = [1.0, 2.0, 3.0];
        lu.solve(&mut b);
        let x = b;
        let ax = [x[1], x[0] + x[2], x[1] + x[2]];
        for (a, e) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_shifted_solve() {
        let n = 30;
        let z = Complex64::new(0.3, 1.0);
        let diag: Vec<Complex64> = (0..n).map(|_| Complex64::from_real(2.0) - z).collect();
        let off = vec![Complex64::from_real(-1.0); n - 1];
        let lu = TridiagLu::factor(&off, &diag, &off, 0.0).unwrap();
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut x = rhs.clone();
        lu.solve(&mut x);
        for i in 0..n {
            let mut ax = diag[i] * x[i];
            if i > 0 {
                ax += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                ax += off[i] * x[i + 1];
            }
            assert!((ax - rhs[i]).norm() < 1e-12);
        }
    }
}
