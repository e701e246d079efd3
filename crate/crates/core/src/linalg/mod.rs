//! Small, dependency-free linear algebra tailored to banded radial operators.

mod banded;
mod dense;
mod lu;
mod tridiag;

pub use banded::Banded;
pub use dense::Mat;
pub use lu::{Scalar, TridiagLu};
pub use tridiag::{Eigen, SymTridiag, Tridiag};

use num_complex::Complex64;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Hermitian inner product, conjugate-linear in the first slot.
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn cnorm(a: &[Complex64]) -> f64 {
    libm::sqrt(a.iter().map(|z| z.norm_sqr()).sum())
}

pub(crate) fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}
