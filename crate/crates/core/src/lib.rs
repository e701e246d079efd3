//! Numerical core for verifying low-energy estimates on asymptotically conic
//! manifolds: radial discretization of Δ_g + V per angular mode, the
//! conjugate operator and its commutator, spectral calculus, and the
//! inequality, Mourre and wave-decay experiments built on them.
//!
//! The crate is `no_std` (it needs `alloc`); transcendental functions come
//! from `libm` so results do not depend on the platform's C library.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod discretize;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod inequalities;
pub mod linalg;
pub mod mourre;
pub mod quadrature;
pub mod spectral;
pub mod wave;

pub use error::{Error, Result};
