//! Numerical laboratory for the completeness of Gaussian translates.
//!
//! The translates `e^{-π(t-λ)²}`, `λ ∈ Λ`, span `L²(ℝ)` exactly when `Λ` is a
//! uniqueness set for the Fock space, and the answer is governed by the
//! order-2 density of the two halves of `Λ` with critical value `1/2`.
//! This crate makes the objects behind that statement computable:
//!
//! * [`numerics`]: Gauss–Legendre quadrature on the line and the disc,
//!   spectral-cutoff solves, compensated log-magnitude sums.
//! * [`lambda_sets`]: discrete sets, counting functions, densities, `S(ε)`,
//!   and the rotated set `Γ = Λ ∪ iΛ`.
//! * [`gaussian`]: closed-form Gaussian algebra and Fourier-envelope fits.
//! * [`bargmann`]: the Bargmann transform, truncated Fock norms, growth bounds.
//! * [`products`]: quartic and genus-2 canonical products, indicator estimates
//!   and the Fock-membership probe.
//! * [`lab`]: Gram systems, residual curves and the density phase table.
//! * [`cli`]: the `span-lab` batch runner.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bargmann;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod lab;
pub mod lambda_sets;
pub mod numerics;
pub mod products;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("span-lab ", env!("CARGO_PKG_VERSION"));
