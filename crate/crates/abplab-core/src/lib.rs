//! Verification core for homogeneous polynomial operators on symmetric
//! matrices and the discrete potential theory built on top of them.
//!
//! The crate is organized around five layers:
//!
//! - [`symmat`]: symmetric-matrix arithmetic, Jacobi spectra, deterministic
//!   PSD and orthogonal samplers.
//! - [`operators`]: the operator catalog (determinant, elementary symmetric
//!   functions of the spectrum, p-fold eigenvalue-sum products, products,
//!   radial derivatives, the non-hyperbolic `‖A‖² det A` model), Gårding
//!   I-eigenvalues, cone membership, and the structural checks
//!   (I-centrality, Dirichlet cones, degenerate ellipticity, tameness).
//! - [`majorization`]: determinant-majorization gap sweeps, the Maclaurin
//!   chain, and the orthogonal-conjugation coefficient condition.
//! - [`potential`]: grid functions, sup-convolution, contact sets via lifted
//!   convex hulls, and discrete Alexandrov estimates.
//! - [`abp`]: inhomogeneous-equation fibers, admissibility classification,
//!   the semiconvex approximation pipeline, oscillation bounds, and a
//!   monotone wide-stencil Monge–Ampère grid solver.
//!
//! Everything is `no_std` + `alloc`; all randomness flows through the
//! counter-based generator in [`rng`], so every result is a pure function of
//! the inputs and seeds.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod abp;
pub mod error;
pub mod majorization;
mod math;
pub mod operators;
pub mod poly;
pub mod potential;
pub mod report;
pub mod rng;
pub mod symmat;

pub use error::{Error, Result};
