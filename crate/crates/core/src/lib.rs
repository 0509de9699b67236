//! Divergence-free beam transforms on the ball.
//!
//! The crate builds an orthonormal basis of toroidal, divergence-free vector
//! fields on the ball `|x| ≤ R` from spherical Bessel radial profiles and
//! surface gradients of spherical harmonics, then layers on top of it:
//!
//! * [`transform`]: quadrature on the ball, forward and inverse transforms,
//!   Parseval and completeness diagnostics;
//! * [`wigner`] and [`cohomology`]: angular-momentum coupling coefficients and
//!   the Wigner-weighted quadratic coboundary on coefficient vectors;
//! * [`dynamics`]: the Galerkin Navier–Stokes modal system and its
//!   integrators;
//! * [`entropy`]: modal spectra, maximum-entropy profiles and decay fits.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cohomology;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod io;
pub mod special_fn;
pub mod transform;
pub mod wigner;

mod fd;
mod vec3;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use vec3::CVec3;
