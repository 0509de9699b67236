//! Scalar special functions underneath the beam basis: spherical Bessel
//! functions of the first kind and their zeros, orthonormal spherical
//! harmonics (Condon–Shortley phase) and their surface gradients.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod harmonics;

pub(crate) use bessel::sph_jn;
pub use bessel::{spherical_bessel_j, spherical_bessel_j_derivative, spherical_bessel_zeros, MAX_BESSEL_ORDER};
pub use harmonics::{spherical_harmonic, surface_gradient_y, HarmonicTable};

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// A point in spherical coordinates `(r, θ, φ)`.
///
/// Construction clamps `θ` to `[0, π]` and wraps `φ` into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    r: f64,
    theta: f64,
    phi: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        let r = r.max(0.0);
        let theta = theta.clamp(0.0, PI);
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self { r, theta, phi }
    }

    pub fn from_cartesian(p: [f64; 3]) -> Self {
        let [x, y, z] = p;
        let rho = x.hypot(y);
        let r = rho.hypot(z);
        let theta = if r == 0.0 { 0.0 } else { rho.atan2(z) };
        let phi = y.atan2(x);
        Self::new(r, theta, phi)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

/// Tangential vector on the sphere, stored in the local `(θ̂, φ̂)` frame.
/// The radial component is identically zero and therefore not stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TangentVector {
    pub comp_theta: Complex64,
    pub comp_phi: Complex64,
}

impl TangentVector {
    pub fn norm_sqr(&self) -> f64 {
        self.comp_theta.norm_sqr() + self.comp_phi.norm_sqr()
    }

    /// `v × r̂` in the same frame: `θ̂ × r̂ = −φ̂`, `φ̂ × r̂ = θ̂`.
    pub fn cross_radial(&self) -> TangentVector {
        TangentVector { comp_theta: self.comp_phi, comp_phi: -self.comp_theta }
    }

    /// Cartesian components at polar angle `theta` and azimuth `phi`.
    pub fn to_cartesian(&self, theta: f64, phi: f64) -> [Complex64; 3] {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let t = self.comp_theta;
        let p = self.comp_phi;
        [t * (ct * cp) - p * sp, t * (ct * sp) + p * cp, t * (-st)]
    }
}
