use super::TangentVector;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Orthonormal associated Legendre values `P̄_ℓ^m(cos θ)` for `0 ≤ m ≤ ℓ ≤ L`
/// together with `e^{imφ}`, so that `Y_ℓ^m = P̄_ℓ^m e^{imφ}` for `m ≥ 0`.
///
/// Building the table once per direction and reading every `(ℓ, m)` from it
/// is how the basis evaluates all modes at a node.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    lmax: usize,
    plm: Vec<f64>,
    phase: Vec<Complex64>,
}

#[inline]
fn tri(ell: usize, m: usize) -> usize {
    ell * (ell + 1) / 2 + m
}

impl HarmonicTable {
    pub fn new(lmax: usize, theta: f64, phi: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let s = s.abs();
        let mut plm = vec![0.0; tri(lmax, lmax) + 1];
        plm[0] = 0.5 / PI.sqrt();
        for m in 1..=lmax {
            let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            plm[tri(m, m)] = -f * s * plm[tri(m - 1, m - 1)];
        }
        for m in 0..lmax {
            plm[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * c * plm[tri(m, m)];
        }
        for m in 0..=lmax {
            for ell in (m + 2)..=lmax {
                let l2 = (ell * ell) as f64;
                let m2 = (m * m) as f64;
                let a = ((4.0 * l2 - 1.0) / (l2 - m2)).sqrt();
                let lm1 = (ell - 1) as f64;
                let b = ((lm1 * lm1 - m2) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                plm[tri(ell, m)] = a * (c * plm[tri(ell - 1, m)] - b * plm[tri(ell - 2, m)]);
            }
        }
        let step = Complex64::from_polar(1.0, phi);
        let mut phase = Vec::with_capacity(lmax + 1);
        let mut cur = Complex64::new(1.0, 0.0);
        for m in 0..=lmax {
            // direct evaluation every few steps keeps the phase drift at rounding level
            if m % 8 == 0 {
                cur = Complex64::from_polar(1.0, m as f64 * phi);
            }
            phase.push(cur);
            cur *= step;
        }
        Self { lmax, plm, phase }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `P̄_ℓ^m` for signed `m`, using `P̄_ℓ^{−m} = (−1)^m P̄_ℓ^m`; zero outside `|m| ≤ ℓ`.
    fn p(&self, ell: usize, m: i64) -> f64 {
        let am = m.unsigned_abs() as usize;
        if am > ell || ell > self.lmax {
            return 0.0;
        }
        let v = self.plm[tri(ell, am)];
        if m < 0 && am % 2 == 1 {
            -v
        } else {
            v
        }
    }

    fn check(&self, ell: usize, m: i64) {
        assert!(ell <= self.lmax, "degree {ell} beyond table limit {}", self.lmax);
        assert!(m.unsigned_abs() as usize <= ell, "|m| > ell");
    }

    /// `Y_ℓ^m(θ, φ)`. Panics if `ℓ` exceeds the table or `|m| > ℓ`.
    pub fn y(&self, ell: usize, m: i64) -> Complex64 {
        self.check(ell, m);
        let am = m.unsigned_abs() as usize;
        let v = self.phase[am] * self.plm[tri(ell, am)];
        if m >= 0 {
            v
        } else if am.is_multiple_of(2) {
            v.conj()
        } else {
            -v.conj()
        }
    }

    /// `∇_{S²} Y_ℓ^m` in the `(θ̂, φ̂)` frame, finite everywhere including
    /// the poles. The azimuthal part uses the identity
    /// `m P̄_ℓ^m / sin θ = −½ √((2ℓ+1)/(2ℓ−1)) [√((ℓ+m)(ℓ+m−1)) P̄_{ℓ−1}^{m−1}
    /// + √((ℓ−m)(ℓ−m−1)) P̄_{ℓ−1}^{m+1}]`, which has no division by `sin θ`.
    pub fn surface_gradient(&self, ell: usize, m: i64) -> TangentVector {
        self.check(ell, m);
        if ell == 0 {
            return TangentVector::default();
        }
        let am = m.unsigned_abs() as usize;
        let mi = am as i64;
        let l = ell as f64;
        let mf = am as f64;
        let up = ((l - mf) * (l + mf + 1.0)).sqrt() * self.p(ell, mi + 1);
        let down = ((l + mf) * (l - mf + 1.0)).sqrt() * self.p(ell, mi - 1);
        let d_theta = 0.5 * (up - down);
        let m_over_sin = if am == 0 {
            0.0
        } else {
            let a = ((l + mf) * (l + mf - 1.0)).sqrt() * self.p(ell - 1, mi - 1);
            let b = ((l - mf) * (l - mf - 1.0)).max(0.0).sqrt() * self.p(ell - 1, mi + 1);
            -0.5 * ((2.0 * l + 1.0) / (2.0 * l - 1.0)).sqrt() * (a + b)
        };
        let ph = self.phase[am];
        let g = TangentVector { comp_theta: ph * d_theta, comp_phi: ph * Complex64::new(0.0, m_over_sin) };
        if m >= 0 {
            g
        } else {
            let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
            TangentVector { comp_theta: g.comp_theta.conj() * sign, comp_phi: g.comp_phi.conj() * sign }
        }
    }
}

fn check_lm(ell: usize, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > ell {
        return Err(Error::Index(format!("|m| = {} exceeds ell = {ell}", m.abs())));
    }
    Ok(())
}

/// Orthonormal complex spherical harmonic with Condon–Shortley phase.
pub fn spherical_harmonic(ell: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    check_lm(ell, m)?;
    Ok(HarmonicTable::new(ell, theta, phi).y(ell, m))
}

/// Surface gradient `(∂_θ Y, (1/sin θ) ∂_φ Y)`; pole values are the analytic limits.
pub fn surface_gradient_y(ell: usize, m: i64, theta: f64, phi: f64) -> Result<TangentVector> {
    check_lm(ell, m)?;
    Ok(HarmonicTable::new(ell, theta, phi).surface_gradient(ell, m))
}
