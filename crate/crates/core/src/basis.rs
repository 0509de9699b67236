//! The divergence-free beam basis on the ball `|x| ≤ R`.
//!
//! Beam `(ℓ, m, n)` is
//!
//! ```text
//! T_ℓmn(x) = N_ℓn · g_ℓn(r) · (∇_{S²} Y_ℓ^m × r̂),    g_ℓn(r) = j_ℓ(α_ℓn r / R)
//! ```
//!
//! with `α_ℓn` the n-th positive zero of `j_ℓ`. Equivalently
//! `T = ∇ × (f_ℓn(r) Y_ℓ^m r̂)` with `f_ℓn(r) = r · g_ℓn(r)`. The field is
//! tangential, vanishes on `r = R`, and satisfies `−ΔT = (α_ℓn/R)² T`.
//! `ℓ = 0` beams vanish identically and are not part of any mode set.

use crate::error::{Error, Result};
use crate::fd;
use crate::special_fn::{sph_jn, spherical_bessel_zeros, HarmonicTable, SphericalPoint};
use crate::transform::QuadratureGrid;
use crate::vec3::{dot_conj, norm_sqr, CVec3, CZERO3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Mode label `(ℓ, m, n)` with `ℓ ≥ 1`, `|m| ≤ ℓ`, `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub ell: u32,
    pub m: i32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(ell: u32, m: i32, n: u32) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Index("ell must be >= 1 (ell = 0 beams vanish)".into()));
        }
        if m.unsigned_abs() > ell {
            return Err(Error::Index(format!("|m| = {} exceeds ell = {ell}", m.abs())));
        }
        if n == 0 {
            return Err(Error::Index("radial index n must be >= 1".into()));
        }
        Ok(Self { ell, m, n })
    }

    /// The mode with `m` negated.
    pub fn mirrored(&self) -> Self {
        Self { m: -self.m, ..*self }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.ell, self.m, self.n)
    }
}

/// All modes with `1 ≤ ℓ ≤ l_max`, `|m| ≤ ℓ`, `1 ≤ n ≤ n_max`, in
/// lexicographic `(ℓ, m, n)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    l_max: u32,
    n_max: u32,
    radius: f64,
    modes: Vec<ModeIndex>,
}

/// Enumerate the truncated mode set.
pub fn build_mode_set(l_max: u32, n_max: u32, domain_radius: f64) -> Result<ModeSet> {
    ModeSet::new(l_max, n_max, domain_radius)
}

impl ModeSet {
    pub fn new(l_max: u32, n_max: u32, radius: f64) -> Result<Self> {
        if l_max == 0 || n_max == 0 {
            return Err(Error::Config(format!("l_max and n_max must be >= 1 (got {l_max}, {n_max})")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("domain radius must be positive, got {radius}")));
        }
        if l_max as usize >= crate::special_fn::MAX_BESSEL_ORDER {
            return Err(Error::UnsupportedOrder { ell: l_max as usize, max: crate::special_fn::MAX_BESSEL_ORDER - 1 });
        }
        let mut modes = Vec::with_capacity(Self::count_for(l_max, n_max));
        for ell in 1..=l_max {
            for m in -(ell as i32)..=ell as i32 {
                for n in 1..=n_max {
                    modes.push(ModeIndex { ell, m, n });
                }
            }
        }
        Ok(Self { l_max, n_max, radius, modes })
    }

    /// `n_max · Σ_{ℓ=1}^{l_max} (2ℓ+1) = n_max · (l_max² + 2 l_max)`.
    pub fn count_for(l_max: u32, n_max: u32) -> usize {
        (n_max * (l_max * l_max + 2 * l_max)) as usize
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeIndex> {
        self.modes.iter()
    }

    pub fn contains(&self, mode: &ModeIndex) -> bool {
        self.index_of(mode).is_some()
    }

    /// Position of `mode` in the ordering, computed arithmetically.
    pub fn index_of(&self, mode: &ModeIndex) -> Option<usize> {
        let ModeIndex { ell, m, n } = *mode;
        if ell == 0 || ell > self.l_max || m.unsigned_abs() > ell || n == 0 || n > self.n_max {
            return None;
        }
        let shell = (ell * ell - 1) as usize * self.n_max as usize;
        Some(shell + (m + ell as i32) as usize * self.n_max as usize + (n - 1) as usize)
    }

    /// Same truncation and radius.
    pub fn same_as(&self, other: &ModeSet) -> bool {
        self.l_max == other.l_max && self.n_max == other.n_max && self.radius == other.radius
    }
}

/// Immutable beam basis: Bessel zeros and normalization constants per `(ℓ, n)`.
#[derive(Debug, Clone)]
pub struct BeamBasis {
    mode_set: ModeSet,
    /// `alphas[ℓ-1][n-1]`
    alphas: Vec<Vec<f64>>,
    norms: Vec<Vec<f64>>,
}

impl BeamBasis {
    pub fn new(mode_set: ModeSet) -> Result<Self> {
        let radius = mode_set.radius;
        let mut alphas = Vec::with_capacity(mode_set.l_max as usize);
        let mut norms = Vec::with_capacity(mode_set.l_max as usize);
        for ell in 1..=mode_set.l_max as usize {
            let zeros = spherical_bessel_zeros(ell, mode_set.n_max as usize)?;
            let l = ell as f64;
            let row: Vec<f64> = zeros
                .iter()
                .map(|&a| {
                    let jp = sph_jn(ell + 1, a);
                    1.0 / (l * (l + 1.0) * 0.5 * radius.powi(3) * jp * jp).sqrt()
                })
                .collect();
            alphas.push(zeros);
            norms.push(row);
        }
        Ok(Self { mode_set, alphas, norms })
    }

    /// Shortcut for `BeamBasis::new(build_mode_set(..)?)`.
    pub fn with_truncation(l_max: u32, n_max: u32, radius: f64) -> Result<Self> {
        Self::new(ModeSet::new(l_max, n_max, radius)?)
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    pub fn radius(&self) -> f64 {
        self.mode_set.radius
    }

    pub fn len(&self) -> usize {
        self.mode_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_set.is_empty()
    }

    fn check_ln(&self, ell: u32, n: u32) -> Result<()> {
        if ell == 0 || ell > self.mode_set.l_max || n == 0 || n > self.mode_set.n_max {
            return Err(Error::Index(format!(
                "(ell, n) = ({ell}, {n}) outside the basis truncation ({}, {})",
                self.mode_set.l_max, self.mode_set.n_max
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: &ModeIndex) -> Result<()> {
        if !self.mode_set.contains(mode) {
            return Err(Error::Index(format!("mode {mode} is not in the basis")));
        }
        Ok(())
    }

    /// `α_ℓn`, the n-th positive zero of `j_ℓ`.
    pub fn alpha(&self, ell: u32, n: u32) -> f64 {
        self.alphas[ell as usize - 1][n as usize - 1]
    }

    /// `N_ℓn = [ℓ(ℓ+1) · R³/2 · j_{ℓ+1}(α_ℓn)²]^{−1/2}`.
    pub fn norm(&self, ell: u32, n: u32) -> f64 {
        self.norms[ell as usize - 1][n as usize - 1]
    }

    /// `g_ℓn(r) = j_ℓ(α_ℓn r / R)` for `0 ≤ r ≤ R`.
    pub fn radial_amplitude(&self, ell: u32, n: u32, r: f64) -> Result<f64> {
        self.check_ln(ell, n)?;
        let radius = self.radius();
        if !(r >= 0.0) || r > radius {
            return Err(Error::Domain(format!("radius {r} outside [0, {radius}]")));
        }
        if r == radius {
            return Ok(0.0);
        }
        Ok(self.g(ell, n, r))
    }

    #[inline]
    pub(crate) fn g(&self, ell: u32, n: u32, r: f64) -> f64 {
        sph_jn(ell as usize, self.alpha(ell, n) * r / self.radius())
    }

    /// `λ_ℓmn = (α_ℓn / R)²`.
    pub fn viscous_eigenvalue(&self, mode: &ModeIndex) -> Result<f64> {
        self.check_mode(mode)?;
        Ok(self.lambda(mode))
    }

    pub(crate) fn lambda(&self, mode: &ModeIndex) -> f64 {
        let k = self.alpha(mode.ell, mode.n) / self.radius();
        k * k
    }

    /// Eigenvalues in mode-set order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.mode_set.iter().map(|m| self.lambda(m)).collect()
    }

    /// Beam value in Cartesian components at a point of the closed ball.
    pub fn evaluate_beam(&self, mode: &ModeIndex, point: &SphericalPoint) -> Result<CVec3> {
        self.check_mode(mode)?;
        self.check_point(point.r())?;
        Ok(self.beam_spherical(mode, point))
    }

    fn check_point(&self, r: f64) -> Result<()> {
        let radius = self.radius();
        if r > radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("point at r = {r} lies outside the ball of radius {radius}")));
        }
        Ok(())
    }

    fn beam_spherical(&self, mode: &ModeIndex, point: &SphericalPoint) -> CVec3 {
        let g = self.g(mode.ell, mode.n, point.r());
        if g == 0.0 {
            return CZERO3;
        }
        let table = HarmonicTable::new(mode.ell as usize, point.theta(), point.phi());
        let t = table.surface_gradient(mode.ell as usize, mode.m as i64).cross_radial();
        let v = t.to_cartesian(point.theta(), point.phi());
        let s = self.norm(mode.ell, mode.n) * g;
        [v[0] * s, v[1] * s, v[2] * s]
    }

    /// Beam at an arbitrary Cartesian point. The analytic expression is used
    /// as is outside the ball, which finite-difference stencils at the
    /// boundary rely on.
    pub(crate) fn beam_at(&self, mode: &ModeIndex, p: [f64; 3]) -> CVec3 {
        self.beam_spherical(mode, &SphericalPoint::from_cartesian(p))
    }

    /// Every beam at `p`, in mode-set order. No domain check.
    pub(crate) fn evaluate_all_at(&self, p: [f64; 3], out: &mut [CVec3]) {
        debug_assert_eq!(out.len(), self.len());
        let sp = SphericalPoint::from_cartesian(p);
        let l_max = self.mode_set.l_max;
        let n_max = self.mode_set.n_max;
        let table = HarmonicTable::new(l_max as usize, sp.theta(), sp.phi());
        let mut idx = 0;
        let mut amps = vec![0.0; n_max as usize];
        for ell in 1..=l_max {
            for n in 1..=n_max {
                amps[n as usize - 1] = self.norm(ell, n) * self.g(ell, n, sp.r());
            }
            for m in -(ell as i32)..=ell as i32 {
                let t = table.surface_gradient(ell as usize, m as i64).cross_radial();
                let v = t.to_cartesian(sp.theta(), sp.phi());
                for &a in &amps {
                    out[idx] = [v[0] * a, v[1] * a, v[2] * a];
                    idx += 1;
                }
            }
        }
    }

    /// Every beam at a checked point.
    pub fn evaluate_all(&self, point: &SphericalPoint) -> Result<Vec<CVec3>> {
        self.check_point(point.r())?;
        let mut out = vec![CZERO3; self.len()];
        self.evaluate_all_at(point.to_cartesian(), &mut out);
        Ok(out)
    }

    /// `Σ_k c_k T_k(p)` without domain checks.
    pub(crate) fn synthesize_at(&self, coeffs: &[Complex64], p: [f64; 3], scratch: &mut [CVec3]) -> CVec3 {
        self.evaluate_all_at(p, scratch);
        let mut acc = CZERO3;
        for (c, t) in coeffs.iter().zip(scratch.iter()) {
            if *c != Complex64::new(0.0, 0.0) {
                crate::vec3::axpy(&mut acc, *c, t);
            }
        }
        acc
    }
}

/// Result of [`rayleigh_quotient`].
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighQuotient {
    pub value: f64,
    /// Set when the grid is coarser than the mode requires.
    pub warning: Option<String>,
}

/// `⟨−ΔT, T⟩ / ⟨T, T⟩` with a fourth-order finite-difference Laplacian
/// (step `10⁻³ R`) and the grid's quadrature. Certifies
/// [`BeamBasis::viscous_eigenvalue`] independently of the Bessel zeros.
pub fn rayleigh_quotient(mode: &ModeIndex, basis: &BeamBasis, grid: &QuadratureGrid) -> Result<RayleighQuotient> {
    basis.check_mode(mode)?;
    if (grid.radius() - basis.radius()).abs() > 1e-12 * basis.radius() {
        return Err(Error::Dimension("grid radius differs from basis radius".into()));
    }
    let ms = basis.mode_set();
    let (n_r, n_theta, _) = grid.counts();
    let warning = if n_r < 4 * ms.n_max() as usize + 8 || n_theta < 2 * ms.l_max() as usize + 8 {
        Some(format!("grid ({n_r}, {n_theta}) under-resolves (l_max, n_max) = ({}, {})", ms.l_max(), ms.n_max()))
    } else {
        None
    };
    let h = 1e-3 * basis.radius();
    let f = |p: [f64; 3]| basis.beam_at(mode, p);
    let mut num = 0.0;
    let mut den = 0.0;
    for node in grid.nodes() {
        let t = f(node.x);
        let lap = fd::laplacian(&f, node.x, h);
        num -= node.w * dot_conj(&lap, &t).re;
        den += node.w * norm_sqr(&t);
    }
    Ok(RayleighQuotient { value: num / den, warning })
}
