//! Quadrature on the ball and the forward/inverse beam transforms.
//!
//! Coefficients are extracted by direct quadrature, `a_k = Σ w u·conj(T_k)`.
//! The basis is orthonormal to quadrature accuracy on a resolving grid, so no
//! Gram system is solved; [`gram_report`] measures how far from the identity
//! the discrete Gram matrix actually is.

mod field;
mod grid;

pub(crate) use field::project_conjugate_symmetric;
pub use field::{CoefficientVector, SampledField};
pub use grid::{build_grid, gauss_legendre, GridNode, QuadratureGrid};

use crate::basis::BeamBasis;
use crate::error::{Error, Result};
use crate::fd;
use crate::special_fn::SphericalPoint;
use crate::vec3::{dot_conj, norm_sqr, CVec3, CZERO3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

fn check_basis_grid(basis: &BeamBasis, grid: &QuadratureGrid) -> Result<()> {
    if (basis.radius() - grid.radius()).abs() > 1e-12 * basis.radius() {
        return Err(Error::Dimension(format!(
            "basis radius {} differs from grid radius {}",
            basis.radius(),
            grid.radius()
        )));
    }
    Ok(())
}

/// `⟨a, b⟩ = Σ_nodes w · a · conj(b)`.
pub fn inner_product(a: &SampledField<'_>, b: &SampledField<'_>, grid: &QuadratureGrid) -> Result<Complex64> {
    let va = a.values_on(grid)?;
    let vb = b.values_on(grid)?;
    Ok(weighted_dot(grid, &va, &vb))
}

pub(crate) fn weighted_dot(grid: &QuadratureGrid, a: &[CVec3], b: &[CVec3]) -> Complex64 {
    grid.nodes().iter().zip(a.iter().zip(b)).map(|(n, (x, y))| dot_conj(x, y) * n.w).sum()
}

pub(crate) fn weighted_norm_sqr(grid: &QuadratureGrid, a: &[CVec3]) -> f64 {
    grid.nodes().iter().zip(a).map(|(n, x)| n.w * norm_sqr(x)).sum()
}

/// `a_ℓmn = ⟨u, T_ℓmn⟩` for every mode of the basis.
pub fn forward_transform(
    field: &SampledField<'_>,
    basis: &BeamBasis,
    grid: &QuadratureGrid,
) -> Result<CoefficientVector> {
    check_basis_grid(basis, grid)?;
    let values = field.values_on(grid)?;
    let coeffs = project_values(basis, grid, &values);
    CoefficientVector::new(basis.mode_set().clone(), coeffs)
}

/// Quadrature projection of node values onto every beam. Partial sums are
/// formed per radial shell in parallel and added in shell order, so results
/// do not depend on the thread count.
pub(crate) fn project_values(basis: &BeamBasis, grid: &QuadratureGrid, values: &[CVec3]) -> Vec<Complex64> {
    let n_modes = basis.len();
    let shell_len = grid.counts().1 * grid.counts().2;
    let partials: Vec<Vec<Complex64>> = grid
        .shells()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(s, shell)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n_modes];
            let mut beams = vec![CZERO3; n_modes];
            for (k, node) in shell.iter().enumerate() {
                let u = &values[s * shell_len + k];
                if norm_sqr(u) == 0.0 {
                    continue;
                }
                basis.evaluate_all_at(node.x, &mut beams);
                for (a, t) in acc.iter_mut().zip(&beams) {
                    *a += dot_conj(u, t) * node.w;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n_modes];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

fn check_coeffs(coeffs: &CoefficientVector, basis: &BeamBasis) -> Result<()> {
    if !coeffs.mode_set().same_as(basis.mode_set()) {
        return Err(Error::Dimension(format!(
            "coefficients over (l_max, n_max, R) = ({}, {}, {}) do not match basis ({}, {}, {})",
            coeffs.mode_set().l_max(),
            coeffs.mode_set().n_max(),
            coeffs.mode_set().radius(),
            basis.mode_set().l_max(),
            basis.mode_set().n_max(),
            basis.radius()
        )));
    }
    Ok(())
}

/// `u(x) = Σ a_ℓmn T_ℓmn(x)` over the truncated set, at each point.
pub fn inverse_transform(
    coeffs: &CoefficientVector,
    basis: &BeamBasis,
    points: &[SphericalPoint],
) -> Result<Vec<CVec3>> {
    check_coeffs(coeffs, basis)?;
    let radius = basis.radius();
    if let Some(p) = points.iter().find(|p| p.r() > radius * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("point at r = {} lies outside the ball", p.r())));
    }
    let c = coeffs.values();
    Ok(points
        .par_iter()
        .map_init(|| vec![CZERO3; basis.len()], |scratch, p| basis.synthesize_at(c, p.to_cartesian(), scratch))
        .collect())
}

/// Synthesize `Σ a_k T_k` at every node of `grid`.
pub fn synthesize_on_grid(
    coeffs: &CoefficientVector,
    basis: &BeamBasis,
    grid: Arc<QuadratureGrid>,
) -> Result<SampledField<'static>> {
    check_coeffs(coeffs, basis)?;
    check_basis_grid(basis, &grid)?;
    let c = coeffs.values();
    let values: Vec<CVec3> = grid
        .nodes()
        .par_iter()
        .map_init(|| vec![CZERO3; basis.len()], |scratch, n| basis.synthesize_at(c, n.x, scratch))
        .collect();
    SampledField::gridded(grid, values)
}

/// Physical versus spectral energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParsevalReport {
    pub norm_sq_physical: f64,
    pub norm_sq_spectral: f64,
    pub relative_gap: f64,
}

/// Compare `‖u‖²` (quadrature) with `Σ |a|²`. The gap is zero inside the
/// truncated span and equals the out-of-span energy fraction otherwise.
pub fn parseval_report(
    field: &SampledField<'_>,
    coeffs: &CoefficientVector,
    basis: &BeamBasis,
    grid: &QuadratureGrid,
) -> Result<ParsevalReport> {
    check_coeffs(coeffs, basis)?;
    let values = field.values_on(grid)?;
    let physical = weighted_norm_sqr(grid, &values);
    let spectral = coeffs.norm_sqr();
    let relative_gap = if physical == 0.0 { 0.0 } else { (physical - spectral).abs() / physical };
    Ok(ParsevalReport { norm_sq_physical: physical, norm_sq_spectral: spectral, relative_gap })
}

/// Residual energy of one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletenessRow {
    pub l_max: u32,
    pub n_max: u32,
    pub captured: f64,
    pub residual: f64,
}

/// Projection residual `‖u‖² − Σ_{modes ≤ truncation} |a|²` for each
/// `(l_max, n_max)` truncation. Coefficients are computed once on the
/// enclosing basis; nested truncations reuse them.
pub fn completeness_decay(
    field: &SampledField<'_>,
    truncations: &[(u32, u32)],
    grid: &QuadratureGrid,
) -> Result<(f64, Vec<CompletenessRow>)> {
    if truncations.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let l_top = truncations.iter().map(|t| t.0).max().unwrap();
    let n_top = truncations.iter().map(|t| t.1).max().unwrap();
    let basis = BeamBasis::with_truncation(l_top, n_top, grid.radius())?;
    let values = field.values_on(grid)?;
    let energy = weighted_norm_sqr(grid, &values);
    let coeffs = project_values(&basis, grid, &values);
    let rows = truncations
        .iter()
        .map(|&(l, n)| {
            let captured: f64 = basis
                .mode_set()
                .iter()
                .zip(&coeffs)
                .filter(|(m, _)| m.ell <= l && m.n <= n)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            CompletenessRow { l_max: l, n_max: n, captured, residual: energy - captured }
        })
        .collect();
    Ok((energy, rows))
}

/// Deviation of the discrete Gram matrix from the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramReport {
    pub max_offdiag: f64,
    pub max_diag_error: f64,
}

/// Full Gram matrix `G_ij = ⟨T_i, T_j⟩` on `grid`, row-major.
pub fn gram_matrix(basis: &BeamBasis, grid: &QuadratureGrid) -> Result<Vec<Complex64>> {
    check_basis_grid(basis, grid)?;
    let n = basis.len();
    let partials: Vec<Vec<Complex64>> = grid
        .shells()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|shell| {
            let mut g = vec![Complex64::new(0.0, 0.0); n * n];
            let mut beams = vec![CZERO3; n];
            for node in shell {
                basis.evaluate_all_at(node.x, &mut beams);
                for i in 0..n {
                    for j in i..n {
                        g[i * n + j] += dot_conj(&beams[i], &beams[j]) * node.w;
                    }
                }
            }
            g
        })
        .collect();
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    for p in partials {
        for (o, v) in g.iter_mut().zip(p) {
            *o += v;
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[i * n + j] = g[j * n + i].conj();
        }
    }
    Ok(g)
}

pub fn gram_report(basis: &BeamBasis, grid: &QuadratureGrid) -> Result<GramReport> {
    let g = gram_matrix(basis, grid)?;
    let n = basis.len();
    let mut max_offdiag = 0.0f64;
    let mut max_diag_error = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = g[i * n + j];
            if i == j {
                max_diag_error = max_diag_error.max((v - 1.0).norm());
            } else {
                max_offdiag = max_offdiag.max(v.norm());
            }
        }
    }
    Ok(GramReport { max_offdiag, max_diag_error })
}

/// Fourth-order finite-difference divergence of `Σ a_k T_k` at `points`
/// (step `10⁻⁴ R`), normalized by the largest field magnitude seen at those
/// points.
pub fn max_relative_divergence(coeffs: &CoefficientVector, basis: &BeamBasis, points: &[[f64; 3]]) -> Result<f64> {
    check_coeffs(coeffs, basis)?;
    let c = coeffs.values();
    let h = 1e-4 * basis.radius();
    let n = basis.len();
    let f = |q: [f64; 3]| basis.synthesize_at(c, q, &mut vec![CZERO3; n]);
    let (div, mag) = points
        .par_iter()
        .map(|&p| (fd::divergence(&f, p, h).norm(), norm_sqr(&f(p)).sqrt()))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(if mag == 0.0 { 0.0 } else { div / mag })
}
