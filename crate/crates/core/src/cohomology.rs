//! The Wigner-weighted spectral coboundary on coefficient vectors.
//!
//! ```text
//! (δa)_{ℓ3 m3 n3} = Σ C^{ℓ3 m3}_{ℓ1 m1, ℓ2 m2} · {ℓ1 ℓ2 ℓ3; s1 s2 s3} · W(n1, n2, n3) · a_{ℓ1 m1 n1} a_{ℓ2 m2 n2}
//! ```
//!
//! `δ` is quadratic: `δ(a) = B(a, a)` for the bilinear form `B` carrying the
//! same coefficients. The lower-row spins `(s1, s2, s3)` and the radial
//! weight `W` are configuration: `W` is either the triple overlap
//! `∫ g1 g2 g3 r² dr` of the radial amplitudes or identically one.
//!
//! Nonzero couplings are listed once per operator, grouped by output mode,
//! so applying the operator touches only admissible `(ℓ, m)` combinations.

use crate::basis::{BeamBasis, ModeSet};
use crate::error::{Error, Result};
use crate::transform::{gauss_legendre, CoefficientVector};
use crate::wigner::{cg, six_j, triangle_ok};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest admissible lower-row spin.
pub const MAX_SPIN: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialKernel {
    TripleOverlap,
    Unit,
}

impl fmt::Display for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadialKernel::TripleOverlap => "overlap",
            RadialKernel::Unit => "unit",
        })
    }
}

impl FromStr for RadialKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" | "triple_overlap" => Ok(RadialKernel::TripleOverlap),
            "unit" => Ok(RadialKernel::Unit),
            other => Err(Error::Config(format!("unknown radial kernel `{other}` (expected unit|overlap)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoboundaryConfig {
    pub spins: [u32; 3],
    pub kernel: RadialKernel,
}

impl Default for CoboundaryConfig {
    fn default() -> Self {
        Self { spins: [1, 1, 1], kernel: RadialKernel::TripleOverlap }
    }
}

impl CoboundaryConfig {
    pub fn new(spins: [u32; 3], kernel: RadialKernel) -> Result<Self> {
        let cfg = Self { spins, kernel };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.spins.iter().find(|&&s| s > MAX_SPIN) {
            return Err(Error::Config(format!("spin {s} exceeds the maximum {MAX_SPIN}")));
        }
        Ok(())
    }
}

/// A coefficient vector with a degree tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub coeffs: CoefficientVector,
    pub degree: u32,
}

impl Cochain {
    pub fn new(coeffs: CoefficientVector, degree: u32) -> Self {
        Self { coeffs, degree }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm_sqr().sqrt()
    }
}

fn radial_quadrature(mode_set: &ModeSet) -> (Vec<f64>, Vec<f64>) {
    let n = 64 + 4 * (mode_set.l_max() + mode_set.n_max()) as usize;
    let radius = mode_set.radius();
    let (t, w) = gauss_legendre(n);
    let r: Vec<f64> = t.iter().map(|&x| 0.5 * radius * (x + 1.0)).collect();
    let wr: Vec<f64> = r.iter().zip(&w).map(|(&r, &w)| 0.5 * radius * w * r * r).collect();
    (r, wr)
}

/// `W(n1, n2, n3; ℓ1, ℓ2, ℓ3)`: `∫_0^R g_{ℓ1n1} g_{ℓ2n2} g_{ℓ3n3} r² dr` for
/// the overlap kernel (Gauss–Legendre), `1` for the unit kernel.
#[allow(clippy::too_many_arguments)]
pub fn radial_coupling_weight(
    n1: u32,
    n2: u32,
    n3: u32,
    ell1: u32,
    ell2: u32,
    ell3: u32,
    basis: &BeamBasis,
    kernel: RadialKernel,
) -> Result<f64> {
    let ms = basis.mode_set();
    for (l, n) in [(ell1, n1), (ell2, n2), (ell3, n3)] {
        if l == 0 || l > ms.l_max() || n == 0 || n > ms.n_max() {
            return Err(Error::Index(format!("(ell, n) = ({l}, {n}) outside the basis")));
        }
    }
    if kernel == RadialKernel::Unit {
        return Ok(1.0);
    }
    let (r, w) = radial_quadrature(ms);
    Ok(triple_overlap(basis, &r, &w, (ell1, n1), (ell2, n2), (ell3, n3)))
}

fn triple_overlap(basis: &BeamBasis, r: &[f64], w: &[f64], a: (u32, u32), b: (u32, u32), c: (u32, u32)) -> f64 {
    r.iter()
        .zip(w)
        // pair product first so swapping a and b is bit-exact
        .map(|(&r, &w)| w * (basis.g(a.0, a.1, r) * basis.g(b.0, b.1, r)) * basis.g(c.0, c.1, r))
        .sum()
}

/// One nonzero coupling `(i, j) → k` with its real weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub weight: f64,
}

/// Coboundary operator for a fixed basis and configuration.
#[derive(Debug, Clone)]
pub struct Coboundary {
    config: CoboundaryConfig,
    mode_set: ModeSet,
    /// couplings grouped by output index `k`
    by_output: Vec<Vec<(usize, usize, f64)>>,
}

impl Coboundary {
    pub fn new(basis: &BeamBasis, config: CoboundaryConfig) -> Result<Self> {
        config.validate()?;
        let ms = basis.mode_set().clone();
        let [s1, s2, s3] = config.spins;
        let l_max = ms.l_max();
        let n_max = ms.n_max();

        // radial weights indexed by ((ℓ-1)·n_max + n-1) triples
        let ln = (l_max * n_max) as usize;
        let slot = |l: u32, n: u32| ((l - 1) * n_max + (n - 1)) as usize;
        let radial: Vec<f64> = match config.kernel {
            RadialKernel::Unit => vec![1.0; ln * ln * ln],
            RadialKernel::TripleOverlap => {
                let (r, w) = radial_quadrature(&ms);
                let pairs: Vec<(u32, u32)> = (1..=l_max).flat_map(|l| (1..=n_max).map(move |n| (l, n))).collect();
                let mut out = vec![0.0; ln * ln * ln];
                for &a in &pairs {
                    for &b in &pairs {
                        for &c in &pairs {
                            out[(slot(a.0, a.1) * ln + slot(b.0, b.1)) * ln + slot(c.0, c.1)] =
                                triple_overlap(basis, &r, &w, a, b, c);
                        }
                    }
                }
                out
            }
        };

        let mut by_output = vec![Vec::new(); ms.len()];
        for l3 in 1..=l_max {
            for l1 in 1..=l_max {
                for l2 in 1..=l_max {
                    if !triangle_ok(l1, l2, l3) {
                        continue;
                    }
                    let sixj = six_j(l1, l2, l3, s1, s2, s3);
                    if sixj == 0.0 {
                        continue;
                    }
                    for m3 in -(l3 as i32)..=l3 as i32 {
                        for m1 in -(l1 as i32)..=l1 as i32 {
                            let m2 = m3 - m1;
                            if m2.unsigned_abs() > l2 {
                                continue;
                            }
                            let angular = cg(l1, m1, l2, m2, l3, m3) * sixj;
                            if angular == 0.0 {
                                continue;
                            }
                            for n3 in 1..=n_max {
                                let k = ms.index_of(&mode(l3, m3, n3)).unwrap();
                                for n1 in 1..=n_max {
                                    let i = ms.index_of(&mode(l1, m1, n1)).unwrap();
                                    for n2 in 1..=n_max {
                                        let j = ms.index_of(&mode(l2, m2, n2)).unwrap();
                                        let wr = radial[(slot(l1, n1) * ln + slot(l2, n2)) * ln + slot(l3, n3)];
                                        let weight = angular * wr;
                                        if weight != 0.0 {
                                            by_output[k].push((i, j, weight));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { config, mode_set: ms, by_output })
    }

    pub fn config(&self) -> &CoboundaryConfig {
        &self.config
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    /// Every stored coupling.
    pub fn couplings(&self) -> impl Iterator<Item = Coupling> + '_ {
        self.by_output
            .iter()
            .enumerate()
            .flat_map(|(k, list)| list.iter().map(move |&(i, j, weight)| Coupling { i, j, k, weight }))
    }

    pub fn coupling_count(&self) -> usize {
        self.by_output.iter().map(Vec::len).sum()
    }

    fn check(&self, c: &CoefficientVector) -> Result<()> {
        if !c.mode_set().same_as(&self.mode_set) {
            return Err(Error::Dimension("cochain mode set does not match the operator".into()));
        }
        Ok(())
    }

    /// `B(a, b)_k = Σ w_{ijk} a_i b_j`.
    pub fn bilinear_values(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        self.by_output
            .par_iter()
            .map(|list| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(i, j, w) in list {
                    acc += a[i] * b[j] * w;
                }
                acc
            })
            .collect()
    }

    fn wrap(&self, values: Vec<Complex64>, degree: u32) -> Result<Cochain> {
        Ok(Cochain::new(CoefficientVector::new(self.mode_set.clone(), values)?, degree))
    }

    /// `δ(a) = B(a, a)`, degree raised by one.
    pub fn apply(&self, a: &Cochain) -> Result<Cochain> {
        self.check(&a.coeffs)?;
        let v = a.coeffs.values();
        self.wrap(self.bilinear_values(v, v), a.degree + 1)
    }

    /// First variation at `background`: `D_b(v) = B(b, v) + B(v, b)`.
    pub fn linearized(&self, background: &Cochain, direction: &Cochain) -> Result<Cochain> {
        self.check(&background.coeffs)?;
        self.check(&direction.coeffs)?;
        let b = background.coeffs.values();
        let v = direction.coeffs.values();
        let x = self.bilinear_values(b, v);
        let y = self.bilinear_values(v, b);
        let sum = x.into_iter().zip(y).map(|(p, q)| p + q).collect();
        self.wrap(sum, direction.degree + 1)
    }

    /// Measure how far `δ∘δ` is from zero on `a`.
    pub fn nilpotency_residual(&self, a: &Cochain) -> Result<NilpotencyReport> {
        let da = self.apply(a)?;
        let dda = self.apply(&da)?;
        let norm_a = a.norm();
        let norm_da = da.norm();
        let norm_dda = dda.norm();
        let linear_chain_norm = if norm_a == 0.0 {
            0.0
        } else {
            let mut unit = a.clone();
            unit.coeffs.values_mut().iter_mut().for_each(|v| *v /= norm_a);
            let step = self.linearized(a, &unit)?;
            self.linearized(&da, &step)?.norm()
        };
        Ok(NilpotencyReport {
            spins: self.config.spins,
            kernel: self.config.kernel,
            norm_a,
            norm_da,
            norm_dda,
            ratio: if norm_da == 0.0 { 0.0 } else { norm_dda / norm_da },
            linear_chain_norm,
        })
    }
}

fn mode(ell: u32, m: i32, n: u32) -> crate::basis::ModeIndex {
    crate::basis::ModeIndex { ell, m, n }
}

/// Apply the coboundary once (builds the operator; reuse [`Coboundary`]
/// for repeated application).
pub fn coboundary(a: &Cochain, config: &CoboundaryConfig, basis: &BeamBasis) -> Result<Cochain> {
    Coboundary::new(basis, *config)?.apply(a)
}

pub fn linearized_coboundary(
    background: &Cochain,
    direction: &Cochain,
    config: &CoboundaryConfig,
    basis: &BeamBasis,
) -> Result<Cochain> {
    Coboundary::new(basis, *config)?.linearized(background, direction)
}

/// Norms of `a`, `δa`, `δδa`, their ratio `‖δδa‖/‖δa‖`, and
/// `‖D_{δa}(D_a(â))‖` for `â = a/‖a‖`. Nothing is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NilpotencyReport {
    pub spins: [u32; 3],
    pub kernel: RadialKernel,
    pub norm_a: f64,
    pub norm_da: f64,
    pub norm_dda: f64,
    pub ratio: f64,
    pub linear_chain_norm: f64,
}

pub fn nilpotency_residual(a: &Cochain, config: &CoboundaryConfig, basis: &BeamBasis) -> Result<NilpotencyReport> {
    Coboundary::new(basis, *config)?.nilpotency_residual(a)
}

/// Spin triples swept by default: the vector default and its neighbours
/// around the all-zero row.
pub const DEFAULT_SPIN_SWEEP: [[u32; 3]; 6] = [[1, 1, 1], [0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0], [2, 2, 2]];

/// Nilpotency reports for every `(spins, kernel)` combination.
pub fn nilpotency_sweep(
    a: &Cochain,
    basis: &BeamBasis,
    spins: &[[u32; 3]],
    kernels: &[RadialKernel],
) -> Result<Vec<NilpotencyReport>> {
    let mut out = Vec::with_capacity(spins.len() * kernels.len());
    for &s in spins {
        for &k in kernels {
            out.push(nilpotency_residual(a, &CoboundaryConfig::new(s, k)?, basis)?);
        }
    }
    Ok(out)
}
