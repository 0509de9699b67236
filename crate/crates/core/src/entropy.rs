//! Per-ℓ energy spectra, spectral entropy, the constrained maximum-entropy
//! distribution and exponential-decay fits.

use crate::basis::BeamBasis;
use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::transform::CoefficientVector;
use serde::Serialize;

/// Tolerance on `Σ P = 1` accepted by [`spectral_entropy`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModalSpectrum {
    pub ell_values: Vec<u32>,
    pub e_ell: Vec<f64>,
    /// All zero when `zero_energy` is set.
    pub p_ell: Vec<f64>,
    pub total_e: f64,
    pub zero_energy: bool,
}

impl ModalSpectrum {
    /// Spectrum from a prescribed distribution (`total_e = 1`).
    pub fn from_fractions(ell_values: Vec<u32>, p_ell: Vec<f64>) -> Result<Self> {
        if ell_values.len() != p_ell.len() {
            return Err(Error::Dimension(format!("{} ell values for {} fractions", ell_values.len(), p_ell.len())));
        }
        let total: f64 = p_ell.iter().sum();
        Ok(Self { ell_values, e_ell: p_ell.clone(), p_ell, total_e: total, zero_energy: total == 0.0 })
    }

    pub fn len(&self) -> usize {
        self.ell_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ell_values.is_empty()
    }
}

/// `E_ℓ = Σ_{m,n} |a_ℓmn|²` for `ℓ = 1..=l_max`, and `P_ℓ = E_ℓ / E`.
pub fn modal_spectrum(a: &CoefficientVector) -> ModalSpectrum {
    let l_max = a.mode_set().l_max();
    let mut e_ell = vec![0.0; l_max as usize];
    for (mode, v) in a.mode_set().iter().zip(a.values()) {
        e_ell[mode.ell as usize - 1] += v.norm_sqr();
    }
    let total_e: f64 = e_ell.iter().sum();
    let zero_energy = total_e == 0.0;
    let p_ell = if zero_energy { vec![0.0; e_ell.len()] } else { e_ell.iter().map(|e| e / total_e).collect() };
    ModalSpectrum { ell_values: (1..=l_max).collect(), e_ell, p_ell, total_e, zero_energy }
}

/// Shannon entropy `−Σ P log P` of a normalized distribution, `0·log 0 = 0`.
pub fn entropy_of(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Normalization("probabilities must be finite and nonnegative".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
}

pub fn spectral_entropy(spec: &ModalSpectrum) -> Result<f64> {
    if spec.zero_energy {
        return Err(Error::Normalization("zero-energy spectrum has no distribution".into()));
    }
    entropy_of(&spec.p_ell)
}

/// `λ_ℓ = ℓ²` for `ℓ = 1..=l_max`.
pub fn lambda_ell_squared(l_max: u32) -> Vec<f64> {
    (1..=l_max).map(|l| f64::from(l * l)).collect()
}

/// `λ_ℓ = (α_ℓ1 / R)²`, the smallest viscous eigenvalue of each shell.
pub fn lambda_bessel(basis: &BeamBasis) -> Vec<f64> {
    let r = basis.radius();
    (1..=basis.mode_set().l_max()).map(|l| (basis.alpha(l, 1) / r).powi(2)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxEntSolution {
    pub a: f64,
    /// `μ = −β`.
    pub mu: f64,
    pub beta: f64,
    /// `α − 1 = log A`.
    pub alpha_minus_1: f64,
    /// `(Σ P − 1, Σ λP − C)`.
    pub constraint_residuals: (f64, f64),
    pub c: f64,
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
}

impl MaxEntSolution {
    /// `|−log P_ℓ − 1 + α + βλ_ℓ|` per level.
    pub fn stationarity_residuals(&self) -> Vec<f64> {
        self.p.iter().zip(&self.lambda).map(|(p, l)| (-p.ln() + self.alpha_minus_1 + self.beta * l).abs()).collect()
    }
}

/// `(log Z, mean, variance)` of the Gibbs weights `e^{βλ}`.
fn gibbs_moments(lambda: &[f64], beta: f64) -> (f64, f64, f64) {
    let shift = lambda.iter().map(|l| beta * l).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &l in lambda {
        let w = (beta * l - shift).exp();
        z += w;
        m1 += w * l;
        m2 += w * l * l;
    }
    let mean = m1 / z;
    (shift + z.ln(), mean, (m2 / z - mean * mean).max(0.0))
}

/// Gibbs mean of `λ` at inverse temperature `β`: `Σ λ e^{βλ} / Σ e^{βλ}`.
pub fn gibbs_mean(lambda: &[f64], beta: f64) -> f64 {
    gibbs_moments(lambda, beta).1
}

/// Maximize `−Σ P log P` subject to `Σ P = 1` and `Σ λP = C`.
///
/// Solves `mean_β(λ) = C` for `β` by Newton's method kept inside a
/// bisection bracket, then `P_ℓ = e^{βλ_ℓ} / Z`.
pub fn maxent_solve(lambda: &[f64], c: f64) -> Result<MaxEntSolution> {
    if lambda.len() < 2 {
        return Err(Error::InsufficientData("max-entropy solve needs at least two levels".into()));
    }
    if lambda.iter().any(|l| !l.is_finite()) || !c.is_finite() {
        return Err(Error::Config("non-finite lambda or C".into()));
    }
    let lo_l = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_l = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(c > lo_l && c < hi_l) {
        return Err(Error::Infeasible { value: c, lo: lo_l, hi: hi_l });
    }
    let span = hi_l - lo_l;
    let f = |b: f64| gibbs_mean(lambda, b) - c;

    let mut lo = -1.0 / span;
    let mut hi = 1.0 / span;
    while f(lo) > 0.0 {
        lo *= 2.0;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut beta = 0.0f64.clamp(lo, hi);
    let mut iterations = 0;
    for _ in 0..500 {
        iterations += 1;
        let (_, mean, var) = gibbs_moments(lambda, beta);
        let r = mean - c;
        if r == 0.0 {
            break;
        }
        if r < 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = beta - r / var;
        let next = if var > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - beta).abs() <= 4.0 * f64::EPSILON * beta.abs().max(1.0 / span) {
            beta = next;
            break;
        }
        beta = next;
    }

    let (log_z, _, _) = gibbs_moments(lambda, beta);
    let p: Vec<f64> = lambda.iter().map(|l| (beta * l - log_z).exp()).collect();
    let sum_p: f64 = p.iter().sum();
    let mean_p: f64 = p.iter().zip(lambda).map(|(p, l)| p * l).sum();
    Ok(MaxEntSolution {
        a: (-log_z).exp(),
        mu: -beta,
        beta,
        alpha_minus_1: -log_z,
        constraint_residuals: (sum_p - 1.0, mean_p - c),
        c,
        lambda: lambda.to_vec(),
        p,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub mu: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares of `log P_ℓ` on `ℓ²` over the nonzero levels.
pub fn fit_decay_profile(spec: &ModalSpectrum) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = spec
        .ell_values
        .iter()
        .zip(&spec.p_ell)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&l, &p)| (f64::from(l * l), p.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("decay fit needs 3 nonzero levels, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit { a: intercept.exp(), mu: -slope, r_squared, points: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayStatus {
    Fitted,
    InsufficientData,
    ZeroEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecaySample {
    pub t: f64,
    pub status: DecayStatus,
    pub mu: Option<f64>,
    pub r_squared: Option<f64>,
    pub satisfies: bool,
}

/// Default `r²` threshold for [`decay_class_report`]; a reporting policy.
pub const DEFAULT_R2_MIN: f64 = 0.9;

/// Fit every recorded sample; `satisfies = μ ≥ mu_min ∧ r² ≥ r2_min`.
pub fn decay_class_report(traj: &TrajectoryRecord, mu_min: f64, r2_min: f64) -> Result<Vec<DecaySample>> {
    if traj.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    Ok(traj
        .times
        .iter()
        .zip(&traj.coefficients)
        .map(|(&t, c)| {
            let spec = modal_spectrum(c);
            if spec.zero_energy {
                return DecaySample { t, status: DecayStatus::ZeroEnergy, mu: None, r_squared: None, satisfies: false };
            }
            match fit_decay_profile(&spec) {
                Ok(fit) => DecaySample {
                    t,
                    status: DecayStatus::Fitted,
                    mu: Some(fit.mu),
                    r_squared: Some(fit.r_squared),
                    satisfies: fit.mu >= mu_min && fit.r_squared >= r2_min,
                },
                Err(_) => DecaySample {
                    t,
                    status: DecayStatus::InsufficientData,
                    mu: None,
                    r_squared: None,
                    satisfies: false,
                },
            }
        })
        .collect())
}
