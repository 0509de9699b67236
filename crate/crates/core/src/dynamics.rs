//! Galerkin modal Navier–Stokes on the beam span.
//!
//! ```text
//! da_k/dt = Σ_{i,j} Γ^k_{ij} a_i a_j − ν λ_k a_k,   Γ^k_{ij} = −⟨(T_i·∇)T_j, T_k⟩
//! ```
//!
//! Γ is computed by quadrature with finite-difference gradients of the beams.
//! The pressure gradient drops out because every beam is divergence free and
//! tangential at the wall.

use crate::basis::{BeamBasis, ModeIndex, ModeSet};
use crate::error::{Error, Result};
use crate::fd;
use crate::transform::{project_conjugate_symmetric, CoefficientVector, QuadratureGrid};
use crate::vec3::{CVec3, CZERO3};
use crate::wigner::triangle_ok;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const CZERO: Complex64 = Complex64::new(0.0, 0.0);

/// FD step for beam gradients, relative to `R`.
pub const GRADIENT_STEP: f64 = 1e-4;

/// Admitted entries with `|Γ| ≤ PRUNE_TOLERANCE · max|Γ|` are quadrature
/// zeros (they vanish by parity) and are not stored.
pub const PRUNE_TOLERANCE: f64 = 1e-9;

/// `m_k = m_i + m_j` and `triangle(ℓ_i, ℓ_j, ℓ_k)`.
pub fn selection_prefilter(i: &ModeIndex, j: &ModeIndex, k: &ModeIndex) -> bool {
    k.m == i.m + j.m && triangle_ok(i.ell, j.ell, k.ell)
}

/// One stored coefficient `Γ^k_{ij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: Complex64,
}

/// Sparse Γ, entries sorted by `(k, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    mode_set: ModeSet,
    entries: Vec<GammaEntry>,
    /// `entries[offsets[k]..offsets[k+1]]` all have output `k`
    offsets: Vec<usize>,
    grid_counts: (usize, usize, usize),
    pub warning: Option<String>,
    /// Admitted triples dropped as quadrature zeros.
    pub pruned: usize,
}

impl CouplingTensor {
    /// Assemble from entries; sorts them and rejects indices out of range or
    /// outside the selection rules.
    pub fn from_entries(
        mode_set: ModeSet,
        mut entries: Vec<GammaEntry>,
        grid_counts: (usize, usize, usize),
    ) -> Result<Self> {
        let n = mode_set.len();
        if let Some(e) = entries.iter().find(|e| e.i >= n || e.j >= n || e.k >= n) {
            return Err(Error::Index(format!("entry ({}, {}, {}) exceeds mode count {n}", e.i, e.j, e.k)));
        }
        let modes = mode_set.modes();
        if let Some(e) = entries.iter().find(|e| !selection_prefilter(&modes[e.i], &modes[e.j], &modes[e.k])) {
            return Err(Error::Format(format!("entry ({}, {}, {}) violates the selection rules", e.i, e.j, e.k)));
        }
        if entries.iter().any(|e| !e.value.re.is_finite() || !e.value.im.is_finite()) {
            return Err(Error::Format("non-finite coupling entry".into()));
        }
        entries.sort_by_key(|e| (e.k, e.i, e.j));
        let mut offsets = vec![0; n + 1];
        for e in &entries {
            offsets[e.k + 1] += 1;
        }
        for k in 0..n {
            offsets[k + 1] += offsets[k];
        }
        Ok(Self { mode_set, entries, offsets, grid_counts, warning: None, pruned: 0 })
    }

    /// The same tensor with every entry set to zero (the purely viscous system).
    pub fn zeroed(mode_set: ModeSet) -> Self {
        let n = mode_set.len();
        Self {
            mode_set,
            entries: Vec::new(),
            offsets: vec![0; n + 1],
            grid_counts: (0, 0, 0),
            warning: None,
            pruned: 0,
        }
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    pub fn entries(&self) -> &[GammaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn grid_counts(&self) -> (usize, usize, usize) {
        self.grid_counts
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<Complex64> {
        let row = &self.entries[self.offsets[k]..self.offsets[k + 1]];
        row.binary_search_by_key(&(i, j), |e| (e.i, e.j)).ok().map(|p| row[p].value)
    }

    /// Stored entries over the dense `N³` cube.
    pub fn fill_fraction(&self) -> f64 {
        let n = self.mode_set.len() as f64;
        self.entries.len() as f64 / (n * n * n)
    }

    /// `Σ_{ij} Γ^k_{ij} a_i a_j` for every `k`.
    pub fn contract(&self, a: &[Complex64]) -> Vec<Complex64> {
        (0..self.mode_set.len())
            .into_par_iter()
            .map(|k| {
                self.entries[self.offsets[k]..self.offsets[k + 1]]
                    .iter()
                    .fold(CZERO, |acc, e| acc + e.value * a[e.i] * a[e.j])
            })
            .collect()
    }
}

/// All `(i, j, k)` admitted by [`selection_prefilter`], sorted.
pub fn admissible_triples(mode_set: &ModeSet) -> Vec<(usize, usize, usize)> {
    let modes = mode_set.modes();
    let mut out = Vec::new();
    for (k, mk) in modes.iter().enumerate() {
        for (i, mi) in modes.iter().enumerate() {
            for (j, mj) in modes.iter().enumerate() {
                if selection_prefilter(mi, mj, mk) {
                    out.push((i, j, k));
                }
            }
        }
    }
    out
}

/// Grid used for Γ by default: 1.5× the reference grid in each direction.
pub fn coupling_grid(l_max: u32, n_max: u32, radius: f64) -> Result<QuadratureGrid> {
    QuadratureGrid::reference(l_max, n_max, radius)?.scaled(1.5)
}

/// Beam values and their Cartesian gradients at one point.
/// `grad[d][j]` is `∂_d T_j`.
fn beams_and_gradients(
    basis: &BeamBasis,
    p: [f64; 3],
    beams: &mut [CVec3],
    grad: &mut [Vec<CVec3>; 3],
    scratch: &mut [CVec3],
) {
    let h = GRADIENT_STEP * basis.radius();
    basis.evaluate_all_at(p, beams);
    let eval = |q: [f64; 3], out: &mut [CVec3]| basis.evaluate_all_at(q, out);
    for (d, g) in grad.iter_mut().enumerate() {
        fd::partial_batched(&eval, p, d, h, scratch, g);
    }
}

#[inline]
fn convective(ti: &CVec3, grad: &[Vec<CVec3>; 3], j: usize) -> CVec3 {
    let mut out = CZERO3;
    for (d, g) in grad.iter().enumerate() {
        for c in 0..3 {
            out[c] += ti[d] * g[j][c];
        }
    }
    out
}

#[inline]
fn dot_conj(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

/// Quadrature of `−⟨(T_i·∇)T_j, T_k⟩` for an arbitrary list of triples,
/// whether or not the prefilter admits them. Shell partial sums are added in
/// order.
pub fn coupling_values(
    basis: &BeamBasis,
    grid: &QuadratureGrid,
    triples: &[(usize, usize, usize)],
) -> Result<Vec<Complex64>> {
    if (basis.radius() - grid.radius()).abs() > 1e-12 * basis.radius() {
        return Err(Error::Dimension("grid radius differs from basis radius".into()));
    }
    let n = basis.len();
    if triples.iter().any(|&(i, j, k)| i >= n || j >= n || k >= n) {
        return Err(Error::Index("triple index exceeds mode count".into()));
    }
    let mut pairs: Vec<(usize, usize)> = triples.iter().map(|&(i, j, _)| (i, j)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let pair_slot: Vec<usize> = triples.iter().map(|&(i, j, _)| pairs.binary_search(&(i, j)).unwrap()).collect();

    let shells: Vec<_> = grid.shells().collect();
    let partials: Vec<Vec<Complex64>> = shells
        .par_iter()
        .map(|shell| {
            let mut acc = vec![CZERO; triples.len()];
            let mut beams = vec![CZERO3; n];
            let mut scratch = vec![CZERO3; n];
            let mut grad = [vec![CZERO3; n], vec![CZERO3; n], vec![CZERO3; n]];
            let mut conv = vec![CZERO3; pairs.len()];
            for node in shell.iter() {
                beams_and_gradients(basis, node.x, &mut beams, &mut grad, &mut scratch);
                for (c, &(i, j)) in conv.iter_mut().zip(&pairs) {
                    *c = convective(&beams[i], &grad, j);
                }
                for ((a, &(_, _, k)), &s) in acc.iter_mut().zip(triples).zip(&pair_slot) {
                    *a -= dot_conj(&conv[s], &beams[k]) * node.w;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![CZERO; triples.len()];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(total)
}

/// Γ on every prefilter-admitted triple, quadrature zeros pruned.
pub fn compute_coupling_tensor(basis: &BeamBasis, grid: &QuadratureGrid) -> Result<CouplingTensor> {
    let ms = basis.mode_set();
    let triples = admissible_triples(ms);
    let values = coupling_values(basis, grid, &triples)?;
    let cutoff = PRUNE_TOLERANCE * values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let entries: Vec<GammaEntry> = triples
        .iter()
        .zip(values)
        .filter(|(_, v)| v.norm() > cutoff)
        .map(|(&(i, j, k), value)| GammaEntry { i, j, k, value })
        .collect();
    let pruned = triples.len() - entries.len();
    let mut tensor = CouplingTensor::from_entries(ms.clone(), entries, grid.counts())?;
    tensor.pruned = pruned;
    let (a, b, c) = QuadratureGrid::reference_counts(ms.l_max(), ms.n_max());
    let (na, nb, nc) = grid.counts();
    if 2 * na < 3 * a || 2 * nb < 3 * b || 2 * nc < 3 * c {
        tensor.warning = Some(format!(
            "grid ({na}, {nb}, {nc}) is coarser than 1.5x the reference grid ({a}, {b}, {c}); triple products may be under-resolved"
        ));
    }
    Ok(tensor)
}

/// `(da/dt)_k = Σ Γ^k_{ij} a_i a_j − ν λ_k a_k`.
pub fn rhs(a: &CoefficientVector, tensor: &CouplingTensor, basis: &BeamBasis, nu: f64) -> Result<CoefficientVector> {
    check_shapes(a.mode_set(), tensor, basis)?;
    let lambda = basis.eigenvalues();
    let values = rhs_values(a.values(), tensor, &lambda, nu);
    CoefficientVector::new(a.mode_set().clone(), values)
}

fn check_shapes(ms: &ModeSet, tensor: &CouplingTensor, basis: &BeamBasis) -> Result<()> {
    if !ms.same_as(tensor.mode_set()) || !ms.same_as(basis.mode_set()) {
        return Err(Error::Dimension("coefficient, tensor and basis mode sets differ".into()));
    }
    Ok(())
}

fn rhs_values(a: &[Complex64], tensor: &CouplingTensor, lambda: &[f64], nu: f64) -> Vec<Complex64> {
    let mut out = tensor.contract(a);
    for ((o, &x), &l) in out.iter_mut().zip(a).zip(lambda) {
        *o -= x * (nu * l);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// RK4 on the nonlinearity with the exact factor `e^{−νλt}` for viscosity.
    #[default]
    Rk4Exponential,
    Rk4Plain,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Rk4Exponential => "rk4_exponential",
            Integrator::Rk4Plain => "rk4_plain",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4_exponential" => Ok(Integrator::Rk4Exponential),
            "rk4_plain" => Ok(Integrator::Rk4Plain),
            other => Err(Error::Config(format!("unknown integrator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub real_field: bool,
    pub initial: CoefficientVector,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be at least dt, got {}", self.t_end)));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::Config(format!("nu must be nonnegative, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Samples of a run. `blow_up` holds the time of the first non-finite state;
/// samples stop at the last finite one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub coefficients: Vec<CoefficientVector>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// Conjugate-symmetry defect removed at each step (0 when `real_field` is off).
    pub projection_drift: Vec<f64>,
    pub blow_up: Option<f64>,
}

impl TrajectoryRecord {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            coefficients: Vec::new(),
            energy: Vec::new(),
            dissipation: Vec::new(),
            projection_drift: Vec::new(),
            blow_up: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append a sample, computing `E` and `D = 2ν Σ λ|a|²`.
    pub fn push(&mut self, t: f64, a: CoefficientVector, lambda: &[f64], nu: f64, drift: f64) {
        let e = a.norm_sqr();
        let d = 2.0 * nu * a.values().iter().zip(lambda).map(|(x, l)| l * x.norm_sqr()).sum::<f64>();
        self.times.push(t);
        self.coefficients.push(a);
        self.energy.push(e);
        self.dissipation.push(d);
        self.projection_drift.push(drift);
    }
}

impl Default for TrajectoryRecord {
    fn default() -> Self {
        Self::new()
    }
}

fn axpy_into(out: &mut [Complex64], x: &[Complex64], s: f64, y: &[Complex64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
        *o = a + b * s;
    }
}

struct Stepper<'a> {
    tensor: &'a CouplingTensor,
    lambda: Vec<f64>,
    nu: f64,
}

impl Stepper<'_> {
    fn nonlinear(&self, a: &[Complex64], h: f64) -> Vec<Complex64> {
        self.tensor.contract(a).into_iter().map(|v| v * h).collect()
    }

    fn full(&self, a: &[Complex64], h: f64) -> Vec<Complex64> {
        rhs_values(a, self.tensor, &self.lambda, self.nu).into_iter().map(|v| v * h).collect()
    }

    fn rk4_plain(&self, a: &[Complex64], h: f64) -> Vec<Complex64> {
        let n = a.len();
        let mut tmp = vec![CZERO; n];
        let k1 = self.full(a, h);
        axpy_into(&mut tmp, a, 0.5, &k1);
        let k2 = self.full(&tmp, h);
        axpy_into(&mut tmp, a, 0.5, &k2);
        let k3 = self.full(&tmp, h);
        axpy_into(&mut tmp, a, 1.0, &k3);
        let k4 = self.full(&tmp, h);
        (0..n).map(|q| a[q] + (k1[q] + 2.0 * (k2[q] + k3[q]) + k4[q]) / 6.0).collect()
    }

    /// Integrating-factor RK4 with `E = e^{−νλh}` and `E½ = e^{−νλh/2}`.
    fn rk4_exponential(&self, a: &[Complex64], h: f64) -> Vec<Complex64> {
        let n = a.len();
        let e: Vec<f64> = self.lambda.iter().map(|l| (-self.nu * l * h).exp()).collect();
        let eh: Vec<f64> = self.lambda.iter().map(|l| (-0.5 * self.nu * l * h).exp()).collect();
        let k1 = self.nonlinear(a, h);
        let tmp: Vec<Complex64> = (0..n).map(|q| (a[q] + 0.5 * k1[q]) * eh[q]).collect();
        let k2 = self.nonlinear(&tmp, h);
        let tmp: Vec<Complex64> = (0..n).map(|q| a[q] * eh[q] + 0.5 * k2[q]).collect();
        let k3 = self.nonlinear(&tmp, h);
        let tmp: Vec<Complex64> = (0..n).map(|q| a[q] * e[q] + k3[q] * eh[q]).collect();
        let k4 = self.nonlinear(&tmp, h);
        (0..n).map(|q| a[q] * e[q] + (k1[q] * e[q] + 2.0 * eh[q] * (k2[q] + k3[q]) + k4[q]) / 6.0).collect()
    }
}

/// Integrate from `t = 0` to `t_end`, recording every step. The final step
/// is shortened to land on `t_end` exactly.
pub fn integrate(config: &SimulationConfig, tensor: &CouplingTensor, basis: &BeamBasis) -> Result<TrajectoryRecord> {
    config.validate()?;
    check_shapes(config.initial.mode_set(), tensor, basis)?;
    let ms = config.initial.mode_set().clone();
    let stepper = Stepper { tensor, lambda: basis.eigenvalues(), nu: config.nu };

    let mut a = config.initial.values().to_vec();
    let mut drift0 = 0.0;
    if config.real_field {
        let mut c = config.initial.clone();
        drift0 = c.enforce_conjugate_symmetry();
        a = c.into_values();
    }
    let mut traj = TrajectoryRecord::new();
    traj.push(0.0, wrap(&ms, &a, config.real_field)?, &stepper.lambda, config.nu, drift0);

    let n_steps = ((config.t_end / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    for step in 1..=n_steps {
        let t_next = if step == n_steps { config.t_end } else { step as f64 * config.dt };
        let h = t_next - t;
        let mut next = match config.integrator {
            Integrator::Rk4Exponential => stepper.rk4_exponential(&a, h),
            Integrator::Rk4Plain => stepper.rk4_plain(&a, h),
        };
        if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            traj.blow_up = Some(t_next);
            return Ok(traj);
        }
        let mut drift = 0.0;
        if config.real_field {
            drift = symmetry_defect(&ms, &next);
            project_conjugate_symmetric(&ms, &mut next);
        }
        a = next;
        t = t_next;
        traj.push(t, wrap(&ms, &a, config.real_field)?, &stepper.lambda, config.nu, drift);
    }
    Ok(traj)
}

fn wrap(ms: &ModeSet, a: &[Complex64], real: bool) -> Result<CoefficientVector> {
    let mut c = CoefficientVector::new(ms.clone(), a.to_vec())?;
    if real {
        c.mark_real_field()?;
    }
    Ok(c)
}

fn symmetry_defect(ms: &ModeSet, a: &[Complex64]) -> f64 {
    CoefficientVector::new(ms.clone(), a.to_vec()).map(|c| c.conjugate_symmetry_defect()).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBudget {
    /// `max_t |E(t) − E(0)| / E(0)`; 0 for a zero trajectory.
    pub max_drift: f64,
    /// `|dE/dt + D|` at interior samples, central differences.
    pub balance_residual: Vec<f64>,
    pub max_balance_residual: f64,
}

/// Energy balance `dE/dt = −2ν Σ λ|a|²` checked on recorded samples.
///
/// `D` is recomputed from the coefficients with the given `ν`.
pub fn energy_budget(traj: &TrajectoryRecord, nu: f64, basis: &BeamBasis) -> Result<EnergyBudget> {
    if traj.len() < 3 {
        return Err(Error::InsufficientData(format!("energy budget needs at least 3 samples, got {}", traj.len())));
    }
    let lambda = basis.eigenvalues();
    let e = &traj.energy;
    let d: Vec<f64> = traj
        .coefficients
        .iter()
        .map(|c| 2.0 * nu * c.values().iter().zip(&lambda).map(|(x, l)| l * x.norm_sqr()).sum::<f64>())
        .collect();
    let e0 = e[0];
    let max_drift = if e0 == 0.0 { 0.0 } else { e.iter().map(|x| (x - e0).abs() / e0).fold(0.0, f64::max) };
    let balance_residual: Vec<f64> = (1..traj.len() - 1)
        .map(|s| {
            let dedt = (e[s + 1] - e[s - 1]) / (traj.times[s + 1] - traj.times[s - 1]);
            (dedt + d[s]).abs()
        })
        .collect();
    let max_balance_residual = balance_residual.iter().cloned().fold(0.0, f64::max);
    Ok(EnergyBudget { max_drift, balance_residual, max_balance_residual })
}

/// Random conjugate-symmetric coefficients scaled to `Σ|a|² = amplitude²`,
/// from a seeded ChaCha stream.
pub fn random_real_coefficients(mode_set: &ModeSet, amplitude: f64, seed: u64) -> Result<CoefficientVector> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::Config(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values: Vec<Complex64> =
        (0..mode_set.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    project_conjugate_symmetric(mode_set, &mut values);
    let norm = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v *= amplitude / norm);
    }
    let mut c = CoefficientVector::new(mode_set.clone(), values)?;
    c.mark_real_field()?;
    Ok(c)
}
