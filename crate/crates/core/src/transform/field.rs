use super::grid::QuadratureGrid;
use crate::basis::{ModeIndex, ModeSet};
use crate::error::{Error, Result};
use crate::vec3::CVec3;
use num_complex::Complex64;
use rayon::prelude::*;
use std::borrow::Cow;
use std::sync::Arc;

type Callback<'a> = dyn Fn([f64; 3]) -> CVec3 + Send + Sync + 'a;

/// A vector field on the ball, given either lazily or as values on a grid.
pub enum SampledField<'a> {
    Callback { f: Box<Callback<'a>>, radius: f64 },
    Gridded { grid: Arc<QuadratureGrid>, values: Vec<CVec3> },
}

impl std::fmt::Debug for SampledField<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampledField::Callback { radius, .. } => f.debug_struct("Callback").field("radius", radius).finish(),
            SampledField::Gridded { grid, values } => {
                f.debug_struct("Gridded").field("counts", &grid.counts()).field("len", &values.len()).finish()
            }
        }
    }
}

impl<'a> SampledField<'a> {
    pub fn from_fn<F>(radius: f64, f: F) -> Self
    where
        F: Fn([f64; 3]) -> CVec3 + Send + Sync + 'a,
    {
        SampledField::Callback { f: Box::new(f), radius }
    }

    pub fn gridded(grid: Arc<QuadratureGrid>, values: Vec<CVec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!("{} field values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(SampledField::Gridded { grid, values })
    }

    pub fn radius(&self) -> f64 {
        match self {
            SampledField::Callback { radius, .. } => *radius,
            SampledField::Gridded { grid, .. } => grid.radius(),
        }
    }

    /// Values at the nodes of `grid`, evaluating a callback if needed.
    pub fn values_on(&self, grid: &QuadratureGrid) -> Result<Cow<'_, [CVec3]>> {
        match self {
            SampledField::Callback { f, radius } => {
                if (radius - grid.radius()).abs() > 1e-12 * radius {
                    return Err(Error::Dimension(format!(
                        "field radius {radius} does not match grid radius {}",
                        grid.radius()
                    )));
                }
                Ok(Cow::Owned(grid.nodes().par_iter().map(|n| f(n.x)).collect()))
            }
            SampledField::Gridded { grid: own, values } => {
                if !own.same_layout(grid) {
                    return Err(Error::Dimension(format!(
                        "field sampled on grid {:?} (R = {}) but quadrature grid is {:?} (R = {})",
                        own.counts(),
                        own.radius(),
                        grid.counts(),
                        grid.radius()
                    )));
                }
                Ok(Cow::Borrowed(values))
            }
        }
    }

    /// The field's own grid, if gridded.
    pub fn grid(&self) -> Option<&Arc<QuadratureGrid>> {
        match self {
            SampledField::Gridded { grid, .. } => Some(grid),
            SampledField::Callback { .. } => None,
        }
    }
}

/// Complex amplitudes over a [`ModeSet`], in mode-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    mode_set: ModeSet,
    values: Vec<Complex64>,
    real_field: bool,
}

impl CoefficientVector {
    pub fn new(mode_set: ModeSet, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != mode_set.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a mode set of {} modes",
                values.len(),
                mode_set.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite coefficient at mode {}", mode_set.modes()[i])));
        }
        Ok(Self { mode_set, values, real_field: false })
    }

    pub fn zeros(mode_set: ModeSet) -> Self {
        let n = mode_set.len();
        Self { mode_set, values: vec![Complex64::new(0.0, 0.0); n], real_field: false }
    }

    /// Unit vector at `mode`.
    pub fn unit(mode_set: ModeSet, mode: &ModeIndex) -> Result<Self> {
        let i = mode_set.index_of(mode).ok_or_else(|| Error::Index(format!("mode {mode} not in the mode set")))?;
        let mut v = Self::zeros(mode_set);
        v.values[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, mode: &ModeIndex) -> Option<Complex64> {
        self.mode_set.index_of(mode).map(|i| self.values[i])
    }

    pub fn set(&mut self, mode: &ModeIndex, value: Complex64) -> Result<()> {
        let i = self.mode_set.index_of(mode).ok_or_else(|| Error::Index(format!("mode {mode} not in the mode set")))?;
        self.values[i] = value;
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_real_field(&self) -> bool {
        self.real_field
    }

    /// Flag the vector as representing a real field. Fails unless
    /// `a_{ℓ,−m,n} = (−1)^m conj(a_{ℓmn})` holds within `1e-12`.
    pub fn mark_real_field(&mut self) -> Result<()> {
        let dev = self.conjugate_symmetry_defect();
        if dev > 1e-12 {
            return Err(Error::Domain(format!("conjugate symmetry violated by {dev:e}")));
        }
        self.real_field = true;
        Ok(())
    }

    /// `max |a_{ℓ,−m,n} − (−1)^m conj(a_{ℓmn})|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, mode) in self.mode_set.iter().enumerate() {
            if mode.m < 0 {
                continue;
            }
            let j = self.mode_set.index_of(&mode.mirrored()).expect("mirror in set");
            let target = sign_m(mode.m) * self.values[i].conj();
            worst = worst.max((self.values[j] - target).norm());
        }
        worst
    }

    /// Project onto conjugate-symmetric vectors and set the real-field flag.
    /// Returns the defect before projection.
    pub fn enforce_conjugate_symmetry(&mut self) -> f64 {
        let before = self.conjugate_symmetry_defect();
        project_conjugate_symmetric(&self.mode_set, &mut self.values);
        self.real_field = true;
        before
    }
}

#[inline]
pub(crate) fn sign_m(m: i32) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn project_conjugate_symmetric(mode_set: &ModeSet, values: &mut [Complex64]) {
    for (i, mode) in mode_set.iter().enumerate() {
        if mode.m < 0 {
            continue;
        }
        if mode.m == 0 {
            values[i] = Complex64::new(values[i].re, 0.0);
            continue;
        }
        let j = mode_set.index_of(&mode.mirrored()).expect("mirror in set");
        let s = sign_m(mode.m);
        let avg = 0.5 * (values[i] + s * values[j].conj());
        values[i] = avg;
        values[j] = s * avg.conj();
    }
}
