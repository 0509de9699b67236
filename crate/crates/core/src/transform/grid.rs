use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// One quadrature node on the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub x: [f64; 3],
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    /// Full volume weight, `r²` Jacobian included.
    pub w: f64,
}

/// Tensor-product quadrature on the ball of radius `R`: Gauss–Legendre in
/// `r` (weights carry `r²`), Gauss–Legendre in `cos θ`, uniform trapezoid
/// in `φ`. Nodes are ordered `r` outer, `θ` middle, `φ` inner, each
/// ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    n_r: usize,
    n_theta: usize,
    n_phi: usize,
    radius: f64,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    polar_nodes: Vec<f64>,
    polar_weights: Vec<f64>,
    azimuthal_nodes: Vec<f64>,
    nodes: Vec<GridNode>,
}

/// Build a grid and certify it on test integrands.
pub fn build_grid(n_r: usize, n_theta: usize, n_phi: usize, domain_radius: f64) -> Result<QuadratureGrid> {
    QuadratureGrid::new(n_r, n_theta, n_phi, domain_radius)
}

impl QuadratureGrid {
    pub fn new(n_r: usize, n_theta: usize, n_phi: usize, radius: f64) -> Result<Self> {
        if n_r < 2 || n_theta < 2 || n_phi < 4 {
            return Err(Error::Config(format!(
                "grid counts must satisfy n_r >= 2, n_theta >= 2, n_phi >= 4 (got {n_r}, {n_theta}, {n_phi})"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("grid radius must be positive, got {radius}")));
        }
        let (t, wt) = gauss_legendre(n_r);
        let radial_nodes: Vec<f64> = t.iter().map(|&s| 0.5 * radius * (s + 1.0)).collect();
        let radial_weights: Vec<f64> = radial_nodes.iter().zip(&wt).map(|(&r, &w)| 0.5 * radius * w * r * r).collect();
        // ascending θ ⇔ descending cos θ
        let (mut c, mut wc) = gauss_legendre(n_theta);
        c.reverse();
        wc.reverse();
        let azimuthal_nodes: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect();
        let w_phi = 2.0 * PI / n_phi as f64;

        let mut nodes = Vec::with_capacity(n_r * n_theta * n_phi);
        for (&r, &wr) in radial_nodes.iter().zip(&radial_weights) {
            for (&ct, &wct) in c.iter().zip(&wc) {
                let theta = ct.clamp(-1.0, 1.0).acos();
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                for &phi in &azimuthal_nodes {
                    let (sp, cp) = phi.sin_cos();
                    nodes.push(GridNode { x: [r * st * cp, r * st * sp, r * ct], r, theta, phi, w: wr * wct * w_phi });
                }
            }
        }
        let grid = Self {
            n_r,
            n_theta,
            n_phi,
            radius,
            radial_nodes,
            radial_weights,
            polar_nodes: c,
            polar_weights: wc,
            azimuthal_nodes,
            nodes,
        };
        grid.certify()?;
        Ok(grid)
    }

    /// Default grid for a `(l_max, n_max)` truncation:
    /// `(4 n_max + 16, 2 l_max + 16, 4 l_max + 16)`.
    pub fn reference(l_max: u32, n_max: u32, radius: f64) -> Result<Self> {
        let (a, b, c) = Self::reference_counts(l_max, n_max);
        Self::new(a, b, c, radius)
    }

    pub fn reference_counts(l_max: u32, n_max: u32) -> (usize, usize, usize) {
        (4 * n_max as usize + 16, 2 * l_max as usize + 16, 4 * l_max as usize + 16)
    }

    fn certify(&self) -> Result<()> {
        let volume = 4.0 * PI * self.radius.powi(3) / 3.0;
        let total: f64 = self.nodes.iter().map(|n| n.w).sum();
        if (total - volume).abs() > 1e-12 * volume {
            return Err(Error::Config(format!("grid certification failed: weight sum {total} vs volume {volume}")));
        }
        // highest radial power the rule is exact for: ∫ r^{2n_r−1} r² dr
        let deg = 2 * self.n_r as i32 - 1;
        let approx: f64 =
            self.radial_nodes.iter().zip(&self.radial_weights).map(|(r, w)| w * (r / self.radius).powi(deg - 2)).sum();
        let exact = self.radius.powi(3) / (deg + 1) as f64;
        if (approx - exact).abs() > 1e-11 * exact {
            return Err(Error::Config("grid certification failed on radial polynomial".into()));
        }
        Ok(())
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n_r, self.n_theta, self.n_phi)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial_nodes
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// `cos θ` nodes in ascending-θ order.
    pub fn polar_nodes(&self) -> &[f64] {
        &self.polar_nodes
    }

    pub fn polar_weights(&self) -> &[f64] {
        &self.polar_weights
    }

    pub fn azimuthal_nodes(&self) -> &[f64] {
        &self.azimuthal_nodes
    }

    /// Nodes grouped by radial shell, in order.
    pub fn shells(&self) -> std::slice::Chunks<'_, GridNode> {
        self.nodes.chunks(self.n_theta * self.n_phi)
    }

    /// Same layout (counts and radius).
    pub fn same_layout(&self, other: &QuadratureGrid) -> bool {
        self.counts() == other.counts() && self.radius == other.radius
    }

    /// Grid with every count multiplied by `factor` (rounded up).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let s = |n: usize| (n as f64 * factor).ceil() as usize;
        Self::new(s(self.n_r), s(self.n_theta), s(self.n_phi), self.radius)
    }
}
