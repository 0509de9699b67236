#![allow(dead_code)]

use dfrt_core::basis::ModeSet;
use dfrt_core::transform::CoefficientVector;
use dfrt_core::wigner::triangle_ok;
use dfrt_core::{CVec3, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex vector crossed with a real one.
pub fn cross(a: [Complex64; 3], b: [f64; 3]) -> CVec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(v: &CVec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `u = ∇ψ × r̂` for `ψ = (R − r)² z (x + iy)`: angular content `ℓ = 2, m = 1`
/// only, radial profile outside every finite Bessel span.
pub fn toroidal_field_a(radius: f64) -> impl Fn([f64; 3]) -> CVec3 + Send + Sync + Copy {
    move |p: [f64; 3]| {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r == 0.0 {
            return [Complex64::new(0.0, 0.0); 3];
        }
        let s = (radius - r).powi(2) / r;
        let g = [Complex64::new(p[2], 0.0), Complex64::new(0.0, p[2]), Complex64::new(p[0], p[1])];
        cross(g, p).map(|c| c * s)
    }
}

/// `u = ∇ψ × x` for `ψ = (R² − r²) e^{z/R} (x + iy)/R`: smooth, every `ℓ ≥ 1`.
pub fn toroidal_field_b(radius: f64) -> impl Fn([f64; 3]) -> CVec3 + Send + Sync + Copy {
    move |p: [f64; 3]| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let e = (p[2] / radius).exp();
        let w = Complex64::new(p[0], p[1]) / radius;
        let s = (radius * radius - r2) * e;
        // the −2x·(…) part of ∇ψ is parallel to x and drops out
        let g = [Complex64::new(1.0 / radius, 0.0), Complex64::new(0.0, 1.0 / radius), w / radius];
        cross(g, p).map(|c| c * s)
    }
}

pub fn random_coeffs(ms: &ModeSet, rng: &mut ChaCha8Rng) -> CoefficientVector {
    let v = (0..ms.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    CoefficientVector::new(ms.clone(), v).unwrap()
}

pub fn random_interior(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 3] {
    loop {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let r2: f64 = p.iter().map(|x| x * x).sum();
        if r2 < 0.95 * 0.95 && r2 > 1e-4 {
            return p.map(|x| x * radius);
        }
    }
}

pub const NILPOTENCY_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/nilpotency.json");

/// The ten archived cochains of the nilpotency regression: seeds 100..110 on
/// the (3, 2) basis, unit-norm complex coefficients.
pub fn nilpotency_cochains(ms: &ModeSet) -> Vec<(u64, dfrt_core::cohomology::Cochain)> {
    (100..110)
        .map(|seed| {
            let mut c = random_coeffs(ms, &mut rng(seed));
            let s = c.norm_sqr().sqrt();
            c.values_mut().iter_mut().for_each(|v| *v /= s);
            (seed, dfrt_core::cohomology::Cochain::new(c, 0))
        })
        .collect()
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct NilpotencyFixture {
    pub seed: u64,
    pub reports: Vec<dfrt_core::cohomology::NilpotencyReport>,
}

/// Run the full sweep over the archived cochains.
pub fn nilpotency_sweep_all(basis: &dfrt_core::basis::BeamBasis) -> Vec<NilpotencyFixture> {
    use dfrt_core::cohomology::{nilpotency_sweep, RadialKernel, DEFAULT_SPIN_SWEEP};
    nilpotency_cochains(basis.mode_set())
        .into_iter()
        .map(|(seed, a)| NilpotencyFixture {
            seed,
            reports: nilpotency_sweep(
                &a,
                basis,
                &DEFAULT_SPIN_SWEEP,
                &[RadialKernel::TripleOverlap, RadialKernel::Unit],
            )
            .unwrap(),
        })
        .collect()
}

/// Relative agreement of two sweeps; `None` when the layouts differ.
pub fn nilpotency_max_deviation(a: &[NilpotencyFixture], b: &[NilpotencyFixture]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
    let mut worst = 0.0f64;
    for (p, q) in a.iter().zip(b) {
        if p.seed != q.seed || p.reports.len() != q.reports.len() {
            return None;
        }
        for (r, s) in p.reports.iter().zip(&q.reports) {
            if r.spins != s.spins || r.kernel != s.kernel {
                return None;
            }
            for (x, y) in [
                (r.norm_a, s.norm_a),
                (r.norm_da, s.norm_da),
                (r.norm_dda, s.norm_dda),
                (r.ratio, s.ratio),
                (r.linear_chain_norm, s.linear_chain_norm),
            ] {
                if !x.is_finite() || !y.is_finite() {
                    return None;
                }
                if x != y {
                    worst = worst.max(rel(x, y));
                }
            }
        }
    }
    Some(worst)
}

/// Γ for (3, 2), R = 1 on the default coupling grid, cached on disk under the
/// cargo target directory so every test binary pays the quadrature once.
pub fn shared_gamma() -> &'static (dfrt_core::basis::BeamBasis, dfrt_core::dynamics::CouplingTensor) {
    use std::sync::OnceLock;
    static CELL: OnceLock<(dfrt_core::basis::BeamBasis, dfrt_core::dynamics::CouplingTensor)> = OnceLock::new();
    CELL.get_or_init(|| {
        let basis = dfrt_core::basis::BeamBasis::with_truncation(3, 2, 1.0).unwrap();
        let grid = dfrt_core::dynamics::coupling_grid(3, 2, 1.0).unwrap();
        let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("gamma-cache");
        let (t, _) = dfrt_core::io::cached_coupling_tensor(&basis, &grid, Some(&dir)).unwrap();
        (basis, t)
    })
}

/// Plain bisection on the Gibbs mean, written without the library helpers.
pub fn bisection_beta(lambda: &[f64], c: f64) -> f64 {
    let mean = |b: f64| {
        let top = lambda.iter().map(|l| b * l).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m) = (0.0, 0.0);
        for l in lambda {
            let w = (b * l - top).exp();
            z += w;
            m += w * l;
        }
        m / z
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean(lo) > c {
        lo *= 2.0;
    }
    while mean(hi) < c {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mean(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random points of {Q ≥ 0, ΣQ = 1, ΣλQ = C}: P* moved along a random
/// direction orthogonal to both constraint rows, kept nonnegative.
pub fn feasible_neighbour(p: &[f64], lambda: &[f64], r: &mut ChaCha8Rng) -> Vec<f64> {
    let k = p.len();
    let mut v: Vec<f64> = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
    let ones = vec![1.0 / (k as f64).sqrt(); k];
    let lm = lambda.iter().sum::<f64>() / k as f64;
    let mut u: Vec<f64> = lambda.iter().map(|l| l - lm).collect();
    let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= un);
    for basis in [&ones, &u] {
        let d: f64 = v.iter().zip(basis.iter()).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(basis.iter()).for_each(|(a, b)| *a -= d * b);
    }
    let t_max = p.iter().zip(&v).filter(|(_, &vi)| vi < 0.0).map(|(&pi, &vi)| -pi / vi).fold(f64::INFINITY, f64::min);
    let t = t_max * r.random_range(0.0..1.0);
    p.iter().zip(&v).map(|(a, b)| (a + t * b).max(0.0)).collect()
}

/// Random 9-tuples with `j ≤ 5` whose right-hand side triads all close and
/// whose summation range is nonempty.
pub fn admissible_tuples(n: usize, seed: u64) -> Vec<[u32; 9]> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let t: [u32; 9] = std::array::from_fn(|_| rng.random_range(0..=5));
        let [a, b, c, d, e, f, p, q, r] = t;
        let triads = [(p, q, r), (p, a, d), (e, q, d), (e, a, r), (p, b, c), (f, q, c), (f, b, r)];
        let x_min = a.abs_diff(b).max(c.abs_diff(d)).max(e.abs_diff(f));
        let x_max = (a + b).min(c + d).min(e + f);
        if triads.iter().all(|&(x, y, z)| triangle_ok(x, y, z)) && x_min <= x_max {
            out.push(t);
        }
    }
    out
}
