//! Fourth-order central finite differences on Cartesian vector fields.

use crate::vec3::{CVec3, CZERO3};

const FIRST: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// `∂_axis v` at `p`, for every output of a batched evaluator.
///
/// `eval(q, out)` writes one vector per output into `out`. `out` receives
/// the derivative of each. `scratch` must have the same length as `out`.
pub(crate) fn partial_batched<F>(eval: &F, p: [f64; 3], axis: usize, h: f64, scratch: &mut [CVec3], out: &mut [CVec3])
where
    F: Fn([f64; 3], &mut [CVec3]),
{
    out.iter_mut().for_each(|v| *v = CZERO3);
    for &(offset, weight) in &FIRST {
        let mut q = p;
        q[axis] += offset * h;
        eval(q, scratch);
        let w = weight / (12.0 * h);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            for c in 0..3 {
                o[c] += s[c] * w;
            }
        }
    }
}

/// Divergence of a single vector field.
pub(crate) fn divergence<F>(f: &F, p: [f64; 3], h: f64) -> num_complex::Complex64
where
    F: Fn([f64; 3]) -> CVec3,
{
    let mut div = num_complex::Complex64::new(0.0, 0.0);
    for axis in 0..3 {
        for &(offset, weight) in &FIRST {
            let mut q = p;
            q[axis] += offset * h;
            div += f(q)[axis] * (weight / (12.0 * h));
        }
    }
    div
}

/// Vector Laplacian `Σ_axis ∂²_axis v`.
pub(crate) fn laplacian<F>(f: &F, p: [f64; 3], h: f64) -> CVec3
where
    F: Fn([f64; 3]) -> CVec3,
{
    const SECOND: [(f64, f64); 5] = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
    let mut out = CZERO3;
    for axis in 0..3 {
        for &(offset, weight) in &SECOND {
            let mut q = p;
            q[axis] += offset * h;
            let v = f(q);
            let w = weight / (12.0 * h * h);
            for c in 0..3 {
                out[c] += v[c] * w;
            }
        }
    }
    out
}
