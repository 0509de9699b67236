use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Largest order accepted by the public Bessel routines.
pub const MAX_BESSEL_ORDER: usize = 64;

const SERIES_LIMIT: f64 = 1.0;
const RESCALE_ABOVE: f64 = 1e250;

/// Spherical Bessel function of the first kind `j_ℓ(x)` for `x ≥ 0`.
pub fn spherical_bessel_j(ell: usize, x: f64) -> Result<f64> {
    check_order(ell)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("spherical_bessel_j requires finite x >= 0, got {x}")));
    }
    Ok(sph_jn(ell, x))
}

/// `j_ℓ'(x)`, via `j_0' = −j_1` and `j_ℓ' = j_{ℓ−1} − (ℓ+1)/x · j_ℓ`.
pub fn spherical_bessel_j_derivative(ell: usize, x: f64) -> Result<f64> {
    check_order(ell + 1)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("derivative requires finite x >= 0, got {x}")));
    }
    Ok(sph_jn_derivative(ell, x))
}

fn check_order(ell: usize) -> Result<()> {
    if ell > MAX_BESSEL_ORDER {
        return Err(Error::UnsupportedOrder { ell, max: MAX_BESSEL_ORDER });
    }
    Ok(())
}

pub(crate) fn sph_jn_derivative(ell: usize, x: f64) -> f64 {
    if ell == 0 {
        return -sph_jn(1, x);
    }
    if x == 0.0 {
        return if ell == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        // (ℓ j_{ℓ-1} - (ℓ+1) j_{ℓ+1}) / (2ℓ+1) avoids the 1/x cancellation
        let l = ell as f64;
        return (l * sph_jn(ell - 1, x) - (l + 1.0) * sph_jn(ell + 1, x)) / (2.0 * l + 1.0);
    }
    sph_jn(ell - 1, x) - (ell as f64 + 1.0) / x * sph_jn(ell, x)
}

/// Unchecked evaluation; `x` is treated as `|x|` with parity `(−1)^ℓ`.
pub(crate) fn sph_jn(ell: usize, x: f64) -> f64 {
    if x < 0.0 {
        let v = sph_jn(ell, -x);
        return if ell.is_multiple_of(2) { v } else { -v };
    }
    if x == 0.0 {
        return if ell == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        return series(ell, x);
    }
    if (ell as f64) <= x {
        return upward(ell, x);
    }
    miller(ell, x)
}

/// Power series `x^ℓ/(2ℓ+1)!! · Σ_k (−x²/2)^k / (k! (2ℓ+3)(2ℓ+5)…(2ℓ+2k+1))`.
fn series(ell: usize, x: f64) -> f64 {
    let mut prefactor = 1.0;
    for k in 0..ell {
        prefactor *= x / (2 * k + 3) as f64;
    }
    // prefactor = x^ℓ / (3·5·…·(2ℓ+1)) = x^ℓ / (2ℓ+1)!!
    let half_x2 = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -half_x2 / (k as f64 * (2 * ell + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

fn upward(ell: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if ell == 0 {
        return j0;
    }
    let j1 = (j0 - c) / x;
    let (mut prev, mut cur) = (j0, j1);
    for k in 1..ell {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Downward recurrence from well above `ℓ`, normalized against the closed
/// forms of `j_0` or `j_1`, whichever is larger in magnitude.
fn miller(ell: usize, x: f64) -> f64 {
    let start = ell + 40 + (x.sqrt() * 4.0) as usize;
    let mut next = 0.0; // j_{k+1}
    let mut cur = 1e-300; // j_k
    let mut at_ell = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // now cur = j_{k-1}, next = j_k
        if k == ell {
            at_ell = next;
        }
        if k == 1 {
            j1 = next;
        }
        if cur.abs() > RESCALE_ABOVE {
            cur /= RESCALE_ABOVE;
            next /= RESCALE_ABOVE;
            at_ell /= RESCALE_ABOVE;
            j1 /= RESCALE_ABOVE;
        }
    }
    let j0 = cur;
    if ell == 0 {
        at_ell = j0;
    }
    let (s, c) = x.sin_cos();
    let true_j0 = s / x;
    let true_j1 = (true_j0 - c) / x;
    if true_j0.abs() >= true_j1.abs() {
        at_ell * (true_j0 / j0)
    } else {
        at_ell * (true_j1 / j1)
    }
}

/// First `count` positive zeros of `j_ℓ`, strictly increasing.
///
/// Zeros of `j_{ℓ+1}` interlace those of `j_ℓ`, so starting from the zeros
/// `kπ` of `j_0` every level is found by bisection inside a guaranteed
/// bracket, followed by a Newton polish.
pub fn spherical_bessel_zeros(ell: usize, count: usize) -> Result<Vec<f64>> {
    check_order(ell + 1)?;
    if count == 0 {
        return Err(Error::Config("spherical_bessel_zeros requires count >= 1".into()));
    }
    let mut zeros: Vec<f64> = (1..=count + ell).map(|k| k as f64 * PI).collect();
    for order in 1..=ell {
        zeros = zeros.windows(2).map(|w| refine_zero(order, w[0], w[1])).collect();
    }
    zeros.truncate(count);
    Ok(zeros)
}

fn refine_zero(ell: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = sph_jn(ell, lo);
    debug_assert!(f_lo * sph_jn(ell, hi) < 0.0, "bracket without sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = sph_jn(ell, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let d = sph_jn_derivative(ell, x);
    if d != 0.0 {
        let polished = x - sph_jn(ell, x) / d;
        if polished >= lo && polished <= hi && sph_jn(ell, polished).abs() <= sph_jn(ell, x).abs() {
            return polished;
        }
    }
    x
}
