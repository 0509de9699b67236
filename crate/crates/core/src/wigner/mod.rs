//! Wigner 3j and 6j symbols and Clebsch–Gordan coefficients for integer
//! angular momenta.
//!
//! Production values come from the Racah single-sum formulas evaluated with
//! a log-factorial table and compensated summation. [`exact`] evaluates the
//! same symbols in big-rational arithmetic; it backs the test suite and the
//! exact output of the command-line tool and is not used on hot paths.
//!
//! Selection-rule violations (triangle, `m1 + m2 + m3 ≠ 0`) give `0.0`,
//! never an error.

pub mod exact;

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Largest angular momentum the factorial table is sized for.
pub const MAX_J: u32 = 64;

const TABLE_LEN: usize = 4 * MAX_J as usize + 2;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(TABLE_LEN);
        let mut fact = 1.0f64;
        let mut acc = 0.0f64;
        for n in 0..TABLE_LEN {
            if n > 0 {
                fact *= n as f64;
                acc += (n as f64).ln();
            }
            // n! is finite in f64 up to 170
            out.push(if n <= 170 { fact.ln() } else { acc });
        }
        out
    })
}

#[inline]
fn lf(n: i64) -> f64 {
    debug_assert!(n >= 0);
    ln_factorials()[n as usize]
}

/// Compensated (Kahan–Babuška) accumulator.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[inline]
fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `|a − b| ≤ c ≤ a + b`.
pub fn triangle_ok(a: u32, b: u32, c: u32) -> bool {
    a.abs_diff(b) <= c && c <= a + b
}

/// Arguments of a 3j symbol `(j1 j2 j3; m1 m2 m3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreeJArgs {
    pub j1: u32,
    pub j2: u32,
    pub j3: u32,
    pub m1: i32,
    pub m2: i32,
    pub m3: i32,
}

impl ThreeJArgs {
    pub fn new(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> Result<Self> {
        let args = Self { j1, j2, j3, m1, m2, m3 };
        args.validate()?;
        Ok(args)
    }

    fn validate(&self) -> Result<()> {
        for (j, m) in [(self.j1, self.m1), (self.j2, self.m2), (self.j3, self.m3)] {
            if m.unsigned_abs() > j {
                return Err(Error::Index(format!("|m| = {} exceeds j = {j}", m.abs())));
            }
            if j > MAX_J {
                return Err(Error::UnsupportedOrder { ell: j as usize, max: MAX_J as usize });
            }
        }
        Ok(())
    }
}

/// Arguments of a 6j symbol `{j1 j2 j3; j4 j5 j6}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SixJArgs(pub [u32; 6]);

/// Wigner 3j symbol.
pub fn wigner_3j(args: ThreeJArgs) -> Result<f64> {
    args.validate()?;
    Ok(three_j(args.j1, args.j2, args.j3, args.m1, args.m2, args.m3))
}

/// Unchecked 3j; the caller guarantees `|m_i| ≤ j_i ≤ MAX_J`.
pub(crate) fn three_j(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return 0.0;
    }
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    let ln_pref = lf(j1 + j2 - j3) + lf(j1 - j2 + j3) + lf(-j1 + j2 + j3) - lf(j1 + j2 + j3 + 1)
        + lf(j1 + m1)
        + lf(j1 - m1)
        + lf(j2 + m2)
        + lf(j2 - m2)
        + lf(j3 + m3)
        + lf(j3 - m3);
    let half = 0.5 * ln_pref;
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut acc = Kahan::default();
    for k in k_min..=k_max {
        let denom = lf(k)
            + lf(j3 - j2 + k + m1)
            + lf(j3 - j1 + k - m2)
            + lf(j1 + j2 - j3 - k)
            + lf(j1 - k - m1)
            + lf(j2 - k + m2);
        acc.add(parity(k) * (half - denom).exp());
    }
    parity(j1 - j2 - m3) * acc.value()
}

/// Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | j3 m3⟩`
/// `= (−1)^{j1−j2+m3} √(2j3+1) (j1 j2 j3; m1 m2 −m3)`.
pub fn clebsch_gordan(j1: u32, m1: i32, j2: u32, m2: i32, j3: u32, m3: i32) -> Result<f64> {
    ThreeJArgs { j1, j2, j3, m1, m2, m3 }.validate()?;
    Ok(cg(j1, m1, j2, m2, j3, m3))
}

pub(crate) fn cg(j1: u32, m1: i32, j2: u32, m2: i32, j3: u32, m3: i32) -> f64 {
    if m1 + m2 != m3 {
        return 0.0;
    }
    let phase = parity(j1 as i64 - j2 as i64 + m3 as i64);
    phase * ((2 * j3 + 1) as f64).sqrt() * three_j(j1, j2, j3, m1, m2, -m3)
}

/// Wigner 6j symbol by the Racah sum. Zero when any of the four triads
/// `{j1 j2 j3}`, `{j1 j5 j6}`, `{j4 j2 j6}`, `{j4 j5 j3}` fails the triangle rule.
pub fn wigner_6j(args: SixJArgs) -> f64 {
    let [a, b, c, d, e, f] = args.0;
    if args.0.iter().any(|&j| j > MAX_J) {
        return f64::NAN;
    }
    six_j(a, b, c, d, e, f)
}

fn ln_delta(a: i64, b: i64, c: i64) -> f64 {
    lf(a + b - c) + lf(a - b + c) + lf(-a + b + c) - lf(a + b + c + 1)
}

pub(crate) fn six_j(j1: u32, j2: u32, j3: u32, j4: u32, j5: u32, j6: u32) -> f64 {
    if !(triangle_ok(j1, j2, j3) && triangle_ok(j1, j5, j6) && triangle_ok(j4, j2, j6) && triangle_ok(j4, j5, j3)) {
        return 0.0;
    }
    let [j1, j2, j3, j4, j5, j6] = [j1, j2, j3, j4, j5, j6].map(|j| j as i64);
    let half = 0.5 * (ln_delta(j1, j2, j3) + ln_delta(j1, j5, j6) + ln_delta(j4, j2, j6) + ln_delta(j4, j5, j3));
    let a = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3];
    let b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4];
    let t_min = *a.iter().max().unwrap();
    let t_max = *b.iter().min().unwrap();
    let mut acc = Kahan::default();
    for t in t_min..=t_max {
        let mut ln_term = half + lf(t + 1);
        for &ai in &a {
            ln_term -= lf(t - ai);
        }
        for &bi in &b {
            ln_term -= lf(bi - t);
        }
        acc.add(parity(t) * ln_term.exp());
    }
    acc.value()
}

/// `|LHS − RHS|` of the Biedenharn–Elliott identity for
/// `j = (a, b, c, d, e, f, p, q, r)`:
///
/// ```text
/// Σ_x (−1)^{S+x} (2x+1) {a b x; c d p} {c d x; e f q} {e f x; b a r}
///     = {p q r; e a d} {p q r; f b c},      S = a+b+c+d+e+f+p+q+r
/// ```
///
/// `x` runs over every value admitted by the triangles `{a b x}`, `{c d x}`,
/// `{e f x}`.
pub fn biedenharn_elliott_residual(j: [u32; 9]) -> f64 {
    let (lhs, rhs) = biedenharn_elliott_sides(j);
    (lhs - rhs).abs()
}

pub(crate) fn biedenharn_elliott_sides(j: [u32; 9]) -> (f64, f64) {
    let [a, b, c, d, e, f, p, q, r] = j;
    let s: i64 = j.iter().map(|&v| v as i64).sum();
    let x_min = a.abs_diff(b).max(c.abs_diff(d)).max(e.abs_diff(f));
    let x_max = (a + b).min(c + d).min(e + f);
    let mut lhs = Kahan::default();
    for x in x_min..=x_max {
        let term = six_j(a, b, x, c, d, p) * six_j(c, d, x, e, f, q) * six_j(e, f, x, b, a, r);
        lhs.add(parity(s + x as i64) * (2 * x + 1) as f64 * term);
    }
    let rhs = six_j(p, q, r, e, a, d) * six_j(p, q, r, f, b, c);
    (lhs.value(), rhs)
}
