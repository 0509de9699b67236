//! Exact evaluation of 3j and 6j symbols in big-rational arithmetic.
//!
//! Every symbol has the form `±√(p/q)` with `p/q` rational; [`ExactValue`]
//! stores the sign and the rational square.

use super::triangle_ok;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// `sign · √square`, with `square ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactValue {
    pub negative: bool,
    pub square: BigRational,
}

impl ExactValue {
    pub fn zero() -> Self {
        Self { negative: false, square: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let v = self.square.to_f64().unwrap_or(f64::NAN).sqrt();
        if self.negative {
            -v
        } else {
            v
        }
    }

    /// Multiply by a signed integer factor `k`: `k·√s = sign(k)·√(k² s)`.
    fn scaled(self, k: i64) -> Self {
        let negative = self.negative ^ (k < 0);
        let k2 = BigInt::from(k) * BigInt::from(k);
        Self { negative, square: self.square * BigRational::from_integer(k2) }
    }
}

impl fmt::Display for ExactValue {
    /// Renders e.g. `-1/sqrt(3)`, `1/6`, `2*sqrt(5)/(3*sqrt(7))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let (na, nr) = split_square(&self.square.numer().magnitude().clone());
        let (da, dr) = split_square(&self.square.denom().magnitude().clone());
        let g = na.gcd(&da);
        let (na, da) = (na / &g, da / &g);
        let one = BigUint::one();
        let side = |a: &BigUint, r: &BigUint| -> (String, bool) {
            match (a == &one, r == &one) {
                (_, true) => (a.to_string(), false),
                (true, false) => (format!("sqrt({r})"), false),
                (false, false) => (format!("{a}*sqrt({r})"), true),
            }
        };
        let (num, _) = side(&na, &nr);
        let (den, compound) = side(&da, &dr);
        let sign = if self.negative { "-" } else { "" };
        if den == "1" {
            write!(f, "{sign}{num}")
        } else if compound {
            write!(f, "{sign}{num}/({den})")
        } else {
            write!(f, "{sign}{num}/{den}")
        }
    }
}

/// Split `n = a² · r` by trial division; `r` is square-free whenever `n`
/// has no prime factor above the trial bound.
fn split_square(n: &BigUint) -> (BigUint, BigUint) {
    let mut rest = n.clone();
    let mut a = BigUint::one();
    let mut d = 2u64;
    while d < 100_000 {
        let dd = BigUint::from(d * d);
        if dd > rest {
            break;
        }
        let db = BigUint::from(d);
        while (&rest % &dd).is_zero() {
            rest /= &dd;
            a *= &db;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    (a, rest)
}

fn factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

fn rat(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

fn delta(a: i64, b: i64, c: i64) -> BigRational {
    rat(factorial(a + b - c) * factorial(a - b + c) * factorial(-a + b + c), factorial(a + b + c + 1))
}

fn sign_of(sum: &BigRational, phase_negative: bool) -> bool {
    (sum.numer().sign() == Sign::Minus) ^ phase_negative
}

/// Exact `(j1 j2 j3; m1 m2 m3)`; zero on any selection-rule violation or
/// `|m_i| > j_i`.
pub fn wigner_3j_exact(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> ExactValue {
    if m1.unsigned_abs() > j1 || m2.unsigned_abs() > j2 || m3.unsigned_abs() > j3 {
        return ExactValue::zero();
    }
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return ExactValue::zero();
    }
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    let pref = delta(j1, j2, j3)
        * BigRational::from_integer(
            factorial(j1 + m1)
                * factorial(j1 - m1)
                * factorial(j2 + m2)
                * factorial(j2 - m2)
                * factorial(j3 + m3)
                * factorial(j3 - m3),
        );
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(j3 - j2 + k + m1)
            * factorial(j3 - j1 + k - m2)
            * factorial(j1 + j2 - j3 - k)
            * factorial(j1 - k - m1)
            * factorial(j2 - k + m2);
        let num = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        sum += rat(num, den);
    }
    if sum.is_zero() {
        return ExactValue::zero();
    }
    let phase_negative = (j1 - j2 - m3).rem_euclid(2) == 1;
    ExactValue { negative: sign_of(&sum, phase_negative), square: pref * &sum * &sum }
}

/// Exact Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | j3 m3⟩`.
pub fn clebsch_gordan_exact(j1: u32, m1: i32, j2: u32, m2: i32, j3: u32, m3: i32) -> ExactValue {
    if m1 + m2 != m3 {
        return ExactValue::zero();
    }
    let v = wigner_3j_exact(j1, j2, j3, m1, m2, -m3);
    let mut out =
        ExactValue { negative: v.negative, square: v.square * BigRational::from_integer(BigInt::from(2 * j3 + 1)) };
    if (j1 as i64 - j2 as i64 + m3 as i64).rem_euclid(2) == 1 {
        out = out.scaled(-1);
    }
    out
}

/// Exact `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j_exact(j: [u32; 6]) -> ExactValue {
    let [j1, j2, j3, j4, j5, j6] = j;
    if !(triangle_ok(j1, j2, j3) && triangle_ok(j1, j5, j6) && triangle_ok(j4, j2, j6) && triangle_ok(j4, j5, j3)) {
        return ExactValue::zero();
    }
    let [j1, j2, j3, j4, j5, j6] = j.map(|v| v as i64);
    let pref = delta(j1, j2, j3) * delta(j1, j5, j6) * delta(j4, j2, j6) * delta(j4, j5, j3);
    let a = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3];
    let b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4];
    let t_min = *a.iter().max().unwrap();
    let t_max = *b.iter().min().unwrap();
    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let mut den = BigInt::one();
        for &ai in &a {
            den *= factorial(t - ai);
        }
        for &bi in &b {
            den *= factorial(bi - t);
        }
        let mut num = factorial(t + 1);
        if t % 2 == 1 {
            num = -num;
        }
        sum += rat(num, den);
    }
    if sum.is_zero() {
        return ExactValue::zero();
    }
    ExactValue { negative: sum.is_negative(), square: pref * &sum * &sum }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(wigner_3j_exact(1, 1, 0, 0, 0, 0).to_string(), "-1/sqrt(3)");
        assert_eq!(wigner_6j_exact([1, 1, 1, 1, 1, 1]).to_string(), "1/6");
        assert_eq!(wigner_3j_exact(1, 1, 0, 1, 0, 0).to_string(), "0");
        assert_eq!(clebsch_gordan_exact(1, 0, 0, 0, 1, 0).to_string(), "1");
    }

    #[test]
    fn exact_to_float() {
        let v = wigner_3j_exact(1, 1, 0, 0, 0, 0).to_f64();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }
}
