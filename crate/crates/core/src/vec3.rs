use num_complex::Complex64;

/// Complex Cartesian 3-vector.
pub type CVec3 = [Complex64; 3];

pub(crate) const CZERO3: CVec3 = [Complex64::new(0.0, 0.0); 3];

#[inline]
pub(crate) fn dot_conj(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

#[inline]
pub(crate) fn norm_sqr(a: &CVec3) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()
}

#[inline]
pub(crate) fn axpy(acc: &mut CVec3, s: Complex64, v: &CVec3) {
    acc[0] += s * v[0];
    acc[1] += s * v[1];
    acc[2] += s * v[2];
}
