mod common;

use common::{norm, random_coeffs, random_interior, rng, toroidal_field_a, toroidal_field_b};
use dfrt_core::basis::{BeamBasis, ModeIndex, ModeSet};
use dfrt_core::special_fn::{spherical_harmonic, SphericalPoint};
use dfrt_core::transform::{
    build_grid, completeness_decay, forward_transform, gram_report, inner_product, inverse_transform, parseval_report,
    synthesize_on_grid, CoefficientVector, QuadratureGrid, SampledField,
};
use dfrt_core::{CVec3, Complex64, Error};
use std::f64::consts::PI;
use std::sync::Arc;

fn mode(l: u32, m: i32, n: u32) -> ModeIndex {
    ModeIndex::new(l, m, n).unwrap()
}

fn basis32() -> BeamBasis {
    BeamBasis::with_truncation(3, 2, 1.0).unwrap()
}

fn reference32() -> Arc<QuadratureGrid> {
    Arc::new(QuadratureGrid::reference(3, 2, 1.0).unwrap())
}

fn beam_field(basis: &BeamBasis, m: ModeIndex) -> SampledField<'_> {
    SampledField::from_fn(basis.radius(), move |p| basis.evaluate_beam(&m, &SphericalPoint::from_cartesian(p)).unwrap())
}

#[test]
fn grid_volume_and_moments() {
    let g = build_grid(8, 8, 16, 1.0).unwrap();
    let vol: f64 = g.nodes().iter().map(|n| n.w).sum();
    assert!((vol - 4.0 * PI / 3.0).abs() < 1e-12);
    let r = 1.3f64;
    let g = build_grid(8, 8, 16, r).unwrap();
    let m2: f64 = g.nodes().iter().map(|n| n.w * n.r * n.r).sum();
    let exact = 4.0 * PI * r.powi(5) / 5.0;
    assert!((m2 - exact).abs() < 1e-12 * exact);
    // ∫ |Y_2^1|² dV = R³/3 since the angular integral is 1
    let y: f64 = g.nodes().iter().map(|n| n.w * spherical_harmonic(2, 1, n.theta, n.phi).unwrap().norm_sqr()).sum();
    assert!((y - r.powi(3) / 3.0).abs() < 1e-12);
}

#[test]
fn grid_rejects_bad_counts() {
    assert!(matches!(build_grid(1, 8, 16, 1.0), Err(Error::Config(_))));
    assert!(matches!(build_grid(8, 8, 3, 1.0), Err(Error::Config(_))));
    assert!(matches!(build_grid(8, 8, 16, -1.0), Err(Error::Config(_))));
}

#[test]
fn reference_counts() {
    assert_eq!(QuadratureGrid::reference_counts(3, 2), (24, 22, 28));
}

#[test]
fn beams_are_orthonormal_on_reference_grid() {
    let r = gram_report(&basis32(), &reference32()).unwrap();
    assert!(r.max_offdiag < 1e-6 && r.max_diag_error < 1e-6, "{r:?}");
}

#[test]
fn inner_product_is_hermitian() {
    let b = basis32();
    let g = reference32();
    let mut rng = rng(1);
    let ca = random_coeffs(b.mode_set(), &mut rng);
    let cb = random_coeffs(b.mode_set(), &mut rng);
    let fa = synthesize_on_grid(&ca, &b, g.clone()).unwrap();
    let fb = synthesize_on_grid(&cb, &b, g.clone()).unwrap();
    let ab = inner_product(&fa, &fb, &g).unwrap();
    let ba = inner_product(&fb, &fa, &g).unwrap();
    assert!((ab - ba.conj()).norm() < 1e-12 * ab.norm().max(1.0));
    // and equals the coefficient inner product
    let spectral: Complex64 = ca.values().iter().zip(cb.values()).map(|(x, y)| x * y.conj()).sum();
    assert!((ab - spectral).norm() < 1e-6 * spectral.norm());
}

#[test]
fn grid_mismatch_is_a_dimension_error() {
    let b = basis32();
    let g = reference32();
    let other = QuadratureGrid::new(10, 10, 20, 1.0).unwrap();
    let f = synthesize_on_grid(&CoefficientVector::zeros(b.mode_set().clone()), &b, g).unwrap();
    assert!(matches!(inner_product(&f, &f, &other), Err(Error::Dimension(_))));
    let f2 = SampledField::from_fn(2.0, |_| [Complex64::new(0.0, 0.0); 3]);
    assert!(matches!(forward_transform(&f2, &b, &other), Err(Error::Dimension(_))));
}

#[test]
fn forward_of_a_beam_is_a_unit_vector() {
    let b = basis32();
    let g = reference32();
    let a = forward_transform(&beam_field(&b, mode(2, 1, 1)), &b, &g).unwrap();
    let expect = CoefficientVector::unit(b.mode_set().clone(), &mode(2, 1, 1)).unwrap();
    for (x, y) in a.values().iter().zip(expect.values()) {
        assert!((x - y).norm() < 1e-6);
    }
}

#[test]
fn forward_of_zero_is_zero() {
    let b = basis32();
    let f = SampledField::from_fn(1.0, |_| [Complex64::new(0.0, 0.0); 3]);
    let a = forward_transform(&f, &b, &reference32()).unwrap();
    assert!(a.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn forward_of_a_linear_combination() {
    let b = basis32();
    let c1 = Complex64::new(0.3, 0.0);
    let c2 = Complex64::new(0.4, -0.2);
    let (m1, m2) = (mode(1, 0, 1), mode(3, -2, 2));
    let bb = &b;
    let f = SampledField::from_fn(1.0, move |p| {
        let sp = SphericalPoint::from_cartesian(p);
        let t1 = bb.evaluate_beam(&m1, &sp).unwrap();
        let t2 = bb.evaluate_beam(&m2, &sp).unwrap();
        std::array::from_fn(|i| t1[i] * c1 + t2[i] * c2)
    });
    let a = forward_transform(&f, &b, &reference32()).unwrap();
    for (md, v) in b.mode_set().iter().zip(a.values()) {
        let expect = if *md == m1 {
            c1
        } else if *md == m2 {
            c2
        } else {
            Complex64::new(0.0, 0.0)
        };
        assert!((v - expect).norm() < 1e-6, "{md}");
    }
}

#[test]
fn inverse_of_a_unit_vector_is_the_beam() {
    let b = basis32();
    let mut rng = rng(5);
    let m = mode(3, 2, 2);
    let c = CoefficientVector::unit(b.mode_set().clone(), &m).unwrap();
    let pts: Vec<SphericalPoint> =
        (0..30).map(|_| SphericalPoint::from_cartesian(random_interior(&mut rng, 1.0))).collect();
    let u = inverse_transform(&c, &b, &pts).unwrap();
    for (p, v) in pts.iter().zip(&u) {
        let t = b.evaluate_beam(&m, p).unwrap();
        assert!((0..3).all(|i| (v[i] - t[i]).norm() < 1e-14));
    }
    let z = inverse_transform(&CoefficientVector::zeros(b.mode_set().clone()), &b, &pts).unwrap();
    assert!(z.iter().all(|v| norm(v) == 0.0));
    assert!(matches!(inverse_transform(&c, &b, &[SphericalPoint::new(1.5, 0.3, 0.3)]), Err(Error::Domain(_))));
}

#[test]
fn round_trip_reproduces_in_span_fields() {
    let b = basis32();
    let g = reference32();
    let mut rng = rng(7);
    let c = random_coeffs(b.mode_set(), &mut rng);
    let pts: Vec<SphericalPoint> =
        (0..200).map(|_| SphericalPoint::from_cartesian(random_interior(&mut rng, 1.0))).collect();
    let direct = inverse_transform(&c, &b, &pts).unwrap();
    let field = synthesize_on_grid(&c, &b, g.clone()).unwrap();
    let a = forward_transform(&field, &b, &g).unwrap();
    let again = inverse_transform(&a, &b, &pts).unwrap();
    let umax = direct.iter().map(norm).fold(0.0, f64::max);
    let err = direct
        .iter()
        .zip(&again)
        .map(|(x, y)| norm(&std::array::from_fn::<Complex64, 3, _>(|i| x[i] - y[i])))
        .fold(0.0, f64::max);
    assert!(err < 1e-5 * umax, "{err:e} vs {umax}");
}

#[test]
fn parseval_inside_the_span() {
    let b = basis32();
    let g = reference32();
    let c = random_coeffs(b.mode_set(), &mut rng(9));
    let f = synthesize_on_grid(&c, &b, g.clone()).unwrap();
    let a = forward_transform(&f, &b, &g).unwrap();
    let rep = parseval_report(&f, &a, &b, &g).unwrap();
    assert!(rep.relative_gap < 1e-8, "{rep:?}");
}

#[test]
fn parseval_gap_is_the_out_of_span_fraction() {
    // ℓ = 4 beam outside the (3, 2) truncation
    let big = BeamBasis::with_truncation(4, 2, 1.0).unwrap();
    let b = basis32();
    let g = Arc::new(QuadratureGrid::reference(4, 2, 1.0).unwrap());
    let mut c = CoefficientVector::zeros(big.mode_set().clone());
    c.set(&mode(2, 1, 1), Complex64::new(0.6, 0.1)).unwrap();
    c.set(&mode(3, -3, 2), Complex64::new(-0.2, 0.5)).unwrap();
    c.set(&mode(4, 2, 1), Complex64::new(0.3, -0.3)).unwrap();
    let f = synthesize_on_grid(&c, &big, g.clone()).unwrap();
    let a = forward_transform(&f, &b, &g).unwrap();
    let rep = parseval_report(&f, &a, &b, &g).unwrap();
    let out_fraction = 0.18 / c.norm_sqr();
    assert!(rep.norm_sq_spectral < rep.norm_sq_physical);
    assert!((rep.relative_gap - out_fraction).abs() < 1e-6, "{rep:?} vs {out_fraction}");
}

#[test]
fn parseval_of_zero_field() {
    let b = basis32();
    let g = reference32();
    let f = SampledField::from_fn(1.0, |_| [Complex64::new(0.0, 0.0); 3]);
    let a = forward_transform(&f, &b, &g).unwrap();
    let rep = parseval_report(&f, &a, &b, &g).unwrap();
    assert_eq!((rep.norm_sq_physical, rep.norm_sq_spectral, rep.relative_gap), (0.0, 0.0, 0.0));
}

#[test]
fn completeness_for_an_in_span_field() {
    let b = basis32();
    let g = QuadratureGrid::reference(4, 3, 1.0).unwrap();
    let c = random_coeffs(b.mode_set(), &mut rng(13));
    let bb = &b;
    let f = SampledField::from_fn(1.0, move |p| {
        let sp = SphericalPoint::from_cartesian(p);
        let t = bb.evaluate_all(&sp).unwrap();
        let mut acc: CVec3 = [Complex64::new(0.0, 0.0); 3];
        for (k, v) in c.values().iter().zip(&t) {
            for i in 0..3 {
                acc[i] += k * v[i];
            }
        }
        acc
    });
    let (energy, rows) = completeness_decay(&f, &[(1, 1), (3, 2), (4, 3)], &g).unwrap();
    assert!(rows[0].residual > 0.01 * energy);
    for r in &rows[1..] {
        assert!(r.residual.abs() < 1e-8 * energy, "{r:?}");
    }
}

#[test]
fn completeness_residuals_decrease_for_toroidal_fields() {
    let g = QuadratureGrid::reference(6, 4, 1.0).unwrap();
    for (name, f) in [
        ("a", SampledField::from_fn(1.0, toroidal_field_a(1.0))),
        ("b", SampledField::from_fn(1.0, toroidal_field_b(1.0))),
    ] {
        let (energy, rows) = completeness_decay(&f, &[(1, 1), (3, 2), (6, 4)], &g).unwrap();
        assert!(rows.iter().all(|r| r.residual >= -1e-12 * energy), "{name}");
        assert!(rows[0].residual > rows[1].residual && rows[1].residual > rows[2].residual, "{name}: {rows:?}");
        assert!(rows[2].residual < 0.1 * energy, "{name}");
    }
}

#[test]
fn completeness_is_monotone_in_each_index() {
    let g = QuadratureGrid::reference(5, 4, 1.0).unwrap();
    let f = SampledField::from_fn(1.0, toroidal_field_b(1.0));
    let grid: Vec<(u32, u32)> = (1..=5).flat_map(|l| (1..=4).map(move |n| (l, n))).collect();
    let (_, rows) = completeness_decay(&f, &grid, &g).unwrap();
    let res = |l: u32, n: u32| rows.iter().find(|r| r.l_max == l && r.n_max == n).unwrap().residual;
    for l in 1..=5 {
        for n in 1..=4 {
            if l < 5 {
                assert!(res(l + 1, n) <= res(l, n));
            }
            if n < 4 {
                assert!(res(l, n + 1) <= res(l, n));
            }
        }
    }
}

#[test]
fn synthesis_is_an_isometry() {
    let b = basis32();
    let g = reference32();
    let mut rng = rng(17);
    for _ in 0..5 {
        let c = random_coeffs(b.mode_set(), &mut rng);
        let f = synthesize_on_grid(&c, &b, g.clone()).unwrap();
        let e = inner_product(&f, &f, &g).unwrap().re;
        assert!((e - c.norm_sqr()).abs() < 1e-6 * c.norm_sqr());
    }
}

#[test]
fn forward_after_synthesis_is_identity() {
    let b = basis32();
    let g = reference32();
    let c = random_coeffs(b.mode_set(), &mut rng(19));
    let a = forward_transform(&synthesize_on_grid(&c, &b, g.clone()).unwrap(), &b, &g).unwrap();
    let err = c.values().iter().zip(a.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn conjugate_symmetric_coefficients_give_real_fields() {
    let b = basis32();
    let mut c = random_coeffs(b.mode_set(), &mut rng(23));
    c.enforce_conjugate_symmetry();
    assert!(c.conjugate_symmetry_defect() < 1e-15);
    let mut r = rng(29);
    let pts: Vec<SphericalPoint> =
        (0..200).map(|_| SphericalPoint::from_cartesian(random_interior(&mut r, 1.0))).collect();
    let u = inverse_transform(&c, &b, &pts).unwrap();
    let umax = u.iter().map(norm).fold(0.0, f64::max);
    let imax = u.iter().flat_map(|v| v.iter().map(|c| c.im.abs())).fold(0.0, f64::max);
    assert!(imax < 1e-10 * umax, "{imax:e}");
}

#[test]
fn refinement_leaves_band_limited_coefficients_unchanged() {
    let b = basis32();
    let c = random_coeffs(b.mode_set(), &mut rng(31));
    let bb = &b;
    let cc = c.clone();
    let f = SampledField::from_fn(1.0, move |p| {
        let t = bb.evaluate_all(&SphericalPoint::from_cartesian(p)).unwrap();
        let mut acc: CVec3 = [Complex64::new(0.0, 0.0); 3];
        for (k, v) in cc.values().iter().zip(&t) {
            for i in 0..3 {
                acc[i] += k * v[i];
            }
        }
        acc
    });
    let g1 = QuadratureGrid::reference(3, 2, 1.0).unwrap();
    let (x, y, z) = g1.counts();
    let g2 = QuadratureGrid::new(2 * x, 2 * y, 2 * z, 1.0).unwrap();
    let a1 = forward_transform(&f, &b, &g1).unwrap();
    let a2 = forward_transform(&f, &b, &g2).unwrap();
    let d = a1.values().iter().zip(a2.values()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(d < 1e-8, "{d:e}");
}

#[test]
fn coefficient_vector_checks() {
    let ms = ModeSet::new(2, 1, 1.0).unwrap();
    assert!(matches!(CoefficientVector::new(ms.clone(), vec![Complex64::new(0.0, 0.0); 3]), Err(Error::Dimension(_))));
    let mut v = vec![Complex64::new(0.0, 0.0); ms.len()];
    v[0] = Complex64::new(f64::NAN, 0.0);
    assert!(CoefficientVector::new(ms.clone(), v).is_err());
    let mut c = CoefficientVector::zeros(ms.clone());
    c.set(&mode(1, 1, 1), Complex64::new(1.0, 0.0)).unwrap();
    assert!(c.mark_real_field().is_err());
    c.set(&mode(1, -1, 1), Complex64::new(-1.0, 0.0)).unwrap();
    assert!(c.mark_real_field().is_ok());
}
