use dfrt_core::basis::{BeamBasis, ModeSet};
use dfrt_core::cohomology::{Coboundary, CoboundaryConfig, Cochain, RadialKernel};
use dfrt_core::entropy::{entropy_of, fit_decay_profile, maxent_solve, ModalSpectrum};
use dfrt_core::transform::CoefficientVector;
use dfrt_core::wigner::exact::{clebsch_gordan_exact, wigner_6j_exact};
use dfrt_core::wigner::{clebsch_gordan, triangle_ok, wigner_3j, wigner_6j, SixJArgs, ThreeJArgs};
use dfrt_core::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn coboundary() -> &'static (BeamBasis, Coboundary) {
    static CELL: OnceLock<(BeamBasis, Coboundary)> = OnceLock::new();
    CELL.get_or_init(|| {
        let b = BeamBasis::with_truncation(3, 2, 1.0).unwrap();
        let op = Coboundary::new(&b, CoboundaryConfig::default()).unwrap();
        (b, op)
    })
}

fn coeffs(ms: &ModeSet) -> impl Strategy<Value = CoefficientVector> {
    let ms = ms.clone();
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), ms.len()).prop_map(move |v| {
        CoefficientVector::new(ms.clone(), v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
    })
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn three_j_column_swap(j1 in 0u32..=6, j2 in 0u32..=6, j3 in 0u32..=6, m1 in -6i32..=6, m2 in -6i32..=6) {
        prop_assume!(m1.unsigned_abs() <= j1 && m2.unsigned_abs() <= j2 && (m1 + m2).unsigned_abs() <= j3);
        let m3 = -m1 - m2;
        let a = wigner_3j(ThreeJArgs::new(j1, j2, j3, m1, m2, m3).unwrap()).unwrap();
        let b = wigner_3j(ThreeJArgs::new(j2, j1, j3, m2, m1, m3).unwrap()).unwrap();
        let c = wigner_3j(ThreeJArgs::new(j1, j2, j3, -m1, -m2, -m3).unwrap()).unwrap();
        let ph = parity(i64::from(j1 + j2 + j3));
        prop_assert!((a - ph * b).abs() < 1e-13);
        prop_assert!((a - ph * c).abs() < 1e-13);
    }

    #[test]
    fn clebsch_gordan_matches_exact(j1 in 0u32..=6, j2 in 0u32..=6, j3 in 0u32..=8, m1 in -6i32..=6, m2 in -6i32..=6) {
        prop_assume!(m1.unsigned_abs() <= j1 && m2.unsigned_abs() <= j2 && (m1 + m2).unsigned_abs() <= j3);
        let f = clebsch_gordan(j1, m1, j2, m2, j3, m1 + m2).unwrap();
        let e = clebsch_gordan_exact(j1, m1, j2, m2, j3, m1 + m2).to_f64();
        prop_assert!((f - e).abs() < 1e-12);
        if !triangle_ok(j1, j2, j3) {
            prop_assert_eq!(f, 0.0);
        }
    }

    #[test]
    fn six_j_tetrahedral_symmetry(j in prop::array::uniform6(0u32..=6)) {
        let [a, b, c, d, e, f] = j;
        let v = wigner_6j(SixJArgs(j));
        prop_assert!((v - wigner_6j(SixJArgs([b, a, c, e, d, f]))).abs() < 1e-13);
        prop_assert!((v - wigner_6j(SixJArgs([d, e, c, a, b, f]))).abs() < 1e-13);
        prop_assert!((v - wigner_6j(SixJArgs([a, c, b, d, f, e]))).abs() < 1e-13);
        prop_assert!((v - wigner_6j_exact(j).to_f64()).abs() < 1e-12);
    }

    #[test]
    fn triangle_is_symmetric(a in 0u32..20, b in 0u32..20, c in 0u32..20) {
        let t = triangle_ok(a, b, c);
        prop_assert_eq!(t, triangle_ok(b, c, a));
        prop_assert_eq!(t, triangle_ok(c, b, a));
        prop_assert_eq!(t, a + b >= c && b + c >= a && a + c >= b);
    }

    #[test]
    fn maxent_is_stationary(lambda in prop::collection::vec(0.1f64..40.0, 2..8), frac in 0.05f64..0.95) {
        let lo = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 1e-3);
        let c = lo + frac * (hi - lo);
        let s = maxent_solve(&lambda, c).unwrap();
        prop_assert!(s.stationarity_residuals().iter().all(|r| *r < 1e-9));
        prop_assert!((s.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(entropy_of(&s.p).unwrap() <= (lambda.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn decay_fit_round_trip(a in 0.01f64..10.0, mu in -0.5f64..0.5, top in 3u32..10) {
        let ells: Vec<u32> = (1..=top).collect();
        let raw: Vec<f64> = ells.iter().map(|&l| a * (-mu * f64::from(l * l)).exp()).collect();
        let s: f64 = raw.iter().sum();
        let spec = ModalSpectrum::from_fractions(ells, raw.iter().map(|x| x / s).collect()).unwrap();
        let fit = fit_decay_profile(&spec).unwrap();
        prop_assert!((fit.mu - mu).abs() < 1e-10);
        prop_assert!((fit.a - a / s).abs() < 1e-10 * (a / s).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coboundary_is_homogeneous_of_degree_two(
        a in coeffs(coboundary().0.mode_set()),
        cr in -3.0f64..3.0,
        ci in -3.0f64..3.0,
    ) {
        let (_, op) = coboundary();
        let c = Complex64::new(cr, ci);
        let mut ca = a.clone();
        ca.values_mut().iter_mut().for_each(|v| *v *= c);
        let d1 = op.apply(&Cochain::new(a, 0)).unwrap();
        let d2 = op.apply(&Cochain::new(ca, 0)).unwrap();
        let scale = d2.norm().max(1e-300);
        for (x, y) in d1.coeffs.values().iter().zip(d2.coeffs.values()) {
            prop_assert!((x * c * c - y).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn linearization_is_symmetric_polarization(
        a in coeffs(coboundary().0.mode_set()),
        b in coeffs(coboundary().0.mode_set()),
    ) {
        // D_a(b) = D_b(a)
        let (_, op) = coboundary();
        let (a, b) = (Cochain::new(a, 0), Cochain::new(b, 0));
        let x = op.linearized(&a, &b).unwrap();
        let y = op.linearized(&b, &a).unwrap();
        for (p, q) in x.coeffs.values().iter().zip(y.coeffs.values()) {
            prop_assert!((p - q).norm() < 1e-13 * x.norm().max(1e-300));
        }
    }

    #[test]
    fn conjugate_projection_is_idempotent(a in coeffs(&ModeSet::new(3, 2, 1.0).unwrap())) {
        let mut p = a.clone();
        p.enforce_conjugate_symmetry();
        let once = p.values().to_vec();
        let second = p.enforce_conjugate_symmetry();
        prop_assert!(second < 1e-15);
        prop_assert_eq!(p.values(), &once[..]);
        prop_assert!(p.norm_sqr() <= a.norm_sqr() + 1e-12);
    }

    #[test]
    fn unit_kernel_ignores_radial_labels(a in coeffs(&ModeSet::new(2, 2, 1.0).unwrap())) {
        // with W = 1 the output is the same for n3 = 1 and n3 = 2
        let b = BeamBasis::with_truncation(2, 2, 1.0).unwrap();
        let op = Coboundary::new(&b, CoboundaryConfig::new([1, 1, 1], RadialKernel::Unit).unwrap()).unwrap();
        let d = op.apply(&Cochain::new(a, 0)).unwrap();
        let ms = b.mode_set();
        for (k, m) in ms.iter().enumerate() {
            if m.n == 1 {
                let mut twin = *m;
                twin.n = 2;
                let k2 = ms.index_of(&twin).unwrap();
                prop_assert_eq!(d.coeffs.values()[k], d.coeffs.values()[k2]);
            }
        }
    }
}
