use braidorbit::shape::project;
use braidorbit::stretch::{metallic, stretch_three_braid, ThreeBraidNormalForm};
use num_complex::Complex64;
use proptest::prelude::*;

fn syllables() -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((1u32..6, 1u32..6), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stretch_is_rotation_invariant(s in syllables(), by in 0usize..8) {
        let nf = ThreeBraidNormalForm::new(s).unwrap();
        let a = stretch_three_braid(&nf).unwrap();
        let b = stretch_three_braid(&nf.rotate(by)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn shape_is_rotation_invariant(
        r1 in 0.1f64..3.0, a1 in -3.2f64..3.2,
        r2 in 0.1f64..3.0, a2 in -3.2f64..3.2,
        rot in -3.2f64..3.2,
    ) {
        let x1 = Complex64::from_polar(r1, a1);
        let x2 = Complex64::from_polar(r2, a2);
        let w = Complex64::from_polar(1.0, rot);
        let u = project(x1, x2).unwrap();
        let v = project(w * x1, w * x2).unwrap();
        let scale = r1 * r1 + r2 * r2;
        for k in 0..3 {
            prop_assert!((u[k] - v[k]).abs() <= 1e-12 * scale);
        }
        // |u| = |x1|² + |x2|²
        let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        prop_assert!((norm - scale).abs() <= 1e-12 * scale);
    }

    #[test]
    fn metallic_root_identity(k in 1u64..=1000) {
        let s = metallic(k).unwrap();
        prop_assert!((s * s - k as f64 * s - 1.0).abs() < 1e-12 * s * s);
    }
}
