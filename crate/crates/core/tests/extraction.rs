use braidorbit::braid::{beta, full_twist, BraidWord};
use braidorbit::extract::{
    extract_word, fingerprint, match_trajectory, synthesis_library, synthesize, DEFAULT_ANGLES,
};
use braidorbit::nbody::{solve, ProblemSpec, SolverConfig};
use braidorbit::Execution;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn library_roundtrips_at_every_angle() {
    let lib = synthesis_library();
    assert!(lib.len() >= 10);
    for word in lib {
        assert!(word.strands() <= 6 && word.len() <= 12);
        let motion = synthesize(&word, 24).unwrap();
        let end = word.len().max(1) as f64;
        let want = fingerprint(&word).unwrap();
        for a in DEFAULT_ANGLES {
            let e = extract_word(&motion, a, 0.0, end).unwrap();
            assert_eq!(fingerprint(&e.word).unwrap(), want, "{word:?} at {a}");
        }
    }
}

#[test]
fn mixed_square_word_free_reduces_to_itself() {
    let w = BraidWord::new(3, vec![1, 1, -2, -2]).unwrap();
    let e = extract_word(&synthesize(&w, 16).unwrap(), 0.2, 0.0, 4.0).unwrap();
    assert_eq!(e.word.free_reduce(), w);
}

#[test]
fn beta_fingerprint_is_invariant_under_twist() {
    let b = beta(2, 1).unwrap();
    let twisted = full_twist(4).unwrap().compose(&b).unwrap();
    let (f, g) = (fingerprint(&b).unwrap(), fingerprint(&twisted).unwrap());
    assert_eq!(f.exponent_sum, g.exponent_sum);
    assert_eq!(f.cycle_type, g.cycle_type);
    assert!((f.growth - g.growth).abs() < 1e-9 * f.growth);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fingerprint_survives_conjugation(letters in prop::collection::vec(prop_oneof![-3i32..=-1, 1i32..=3], 0..8)) {
        let c = BraidWord::new(4, letters).unwrap();
        let b = beta(2, 1).unwrap();
        let conj = b.conjugate_by(&c).unwrap();
        let (f, g) = (fingerprint(&b).unwrap(), fingerprint(&conj).unwrap());
        prop_assert_eq!(&f.cycle_type, &g.cycle_type);
        prop_assert_eq!(f.exponent_sum, g.exponent_sum);
        prop_assert!((f.growth - g.growth).abs() < 1e-6 * f.growth);
    }
}

#[test]
fn reflected_body_is_inconsistent() {
    let spec = ProblemSpec::new(2, 1).unwrap();
    let out = solve(&spec, &SolverConfig::default(), 1).unwrap();
    let mut tr = out.trajectory;
    let shift = Complex64::new(0.0, 0.1);
    for row in tr.positions.iter_mut() {
        row[0] = row[0].conj() + shift;
    }
    for row in tr.velocities.as_mut().unwrap().iter_mut() {
        row[0] = row[0].conj();
    }
    let v = match_trajectory(&tr, 2, 1, &DEFAULT_ANGLES, Execution::Sequential).unwrap();
    assert!(!v.is_consistent());
    let exp = v.fields.iter().find(|f| f.field == "exponent_sum").unwrap();
    assert!(!exp.pass);
    assert!(v.angles_agree);
}

#[test]
fn wrong_metadata_is_rejected() {
    let spec = ProblemSpec::new(2, 1).unwrap();
    let out = solve(&spec, &SolverConfig::default(), 1).unwrap();
    assert!(match_trajectory(
        &out.trajectory,
        3,
        1,
        &DEFAULT_ANGLES,
        Execution::Sequential
    )
    .is_err());
}
