use super::*;
use crate::systems;
use proptest::prelude::*;

#[test]
fn cantor_third_passes_validation() {
    let report = systems::cantor_third().validate();
    assert!(report.passed(), "{:?}", report.messages());
}

#[test]
fn missing_filler_breaks_chaining() {
    let sys = IFSystem::new(
        "no-filler",
        vec![Contraction::rho(0, 3), Contraction::rho(2, 3)],
        vec![0, 1],
    )
    .unwrap();
    let report = sys.validate();
    assert!(!report.passed());
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::Chaining { index: 0, .. })));
}

#[test]
fn nonlinear_example_passes_validation() {
    let report = systems::nonlinear_example().validate();
    assert!(report.passed(), "{:?}", report.messages());
}

#[test]
fn decreasing_map_is_reported() {
    let sys = IFSystem::new(
        "dec",
        vec![Contraction::affine(-0.5, 0.5), Contraction::affine(0.5, 0.5)],
        vec![0, 1],
    )
    .unwrap();
    let msgs = sys.validate().messages();
    assert!(msgs.iter().any(|m| m.contains("not increasing")), "{msgs:?}");
}

#[test]
fn gap_fill_middle_third() {
    let sys = IFSystem::gap_fill(
        "c3",
        vec![Contraction::rho(0, 3), Contraction::rho(2, 3)],
        &[],
    )
    .unwrap();
    assert_eq!(sys.maps(), systems::cantor_third().maps());
    assert_eq!(sys.core(), &[0, 2]);
}

#[test]
fn gap_fill_quarter_single_filler() {
    let sys = IFSystem::gap_fill(
        "c4",
        vec![Contraction::rho(0, 4), Contraction::rho(3, 4)],
        &[],
    )
    .unwrap();
    assert_eq!(sys.n(), 3);
    assert_eq!(sys.core(), &[0, 2]);
    assert_eq!(sys.map(1), &Contraction::affine(0.5, 0.25));
}

#[test]
fn gap_fill_without_gaps_is_identity() {
    let sys = IFSystem::gap_fill(
        "haar",
        vec![Contraction::rho(0, 2), Contraction::rho(1, 2)],
        &[],
    )
    .unwrap();
    assert_eq!(sys.maps(), systems::haar().maps());
    assert_eq!(sys.core(), &[0, 1]);
}

#[test]
fn gap_fill_with_subdivisions() {
    let sys = IFSystem::gap_fill(
        "c4x2",
        vec![Contraction::rho(0, 4), Contraction::rho(3, 4)],
        &[1, 2, 1],
    )
    .unwrap();
    assert_eq!(sys.n(), 4);
    assert_eq!(sys.core(), &[0, 3]);
    assert!(sys.validate().passed());
    assert_eq!(sys.map(2), &Contraction::affine(0.25, 0.5));
}

#[test]
fn gap_fill_rejects_overlapping_core() {
    let res = IFSystem::gap_fill(
        "bad",
        vec![Contraction::affine(0.6, 0.0), Contraction::affine(0.5, 0.5)],
        &[],
    );
    assert!(matches!(res, Err(Error::InvalidSystem(_))));
}

#[test]
fn word_apply_examples() {
    let c3 = systems::cantor_third();
    let v = c3.word_apply(&Word::new(vec![0, 2]), 0.0).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(c3.word_apply(&Word::empty(), 0.37).unwrap(), 0.37);
    let nl = systems::nonlinear_example();
    assert!((nl.word_apply(&Word::new(vec![1]), 0.0).unwrap() - 0.6).abs() < 1e-15);
    assert!(matches!(
        c3.word_apply(&Word::new(vec![3]), 0.0),
        Err(Error::LetterOutOfRange { letter: 3, n: 3 })
    ));
}

#[test]
fn scaling_examples() {
    let c3 = systems::cantor_third();
    assert!((c3.scaling_eval(2.0 / 3.0).unwrap() - 2.0).abs() < 1e-12);
    let nl = systems::nonlinear_example();
    assert!((nl.scaling_eval(0.75).unwrap() - 1.75).abs() < 1e-12);
    assert!((nl.scaling_eval(1.75).unwrap() - 4.75).abs() < 1e-12);
    assert!((nl.scaling_inverse_eval(1.75) - 0.75).abs() < 1e-12);
    assert_eq!(nl.scaling_inverse_eval(0.0), 0.0);
    assert!((c3.scaling_inverse_eval(5.0) - 5.0 / 3.0).abs() < 1e-15);
}

#[test]
fn digit_code_examples() {
    let c4 = systems::cantor_quarter();
    assert_eq!(c4.digit_code(0.75, 3).unwrap(), vec![3, 0, 0]);
    assert_eq!(c4.digit_code(3.0 / 16.0, 2).unwrap(), vec![0, 3]);
    assert_eq!(c4.digit_code(1.0, 4).unwrap(), vec![3, 3, 3, 3]);
    let nl = systems::nonlinear_example();
    assert_eq!(nl.digit_code(0.6, 1).unwrap(), vec![1]);
}

#[test]
fn enlarged_fractal_membership() {
    let c3 = systems::cantor_third();
    for k in 2..12 {
        assert_eq!(c3.in_enlarged_fractal(1.0 / 3.0, k).unwrap(), Membership::Yes);
    }
    assert_eq!(c3.in_enlarged_fractal(0.0, 1).unwrap(), Membership::Yes);
    assert_eq!(c3.in_enlarged_fractal(7.0, 5).unwrap(), Membership::Yes);
    for k in 1..20 {
        assert_eq!(c3.in_enlarged_fractal(0.5, k).unwrap(), Membership::Unknown(k));
    }
    assert_eq!(c3.in_enlarged_fractal(f64::NAN, 3).unwrap(), Membership::No);
}

#[test]
fn limit_set_membership() {
    let c3 = systems::cantor_third();
    assert_eq!(c3.in_limit_set(0.0, 20).unwrap(), Membership::Yes);
    assert_eq!(c3.in_limit_set(1.0, 20).unwrap(), Membership::Yes);
    assert_eq!(c3.in_limit_set(2.0 / 3.0, 20).unwrap(), Membership::Yes);
    assert_eq!(c3.in_limit_set(0.5, 20).unwrap(), Membership::No);
    assert_eq!(c3.in_limit_set(1.5, 20).unwrap(), Membership::No);
    // 1/3 = τ_0(1) ∈ C, but the greedy digit lands on the knot of the gap branch
    assert_eq!(c3.in_limit_set(1.0 / 3.0, 20).unwrap(), Membership::Unknown(20));
}

#[test]
fn hausdorff_dimension_of_linear_systems() {
    let s = systems::cantor_third().hausdorff_dimension().unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    assert!(systems::nonlinear_example().hausdorff_dimension().is_none());
}

#[test]
fn json_round_trip() {
    let nl = systems::nonlinear_example();
    let spec = SystemSpec::from_system(&nl).unwrap();
    let back = SystemSpec::from_json(&spec.to_json().unwrap()).unwrap().build().unwrap();
    assert_eq!(back.maps(), nl.maps());
    assert_eq!(back.core(), nl.core());

    let auto = r#"{"name":"c3","core_maps":[{"family":"affine","a":0.3333333333333333,"b":0},
        {"family":"affine","a":0.3333333333333333,"b":0.6666666666666666}],"auto_fill":true}"#;
    let sys = SystemSpec::from_json(auto).unwrap().build().unwrap();
    assert_eq!(sys.n(), 3);
    assert_eq!(sys.core(), &[0, 2]);
    assert!(SystemSpec::from_json("{\"maps\": [").is_err());
}

fn test_systems() -> Vec<IFSystem> {
    vec![
        systems::cantor_third(),
        systems::cantor_quarter_gap(),
        systems::cantor_quarter(),
        systems::nonlinear_example(),
    ]
}

#[test]
fn map_inverses_on_unit_interval() {
    for sys in test_systems() {
        for map in sys.maps() {
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                assert!((map.inverse(map.eval(x)).unwrap() - x).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn homogeneous_scaling_is_multiplication() {
    let c4 = systems::cantor_quarter();
    for i in -400..400 {
        let x = i as f64 * 0.01;
        assert!((c4.scaling_eval(x).unwrap() - 4.0 * x).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn scaling_round_trips(x in -6.0f64..6.0, sys_index in 0usize..4) {
        let sys = &test_systems()[sys_index];
        let up = sys.scaling_eval(sys.scaling_inverse_eval(x)).unwrap();
        prop_assert!((up - x).abs() < 1e-10);
        let down = sys.scaling_inverse_eval(sys.scaling_eval(x).unwrap());
        prop_assert!((down - x).abs() < 1e-10);
    }

    #[test]
    fn scaling_is_equivariant(x in 0.0f64..1.0, m in -5i32..=5, sys_index in 0usize..4) {
        let sys = &test_systems()[sys_index];
        let lhs = sys.scaling_eval(x + m as f64).unwrap();
        let rhs = sys.scaling_eval(x).unwrap() + sys.n() as f64 * m as f64;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn digits_reconstruct(x in 0.0f64..=1.0, depth in 1usize..25, sys_index in 0usize..4) {
        let sys = &test_systems()[sys_index];
        let digits = sys.digit_code(x, depth).unwrap();
        let y = sys.word_apply(&Word::from_digits(&digits), 0.0).unwrap();
        prop_assert!((y - x).abs() <= sys.c_max().powi(depth as i32) + 1e-12);
    }

    #[test]
    fn gap_fill_output_validates(
        a in 0.05f64..0.3, gap in 0.0f64..0.3, b in 0.05f64..0.3, lead in 0.0f64..0.1,
        pieces in 1usize..4,
    ) {
        let first = Contraction::affine(a, lead);
        let second = Contraction::affine(b, lead + a + gap);
        let sys = IFSystem::gap_fill("random", vec![first, second], &[pieces, pieces, pieces]).unwrap();
        prop_assert!(sys.validate().passed(), "{:?}", sys.validate().messages());
        prop_assert_eq!(sys.p(), 2);
    }
}
