use super::*;
use crate::systems::{cantor_quarter_gap, cantor_third, haar, nonlinear_example};
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ws3() -> WaveletSystem {
    WaveletSystem::new(cantor_third())
}

#[test]
fn filters_for_the_third_cantor_set() {
    let filters = build_filters(cantor_third().alphabet());
    assert_eq!(filters.len(), 3);
    let s = 0.5f64.sqrt();
    let m0 = filters[0].materialized();
    assert_eq!(m0.len(), 2);
    assert!((m0[&0] - c(s)).norm() < 1e-15 && (m0[&2] - c(s)).norm() < 1e-15);
    assert_eq!(filters[1], Filter::monomial(2, 1));
    let m2 = filters[2].materialized();
    assert!((m2[&0] - c(s)).norm() < 1e-15 && (m2[&2] - c(-s)).norm() < 1e-15);
    // only the number and position of gaps matter
    assert_eq!(filters, build_filters(cantor_quarter_gap().alphabet()));
}

#[test]
fn haar_filters() {
    let filters = build_filters(haar().alphabet());
    let s = 0.5f64.sqrt();
    let m0 = filters[0].materialized();
    let m1 = filters[1].materialized();
    assert!((m0[&0] - c(s)).norm() < 1e-15 && (m0[&1] - c(s)).norm() < 1e-15);
    assert!((m1[&0] - c(s)).norm() < 1e-15 && (m1[&1] - c(-s)).norm() < 1e-15);
    let zs: Vec<Complex64> = (0..50).map(|i| crate::numeric::cis_turns(i as f64 / 37.0)).collect();
    assert!(filter_matrix_unitary_check(&filters, &zs) < 1e-14);
}

/// Independent evaluation of the 3×3 filter matrix at `z` from the printed polynomials.
fn m_third(z: Complex64) -> [[Complex64; 3]; 3] {
    let rho = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let s = 0.5f64.sqrt();
    let mut m = [[c(0.0); 3]; 3];
    for l in 0..3 {
        let w = rho.powi(l as i32) * z;
        m[0][l] = (c(1.0) + w * w) * s / 3f64.sqrt();
        m[1][l] = w / 3f64.sqrt();
        m[2][l] = (c(1.0) - w * w) * s / 3f64.sqrt();
    }
    m
}

#[test]
fn filter_matrix_is_unitary() {
    let filters = build_filters(cantor_third().alphabet());
    assert!(filter_matrix_unitary_check(&filters, &[c(1.0)]) < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zs: Vec<Complex64> = (0..100)
        .map(|_| crate::numeric::cis_turns(rand::Rng::random::<f64>(&mut rng)))
        .collect();
    assert!(filter_matrix_unitary_check(&filters, &zs) < 1e-12);
    // oracle: the same product from the hand-written matrix
    for &z in &zs[..10] {
        let m = m_third(z);
        for r in 0..3 {
            for col in 0..3 {
                let e: Complex64 = (0..3).map(|j| m[j][r].conj() * m[j][col]).sum();
                let t = if r == col { 1.0 } else { 0.0 };
                assert!((e - t).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn mothers_match_closed_forms() {
    let ws = ws3();
    let psi1 = CellFunction::indicator(Cell::new(vec![1], 0)).with_scale_shift(1);
    let psi2 = CellFunction::from_terms(
        0,
        vec![(Cell::new(vec![0], 0), c(1.0)), (Cell::new(vec![2], 0), c(-1.0))],
    );
    assert_eq!(ws.mothers()[0], psi1);
    assert_eq!(ws.mothers()[1], psi2);
    for i in 1..3 {
        assert_eq!(ws.mother_via_operators(i), ws.mothers()[i - 1]);
    }
    let gap = WaveletSystem::new(cantor_quarter_gap());
    assert_eq!(gap.mothers()[0], psi1);
}

#[test]
fn translation_and_dilation() {
    let a = cantor_third().alphabet().clone();
    let phi = father();
    assert_eq!(apply_t(&phi, 1), CellFunction::indicator(Cell::base(1)));
    assert_eq!(apply_t(&apply_t(&phi, 4), -4), phi);
    let u_phi = apply_u(&a, &phi, 1);
    let expected = CellFunction::from_terms(
        -1,
        vec![(Cell::base(0), c(1.0)), (Cell::base(2), c(1.0))],
    );
    assert_eq!(u_phi, expected);
    assert_eq!(u_phi, filter_action(&build_filters(&a)[0], &phi));
}

#[test]
fn basis_function_examples() {
    let ws = ws3();
    let a = ws.alphabet().clone();
    assert_eq!(ws.basis_function(BasisIndex { n: 0, k: 0, i: 0 }).unwrap(), father());
    assert_eq!(
        ws.basis_function(BasisIndex { n: 0, k: 3, i: 0 }).unwrap(),
        CellFunction::indicator(Cell::base(3))
    );
    // U⁻¹φ = √2 χ_{τ_0(C)}, and the scaling equation read backwards
    let v = ws.basis_function(BasisIndex { n: -1, k: 0, i: 0 }).unwrap();
    assert_eq!(v, CellFunction::indicator(Cell::new(vec![0], 0)).with_scale_shift(1));
    assert!((inner_product(&a, &v, &v).re - 1.0).abs() < 1e-15);
    assert!(ws.basis_function(BasisIndex { n: 0, k: 0, i: 3 }).is_err());
}

#[test]
fn gram_examples() {
    let ws = ws3();
    let a = ws.alphabet().clone();
    let window = ws.mother_window(2, 4);
    let funcs = ws.basis_functions(&window).unwrap();
    let g = GramReport::from_matrix(&gram_matrix(&a, &funcs, Budget::default()).unwrap());
    assert_eq!(g.dims, 5 * 9 * 2);
    assert!(g.max_deviation() < 1e-10, "{g:?}");

    let shifts: Vec<CellFunction> = (-10..=10).map(|k| apply_t(&father(), k)).collect();
    let g = GramReport::from_matrix(&gram_matrix(&a, &shifts, Budget::default()).unwrap());
    assert_eq!(g.max_deviation(), 0.0);

    let mut mixed = vec![father()];
    mixed.extend(ws.mothers().iter().cloned());
    let g = GramReport::from_matrix(&gram_matrix(&a, &mixed, Budget::default()).unwrap());
    assert!(g.max_deviation() < 1e-15);
    assert!(gram_matrix(&a, &funcs, Budget::new(100)).is_err());
}

#[test]
fn nonlinear_gram_equals_linear_gram() {
    let lin = ws3();
    let non = WaveletSystem::new(nonlinear_example());
    let window = lin.mother_window(2, 3);
    let g1 = gram_matrix(lin.alphabet(), &lin.basis_functions(&window).unwrap(), Budget::default()).unwrap();
    let g2 = gram_matrix(non.alphabet(), &non.basis_functions(&window).unwrap(), Budget::default()).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn parseval_examples() {
    let ws = ws3();
    let f = CellFunction::indicator(Cell::new(vec![1], 0));
    let r = ws.parseval_decompose(&f, 0, 0).unwrap();
    assert_eq!(r.details.len(), 1);
    assert_eq!(r.details[0].index, BasisIndex { n: 0, k: 0, i: 1 });
    assert!((r.details[0].value - c(0.5f64.sqrt())).norm() < 1e-15);
    assert!(r.coarse.is_empty());
    assert!(r.energy_defect.abs() < 1e-15);

    let r = ws.parseval_decompose(&father(), 0, 0).unwrap();
    assert!(r.details.is_empty());
    assert_eq!(r.coarse.len(), 1);
    assert_eq!(r.coarse[0].value, c(1.0));

    let psi2 = ws.mothers()[1].clone();
    let r = ws.parseval_decompose(&psi2, 0, 2).unwrap();
    assert_eq!(r.details.len(), 1);
    assert_eq!(r.details[0].index, BasisIndex { n: 0, k: 0, i: 2 });
    assert_eq!(r.details[0].value, c(1.0));
    assert_eq!(r.reconstruction_residual, 0.0);
}

#[test]
fn parseval_flags_missing_fine_scales() {
    let ws = ws3();
    let f = CellFunction::indicator(Cell::new(vec![1, 1, 1], 0));
    let r = ws.parseval_decompose(&f, 0, 1).unwrap();
    assert!(r.energy_defect > 0.1);
    assert!(r.reconstruction_residual > 0.1);
    let r = ws.parseval_decompose(&f, -2, 1).unwrap();
    assert_eq!(r.energy_defect_exact, Some(BigRational::zero()));
    assert!(r.reconstruction_residual < 1e-12);
}

#[test]
fn scaling_equation_examples() {
    let ws = ws3();
    let check = ws.scaling_equation_check(&[0.0, 0.5, 2.0 / 3.0], 30).unwrap();
    assert_eq!(check.decided, 3);
    assert_eq!(check.violations, 0);
    let check = ws.scaling_equation_check(&[1.0 / 3.0], 30).unwrap();
    assert_eq!(check.undecided, 1);
    let non = WaveletSystem::new(nonlinear_example());
    let pts: Vec<f64> = (0..=500).map(|i| i as f64 / 500.0).collect();
    assert_eq!(non.scaling_equation_check(&pts, 30).unwrap().violations, 0);
    // χ_{[0,1]}(1/2) = 1 while both dyadic halves contain 1/2
    let check = WaveletSystem::new(haar()).scaling_equation_check(&[0.5, 0.3], 30).unwrap();
    assert_eq!((check.decided, check.undecided, check.violations), (1, 1, 0));
}

#[test]
fn nesting_is_exact() {
    for ws in [ws3(), WaveletSystem::new(cantor_quarter_gap())] {
        for j in -3..=3 {
            for k in -4..=4 {
                assert!(ws.nesting_residual(j, k).is_empty(), "j={j} k={k}");
            }
        }
    }
}

#[test]
fn operator_suite_passes() {
    for system in [cantor_third(), cantor_quarter_gap(), haar()] {
        let suite = operator_suite(system.alphabet(), 50, 1);
        assert!(suite.passed(), "{}: {suite:?}", system.name());
    }
}

#[test]
fn report_on_small_window() {
    let r = ws3().report(1, 2, 0, Budget::default()).unwrap();
    assert!(r.passed(1e-10), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u_is_unitary_and_invertible(seed in any::<u64>(), n in -3i64..=3) {
        let a = cantor_third().alphabet().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_cell_function(&a, &mut rng, RandomCellParams::default());
        let g = random_cell_function(&a, &mut rng, RandomCellParams::default());
        let lhs = inner_product(&a, &apply_u(&a, &f, n), &apply_u(&a, &g, n));
        let rhs = inner_product(&a, &f, &g);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        prop_assert_eq!(apply_u(&a, &apply_u(&a, &f, n), -n).canonical(&a), f.canonical(&a));
    }
}
