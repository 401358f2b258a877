use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use shubin_core::lattice::*;
use shubin_core::rng::{stream, white_noise};
use shubin_core::shubin_op::*;
use shubin_core::spectral::*;

fn harmonic() -> &'static EigenSystem {
    static ES: OnceLock<EigenSystem> = OnceLock::new();
    ES.get_or_init(|| {
        let spec = OperatorSpec::new(1, 1, 1.0, 1).unwrap();
        let g = Grid::new(1, 512, 12.0).unwrap();
        eigensystem(&assemble(&spec, &g).unwrap(), 40).unwrap()
    })
}

fn interior_error(g: &Grid, a: &SampledFunction, f: impl Fn(f64) -> f64) -> f64 {
    (0..g.len())
        .filter(|&i| g.node(i).abs() <= 0.85 * g.half_width())
        .map(|i| (a.values()[i] - C::new(f(g.node(i)), 0.0)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn ground_state_residual() {
    let g = Grid::new(1, 512, 12.0).unwrap();
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let op = assemble(&OperatorSpec::new(1, 1, 1.0, 1).unwrap(), &g).unwrap();
    let hu = apply(&op, &u).unwrap();
    assert!(hu.sub(&u).unwrap().norm() <= 1e-8);
}

#[test]
fn quartic_action_on_gaussian() {
    let g = Grid::new(1, 512, 12.0).unwrap();
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let op = assemble(&OperatorSpec::new(2, 1, 1.0, 1).unwrap(), &g).unwrap();
    let hu = apply(&op, &u).unwrap();
    let err = interior_error(&g, &hu, |x| (1.0 - x * x + x.powi(4)) * (-x * x / 2.0).exp());
    assert!(err <= 1e-8, "{err:e}");
}

#[test]
fn kinetic_part_is_diagonal_in_frequency() {
    let g = Grid::new(1, 256, 10.0).unwrap();
    for m in 1..=3 {
        let op = assemble(&OperatorSpec::new(1, m, 1.0, 1).unwrap(), &g).unwrap();
        let xi0 = g.dual_node(140);
        let u = sample_complex(&g, |x| C::from_polar((-x[0] * x[0] / 8.0).exp(), xi0 * x[0])).unwrap();
        let lhs = forward_transform(&op.apply_kinetic(&u).unwrap()).unwrap();
        let rhs = forward_transform(&u).unwrap();
        let rhs = rhs.map(|q, v| v * g.dual_node(q).powi(2 * m as i32));
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-9 * rhs.max_abs());
    }
}

#[test]
fn dense_and_matrix_free_agree() {
    let g = Grid::new(1, 128, 8.0).unwrap();
    let spec = OperatorSpec::new(2, 2, 1.0, 1).unwrap();
    let op = assemble(&spec, &g).unwrap();
    let mut rng = stream(11, 0);
    let u = white_noise(&g, &mut rng).unwrap();
    let d = op.apply_dense(&u).unwrap();
    let f = apply(&op, &u).unwrap();
    assert!(d.sub(&f).unwrap().max_abs() <= 1e-9 * f.max_abs());
}

#[test]
fn dense_matrix_is_symmetric() {
    let g = Grid::new(2, 16, 4.0).unwrap();
    let op = assemble(&OperatorSpec::new(1, 2, 1.0, 2).unwrap(), &g).unwrap();
    let a = op.dense().unwrap();
    assert_eq!(a, &a.transpose());
}

#[test]
fn harmonic_spectrum_and_ground_state() {
    let es = harmonic();
    for (j, l) in es.eigenvalues().iter().take(30).enumerate() {
        assert!((l - (2 * j + 1) as f64).abs() <= 1e-6, "λ_{j} = {l}");
    }
    let psi0 = es.vector(0).unwrap();
    let g = *es.grid();
    let err = (0..g.len())
        .map(|i| (psi0.values()[i].re - PI.powf(-0.25) * (-g.node(i).powi(2) / 2.0).exp()).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6);
    assert!(es.orthonormality_defect() <= 1e-10);
}

#[test]
fn quartic_ground_state_self_converges() {
    let spec = OperatorSpec::new(2, 1, 1.0, 1).unwrap();
    let l0 = |n| {
        let g = Grid::new(1, n, 8.0).unwrap();
        eigensystem(&assemble(&spec, &g).unwrap(), 12).unwrap().eigenvalues()[0]
    };
    let (a, b) = (l0(512), l0(1024));
    assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
    // frozen reference for the quartic oscillator ground state
    assert!((a - 1.060_362_090_484_18).abs() < 1e-9, "{a}");
}

#[test]
fn semigroup_acts_diagonally() {
    let es = harmonic();
    let psi = es.vector(3).unwrap();
    let out = semigroup_apply(es, 0.7, 0.2, &psi).unwrap();
    let expected = psi.scale(C::new((-0.2 * 7f64.powf(0.7)).exp(), 0.0));
    assert!(out.function.sub(&expected).unwrap().max_abs() <= 1e-12);
    assert!(out.tail_norm <= 1e-10);
}

#[test]
fn frequency_projection_kills_high_bands() {
    let es = harmonic();
    let g = *es.grid();
    let xi1 = g.dual_node(g.points() / 2 + 40);
    let u = sample_complex(&g, |x| C::from_polar((-x[0] * x[0] / 4.0).exp(), xi1 * x[0])).unwrap();
    let low = frequency_project(&g, 0.5 * xi1, &u).unwrap();
    assert!(low.norm() <= 1e-10 * u.norm());
    let all = frequency_project(&g, g.max_frequency(), &u).unwrap();
    assert!(all.sub(&u).unwrap().norm() <= 1e-12 * u.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup_law(t1 in 0.0..0.5f64, t2 in 0.0..0.5f64, s in 0.2..2.0f64, seed in 0u64..1000) {
        let es = harmonic();
        let mut rng = stream(seed, 1);
        let g = es.project(&white_noise(es.grid(), &mut rng).unwrap()).unwrap().function;
        let a = semigroup_apply(es, s, t1 + t2, &g).unwrap().function;
        let b = semigroup_apply(es, s, t2, &semigroup_apply(es, s, t1, &g).unwrap().function).unwrap().function;
        prop_assert!(a.sub(&b).unwrap().norm() <= 1e-12 * g.norm());
        prop_assert!(a.norm() <= g.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn fractional_powers_compose(s1 in 0.1..1.5f64, s2 in 0.1..1.5f64, seed in 0u64..1000) {
        let es = harmonic();
        let mut rng = stream(seed, 2);
        let g = white_noise(es.grid(), &mut rng).unwrap();
        let a = fractional_apply(es, s1 + s2, &g).unwrap().function;
        let b = fractional_apply(es, s2, &fractional_apply(es, s1, &g).unwrap().function).unwrap().function;
        prop_assert!(a.sub(&b).unwrap().norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn operator_is_hermitian(seed in 0u64..1000) {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let op = assemble(&OperatorSpec::new(1, 2, 1.0, 1).unwrap(), &g).unwrap();
        let mut rng = stream(seed, 3);
        let bump = sample(&g, |x| (-x[0] * x[0] / 4.0).exp()).unwrap();
        let u = white_noise(&g, &mut rng).unwrap();
        let v = white_noise(&g, &mut rng).unwrap();
        let (u, v) = (frequency_project(&g, 6.0, &u).unwrap().mul(&bump).unwrap(), frequency_project(&g, 6.0, &v).unwrap().mul(&bump).unwrap());
        let a = apply(&op, &u).unwrap().inner(&v).unwrap();
        let b = u.inner(&apply(&op, &v).unwrap()).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }
}
