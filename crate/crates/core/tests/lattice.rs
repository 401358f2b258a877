use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use shubin_core::lattice::*;
use shubin_core::Error;

fn grid() -> Grid {
    Grid::new(1, 512, 12.0).unwrap()
}

#[test]
fn gaussian_fourier_pair() {
    let g = grid();
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let hat = forward_transform(&u).unwrap();
    let err = (0..g.len())
        .map(|q| {
            let xi = g.dual_node(q);
            (hat.values()[q] - C::new((2.0 * PI).sqrt() * (-xi * xi / 2.0).exp(), 0.0)).norm()
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err:e}");

    let back = inverse_transform(&sample_frequency(&g, |xi| C::new((2.0 * PI).sqrt() * (-xi[0] * xi[0] / 2.0).exp(), 0.0)).unwrap()).unwrap();
    assert!(back.sub(&u).unwrap().max_abs() <= 1e-10);
}

#[test]
fn plane_wave_is_a_scaled_delta() {
    let g = grid();
    let q0 = 300;
    let xi0 = g.dual_node(q0);
    let u = sample_complex(&g, |x| C::from_polar(1.0, xi0 * x[0])).unwrap();
    let hat = forward_transform(&u).unwrap();
    // direct summation of h Σ e^{i x (ξ0 − ξ_q)}
    for q in [0, 17, q0 - 1, q0, q0 + 1, 511] {
        let direct: C = g.nodes().iter().map(|&x| C::from_polar(g.spacing(), x * (xi0 - g.dual_node(q)))).sum();
        assert!((hat.values()[q] - direct).norm() < 1e-10);
    }
    assert!((hat.values()[q0].re - 2.0 * g.half_width()).abs() < 1e-10);
    let off = (0..g.len()).filter(|&q| q != q0).map(|q| hat.values()[q].norm()).fold(0.0, f64::max);
    assert!(off < 1e-10);
}

#[test]
fn spectral_derivatives_match_analytic() {
    let g = grid();
    let interior: Vec<usize> = (0..g.len()).filter(|&i| g.node(i).abs() <= 0.9 * g.half_width()).collect();
    // sin is not periodic on [-12, 12), so only the interior is compared
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let d2 = spectral_derivative(&u, &[2]).unwrap();
    let err = interior
        .iter()
        .map(|&i| {
            let x = g.node(i);
            (d2.values()[i].re - (x * x - 1.0) * (-x * x / 2.0).exp()).abs()
        })
        .fold(0.0, f64::max);
    assert!(err <= 1e-8, "{err:e}");

    let p = Grid::new(1, 512, PI * 4.0).unwrap();
    let s = sample(&p, |x| x[0].sin()).unwrap();
    let ds = spectral_derivative(&s, &[1]).unwrap();
    let err = (0..p.len())
        .filter(|&i| p.node(i).abs() <= 0.9 * p.half_width())
        .map(|i| (ds.values()[i].re - p.node(i).cos()).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-8, "{err:e}");
}

#[test]
fn two_dimensional_transform_separates() {
    let g = Grid::new(2, 64, 8.0).unwrap();
    let u = sample(&g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp()).unwrap();
    let hat = forward_transform(&u).unwrap();
    let err = (0..g.len())
        .map(|i| {
            let c = g.coords(i, Domain::Frequency);
            let exact = 2.0 * PI / 2f64.sqrt() * (-(c[0] * c[0] + c[1] * c[1] / 2.0) / 2.0).exp();
            (hat.values()[i].re - exact).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn grid_validation() {
    assert!(matches!(Grid::new(3, 64, 1.0), Err(Error::InvalidGrid(_))));
    assert!(Grid::new(1, 100, 1.0).is_err());
    assert!(Grid::new(1, 8, 1.0).is_err());
    assert!(Grid::new(1, 64, 0.0).is_err());
    let g = grid();
    let f = sample_frequency(&g, |_| C::new(1.0, 0.0)).unwrap();
    assert!(matches!(forward_transform(&f), Err(Error::DomainMismatch { .. })));
    let other = sample(&Grid::new(1, 256, 12.0).unwrap(), |_| 1.0).unwrap();
    assert!(matches!(sample(&g, |_| 1.0).unwrap().sub(&other), Err(Error::GridMismatch)));
}

#[test]
fn non_finite_samples_rejected() {
    let g = grid();
    assert!(matches!(sample(&g, |x| 1.0 / x[0]), Err(Error::NonFinite { .. })));
}

fn arb_values(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plancherel_and_round_trip(v in arb_values(128), dims in 1usize..=2) {
        let g = if dims == 1 { Grid::new(1, 128, 5.0).unwrap() } else { Grid::new(2, 16, 3.0).unwrap() };
        let values: Vec<C> = v.iter().cycle().take(g.len()).map(|&(a, b)| C::new(a, b)).collect();
        let u = SampledFunction::new(g, Domain::Space, values).unwrap();
        let hat = forward_transform(&u).unwrap();
        let expected = (2.0 * PI).powf(g.dim() as f64 / 2.0) * u.norm();
        prop_assert!((hat.norm() - expected).abs() <= 1e-12 * expected.max(1.0));
        let back = inverse_transform(&hat).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn transform_is_linear(v in arb_values(64), w in arb_values(64), a in -3.0..3.0f64) {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let u1 = SampledFunction::new(g, Domain::Space, v.iter().map(|&(x, y)| C::new(x, y)).collect()).unwrap();
        let u2 = SampledFunction::new(g, Domain::Space, w.iter().map(|&(x, y)| C::new(x, y)).collect()).unwrap();
        let lhs = forward_transform(&u1.axpy(C::new(a, 0.0), &u2).unwrap()).unwrap();
        let rhs = forward_transform(&u1).unwrap().axpy(C::new(a, 0.0), &forward_transform(&u2).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-11 * (1.0 + lhs.max_abs()));
    }
}
