use std::f64::consts::PI;
use std::sync::OnceLock;

use shubin_core::decay_lab::*;
use shubin_core::lattice::*;
use shubin_core::rng::{stream, white_noise};
use shubin_core::shubin_op::*;
use shubin_core::spectral::*;

fn system(k: u32, m: u32, n: usize, l: f64, count: usize) -> EigenSystem {
    let spec = OperatorSpec::new(k, m, 1.0, 1).unwrap();
    eigensystem(&assemble(&spec, &Grid::new(1, n, l).unwrap()).unwrap(), count).unwrap()
}

fn harmonic() -> &'static EigenSystem {
    static ES: OnceLock<EigenSystem> = OnceLock::new();
    ES.get_or_init(|| system(1, 1, 512, 12.0, 120))
}

fn wide_harmonic() -> &'static EigenSystem {
    static ES: OnceLock<EigenSystem> = OnceLock::new();
    ES.get_or_init(|| system(1, 1, 512, 30.0, 160))
}

#[test]
fn gaussian_tail_fit() {
    let g = Grid::new(1, 512, 12.0).unwrap();
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let f = radial_decay_fit(&u, FitMode::Free).unwrap();
    assert!((f.exponent - 2.0).abs() <= 0.04, "{f:?}");
    assert!((f.rate - 0.5).abs() <= 0.01, "{f:?}");
    let fixed = radial_decay_fit(&u, FitMode::Fixed(2.0)).unwrap();
    assert!((fixed.rate - 0.5).abs() <= 1e-3);
}

#[test]
fn cubic_tail_fit() {
    let g = Grid::new(1, 1024, 8.0).unwrap();
    let u = sample(&g, |x| (-x[0].abs().powi(3) / 3.0).exp()).unwrap();
    let f = radial_decay_fit(&u, FitMode::Free).unwrap();
    assert!((f.exponent - 3.0).abs() <= 0.06, "{f:?}");
    assert!((f.rate - 1.0 / 3.0).abs() <= 0.02, "{f:?}");
}

#[test]
fn harmonic_ground_state_exponents() {
    let fits = agmon_exponent_check(harmonic(), &[0]).unwrap();
    assert!((fits[0].spatial.exponent - 2.0).abs() <= 0.05);
    assert!((fits[0].frequency.exponent - 2.0).abs() <= 0.05);
}

#[test]
fn weighted_norm_gaussian_integral() {
    // ‖e^{t⟨x⟩²}ψ₀‖² = e^{2t}/√(1−2t)
    let psi = harmonic().vector(0).unwrap();
    let spec = OperatorSpec::new(1, 1, 1.0, 1).unwrap();
    for t in [0.05, 0.1, 0.2] {
        let w = weighted_norm(&psi, 1.0, t, Side::Space, &spec).unwrap();
        let exact = ((2.0 * t).exp() / (1.0 - 2.0 * t).sqrt()).sqrt();
        assert!(!w.overflow && !w.saturated);
        assert!((w.value - exact).abs() <= 1e-8 * exact, "{} vs {exact}", w.value);
        let f = weighted_norm(&psi, 1.0, t, Side::Frequency, &spec).unwrap();
        assert!((f.value - exact).abs() <= 1e-8 * exact);
    }
    let w = weighted_norm(&psi, 1.0, 0.6, Side::Space, &spec).unwrap();
    assert!(w.saturated || w.overflow);
}

#[test]
fn weyl_slopes() {
    let f = weyl_fit(wide_harmonic(), 20..140).unwrap();
    assert!((f.slope - 1.0).abs() <= 0.03, "{f:?}");
    let q = system(2, 1, 512, 8.0, 140);
    let f = weyl_fit(&q, 30..120).unwrap();
    assert!((f.slope - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{f:?}");
    assert!(weyl_fit(harmonic(), 0..10).is_err());
}

#[test]
fn agmon_scaling_is_linear() {
    let f = agmon_scaling_fit(harmonic(), 1.0, 0.05, 5..26).unwrap();
    assert!(f.fit.r_squared >= 0.98 && f.fit.slope > 0.0, "{:?}", f.fit);
    assert!(agmon_scaling_fit(harmonic(), 1.0, 0.05, 5..10).is_err());
}

#[test]
fn smoothing_rates_grow_linearly() {
    let es = harmonic();
    let mut rng = stream(5, 0);
    let g = white_noise(es.grid(), &mut rng).unwrap();
    let times: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
    let reports: Vec<WeightReport> = times.iter().map(|&t| smoothing_probe(es, 1.0, t, &g).unwrap()).collect();
    assert!(reports.iter().all(|r| !r.scan_failed));
    let c1 = reports.iter().zip(&times).map(|(r, t)| r.lambda1 / t).fold(f64::INFINITY, f64::min);
    let c2 = reports.iter().zip(&times).map(|(r, t)| r.lambda2 / t).fold(f64::INFINITY, f64::min);
    assert!(c1 > 0.0 && c2 > 0.0, "{c1} {c2}");
}

#[test]
#[allow(clippy::needless_range_loop)]
fn seminorm_bounds_dominate_measured_table() {
    let es = harmonic();
    let mut rng = stream(5, 1);
    let g = white_noise(es.grid(), &mut rng).unwrap();
    let t = 0.1;
    let report = smoothing_probe(es, 1.0, t, &g).unwrap();
    let bounds = seminorm_bounds_from_weights(&report, 4, 4, 1).unwrap();
    let u = semigroup_apply(es, 1.0, t, &g).unwrap().function;
    let measured = seminorm_table(&u, 4, 4).unwrap();
    for a in 0..=4 {
        for b in 0..=4 {
            assert!(measured[a][b] <= bounds.table[a][b], "({a},{b}) {} > {}", measured[a][b], bounds.table[a][b]);
        }
    }
}

#[test]
fn seminorm_table_oracles() {
    let g = Grid::new(1, 512, 12.0).unwrap();
    let u = sample(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let t = seminorm_table(&u, 1, 1).unwrap();
    assert!((t[0][0] - PI.powf(0.25)).abs() <= 1e-12);
    // ‖x e^{-x²/2}‖² = √π/2 and ‖∂u‖ = ‖xu‖
    let xu = (PI.sqrt() / 2.0).sqrt();
    assert!((t[1][0] - xu).abs() <= 1e-12 && (t[0][1] - xu).abs() <= 1e-10);
}

#[test]
fn smoothed_noise_coefficients_decay() {
    let es = wide_harmonic();
    let mut rng = stream(5, 2);
    let g = semigroup_apply(es, 1.0, 0.1, &white_noise(es.grid(), &mut rng).unwrap()).unwrap().function;
    let f = coefficient_decay_fit(es, &g, 1.0).unwrap();
    assert!(f.slope < 0.0 && f.r_squared >= 0.9, "{f:?}");
}

#[test]
fn functional_bounded_for_small_rate() {
    let es = harmonic();
    let g = es.vector(0).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.01 * i as f64).collect();
    let tr = weighted_functional_evolution(es, &g, 0.1, 1.0, &times).unwrap();
    assert!(tr.bounded && tr.max_ratio <= 2.0, "{tr:?}");
}

#[test]
fn prefactor_probe_reports() {
    let es = harmonic();
    let times: Vec<f64> = (0..6).map(|i| 0.02 * 1.5f64.powi(i)).collect();
    let p = prefactor_probe(es, 2.0, 0.05, &times).unwrap();
    assert!(p.fitted_exponent.is_finite() && p.norms.iter().all(|n| *n > 0.0));
    assert_eq!(p.predicted_exponent, 0.5);
    assert!(prefactor_probe(es, 2.0, 0.05, &times[..2]).is_err());
}
