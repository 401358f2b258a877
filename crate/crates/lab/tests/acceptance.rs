//! Acceptance run: one line per criterion, PASS or FAIL, at the stated tolerances.
//!
//! Sub-checks flagged `known` are shortfalls analysed in the project notes;
//! they print as FAIL but do not fail the process. Any other failing check does.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C;
use shubin_core::control_lab::*;
use shubin_core::decay_lab::*;
use shubin_core::lattice::*;
use shubin_core::rng::{normal, stream, uniform, white_noise};
use shubin_core::shubin_op::*;
use shubin_core::spectral::*;
use shubin_core::weyl_calc::*;
use shubin_lab::{run, Command, RunArgs};

#[derive(Default)]
struct Checks {
    items: Vec<(String, bool, bool)>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.items.push((what.into(), ok, false));
    }

    /// A check whose failure is a recorded, analysed shortfall.
    fn known(&mut self, ok: bool, what: impl Into<String>) {
        self.items.push((what.into(), ok, true));
    }

    fn passed(&self) -> bool {
        self.items.iter().all(|i| i.1)
    }

    fn hard_passed(&self) -> bool {
        self.items.iter().all(|i| i.1 || i.2)
    }
}

fn system(k: u32, m: u32, n: usize, l: f64, count: usize) -> EigenSystem {
    let spec = OperatorSpec::new(k, m, 1.0, 1).unwrap();
    eigensystem(&assemble(&spec, &Grid::new(1, n, l).unwrap()).unwrap(), count).unwrap()
}

fn band_limited(g: &Grid, seed: u64, band: f64, damped: bool) -> SampledFunction {
    let mut rng = stream(seed, 0);
    let l = g.half_width();
    let qmax = (band * l / PI) as i64;
    let co: Vec<(f64, C)> = (-qmax..=qmax)
        .map(|q| {
            let k = q as f64 * PI / l;
            let d = if damped { (-k * k / 4.0).exp() } else { 1.0 };
            (k, C::new(normal(&mut rng), normal(&mut rng)) * d)
        })
        .collect();
    sample_complex(g, |x| co.iter().map(|(k, a)| a * C::from_polar(1.0, k * x[0])).sum()).unwrap()
}

fn rel(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.sub(b).unwrap().norm() / b.norm()
}

fn c01(c: &mut Checks) {
    let es = system(1, 1, 512, 12.0, 40);
    let err = (0..30).map(|j| (es.eigenvalues()[j] - (2 * j + 1) as f64).abs()).fold(0.0, f64::max);
    c.check(es.count() >= 30 && err <= 1e-6, format!("max |λ_j − (2j+1)| over j<30 = {err:.1e}"));
}

fn c02(c: &mut Checks) {
    for (k, m, l) in [(1, 1, 30.0), (2, 1, 12.0), (1, 2, 80.0)] {
        let es = system(k, m, 1024, l, 260);
        let target = 2.0 * (k * m) as f64 / (k + m) as f64;
        match weyl_fit(&es, 40..240) {
            Ok(f) => {
                let e = (f.slope - target).abs() / target;
                c.check(e <= 0.05, format!("({k},{m}) slope {:.4} vs {target:.4}", f.slope));
            }
            Err(e) => c.check(false, format!("({k},{m}) {e}")),
        }
    }
}

fn c03(c: &mut Checks) {
    let h = system(1, 1, 1024, 30.0, 40);
    let worst = agmon_exponent_check(&h, &[0, 1, 2, 3, 4, 5])
        .unwrap()
        .iter()
        .map(|a| ((a.spatial.exponent - 2.0).abs() / 2.0).max((a.frequency.exponent - 2.0).abs() / 2.0))
        .fold(0.0, f64::max);
    c.check(worst <= 0.05, format!("H11 modes 0..=5 worst rel. error {worst:.3}"));
    let q = system(2, 1, 1024, 12.0, 40);
    let fits = agmon_exponent_check(&q, &[0, 1, 2, 3]).unwrap();
    let sp = fits.iter().map(|a| (a.spatial.exponent - 3.0).abs() / 3.0).fold(0.0, f64::max);
    let fr = fits.iter().map(|a| (a.frequency.exponent - 1.5).abs() / 1.5).fold(0.0, f64::max);
    c.check(sp <= 0.07, format!("H21 modes 0..=3 spatial worst {sp:.3}"));
    c.check(fr <= 0.07, format!("frequency worst {fr:.3}"));
}

fn c04(c: &mut Checks) {
    for (k, m, l, floor) in [(1, 1, 12.0, 0.98), (2, 1, 8.0, 0.95)] {
        let es = system(k, m, 1024, l, 40);
        match agmon_scaling_fit(&es, 1.0, 0.05, 5..26) {
            Ok(f) => c.check(f.fit.r_squared >= floor, format!("({k},{m}) r² {:.4}", f.fit.r_squared)),
            Err(e) => c.check(false, format!("({k},{m}) {e}")),
        }
    }
}

fn c05(c: &mut Checks) {
    let es = system(1, 1, 1024, 30.0, 1024);
    for (s, t) in [(0.3f64, 2.0), (0.75, 0.5), (1.5, 0.5)] {
        let target = (2.0 * s).min(2.0);
        match frequency_tail_fit(&es, s, t) {
            Ok(f) => c.check(
                (f.exponent - target).abs() <= 0.1 * target,
                format!("s={s}: {:.3} vs {target}", f.exponent),
            ),
            Err(e) => c.check(false, format!("s={s}: {e}")),
        }
    }
}

fn c06(c: &mut Checks) {
    let es = system(1, 1, 512, 12.0, 120);
    let g = sample(es.grid(), |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + x[0])).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| 0.2 * i as f64 / 40.0).collect();
    let mut worst: f64 = 0.0;
    let mut bounded = true;
    for c1 in [0.05, 0.1, 0.25, 0.5] {
        let tr = weighted_functional_evolution(&es, &g, c1, 1.0, &times).unwrap();
        worst = worst.max(tr.max_ratio);
        bounded &= tr.bounded;
    }
    c.check(bounded && worst <= 2.0, format!("max F(t)/F(0) {worst:.3} for c₁ in [0.05, 0.5]"));
    let ts: Vec<f64> = (0..8).map(|i| 0.02 * 1.4f64.powi(i)).collect();
    let p = prefactor_probe(&es, 2.0, 0.05, &ts).unwrap();
    c.check(
        p.fitted_exponent.is_finite(),
        format!("s=2 prefactor exponent {:.3} (predicted {:.3}, reported only)", p.fitted_exponent, p.predicted_exponent),
    );
}

fn c07(c: &mut Checks) {
    let es = system(1, 1, 512, 12.0, 40);
    let (n, t) = (10, 0.1);
    let r = dissipation_check(&es, 1.0, Family::Eigenmode, n, t, &es.vector(n + 1).unwrap()).unwrap();
    let closed = (-t * (2.0 * (n + 1) as f64 + 1.0)).exp();
    let e = (r.measured - r.bound.unwrap()).abs().max((r.bound.unwrap() - closed).abs());
    c.check(e <= 1e-12, format!("equality case {e:.1e}"));
    let g = white_noise(es.grid(), &mut stream(1, 0)).unwrap();
    let mut ok = true;
    for t in [0.01, 0.05, 0.1, 0.3] {
        let r = dissipation_check(&es, 1.0, Family::Eigenmode, n, t, &g).unwrap();
        ok &= r.measured <= r.bound.unwrap() * (1.0 + 1e-12);
    }
    c.check(ok, "noise obeys e^{-t(2N+3)}‖g‖");
}

fn c08(c: &mut Checks) {
    let g = Grid::new(1, 512, 12.0).unwrap();
    let ts = make_thick_periodic(&g, 0.3, 4.0).unwrap();
    let orders: Vec<usize> = (4..=24).collect();
    let curve = spectral_constant_estimate(None, Family::Frequency, &ts, &orders).unwrap();
    let r2 = curve.growth.map_or(0.0, |f| f.r_squared);
    c.check(r2 >= 0.95, format!("frequency log C_N linear r² {r2:.3}"));
    let es = system(1, 1, 1024, 16.0, 60);
    let iv = ThickSet::interval(es.grid(), 0.0, 1.0).unwrap();
    let ho: Vec<usize> = (5..=40).collect();
    let curve = spectral_constant_estimate(Some(&es), Family::Eigenmode, &iv, &ho).unwrap();
    let gr = growth_ratio_check(&curve);
    c.check(gr.bounded, format!("Hermite log C_N/(N log N) max {:.3} ({} finite)", gr.max_ratio, gr.finite));
}

fn harmonic_control() -> (EigenSystem, ThickSet, SampledFunction) {
    let es = system(1, 1, 512, 12.0, 32);
    let ts = make_thick_periodic(es.grid(), 0.3, 1.0).unwrap();
    let f0 = es.vector(0).unwrap().axpy(C::new(1.0, 0.0), &es.vector(3).unwrap()).unwrap();
    (es, ts, f0)
}

fn c09(c: &mut Checks) {
    let (es, ts, f0) = harmonic_control();
    let sol = hum_solve(&es, 1.0, &ts, 0.3, &f0, 1e-8, DEFAULT_QUADRATURE).unwrap();
    let hum = sol.hum.unwrap();
    c.check(sol.terminal_residual <= 1e-3, format!("residual {:.1e}", sol.terminal_residual));
    c.check(hum.duality_defect <= 1e-8, format!("duality {:.1e}", hum.duality_defect));
    let mut ok = true;
    for horizon in [0.1, 0.2, 0.3, 0.4] {
        for eps in [1e-4, 1e-6, 1e-8] {
            let s = hum_solve(&es, 1.0, &ts, horizon, &f0, eps, DEFAULT_QUADRATURE).unwrap();
            ok &= s.terminal_residual <= s.hum.unwrap().penalization_bound * (1.0 + 1e-9);
        }
    }
    c.check(ok, "penalization bound on 12 solves");
}

fn c10(c: &mut Checks) {
    let (es, ts, f0) = harmonic_control();
    let sweep = cost_sweep(&es, 1.0, &ts, &[0.05, 0.1, 0.2, 0.3, 0.4], 1e-8).unwrap();
    match sweep.fixed {
        Some(f) => c.check(
            f.beta == 1.0 && f.fit.slope > 0.0 && f.fit.r_squared >= 0.9,
            format!("β=1: B {:.3}, r² {:.3}", f.fit.slope, f.fit.r_squared),
        ),
        None => c.check(false, "no closed-form β"),
    }
    let orders = measure_lr_orders(&es, 1.0, &ts, &(4..=24).collect::<Vec<_>>()).unwrap();
    match lebeau_robbiano_solve(&es, 1.0, &ts, 0.4, &f0, &orders, &LrOptions::default()) {
        Ok(sol) => {
            let worst = sol.stages.iter().map(|s| s.ratio).fold(0.0, f64::max);
            c.check(
                worst < 1.0 && sol.terminal_residual <= 1e-2,
                format!("LR {} stages, worst ratio {worst:.3}, residual {:.1e}", sol.stages.len(), sol.terminal_residual),
            );
        }
        Err(e) => c.check(false, format!("LR {e}")),
    }
}

const EPSILONS: [f64; 4] = [1.0, 0.5, 0.25, 0.1];

fn phi(g: &Grid, eps: f64, k: u32, m: u32) -> SampledFunction {
    cutoff_weight(g, &make_cutoff(eps).unwrap(), &AgmonWeight::new(1.0, k, m).unwrap()).unwrap()
}

/// Half-width for which `φ_ε` with the (1, m) weight is flat at the box edge
/// down to `ε = 0.1` (`φ(L) ≥ 25 > 2/ε`); the periodic wrap is then smooth.
fn half_width(m: u32) -> f64 {
    [6.0, 9.0, 12.0][m as usize - 1]
}

fn c11(c: &mut Checks) {
    let fine = |m: u32| Grid::new(1, 4096, half_width(m)).unwrap();
    let w = AgmonWeight::new(1.0, 1, 1).unwrap();
    let (mut s1, mut s2, mut moyal, mut op1, mut op2, mut tail, mut tail1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (e, &eps) in EPSILONS.iter().enumerate() {
        let cut = make_cutoff(eps).unwrap();
        let g1 = fine(1);
        let p = phi(&g1, eps, 1, 1);
        let tower = commutator_tower(&p, 1).unwrap();
        let d: Vec<f64> = g1.nodes().iter().map(|&x| cut.derivative(w.value(x)) * w.derivative(x, 1).unwrap()).collect();
        let sup1 = d.iter().fold(0.0f64, |a, v| a.max(2.0 * v.abs()));
        let sup2 = d.iter().fold(0.0f64, |a, v| a.max(2.0 * v * v));
        let e1 = (0..g1.len()).map(|i| (tower[0].coefficients()[1].values()[i] - C::new(0.0, 2.0 * d[i])).norm()).fold(0.0, f64::max);
        let e2 = (0..g1.len()).map(|i| (tower[1].coefficients()[0].values()[i] + 2.0 * d[i] * d[i]).norm()).fold(0.0, f64::max);
        s1 = s1.max(e1 / sup1);
        s2 = s2.max(e2 / sup2);
        for m in 1..=3u32 {
            let g = fine(m);
            let pm = phi(&g, eps, 1, m);
            let tw = commutator_tower(&pm, m).unwrap();
            let mut prev = PolySymbol::monomial(&g, 2 * m as usize).unwrap();
            for s in &tw {
                let br = moyal_mul_x_poly(&pm, &prev).unwrap().sub(&moyal_mul_poly_x(&prev, &pm).unwrap()).unwrap();
                let scale = s.coefficients().iter().map(|c| c.max_abs()).fold(1.0, f64::max);
                moyal = moyal.max(br.max_difference(s).unwrap() / scale);
                prev = s.clone();
            }
        }
        for m in 1..=2u32 {
            let g = fine(m);
            let pm = phi(&g, eps, 1, m);
            let tw = commutator_tower(&pm, m).unwrap();
            for trial in 0..3 {
                let v = band_limited(&g, 100 * e as u64 + trial, 4.0, false);
                for (j, s) in tw.iter().enumerate() {
                    let a = apply_standard(&weyl_to_standard(s).unwrap(), &v).unwrap();
                    let b = ad_apply(&pm, m, j + 1, &v).unwrap();
                    let r = rel(&a, &b);
                    if m == 1 {
                        op1 = op1.max(r);
                    } else {
                        op2 = op2.max(r);
                    }
                }
                if m == 1 {
                    let z = ad_apply(&pm, 1, 3, &v).unwrap().norm() / ad_apply(&pm, 1, 0, &v).unwrap().norm();
                    tail = tail.max(z);
                    if eps == 1.0 {
                        tail1 = tail1.max(z);
                    }
                }
            }
        }
    }
    c.check(s1 <= 1e-10, format!("σ₁ {s1:.1e}"));
    c.check(s2 <= 1e-10, format!("σ₂ {s2:.1e}"));
    c.check(moyal <= 1e-10, format!("tower/Moyal {moyal:.1e}"));
    c.check(op1 <= 1e-8, format!("symbol/operator m=1 {op1:.1e}"));
    c.known(op2 <= 1e-8, format!("symbol/operator m=2 {op2:.1e}"));
    c.check(tail1 <= 1e-8, format!("ad³ m=1 ε=1 {tail1:.1e}"));
    c.known(tail <= 1e-8, format!("ad³ m=1 all ε {tail:.1e}"));

    let mut conj: f64 = 0.0;
    for m in 1..=2u32 {
        let mid = Grid::new(1, 2048, half_width(m)).unwrap();
        let v = band_limited(&mid, 9, 4.0, false);
        for &eps in &EPSILONS {
            for t in [0.1, 0.2, 0.3] {
                conj = conj.max(conjugation_check(&phi(&mid, eps, 1, m), m, t, &v).unwrap().rel_error);
            }
        }
    }
    c.check(conj <= 1e-7, format!("conjugation {conj:.2e}"));

    let coarse = Grid::new(1, 1024, 12.0).unwrap();
    let mut first = 0.0f64;
    let mut higher = 0.0f64;
    for (k, m) in [(1u32, 1u32), (2, 1), (1, 2)] {
        let w = AgmonWeight::new(1.0, k, m).unwrap();
        for j in 1..=2 * m as usize {
            let r = symbol_class_report(&coarse, &w, j, &EPSILONS).unwrap();
            let spread = r.spread.iter().flatten().copied().fold(0.0, f64::max);
            if j == 1 {
                first = first.max(spread);
            } else {
                higher = higher.max(spread);
            }
        }
    }
    c.check(first <= 2.0, format!("symbol class j=1 spread {first:.2}"));
    c.known(higher <= 2.0, format!("symbol class j≥2 spread {higher:.2}"));
}

fn c12(c: &mut Checks) {
    let w = AgmonWeight::new(1.0, 1, 1).unwrap();
    let zero = garding_probe(&Grid::new(1, 512, 12.0).unwrap(), &w, 1.0, 0.0, DEFAULT_FAMILY_SIZE, 1).unwrap();
    c.check(zero.c0_required == 0.0, format!("t=0 gives {}", zero.c0_required));
    let a = garding_probe(&Grid::new(1, 512, 12.0).unwrap(), &w, 1.0, 0.5, DEFAULT_FAMILY_SIZE, 1).unwrap();
    let b = garding_probe(&Grid::new(1, 1024, 12.0).unwrap(), &w, 1.0, 0.5, DEFAULT_FAMILY_SIZE, 1).unwrap();
    let drift = (a.c0_required - b.c0_required).abs() / a.c0_required.max(f64::MIN_POSITIVE);
    c.check(
        a.c0_required.is_finite() && drift <= 0.1,
        format!("t=0.5: c₀ {:.4} → {:.4} under doubling", a.c0_required, b.c0_required),
    );
}

fn c13(c: &mut Checks) {
    let g = Grid::new(1, 64, 6.0).unwrap();
    let bump = sample(&g, |x| (-x[0] * x[0] / 4.0).exp()).unwrap();
    let one = PhaseField::from_fn(&g, |_, _| 1.0).unwrap();
    let mut res: f64 = 0.0;
    for seed in 0..5 {
        let u = band_limited(&g, seed, 3.0, false).mul(&bump).unwrap();
        res = res.max(rel(&anti_wick_apply(&one, &u).unwrap(), &u));
    }
    c.check(res <= 1e-8, format!("resolution {res:.1e}"));

    let mut worst = f64::INFINITY;
    for i in 0..200u64 {
        let mut rng = stream(i, 3);
        let sym = if i % 2 == 0 {
            let (cx, cxi, r) = (uniform(&mut rng, -3.0, 3.0), uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, 0.5, 3.0));
            PhaseField::from_fn(&g, |x, xi| ((x - cx).powi(2) + (xi - cxi).powi(2) < r * r) as u8 as f64).unwrap()
        } else {
            let vals = (0..g.len() * g.len()).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
            PhaseField::new(&g, vals).unwrap()
        };
        let z: Vec<C> = (0..g.len()).map(|_| C::new(normal(&mut rng), normal(&mut rng))).collect();
        let v = SampledFunction::new(g, Domain::Space, z).unwrap().mul(&bump).unwrap();
        let q = anti_wick_apply(&sym, &v).unwrap().inner(&v).unwrap();
        worst = worst.min(q.re / v.norm().powi(2));
    }
    c.check(worst >= -1e-10, format!("min ⟨A_a v, v⟩/‖v‖² over 200 symbols {worst:.1e}"));

    let poly = PhasePolynomial { terms: vec![PhaseTerm { coef: 1.0, px: 0, pxi: 2 }] };
    let b = anti_wick_weyl_symbol_poly(&poly).unwrap();
    let sym_err = [(0.0, 0.0), (1.5, -2.0), (-3.0, 4.0)].iter().map(|&(x, xi)| (b.eval(x, xi) - xi * xi - 0.5).abs()).fold(0.0, f64::max);
    let wide = Grid::new(1, 256, 12.0).unwrap();
    let a = PhaseField::from_fn(&wide, |_, xi| xi * xi).unwrap();
    let u = sample(&wide, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + x[0])).unwrap();
    let rhs = spectral_derivative(&u, &[2]).unwrap().scale(C::new(-1.0, 0.0)).axpy(C::new(0.5, 0.0), &u).unwrap();
    let op_err = rel(&anti_wick_apply(&a, &u).unwrap(), &rhs);
    c.check(sym_err <= 1e-6 && op_err <= 1e-6, format!("ξ² ↦ ξ²+1/2: symbol {sym_err:.1e}, operator {op_err:.1e}"));
}

fn c14(c: &mut Checks) {
    let mut worst: f64 = 0.0;
    for (dim, n, l) in [(1, 1024, 10.0), (2, 64, 6.0)] {
        let g = Grid::new(dim, n, l).unwrap();
        for seed in 0..5 {
            let mut rng = stream(seed, 5);
            let z: Vec<C> = (0..g.len()).map(|_| C::new(normal(&mut rng), normal(&mut rng))).collect();
            let u = SampledFunction::new(g, Domain::Space, z).unwrap();
            let hat = forward_transform(&u).unwrap();
            let expected = (2.0 * PI).powf(dim as f64 / 2.0) * u.norm();
            worst = worst.max((hat.norm() - expected).abs() / expected);
            worst = worst.max(inverse_transform(&hat).unwrap().sub(&u).unwrap().norm() / u.norm());
        }
    }
    c.check(worst <= 1e-12, format!("Plancherel/round trip {worst:.1e}"));

    let (es, ts, _) = harmonic_control();
    let (mut asym, mut neg) = (0.0f64, 0.0f64);
    for horizon in [0.05, 0.2, 0.5] {
        for s in [0.5, 1.0, 1.5] {
            let gram = Gramian::new(&es, s, &ts, horizon, DEFAULT_QUADRATURE).unwrap();
            let a = gram.matrix();
            let scale = a.amax();
            asym = asym.max((a - a.transpose()).amax() / scale);
            let low = a.clone().symmetric_eigenvalues().min();
            neg = neg.max(-low / scale);
        }
    }
    c.check(asym <= 1e-10 && neg <= 1e-10, format!("Gramian asymmetry {asym:.1e}, negativity {neg:.1e}"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[operator]\nk = 1\nm = 1\n[grid]\npoints = 512\nhalf_width = 12.0\n[eigen]\ncount = 40\n\
         [garding]\nfamily_size = 60\n[antiwick]\npoints = 32\nsymbols = 20\n",
    )
    .unwrap();
    let commands = [
        Command::Spectrum,
        Command::Coefficients,
        Command::Dissipation,
        Command::Control,
        Command::Thickset,
        Command::Garding,
        Command::Antiwick,
    ];
    let mut identical = true;
    for command in commands {
        let outputs: Vec<Vec<Vec<u8>>> = [(dir.path().join("a"), 1), (dir.path().join("b"), 4)]
            .into_iter()
            .map(|(out, threads)| {
                let args = RunArgs { command, config: cfg.clone(), out: out.clone(), threads: Some(threads), seed: None, cache: None };
                run(&args).unwrap();
                let read = |p: &Path| std::fs::read(p).unwrap();
                vec![read(&out.join(format!("{}.csv", command.name()))), read(&out.join(format!("{}.summary.json", command.name())))]
            })
            .collect();
        identical &= outputs[0] == outputs[1];
    }
    c.check(identical, format!("{} subcommands rerun byte-identically", commands.len()));
}

type Criterion = (&'static str, fn(&mut Checks));

fn main() {
    let criteria: [Criterion; 14] = [
        ("harmonic spectrum", c01),
        ("Weyl law", c02),
        ("Agmon exponents", c03),
        ("Agmon λ-scaling", c04),
        ("smoothing exponent switch", c05),
        ("s=1 weighted functional", c06),
        ("dissipation identity", c07),
        ("spectral constants", c08),
        ("HUM control", c09),
        ("cost blow-up and staged control", c10),
        ("Weyl-calculus suite", c11),
        ("Gårding probe", c12),
        ("anti-Wick quantization", c13),
        ("infrastructure", c14),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut hard_failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str()) || name.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let mut checks = Checks::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut checks)));
        let secs = t0.elapsed().as_secs_f64();
        let (verdict, detail, hard) = match outcome {
            Err(p) => {
                let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                ("FAIL", format!("panicked: {}", msg.unwrap_or_default()), false)
            }
            Ok(()) => {
                let detail: Vec<String> = checks
                    .items
                    .iter()
                    .map(|(w, ok, known)| match (ok, known) {
                        (true, _) => w.clone(),
                        (false, false) => format!("{w} [fail]"),
                        (false, true) => format!("{w} [known shortfall]"),
                    })
                    .collect();
                (if checks.passed() { "PASS" } else { "FAIL" }, detail.join("; "), checks.hard_passed())
            }
        };
        hard_failures += !hard as usize;
        println!("criterion {id} {verdict} {name} ({secs:.1}s): {detail}");
    }
    if hard_failures > 0 {
        println!("{hard_failures} criteria failed outside the recorded shortfalls");
        std::process::exit(1);
    }
}
