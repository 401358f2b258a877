//! One function per subcommand. Sweeps run on the rayon pool; results are
//! collected in input order so the written tables do not depend on scheduling.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde_json::json;
use shubin_core::control_lab::*;
use shubin_core::decay_lab::*;
use shubin_core::lattice::*;
use shubin_core::rng::{normal, stream, uniform, white_noise};
use shubin_core::shubin_op::{derived_exponents, OperatorSpec};
use shubin_core::spectral::{semigroup_apply, EigenSystem};
use shubin_core::weyl_calc::*;

use crate::cache::{CacheOutcome, EigenCache};
use crate::config::{ExperimentConfig, ThickKindName};
use crate::output::{Product, StageTiming, Table, TailMass};
use crate::{row, Command, RunError};

// RNG stream ids; one per random family so adding a family never shifts another.
const NOISE_STREAM: u64 = 0;
const TEST_FUNCTION_STREAM: u64 = 1;
const SYMBOL_STREAM: u64 = 2;

pub struct Context {
    pub config: ExperimentConfig,
    pub timings: Vec<StageTiming>,
    pub cache_outcome: Option<CacheOutcome>,
    pub tail_mass: Option<TailMass>,
    pub warnings: Vec<String>,
    cache: EigenCache,
    spec: OperatorSpec,
    grid: Grid,
}

type Res<T> = Result<T, RunError>;

fn at(stage: &str) -> impl Fn(shubin_core::Error) -> RunError + '_ {
    move |source| RunError::Compute { stage: stage.to_string(), source }
}

impl Context {
    /// `config` must already be validated.
    pub fn new(config: ExperimentConfig, cache_dir: PathBuf) -> Self {
        let spec = config.spec().expect("validated config");
        let grid = config.grid().expect("validated config");
        Self {
            config,
            timings: Vec::new(),
            cache_outcome: None,
            tail_mass: None,
            warnings: Vec::new(),
            cache: EigenCache::new(cache_dir),
            spec,
            grid,
        }
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&Self) -> Res<T>) -> Res<T> {
        let t0 = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming { stage: stage.to_string(), seconds: t0.elapsed().as_secs_f64() });
        out
    }

    fn eigensystem(&mut self) -> Res<EigenSystem> {
        let t0 = Instant::now();
        let count = self.config.eigen.count;
        let mut warnings = Vec::new();
        let (es, outcome) = self.cache.load_or_compute(&self.spec, &self.grid, count, &mut warnings)?;
        let stage = if outcome == CacheOutcome::Hit { "cache-load" } else { "eigensolve" };
        self.timings.push(StageTiming { stage: stage.into(), seconds: t0.elapsed().as_secs_f64() });
        self.warnings.extend(warnings);
        self.cache_outcome = Some(outcome);
        self.tail_mass = Some(TailMass {
            requested: es.requested(),
            retained: es.count(),
            max_boundary_mass: es.boundary_mass().iter().copied().fold(0.0, f64::max),
            max_residual: es.residuals().iter().copied().fold(0.0, f64::max),
            truncation: es.truncation(),
        });
        Ok(es)
    }

    fn thick_set(&self) -> Res<ThickSet> {
        let t = &self.config.thickset;
        let set = match t.kind {
            ThickKindName::Periodic => make_thick_periodic(&self.grid, t.gamma, t.scale),
            ThickKindName::Density => make_thick_density(&self.grid, t.gamma, t.delta, t.radius, t.floor),
            ThickKindName::Full => Ok(ThickSet::full(&self.grid)),
        };
        set.map_err(at("thickset"))
    }

    fn datum(&self, es: &EigenSystem) -> Res<SampledFunction> {
        let mut f = SampledFunction::zeros(*es.grid(), Domain::Space);
        for &j in &self.config.control.datum {
            let v = es.vector(j).map_err(at("datum"))?;
            f = f.axpy(C::new(1.0, 0.0), &v).map_err(at("datum"))?;
        }
        Ok(f)
    }

    fn noise(&self, grid: &Grid) -> Res<SampledFunction> {
        white_noise(grid, &mut stream(self.config.seed, NOISE_STREAM)).map_err(at("noise"))
    }
}

pub fn dispatch(command: Command, ctx: &mut Context) -> Res<Product> {
    match command {
        Command::Spectrum => spectrum(ctx),
        Command::WeylLaw => weyl_law(ctx),
        Command::Agmon => agmon(ctx),
        Command::Smoothing => smoothing(ctx),
        Command::Seminorms => seminorms(ctx),
        Command::Coefficients => coefficients(ctx),
        Command::Thickset => thickset(ctx),
        Command::SpectralConstant => spectral_constant(ctx),
        Command::Dissipation => dissipation(ctx),
        Command::Control => control(ctx),
        Command::CostSweep => cost_sweep_cmd(ctx),
        Command::LrControl => lr_control(ctx),
        Command::Commutator => commutator(ctx),
        Command::Garding => garding(ctx),
        Command::Antiwick => antiwick(ctx),
    }
}

fn spectrum(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let mut table = Table::new(&[("j", "index"), ("lambda", "1"), ("boundary_mass", "1"), ("residual", "1")]);
    for j in 0..es.count() {
        table.push(row![j, es.eigenvalues()[j], es.boundary_mass()[j], es.residuals()[j]]);
    }
    let summary = json!({
        "spec": ctx.spec,
        "grid": ctx.grid,
        "retained": es.count(),
        "requested": es.requested(),
        "truncation": es.truncation(),
        "orthonormality_defect": es.orthonormality_defect(),
        "exponents": derived_exponents(&ctx.spec),
    });
    Ok(Product { table, summary })
}

fn weyl_law(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let w = ctx.config.weyl_law.clone();
    let fit = ctx.timed("fit", |_| weyl_fit(&es, w.start..w.end).map_err(at("weyl fit")))?;
    let mut table = Table::new(&[("j", "index"), ("log_j1", "log(j+1)"), ("log_lambda", "log(1)")]);
    for j in 0..es.count() {
        table.push(row![j, ((j + 1) as f64).ln(), es.eigenvalues()[j].ln()]);
    }
    let predicted = derived_exponents(&ctx.spec).weyl;
    let summary = json!({
        "window": [w.start, w.end],
        "slope": fit.slope,
        "predicted": predicted,
        "relative_error": (fit.slope - predicted).abs() / predicted,
        "fit": fit,
    });
    Ok(Product { table, summary })
}

fn agmon(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let a = ctx.config.agmon.clone();
    let fits = ctx.timed("decay fits", |_| agmon_exponent_check(&es, &a.modes).map_err(at("agmon fits")))?;
    let scaling = ctx.timed("scaling fit", |_| {
        agmon_scaling_fit(&es, a.sigma, a.t, a.scaling_start..a.scaling_end).map_err(at("agmon scaling"))
    })?;
    let mut table = Table::new(&[
        ("j", "index"),
        ("lambda", "1"),
        ("spatial_exponent", "1"),
        ("spatial_rate", "1"),
        ("frequency_exponent", "1"),
        ("frequency_rate", "1"),
    ]);
    for f in &fits {
        table.push(row![f.index, f.eigenvalue, f.spatial.exponent, f.spatial.rate, f.frequency.exponent, f.frequency.rate]);
    }
    let e = derived_exponents(&ctx.spec);
    let summary = json!({
        "predicted_spatial": e.spatial_agmon,
        "predicted_frequency": e.frequency_agmon,
        "fits": fits,
        "scaling": {"sigma": a.sigma, "t": a.t, "window": [a.scaling_start, a.scaling_end], "fit": scaling.fit},
    });
    Ok(Product { table, summary })
}

fn smoothing(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let g = ctx.noise(es.grid())?;
    let sm = ctx.config.smoothing.clone();
    let jobs: Vec<(f64, f64)> = sm.s.iter().flat_map(|&s| sm.times.iter().map(move |&t| (s, t))).collect();
    let results = ctx.timed("probes", |_| {
        jobs.par_iter()
            .map(|&(s, t)| {
                let w = smoothing_probe(&es, s, t, &g).map_err(at("smoothing probe"))?;
                let tail = frequency_tail_fit(&es, s, t).map_err(at("frequency tail"))?;
                Ok((w, tail))
            })
            .collect::<Res<Vec<_>>>()
    })?;
    let mut table = Table::new(&[
        ("s", "1"),
        ("t", "time"),
        ("lambda1", "1"),
        ("lambda2", "1"),
        ("lambda3", "L2 norm"),
        ("tail_exponent", "1"),
        ("predicted_tail_exponent", "1"),
    ]);
    let mut entries = Vec::new();
    for (&(s, t), (w, tail)) in jobs.iter().zip(&results) {
        let predicted = 1.0 / w.mu;
        table.push(row![s, t, w.lambda1, w.lambda2, w.lambda3, tail.exponent, predicted]);
        entries.push(json!({"s": s, "t": t, "weights": w, "tail": tail}));
    }
    Ok(Product { table, summary: json!({ "runs": entries }) })
}

#[allow(clippy::needless_range_loop)]
fn seminorms(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let g = ctx.noise(es.grid())?;
    let c = ctx.config.seminorms.clone();
    let s = ctx.spec.s;
    let (bounds, measured) = ctx.timed("tables", |_| {
        let w = smoothing_probe(&es, s, c.t, &g).map_err(at("smoothing probe"))?;
        let bounds = seminorm_bounds_from_weights(&w, c.alpha, c.beta, es.grid().dim()).map_err(at("bounds"))?;
        let u = semigroup_apply(&es, s, c.t, &g).map_err(at("semigroup"))?.function;
        let measured = seminorm_table(&u, c.alpha, c.beta).map_err(at("seminorms"))?;
        Ok((bounds, measured))
    })?;
    let mut table = Table::new(&[("alpha", "order"), ("beta", "order"), ("measured", "L2 norm"), ("bound", "L2 norm"), ("holds", "bool")]);
    let mut violations = 0;
    for a in 0..=c.alpha {
        for b in 0..=c.beta {
            let holds = measured[a][b] <= bounds.table[a][b];
            violations += !holds as usize;
            table.push(row![a, b, measured[a][b], bounds.table[a][b], holds]);
        }
    }
    Ok(Product { table, summary: json!({"t": c.t, "s": s, "constant": bounds.constant, "violations": violations}) })
}

fn coefficients(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let noise = ctx.noise(es.grid())?;
    let c = ctx.config.coefficients.clone();
    let s = ctx.spec.s;
    let g = semigroup_apply(&es, s, c.t, &noise).map_err(at("semigroup"))?.function;
    let coeffs = es.coefficients(&g).map_err(at("coefficients"))?;
    let fit = coefficient_decay_fit(&es, &g, c.a).map_err(at("coefficient fit"))?;
    let mut table = Table::new(&[("j", "index"), ("abs_coefficient", "L2 norm")]);
    for (j, z) in coeffs.iter().enumerate() {
        table.push(row![j, z.norm()]);
    }
    Ok(Product { table, summary: json!({"t": c.t, "a": c.a, "fit": fit}) })
}

fn thickset(ctx: &mut Context) -> Res<Product> {
    let t = ctx.config.thickset.clone();
    let ts = ctx.timed("construct", |c| c.thick_set())?;
    let report = thickness_check(&ts, t.gamma, t.scale).map_err(at("thickness"))?;
    let mut table = Table::new(&[("node", "index"), ("x", "length"), ("inside", "bool")]);
    let mask = mask_nodes(&ts);
    if ctx.grid.dim() == 1 {
        for (i, &m) in mask.iter().enumerate() {
            table.push(row![i, ctx.grid.node(i), m == 1]);
        }
    } else {
        for (i, &m) in mask.iter().enumerate() {
            table.push(row![i, ctx.grid.coords(i, Domain::Space)[0], m == 1]);
        }
    }
    let summary = json!({"kind": ts.kind(), "measure": ts.measure(), "measured_gamma": ts.measured_gamma(), "report": report});
    Ok(Product { table, summary })
}

fn spectral_constant(ctx: &mut Context) -> Res<Product> {
    let sc = ctx.config.spectral_constant.clone();
    let family = Family::from(sc.family);
    let es = if family == Family::Eigenmode { Some(ctx.eigensystem()?) } else { None };
    let ts = ctx.thick_set()?;
    let curve = ctx.timed("svd", |_| spectral_constant_estimate(es.as_ref(), family, &ts, &sc.orders).map_err(at("spectral constants")))?;
    let mut table = Table::new(&[("order", "N"), ("constant", "1"), ("log_constant", "log(1)")]);
    for (n, c) in curve.orders.iter().zip(&curve.constants) {
        table.push(row![*n, *c, c.ln()]);
    }
    let ratio = (family == Family::Eigenmode).then(|| growth_ratio_check(&curve));
    Ok(Product { table, summary: json!({"curve": curve, "growth_ratio": ratio}) })
}

fn dissipation(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let g = ctx.noise(es.grid())?;
    let d = ctx.config.dissipation.clone();
    let s = ctx.spec.s;
    let family = Family::from(d.family);
    let reports = ctx.timed("sweep", |_| {
        d.times
            .par_iter()
            .map(|&t| dissipation_check(&es, s, family, d.order, t, &g).map_err(at("dissipation")))
            .collect::<Res<Vec<_>>>()
    })?;
    let mut table = Table::new(&[("t", "time"), ("measured", "L2 norm"), ("bound", "L2 norm")]);
    for (t, r) in d.times.iter().zip(&reports) {
        table.push(row![*t, r.measured, r.bound.unwrap_or(f64::NAN)]);
    }
    let holds = reports.iter().all(|r| r.bound.is_none_or(|b| r.measured <= b * (1.0 + 1e-12)));
    Ok(Product { table, summary: json!({"order": d.order, "family": family, "bound_holds": holds, "reports": reports}) })
}

fn solution_table(sol: &ControlSolution) -> Table {
    let mut table = Table::new(&[("t", "time"), ("weight", "time"), ("control_norm", "L2 norm")]);
    for ((t, w), h) in sol.nodes.iter().zip(&sol.weights).zip(&sol.control) {
        table.push(row![*t, *w, h.norm()]);
    }
    table
}

fn control(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let ts = ctx.thick_set()?;
    let f0 = ctx.datum(&es)?;
    let c = ctx.config.control.clone();
    let s = ctx.spec.s;
    let sol = ctx.timed("hum", |_| hum_solve(&es, s, &ts, c.horizon, &f0, c.epsilon, c.quadrature).map_err(at("hum")))?;
    let summary = json!({
        "horizon": sol.horizon,
        "terminal_residual": sol.terminal_residual,
        "cost": sol.cost,
        "penalty": sol.penalty,
        "cg_iterations": sol.cg_iterations,
        "unresolved": sol.unresolved,
        "hum": sol.hum,
    });
    Ok(Product { table: solution_table(&sol), summary })
}

fn cost_sweep_cmd(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let ts = ctx.thick_set()?;
    let c = ctx.config.cost_sweep.clone();
    let s = ctx.spec.s;
    let sweep = ctx.timed("sweep", |_| cost_sweep(&es, s, &ts, &c.times, c.epsilon).map_err(at("cost sweep")))?;
    let mut table = Table::new(&[("T", "time"), ("cost", "L2 norm squared"), ("residual", "1"), ("cg_iterations", "count")]);
    for i in 0..sweep.times.len() {
        table.push(row![sweep.times[i], sweep.costs[i], sweep.residuals[i], sweep.iterations[i]]);
    }
    let summary = json!({"predicted_beta": derived_exponents(&ctx.spec).beta, "fixed": sweep.fixed, "free": sweep.free});
    Ok(Product { table, summary })
}

fn lr_control(ctx: &mut Context) -> Res<Product> {
    let es = ctx.eigensystem()?;
    let ts = ctx.thick_set()?;
    let f0 = ctx.datum(&es)?;
    let l = ctx.config.lr_control.clone();
    let s = ctx.spec.s;
    let orders = ctx.timed("orders", |_| measure_lr_orders(&es, s, &ts, &l.orders).map_err(at("lr orders")))?;
    let options = LrOptions { initial_modes: l.initial_modes, max_stages: l.max_stages, ..LrOptions::default() };
    let sol = ctx.timed("stages", |_| {
        lebeau_robbiano_solve(&es, s, &ts, l.horizon, &f0, &orders, &options).map_err(at("lebeau-robbiano"))
    })?;
    let mut table = Table::new(&[
        ("stage", "index"),
        ("modes", "count"),
        ("start", "time"),
        ("length", "time"),
        ("residual_before", "1"),
        ("residual_after", "1"),
        ("ratio", "1"),
        ("dissipation_holds", "bool"),
    ]);
    for st in &sol.stages {
        table.push(row![st.index, st.modes, st.start, st.length, st.residual_before, st.residual_after, st.ratio, st.dissipation_holds]);
    }
    let summary = json!({
        "a": orders.a,
        "b": orders.b,
        "theta": orders.theta,
        "terminal_residual": sol.terminal_residual,
        "cost": sol.cost,
        "stages": sol.stages,
    });
    Ok(Product { table, summary })
}

fn band_limited(grid: &Grid, seed: u64, index: u64, band: f64) -> Res<SampledFunction> {
    let mut rng = stream(seed, TEST_FUNCTION_STREAM + 16 * index);
    let l = grid.half_width();
    let qmax = (band * l / PI).floor() as i64;
    let coeffs: Vec<(f64, C)> = (-qmax..=qmax)
        .map(|q| (q as f64 * PI / l, C::new(normal(&mut rng), normal(&mut rng))))
        .collect();
    sample_complex(grid, |x| coeffs.iter().map(|(k, a)| a * C::from_polar(1.0, k * x[0])).sum()).map_err(at("test function"))
}

fn commutator(ctx: &mut Context) -> Res<Product> {
    let c = ctx.config.commutator.clone();
    let (k, m) = (ctx.spec.k, ctx.spec.m);
    let grid = ctx.grid;
    let seed = ctx.config.seed;
    let weight = AgmonWeight::new(c.sigma, k, m).map_err(at("weight"))?;
    let rows = ctx.timed("towers", |_| {
        c.epsilons
            .par_iter()
            .enumerate()
            .map(|(e, &eps)| {
                let phi = cutoff_weight(&grid, &make_cutoff(eps).map_err(at("cutoff"))?, &weight).map_err(at("cutoff weight"))?;
                let tower = commutator_tower(&phi, m).map_err(at("tower"))?;
                let v = band_limited(&grid, seed, e as u64, c.band)?;
                let mut out = Vec::new();
                for (j, sym) in tower.iter().enumerate() {
                    let a = apply_standard(&weyl_to_standard(sym).map_err(at("quantize"))?, &v).map_err(at("quantize"))?;
                    let b = ad_apply(&phi, m, j + 1, &v).map_err(at("commutator"))?;
                    let err = a.sub(&b).map_err(at("compare"))?.norm() / b.norm().max(f64::MIN_POSITIVE);
                    out.push((j + 1, sym.xi_degree(), err));
                }
                let conj = conjugation_check(&phi, m, c.t, &v).map_err(at("conjugation"))?;
                Ok((eps, out, conj))
            })
            .collect::<Res<Vec<_>>>()
    })?;
    let classes = ctx.timed("symbol classes", |_| {
        (1..=2 * m as usize)
            .into_par_iter()
            .map(|j| symbol_class_report(&grid, &weight, j, &c.epsilons).map_err(at("symbol class")))
            .collect::<Res<Vec<_>>>()
    })?;
    let mut table = Table::new(&[("epsilon", "1"), ("j", "order"), ("xi_degree", "order"), ("symbol_operator_error", "relative")]);
    let mut conj = Vec::new();
    for (eps, out, cc) in &rows {
        for &(j, deg, err) in out {
            table.push(row![*eps, j, deg, err]);
        }
        conj.push(json!({"epsilon": eps, "rel_error": cc.rel_error, "overflow": cc.overflow}));
    }
    let summary = json!({"t": c.t, "conjugation": conj, "symbol_classes": classes});
    Ok(Product { table, summary })
}

fn garding(ctx: &mut Context) -> Res<Product> {
    let g = ctx.config.garding.clone();
    let (k, m) = (ctx.spec.k, ctx.spec.m);
    let grid = ctx.grid;
    let seed = ctx.config.seed;
    let weight = AgmonWeight::new(g.sigma, k, m).map_err(at("weight"))?;
    let reports = ctx.timed("probe", |_| {
        g.times
            .par_iter()
            .map(|&t| garding_probe(&grid, &weight, g.epsilon, t, g.family_size, seed).map_err(at("garding")))
            .collect::<Res<Vec<_>>>()
    })?;
    let mut table = Table::new(&[("t", "1"), ("c0_required", "1"), ("worst_index", "index"), ("overflow_count", "count")]);
    for (t, r) in g.times.iter().zip(&reports) {
        table.push(row![*t, r.c0_required, r.worst_index.map_or(-1, |i| i as i64) as f64, r.overflow_count]);
    }
    Ok(Product { table, summary: json!({"epsilon": g.epsilon, "sigma": g.sigma, "reports": reports}) })
}

fn antiwick(ctx: &mut Context) -> Res<Product> {
    let a = ctx.config.antiwick.clone();
    let grid = Grid::new(1, a.points, a.half_width).map_err(at("phase grid"))?;
    let seed = ctx.config.seed;
    let bump = sample(&grid, |x| (-x[0] * x[0] / 4.0).exp()).map_err(at("bump"))?;
    let u = band_limited(&grid, seed, 0, 3.0)?.mul(&bump).map_err(at("bump"))?;
    let rel = |x: &SampledFunction, y: &SampledFunction| -> Res<f64> { Ok(x.sub(y).map_err(at("compare"))?.norm() / y.norm()) };
    let (resolution, xi_error) = ctx.timed("identities", |_| {
        let one = PhaseField::from_fn(&grid, |_, _| 1.0).map_err(at("symbol"))?;
        let resolution = rel(&anti_wick_apply(&one, &u).map_err(at("anti-wick"))?, &u)?;
        let xi2 = PhaseField::from_fn(&grid, |_, xi| xi * xi).map_err(at("symbol"))?;
        let w = sample(&grid, |x| (-x[0] * x[0] / 2.0).exp() * (1.0 + x[0])).map_err(at("probe"))?;
        let lhs = anti_wick_apply(&xi2, &w).map_err(at("anti-wick"))?;
        let rhs = spectral_derivative(&w, &[2])
            .map_err(at("derivative"))?
            .scale(C::new(-1.0, 0.0))
            .axpy(C::new(0.5, 0.0), &w)
            .map_err(at("derivative"))?;
        Ok((resolution, rel(&lhs, &rhs)?))
    })?;
    let forms = ctx.timed("positivity", |_| {
        (0..a.symbols)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, SYMBOL_STREAM + 16 * i as u64);
                let l = a.half_width;
                let (cx, cxi, r) = (uniform(&mut rng, -l / 2.0, l / 2.0), uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, 0.5, 3.0));
                let sym = PhaseField::from_fn(&grid, |x, xi| ((x - cx).powi(2) + (xi - cxi).powi(2) < r * r) as u8 as f64)
                    .map_err(at("symbol"))?;
                let z: Vec<C> = (0..grid.len()).map(|_| C::new(normal(&mut rng), normal(&mut rng))).collect();
                let v = SampledFunction::new(grid, Domain::Space, z).map_err(at("probe"))?.mul(&bump).map_err(at("probe"))?;
                let q = anti_wick_apply(&sym, &v).map_err(at("anti-wick"))?.inner(&v).map_err(at("anti-wick"))?;
                Ok((cx, cxi, r, q.re / v.norm().powi(2)))
            })
            .collect::<Res<Vec<_>>>()
    })?;
    let mut table = Table::new(&[("symbol", "index"), ("center_x", "length"), ("center_xi", "1/length"), ("radius", "1"), ("normalized_form", "1")]);
    for (i, (cx, cxi, r, q)) in forms.iter().enumerate() {
        table.push(row![i, *cx, *cxi, *r, *q]);
    }
    let min_form = forms.iter().map(|f| f.3).fold(f64::INFINITY, f64::min);
    let poly = PhasePolynomial { terms: vec![PhaseTerm { coef: 1.0, px: 0, pxi: 2 }] };
    let weyl = anti_wick_weyl_symbol_poly(&poly).map_err(at("weyl symbol"))?;
    let summary = json!({
        "resolution_error": resolution,
        "xi_squared_error": xi_error,
        "min_normalized_form": min_form,
        "weyl_symbol_of_xi_squared": weyl,
    });
    Ok(Product { table, summary })
}
