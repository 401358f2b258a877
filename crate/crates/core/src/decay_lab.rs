//! Decay measurements: radial tail fits, weighted norms, Weyl-law and
//! Agmon-scaling regressions, smoothing probes and seminorm tables.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, line_fit, r_squared, LineFit};
use crate::lattice::{forward_transform, spectral_derivative, Domain, SampledFunction};
use crate::shubin_op::{derived_exponents, OperatorSpec};
use crate::spectral::{semigroup_apply, EigenSystem};

/// Samples below this fraction of the peak are treated as noise.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Fits use radii inside this fraction of the box.
pub const EDGE_FRACTION: f64 = 0.85;
/// Tails start beyond the last radius where `|u|` exceeds this fraction of the peak.
pub const CORE_FRACTION: f64 = 0.1;
pub const MIN_FIT_SAMPLES: usize = 30;
const MIN_PEAKS: usize = 4;
const P_MIN: f64 = 0.3;
const P_MAX: f64 = 6.0;
const P_STEP: f64 = 5e-4;
const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitMode {
    Fixed(f64),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct FitOptions {
    /// Optional upper radius cap, applied on top of the edge rule.
    pub r_max: Option<f64>,
}


/// Model `log|u| ≈ offset + prefactor_power·log r − rate·r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub rate: f64,
    pub offset: f64,
    pub prefactor_power: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub samples: usize,
    /// True when the tail oscillates and only its local maxima were fitted.
    pub envelope: bool,
}

struct TailSample {
    r: f64,
    log_abs: f64,
}

fn tail_samples(u: &SampledFunction, options: &FitOptions) -> Result<(Vec<TailSample>, bool)> {
    let grid = u.grid();
    let domain = u.domain();
    let boxr = match domain {
        Domain::Space => grid.half_width(),
        Domain::Frequency => grid.max_frequency(),
    };
    let peak = u.max_abs();
    if peak == 0.0 {
        return Err(Error::DegenerateFit("function is identically zero".into()));
    }
    let edge = EDGE_FRACTION * boxr;
    let r_cap = options.r_max.map_or(edge, |r| r.min(edge));
    let abs: Vec<f64> = u.values().iter().map(|v| v.norm()).collect();
    let core = (0..abs.len())
        .filter(|&i| abs[i] >= CORE_FRACTION * peak)
        .map(|i| grid.radius(i, domain))
        .fold(0.0, f64::max);
    let dim = grid.dim();
    // One group per half-line in 1D so envelopes follow the radial ordering.
    let mut groups: Vec<Vec<(f64, f64)>> = vec![Vec::new(); if dim == 1 { 2 } else { 1 }];
    for (i, &a) in abs.iter().enumerate() {
        let c = grid.coords(i, domain);
        if c[..dim].iter().any(|x| x.abs() > edge) {
            continue;
        }
        let r = grid.radius(i, domain);
        if r <= core || r > r_cap || r <= 0.0 || a < NOISE_FLOOR * peak {
            continue;
        }
        let g = if dim == 1 && c[0] < 0.0 { 1 } else { 0 };
        groups[g].push((r, a));
    }
    let usable: usize = groups.iter().map(|g| g.len()).sum();
    if usable < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateFit(format!(
            "{usable} usable tail samples, need {MIN_FIT_SAMPLES}"
        )));
    }
    let mut peaks: Vec<Vec<(f64, f64)>> = Vec::new();
    if dim == 1 {
        for g in groups.iter_mut() {
            g.sort_by(|a, b| a.0.total_cmp(&b.0));
            let p: Vec<(f64, f64)> = (1..g.len().saturating_sub(1))
                .filter(|&i| g[i].1 >= g[i - 1].1 && g[i].1 >= g[i + 1].1)
                .map(|i| g[i])
                .collect();
            peaks.push(p);
        }
    }
    let oscillatory = peaks.iter().any(|p| p.len() >= MIN_PEAKS);
    let chosen = if oscillatory { &peaks } else { &groups };
    let samples = chosen
        .iter()
        .flatten()
        .map(|&(r, a)| TailSample { r, log_abs: a.ln() })
        .collect();
    Ok((samples, oscillatory))
}

fn fit_at(r: &[f64], y: &[f64], p: f64, prefactor: bool) -> Result<(Vec<f64>, f64)> {
    let mut cols = vec![vec![1.0; r.len()], r.iter().map(|x| -x.powf(p)).collect()];
    if prefactor {
        cols.push(r.iter().map(|x| x.ln()).collect());
    }
    least_squares(&cols, y)
}

/// Fits `log|u|` on the tail window. Free mode scans the exponent on a fine
/// grid and solves the remaining linear parameters at each step, keeping the
/// exponent with least residual; monotone tails carry an extra `log r` term,
/// oscillating tails are reduced to their local maxima.
pub fn radial_decay_fit_with(u: &SampledFunction, mode: FitMode, options: &FitOptions) -> Result<DecayFit> {
    let (samples, envelope) = tail_samples(u, options)?;
    let r: Vec<f64> = samples.iter().map(|s| s.r).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.log_abs).collect();
    let window = [r.iter().cloned().fold(f64::INFINITY, f64::min), r.iter().cloned().fold(0.0, f64::max)];
    if window[1] / window[0] < 1.05 {
        return Err(Error::DegenerateFit("tail window has no radial spread".into()));
    }
    let (p, coef, sse) = match mode {
        FitMode::Fixed(p) => {
            if !(p > 0.0) {
                return Err(Error::InvalidArgument(format!("exponent {p} must be positive")));
            }
            let (coef, sse) = fit_at(&r, &y, p, false)?;
            (p, coef, sse)
        }
        FitMode::Free => {
            let prefactor = !envelope;
            let steps = ((P_MAX - P_MIN) / P_STEP).round() as usize;
            let mut best: Option<(f64, Vec<f64>, f64)> = None;
            for i in 0..=steps {
                let p = P_MIN + i as f64 * P_STEP;
                if let Ok((coef, sse)) = fit_at(&r, &y, p, prefactor) {
                    if best.as_ref().is_none_or(|b| sse < b.2) {
                        best = Some((p, coef, sse));
                    }
                }
            }
            best.ok_or_else(|| Error::DegenerateFit("no exponent admits a fit".into()))?
        }
    };
    Ok(DecayFit {
        exponent: p,
        rate: coef[1],
        offset: coef[0],
        prefactor_power: coef.get(2).copied().unwrap_or(0.0),
        r_squared: r_squared(&y, sse),
        window,
        samples: r.len(),
        envelope,
    })
}

pub fn radial_decay_fit(u: &SampledFunction, mode: FitMode) -> Result<DecayFit> {
    radial_decay_fit_with(u, mode, &FitOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgmonFit {
    pub index: usize,
    pub eigenvalue: f64,
    pub spatial: DecayFit,
    pub frequency: DecayFit,
}

/// Free-exponent fits of eigenfunctions in position and in frequency.
pub fn agmon_exponent_check(es: &EigenSystem, indices: &[usize]) -> Result<Vec<AgmonFit>> {
    indices
        .iter()
        .map(|&j| {
            let psi = es.vector(j)?;
            let spatial = radial_decay_fit(&psi, FitMode::Free)?;
            let frequency = radial_decay_fit(&forward_transform(&psi)?, FitMode::Free)?;
            Ok(AgmonFit { index: j, eigenvalue: es.eigenvalues()[j], spatial, frequency })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Space,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    /// `+∞` when the weight overflowed on a sample above the noise floor.
    pub value: f64,
    pub overflow: bool,
    /// The weighted integrand is still significant at the outer edge of the
    /// resolved samples, so the value underestimates the continuum norm.
    pub saturated: bool,
}

/// `‖e^{t⟨·⟩^p} u‖` in space, or `‖e^{t⟨ξ⟩^p} û‖/(2π)^{n/2}` in frequency.
/// For `t > 0` only samples above the noise floor contribute.
pub fn weighted_norm_exponent(u: &SampledFunction, power: f64, t: f64, side: Side) -> Result<WeightedNorm> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate t={t} must be non-negative")));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight exponent {power} must be non-negative")));
    }
    let (f, scale) = match side {
        Side::Space => (u.clone(), 1.0),
        Side::Frequency => (forward_transform(u)?, (2.0 * PI).powf(-(u.grid().dim() as f64) / 2.0)),
    };
    if t == 0.0 {
        return Ok(WeightedNorm { value: f.norm() * scale, overflow: false, saturated: false });
    }
    let grid = f.grid();
    let domain = f.domain();
    let peak = f.max_abs();
    if peak == 0.0 {
        return Ok(WeightedNorm { value: 0.0, overflow: false, saturated: false });
    }
    let mut terms = Vec::new();
    let mut overflow = false;
    for (i, v) in f.values().iter().enumerate() {
        let a = v.norm();
        if a < NOISE_FLOOR * peak {
            continue;
        }
        let r = grid.radius(i, domain);
        let exponent = t * (1.0 + r * r).powf(power / 2.0);
        if exponent > EXP_LIMIT {
            overflow = true;
            break;
        }
        terms.push((r, exponent.exp() * a));
    }
    if overflow {
        return Ok(WeightedNorm { value: f64::INFINITY, overflow: true, saturated: true });
    }
    let sum: f64 = terms.iter().map(|(_, w)| w * w).sum();
    let value = (grid.cell(domain) * sum).sqrt() * scale;
    let r_edge = terms.iter().map(|(r, _)| *r).fold(0.0, f64::max);
    let w_max = terms.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let w_edge = terms.iter().filter(|(r, _)| *r >= 0.9 * r_edge).map(|(_, w)| *w).fold(0.0, f64::max);
    let saturated = w_edge >= 1e-3 * w_max;
    if !value.is_finite() {
        return Ok(WeightedNorm { value: f64::INFINITY, overflow: true, saturated });
    }
    Ok(WeightedNorm { value, overflow: false, saturated })
}

/// Weighted norm with the Agmon exponent `σ(1+k/m)` in space or `σ(1+m/k)` in frequency.
pub fn weighted_norm(u: &SampledFunction, sigma: f64, t: f64, side: Side, spec: &OperatorSpec) -> Result<WeightedNorm> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidArgument(format!("σ={sigma} outside [0, 1]")));
    }
    let e = derived_exponents(spec);
    let power = match side {
        Side::Space => sigma * e.spatial_agmon,
        Side::Frequency => sigma * e.frequency_agmon,
    };
    weighted_norm_exponent(u, power, t, side)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub fit: LineFit,
    pub abscissa: Vec<f64>,
    pub log_norms: Vec<f64>,
}

/// Regression of `log‖e^{t⟨x⟩^{σ(1+k/m)}}ψ_j‖` against `λ_j^{σ(1/2k+1/2m)}`.
pub fn agmon_scaling_fit(es: &EigenSystem, sigma: f64, t: f64, modes: Range<usize>) -> Result<ScalingFit> {
    if modes.end > es.count() || modes.len() < 15 {
        return Err(Error::TooFewModes { retained: modes.len().min(es.count()), required: 15 });
    }
    let spec = es.spec();
    let e = derived_exponents(spec);
    let mut abscissa = Vec::new();
    let mut log_norms = Vec::new();
    for j in modes {
        let w = weighted_norm(&es.vector(j)?, sigma, t, Side::Space, spec)?;
        if w.overflow {
            return Err(Error::Overflow(format!("weight overflow on mode {j}")));
        }
        abscissa.push(es.eigenvalues()[j].powf(sigma * e.eigen_scaling));
        log_norms.push(w.value.ln());
    }
    let fit = line_fit(&abscissa, &log_norms)?;
    Ok(ScalingFit { fit, abscissa, log_norms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub std_error: f64,
    /// `exp(intercept)`, the empirical Weyl constant.
    pub constant: f64,
}

/// `log λ_j` against `log(j+1)` (the counting index of `λ_j`) over a window of modes.
pub fn weyl_fit(es: &EigenSystem, window: Range<usize>) -> Result<WeylFit> {
    if window.end > es.count() {
        return Err(Error::InvalidArgument(format!(
            "window ends at {} but only {} modes are resolved",
            window.end,
            es.count()
        )));
    }
    if window.len() < 20 {
        return Err(Error::DegenerateFit(format!("{} modes in the window, need 20", window.len())));
    }
    let x: Vec<f64> = window.clone().map(|j| ((j + 1) as f64).ln()).collect();
    let y: Vec<f64> = window.map(|j| es.eigenvalues()[j].ln()).collect();
    let f = line_fit(&x, &y)?;
    Ok(WeylFit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        std_error: f.std_error,
        constant: f.intercept.exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub t: f64,
    pub nu: f64,
    pub mu: f64,
    /// `10‖g‖t^{-n(k+m)/(2skm)}`, the budget each weighted norm must respect.
    pub bound: f64,
    /// A scan found no admissible rate at all.
    pub scan_failed: bool,
}

const BISECTION_STEPS: usize = 40;
const SLACK: f64 = 10.0;

fn rate_scan(u: &SampledFunction, power: f64, side: Side, bound: f64) -> Result<(f64, bool)> {
    let ok = |a: f64| -> Result<bool> {
        let w = weighted_norm_exponent(u, power, a, side)?;
        Ok(!w.overflow && !w.saturated && w.value <= bound)
    };
    if !ok(0.0)? {
        return Ok((0.0, true));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, false))
}

/// Largest weight rates `Λ₁, Λ₂ ∈ (0,1)` for which `e^{-tH^s}g` respects the
/// smoothing budget in space (power `1/ν`) and in frequency (power `1/μ`).
pub fn smoothing_probe(es: &EigenSystem, s: f64, t: f64, g: &SampledFunction) -> Result<WeightReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("probe time t={t} must be positive")));
    }
    let spec = es.spec().with_s(s)?;
    let e = derived_exponents(&spec);
    let u = semigroup_apply(es, s, t, g)?.function;
    let bound = SLACK * g.norm() * t.powf(-e.prefactor_power);
    let (lambda1, f1) = rate_scan(&u, 1.0 / e.nu, Side::Space, bound)?;
    let (lambda2, f2) = rate_scan(&u, 1.0 / e.mu, Side::Frequency, bound)?;
    let lambda3 = weighted_norm_exponent(&u, 1.0 / e.nu, lambda1, Side::Space)?.value
        + weighted_norm_exponent(&u, 1.0 / e.mu, lambda2, Side::Frequency)?.value;
    Ok(WeightReport { lambda1, lambda2, lambda3, t, nu: e.nu, mu: e.mu, bound, scan_failed: f1 || f2 })
}

/// Expected frequency density of `e^{-tH^s}` applied to unit white noise:
/// `D(ξ) = (Σ_j e^{-2tλ_j^s}|ψ̂_j(ξ)|²)^{1/2}` over the retained modes.
pub fn noise_density(es: &EigenSystem, s: f64, t: f64) -> Result<SampledFunction> {
    if !(t >= 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument(format!("need t >= 0 and s > 0 (t={t}, s={s})")));
    }
    let grid = *es.grid();
    let mut acc = vec![0.0; grid.len()];
    for j in 0..es.count() {
        let w = (-2.0 * t * es.eigenvalues()[j].powf(s)).exp();
        if w == 0.0 {
            continue;
        }
        let hat = forward_transform(&es.vector(j)?)?;
        for (a, v) in acc.iter_mut().zip(hat.values()) {
            *a += w * v.norm_sqr();
        }
    }
    let values = acc.iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect();
    SampledFunction::new(grid, Domain::Frequency, values)
}

/// Fraction of the top mode's frequency extent `λ_max^{1/(2m)}` used by [`frequency_tail_fit`].
pub const RESOLVED_FRACTION: f64 = 0.6;

/// Free-exponent fit of the smoothed-noise frequency density, restricted to
/// frequencies the retained modes resolve.
pub fn frequency_tail_fit(es: &EigenSystem, s: f64, t: f64) -> Result<DecayFit> {
    let density = noise_density(es, s, t)?;
    let lmax = es.eigenvalues()[es.count() - 1];
    let cap = RESOLVED_FRACTION * lmax.powf(1.0 / (2.0 * es.spec().m as f64));
    radial_decay_fit_with(&density, FitMode::Free, &FitOptions { r_max: Some(cap) })
}

pub const SEMINORM_CAP: usize = 8;

/// `table[α][β] = ‖x^α ∂^β u‖` (one-dimensional grids).
pub fn seminorm_table(u: &SampledFunction, alpha_max: usize, beta_max: usize) -> Result<Vec<Vec<f64>>> {
    if alpha_max > SEMINORM_CAP || beta_max > SEMINORM_CAP {
        return Err(Error::InvalidArgument(format!("orders capped at {SEMINORM_CAP}")));
    }
    if u.grid().dim() != 1 {
        return Err(Error::InvalidArgument("seminorm tables are one-dimensional".into()));
    }
    let x = u.grid().nodes();
    let derivs: Vec<SampledFunction> =
        (0..=beta_max).map(|b| spectral_derivative(u, &[b])).collect::<Result<_>>()?;
    Ok((0..=alpha_max)
        .map(|a| {
            let w: Vec<f64> = x.iter().map(|v| v.powi(a as i32)).collect();
            derivs.iter().map(|d| d.mul_real(&w).norm()).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormBounds {
    pub constant: f64,
    pub table: Vec<Vec<f64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `C^{α+β} Λ₁^{-να} Λ₂^{-μβ} (α!)^ν (β!)^μ Λ₃` with
/// `C = max(2·(2 max(1,νn))^ν, √2·(2 max(1,μn))^μ)`.
pub fn seminorm_bounds_from_weights(
    w: &WeightReport,
    alpha_max: usize,
    beta_max: usize,
    dim: usize,
) -> Result<SeminormBounds> {
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !inside(w.lambda1) || !inside(w.lambda2) {
        return Err(Error::InvalidArgument(format!(
            "weight rates ({}, {}) must lie in (0, 1)",
            w.lambda1, w.lambda2
        )));
    }
    let n = dim as f64;
    let cx = 2.0 * (2.0 * (w.nu * n).max(1.0)).powf(w.nu);
    let cxi = 2f64.sqrt() * (2.0 * (w.mu * n).max(1.0)).powf(w.mu);
    let c = cx.max(cxi);
    let table = (0..=alpha_max)
        .map(|a| {
            (0..=beta_max)
                .map(|b| {
                    c.powi((a + b) as i32)
                        * w.lambda1.powf(-w.nu * a as f64)
                        * w.lambda2.powf(-w.mu * b as f64)
                        * factorial(a).powf(w.nu)
                        * factorial(b).powf(w.mu)
                        * w.lambda3
                })
                .collect()
        })
        .collect();
    Ok(SeminormBounds { constant: c, table })
}

/// Regression of `log|c_j|` against `j^{1/(an)}` over coefficients above the noise floor.
pub fn coefficient_decay_from(coefficients: &[Complex64], a: f64, dim: usize) -> Result<LineFit> {
    if !(a >= 1.0) {
        return Err(Error::InvalidArgument(format!("ratio parameter a={a} must be >= 1")));
    }
    let peak = coefficients.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let usable: Vec<(f64, f64)> = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| peak > 0.0 && c.norm() >= NOISE_FLOOR * peak)
        .map(|(j, c)| ((j as f64).powf(1.0 / (a * dim as f64)), c.norm().ln()))
        .collect();
    if usable.len() < 20 {
        return Err(Error::DegenerateFit(format!(
            "{} coefficients above the noise floor, need 20",
            usable.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
    line_fit(&x, &y)
}

pub fn coefficient_decay_fit(es: &EigenSystem, g: &SampledFunction, a: f64) -> Result<LineFit> {
    coefficient_decay_from(&es.coefficients(g)?, a, es.spec().dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub overflow: Vec<bool>,
    pub saturated: Vec<bool>,
    /// `F(0) = ‖Πg‖²`.
    pub initial: f64,
    pub max_ratio: f64,
    /// Every value finite and resolved on the grid.
    pub bounded: bool,
}

/// `F(t) = ‖e^{c₁t⟨x⟩^{σ(1+k/m)}} e^{-tH} g‖²` along a time grid.
pub fn weighted_functional_evolution(
    es: &EigenSystem,
    g: &SampledFunction,
    c1: f64,
    sigma: f64,
    times: &[f64],
) -> Result<FunctionalTrace> {
    if !(c1 > 0.0) {
        return Err(Error::InvalidArgument(format!("c1={c1} must be positive")));
    }
    let spec = es.spec().with_s(1.0)?;
    let initial = es.project(g)?.function.norm().powi(2);
    let mut values = Vec::new();
    let mut overflow = Vec::new();
    let mut saturated = Vec::new();
    for &t in times {
        let u = semigroup_apply(es, 1.0, t, g)?.function;
        let w = weighted_norm(&u, sigma, c1 * t, Side::Space, &spec)?;
        values.push(w.value * w.value);
        overflow.push(w.overflow);
        saturated.push(w.saturated);
    }
    let max_ratio = values.iter().fold(0.0f64, |m, v| m.max(*v)) / initial;
    let bounded = overflow.iter().chain(&saturated).all(|f| !f) && max_ratio.is_finite();
    Ok(FunctionalTrace { times: times.to_vec(), values, overflow, saturated, initial, max_ratio, bounded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefactorProbe {
    pub s: f64,
    pub times: Vec<f64>,
    /// Operator norm of `g ↦ (e^{c₁t⟨x⟩^{1/ν}}u_t, e^{c₁t⟨ξ⟩^{1/μ}}û_t/(2π)^{n/2})` on the retained span.
    pub norms: Vec<f64>,
    /// `-d log(norm)/d log t`.
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
    pub r_squared: f64,
}

fn floored(v: &[f64]) -> Vec<f64> {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().map(|&x| if x.abs() < NOISE_FLOOR * peak { 0.0 } else { x }).collect()
}

/// Empirical prefactor exponent of the weighted semigroup norm over small times.
pub fn prefactor_probe(es: &EigenSystem, s: f64, c1: f64, times: &[f64]) -> Result<PrefactorProbe> {
    if times.len() < 3 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("need at least three positive times".into()));
    }
    let spec = es.spec().with_s(s)?;
    let e = derived_exponents(&spec);
    let grid = *es.grid();
    let count = es.count();
    let len = grid.len();
    let space: Vec<Vec<f64>> = (0..count).map(|j| floored(es.vectors().column(j).as_slice())).collect();
    let freq: Vec<Vec<Complex64>> = (0..count)
        .map(|j| {
            let hat = forward_transform(&es.vector(j)?)?;
            let peak = hat.max_abs();
            Ok(hat
                .values()
                .iter()
                .map(|v| if v.norm() < NOISE_FLOOR * peak { Complex64::new(0.0, 0.0) } else { *v })
                .collect())
        })
        .collect::<Result<_>>()?;
    let hx = grid.cell(Domain::Space);
    let hxi = grid.cell(Domain::Frequency) * (2.0 * PI).powf(-(grid.dim() as f64));
    let mut norms = Vec::new();
    for &t in times {
        let wx: Vec<f64> = (0..len)
            .map(|i| c1 * t * (1.0 + grid.radius(i, Domain::Space).powi(2)).powf(0.5 / e.nu))
            .collect();
        let wxi: Vec<f64> = (0..len)
            .map(|i| c1 * t * (1.0 + grid.radius(i, Domain::Frequency).powi(2)).powf(0.5 / e.mu))
            .collect();
        if wx.iter().chain(&wxi).any(|&w| w > EXP_LIMIT) {
            return Err(Error::Overflow(format!("weight overflow at t={t}")));
        }
        let wx: Vec<f64> = wx.iter().map(|w| (2.0 * w).exp()).collect();
        let wxi: Vec<f64> = wxi.iter().map(|w| (2.0 * w).exp()).collect();
        let decay: Vec<f64> = es.eigenvalues().iter().map(|l| (-t * l.powf(s)).exp()).collect();
        let gram = DMatrix::from_fn(count, count, |a, b| {
            if a > b {
                return 0.0;
            }
            let sx: f64 = (0..len).map(|i| wx[i] * space[a][i] * space[b][i]).sum();
            let sf: f64 = (0..len).map(|i| wxi[i] * (freq[a][i] * freq[b][i].conj()).re).sum();
            (hx * sx + hxi * sf) * decay[a] * decay[b]
        });
        let gram = DMatrix::from_fn(count, count, |a, b| if a <= b { gram[(a, b)] } else { gram[(b, a)] });
        let top = SymmetricEigen::new(gram).eigenvalues.max();
        norms.push(top.max(0.0).sqrt());
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let f = line_fit(&lx, &ly)?;
    Ok(PrefactorProbe {
        s,
        times: times.to_vec(),
        norms,
        fitted_exponent: -f.slope,
        predicted_exponent: e.prefactor_power,
        r_squared: f.r_squared,
    })
}
