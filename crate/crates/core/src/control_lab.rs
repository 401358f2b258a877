//! Null-controllability experiments on the retained eigenbasis: thick sets,
//! spectral-inequality constants, dissipation, penalized HUM controls,
//! Lebeau-Robbiano staging and observability-cost sweeps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decay_lab::weyl_fit;
use crate::error::{Error, Result};
use crate::fit::{gauss_legendre, line_fit, LineFit};
use crate::lattice::{Domain, Grid, SampledFunction};
use crate::shubin_op::derived_exponents;
use crate::spectral::{frequency_project, semigroup_apply, EigenSystem};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThickKind {
    Periodic { gamma: f64, scale: f64 },
    Density { gamma: f64, delta: f64, radius: f64, floor: f64 },
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThickSet {
    grid: Grid,
    indicator: Vec<f64>,
    kind: ThickKind,
    measured_gamma: Option<f64>,
}

impl ThickSet {
    /// An arbitrary nodal mask; no thickness is claimed.
    pub fn from_mask(grid: &Grid, mask: &[bool]) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} mask entries for {} nodes",
                mask.len(),
                grid.len()
            )));
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::InvalidArgument("control set is empty".into()));
        }
        Ok(Self {
            grid: *grid,
            indicator: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            kind: ThickKind::Arbitrary,
            measured_gamma: None,
        })
    }

    /// The nodes with every coordinate in `[a, b)`.
    pub fn interval(grid: &Grid, a: f64, b: f64) -> Result<Self> {
        let dim = grid.dim();
        let mask: Vec<bool> = (0..grid.len())
            .map(|i| grid.coords(i, Domain::Space)[..dim].iter().all(|&x| x >= a && x < b))
            .collect();
        Self::from_mask(grid, &mask)
    }

    /// Planar sector `|arg x − center| ≤ half_angle`, outside the unit disc. Experimental.
    pub fn sector(grid: &Grid, center: f64, half_angle: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidArgument("sectors need a two-dimensional grid".into()));
        }
        let mask: Vec<bool> = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i, Domain::Space);
                let d = (c[1].atan2(c[0]) - center + PI).rem_euclid(2.0 * PI) - PI;
                d.abs() <= half_angle && c[0].hypot(c[1]) >= 1.0
            })
            .collect();
        Self::from_mask(grid, &mask)
    }

    pub fn full(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            indicator: vec![1.0; grid.len()],
            kind: ThickKind::Periodic { gamma: 1.0, scale: 2.0 * grid.half_width() },
            measured_gamma: Some(1.0),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn indicator(&self) -> &[f64] {
        &self.indicator
    }

    pub fn kind(&self) -> ThickKind {
        self.kind
    }

    pub fn measured_gamma(&self) -> Option<f64> {
        self.measured_gamma
    }

    pub fn measure(&self) -> f64 {
        self.grid.cell(Domain::Space) * self.indicator.iter().sum::<f64>()
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.indicator[flat] > 0.0
    }

    /// Pointwise union with another set on the same grid.
    pub fn union(&self, other: &ThickSet) -> Result<ThickSet> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mask: Vec<bool> = (0..self.grid.len()).map(|i| self.contains(i) || other.contains(i)).collect();
        Self::from_mask(&self.grid, &mask)
    }
}

/// One cell of side `scale` per period, with a subinterval (or square) of
/// relative measure `γ` anchored at the origin.
pub fn make_thick_periodic(grid: &Grid, gamma: f64, scale: f64) -> Result<ThickSet> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("γ={gamma} outside (0, 1]")));
    }
    let h = grid.spacing();
    if !(scale >= 4.0 * h) {
        return Err(Error::InvalidArgument(format!(
            "scale {scale} below four grid steps ({}); γ is unreachable",
            4.0 * h
        )));
    }
    let dim = grid.dim();
    let side = gamma.powf(1.0 / dim as f64);
    let indicator: Vec<f64> = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i, Domain::Space);
            let inside = c[..dim].iter().all(|&x| {
                let frac = (x / scale).rem_euclid(1.0);
                gamma >= 1.0 || frac < side - 1e-12
            });
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut ts =
        ThickSet { grid: *grid, indicator, kind: ThickKind::Periodic { gamma, scale }, measured_gamma: None };
    if ts.measure() == 0.0 {
        return Err(Error::InvalidArgument(format!("γ={gamma} selects no node at scale {scale}")));
    }
    let report = thickness_check(&ts, gamma, scale)?;
    if !report.passes {
        return Err(Error::InvalidArgument(format!(
            "measured thickness {:.4} below γ={gamma} at scale {scale}",
            report.measured
        )));
    }
    ts.measured_gamma = Some(report.measured);
    Ok(ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    pub measured: f64,
    pub gamma: f64,
    pub scale: f64,
    pub slack: f64,
    pub passes: bool,
}

/// Minimum relative mass of `mask` over every window `x + [0, scale)^n` lying in the box.
pub fn mask_thickness(grid: &Grid, mask: &[f64], scale: f64) -> Result<f64> {
    if mask.len() != grid.len() {
        return Err(Error::InvalidArgument("mask length does not match the grid".into()));
    }
    let n = grid.points();
    let w = ((scale / grid.spacing()).round() as usize).clamp(1, n);
    match grid.dim() {
        1 => {
            let mut prefix = vec![0.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] + mask[i];
            }
            Ok((0..=n - w).map(|i| prefix[i + w] - prefix[i]).fold(f64::INFINITY, f64::min) / w as f64)
        }
        _ => {
            let mut p = vec![0.0; (n + 1) * (n + 1)];
            for i in 0..n {
                for j in 0..n {
                    p[(i + 1) * (n + 1) + j + 1] =
                        mask[i * n + j] + p[i * (n + 1) + j + 1] + p[(i + 1) * (n + 1) + j] - p[i * (n + 1) + j];
                }
            }
            let at = |i: usize, j: usize| p[i * (n + 1) + j];
            let mut worst = f64::INFINITY;
            for i in 0..=n - w {
                for j in 0..=n - w {
                    worst = worst.min(at(i + w, j + w) - at(i, j + w) - at(i + w, j) + at(i, j));
                }
            }
            Ok(worst / (w * w) as f64)
        }
    }
}

/// Sliding-window thickness with the grid quantization slack `n·h/scale`.
pub fn thickness_check(ts: &ThickSet, gamma: f64, scale: f64) -> Result<ThicknessReport> {
    let measured = mask_thickness(&ts.grid, &ts.indicator, scale)?;
    let slack = ts.grid.dim() as f64 * ts.grid.spacing() / scale;
    Ok(ThicknessReport { measured, gamma, scale, slack, passes: measured >= gamma - slack })
}

const DENSITY_PROBES: usize = 200;

/// Intervals of half-length `γρ(c)` around centers `c_{i±1} = c_i ± ρ(c_i)`,
/// `ρ(x) = max(floor, R⟨x⟩^δ)`, verified on 200 balls `B(x, ρ(x))`.
pub fn make_thick_density(grid: &Grid, gamma: f64, delta: f64, radius: f64, floor: f64) -> Result<ThickSet> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("density construction is one-dimensional".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("γ={gamma} outside (0, 1]")));
    }
    if !(0.0..1.0).contains(&delta) || !(radius > 0.0) || !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= δ < 1, R > 0, floor > 0 (δ={delta}, R={radius}, floor={floor})"
        )));
    }
    let rho = |x: f64| floor.max(radius * (1.0 + x * x).powf(delta / 2.0));
    let x = grid.nodes();
    let h = grid.spacing();
    let lip = x.windows(2).map(|p| (rho(p[1]) - rho(p[0])).abs() / h).fold(0.0, f64::max);
    if lip > 0.5 {
        return Err(Error::InvalidArgument(format!("ρ has Lipschitz constant {lip:.3} > 1/2")));
    }
    let l = grid.half_width();
    let mut centers = vec![0.0];
    let mut c = 0.0;
    while c < l {
        c += rho(c);
        centers.push(c);
    }
    c = 0.0;
    while c > -l {
        c -= rho(c);
        centers.push(c);
    }
    let indicator: Vec<f64> = x
        .iter()
        .map(|&xi| if centers.iter().any(|&c| (xi - c).abs() < gamma * rho(c)) { 1.0 } else { 0.0 })
        .collect();
    let mut ts = ThickSet {
        grid: *grid,
        indicator,
        kind: ThickKind::Density { gamma, delta, radius, floor },
        measured_gamma: None,
    };
    let mut measured = f64::INFINITY;
    let rho_min = x.iter().map(|&v| rho(v)).fold(f64::INFINITY, f64::min);
    for p in 0..DENSITY_PROBES {
        let c = -l + (p as f64 + 0.5) * 2.0 * l / DENSITY_PROBES as f64;
        let r = rho(c);
        let (lo, hi) = ((c - r).max(-l), (c + r).min(l));
        let nodes: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= lo && x[i] < hi).collect();
        let hit = nodes.iter().filter(|&&i| ts.indicator[i] > 0.0).count();
        if !nodes.is_empty() {
            measured = measured.min(hit as f64 / nodes.len() as f64);
        }
    }
    if measured < gamma - h / rho_min {
        return Err(Error::InvalidArgument(format!("density thickness {measured:.4} below γ={gamma}")));
    }
    ts.measured_gamma = Some(measured);
    Ok(ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Eigenmode,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConstantCurve {
    pub family: Family,
    pub orders: Vec<usize>,
    /// `+∞` where the smallest singular value is below `1e-14`.
    pub constants: Vec<f64>,
    /// `log C_N` against `N` (frequency) or `N log N` (eigenmode), finite entries.
    pub growth: Option<LineFit>,
    /// `log log C_N` against `log N`; its slope is the spectral growth order.
    pub order_fit: Option<LineFit>,
}

pub const SIGMA_FLOOR: f64 = 1e-14;

fn restricted_constant(columns: &DMatrix<f64>, ts: &ThickSet) -> f64 {
    let rows: Vec<usize> = (0..ts.grid.len()).filter(|&i| ts.contains(i)).collect();
    let w = ts.grid.cell(Domain::Space).sqrt();
    let a = DMatrix::from_fn(rows.len(), columns.ncols(), |r, c| w * columns[(rows[r], c)]);
    if a.nrows() < a.ncols() {
        return f64::INFINITY;
    }
    let smin = SVD::new(a, false, false).singular_values.min();
    if smin < SIGMA_FLOOR {
        f64::INFINITY
    } else {
        1.0 / smin
    }
}

/// Real orthonormal basis of `{|ξ_i| ≤ Nπ/L}`: cosines and sines per axis, tensorized in 2D.
fn frequency_basis(grid: &Grid, order: usize) -> DMatrix<f64> {
    let l = grid.half_width();
    let axis: Vec<Box<dyn Fn(f64) -> f64>> = std::iter::once(Box::new(move |_: f64| 1.0 / (2.0 * l).sqrt()) as Box<dyn Fn(f64) -> f64>)
        .chain((1..=order).flat_map(|q| {
            let k = q as f64 * PI / l;
            [
                Box::new(move |x: f64| (k * x).cos() / l.sqrt()) as Box<dyn Fn(f64) -> f64>,
                Box::new(move |x: f64| (k * x).sin() / l.sqrt()) as Box<dyn Fn(f64) -> f64>,
            ]
        }))
        .collect();
    let dim = grid.dim();
    let b = axis.len();
    let cols = b.pow(dim as u32);
    DMatrix::from_fn(grid.len(), cols, |i, c| {
        let x = grid.coords(i, Domain::Space);
        if dim == 1 {
            axis[c](x[0])
        } else {
            axis[c / b](x[0]) * axis[c % b](x[1])
        }
    })
}

/// `C_N = 1/σ_min` of the first `N` basis functions restricted to `ω` with quadrature weights.
pub fn spectral_constant_estimate(
    es: Option<&EigenSystem>,
    family: Family,
    ts: &ThickSet,
    orders: &[usize],
) -> Result<SpectralConstantCurve> {
    let grid = ts.grid;
    let constants = match family {
        Family::Eigenmode => {
            let es = es.ok_or_else(|| Error::InvalidArgument("eigenmode family needs an eigensystem".into()))?;
            if *es.grid() != grid {
                return Err(Error::GridMismatch);
            }
            orders
                .iter()
                .map(|&n| {
                    if n == 0 || n > es.count() {
                        return Err(Error::InvalidArgument(format!("order {n} outside 1..={}", es.count())));
                    }
                    Ok(restricted_constant(&es.vectors().columns(0, n).into_owned(), ts))
                })
                .collect::<Result<Vec<_>>>()?
        }
        Family::Frequency => orders
            .iter()
            .map(|&n| {
                if 2 * n >= grid.points() {
                    return Err(Error::InvalidArgument(format!(
                        "frequency order {n} not resolved by {} points",
                        grid.points()
                    )));
                }
                Ok(restricted_constant(&frequency_basis(&grid, n), ts))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let finite: Vec<(f64, f64)> = orders
        .iter()
        .zip(&constants)
        .filter(|(_, c)| c.is_finite())
        .map(|(&n, &c)| (n as f64, c))
        .collect();
    let growth = {
        let x: Vec<f64> = finite
            .iter()
            .map(|(n, _)| if family == Family::Frequency { *n } else { n * n.ln() })
            .collect();
        let y: Vec<f64> = finite.iter().map(|(_, c)| c.ln()).collect();
        if x.len() >= 3 {
            line_fit(&x, &y).ok()
        } else {
            None
        }
    };
    let order_fit = {
        let pts: Vec<(f64, f64)> =
            finite.iter().filter(|(_, c)| c.ln() > 1e-9).map(|(n, c)| (n.ln(), c.ln().ln())).collect();
        if pts.len() >= 3 {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            line_fit(&x, &y).ok()
        } else {
            None
        }
    };
    Ok(SpectralConstantCurve { family, orders: orders.to_vec(), constants, growth, order_fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRatio {
    /// `log C_N / (N log N)`, `None` where `C_N` is infinite.
    pub ratios: Vec<Option<f64>>,
    pub reference: f64,
    pub max_ratio: f64,
    pub finite: usize,
    pub bounded: bool,
}

pub const MIN_FINITE_RATIOS: usize = 8;

/// Bounded means at least eight finite entries and no ratio above
/// `max(1.25 × first ratio, 1)`.
pub fn growth_ratio_check(curve: &SpectralConstantCurve) -> GrowthRatio {
    let ratios: Vec<Option<f64>> = curve
        .orders
        .iter()
        .zip(&curve.constants)
        .map(|(&n, &c)| {
            let nf = n as f64;
            (c.is_finite() && n > 1).then(|| c.ln() / (nf * nf.ln()))
        })
        .collect();
    let finite: Vec<f64> = ratios.iter().flatten().copied().collect();
    let reference = finite.first().copied().unwrap_or(f64::NAN);
    let max_ratio = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounded = finite.len() >= MIN_FINITE_RATIOS && max_ratio <= (1.25 * reference).max(1.0);
    GrowthRatio { ratios, reference, max_ratio, finite: finite.len(), bounded }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub measured: f64,
    /// Eigenmode family: `e^{-tλ_{N+1}^s}‖g‖`. The frequency family has no closed form.
    pub bound: Option<f64>,
}

/// `‖(1 − π_N)e^{-tH^s}g‖`, where `π_N` keeps modes `0..=N` (eigenmode) or
/// frequencies `|ξ_i| ≤ Nπ/L` (frequency).
pub fn dissipation_check(
    es: &EigenSystem,
    s: f64,
    family: Family,
    order: usize,
    t: f64,
    g: &SampledFunction,
) -> Result<DissipationReport> {
    if !(t >= 0.0 && s > 0.0) {
        return Err(Error::InvalidArgument(format!("need t >= 0 and s > 0 (t={t}, s={s})")));
    }
    match family {
        Family::Eigenmode => {
            if order + 1 >= es.count() {
                return Err(Error::InvalidArgument(format!(
                    "order {order} leaves no resolved mode above it ({} retained)",
                    es.count()
                )));
            }
            let c = es.coefficients(g)?;
            let lam = es.eigenvalues();
            let measured = c[order + 1..]
                .iter()
                .zip(&lam[order + 1..])
                .map(|(cj, l)| (-2.0 * t * l.powf(s)).exp() * cj.norm_sqr())
                .sum::<f64>()
                .sqrt();
            let bound = (-t * lam[order + 1].powf(s)).exp() * g.norm();
            Ok(DissipationReport { measured, bound: Some(bound) })
        }
        Family::Frequency => {
            let grid = *es.grid();
            let u = semigroup_apply(es, s, t, g)?.function;
            let k = order as f64 * grid.dual_spacing();
            let low = frequency_project(&grid, k, &u)?;
            Ok(DissipationReport { measured: u.sub(&low)?.norm(), bound: None })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDissipationFit {
    pub orders: Vec<usize>,
    pub measured: Vec<f64>,
    /// `log(measured/‖g‖)` against `t·K^{1/μ}`; the rate is `−slope`.
    pub fit: LineFit,
    pub rate: f64,
}

pub fn frequency_dissipation_fit(
    es: &EigenSystem,
    s: f64,
    t: f64,
    g: &SampledFunction,
    orders: &[usize],
) -> Result<FrequencyDissipationFit> {
    let mu = derived_exponents(&es.spec().with_s(s)?).mu;
    let gn = g.norm();
    let dk = es.grid().dual_spacing();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut measured = Vec::new();
    for &n in orders {
        let m = dissipation_check(es, s, Family::Frequency, n, t, g)?.measured;
        measured.push(m);
        if m > 0.0 {
            x.push(t * (n as f64 * dk).powf(1.0 / mu));
            y.push((m / gn).ln());
        }
    }
    let fit = line_fit(&x, &y)?;
    Ok(FrequencyDissipationFit { orders: orders.to_vec(), measured, rate: -fit.slope, fit })
}

/// Controllability Gramian on the retained modes,
/// `Λ = Σ_q w_q e^{-τ_q H^s} B e^{-τ_q H^s}` with `B = ⟨𝟙_ω ψ_a, ψ_b⟩`.
#[derive(Debug, Clone)]
pub struct Gramian {
    horizon: f64,
    s: f64,
    /// Gauss-Legendre nodes `τ_q ∈ (0, T)` measured backwards from the horizon.
    taus: Vec<f64>,
    weights: Vec<f64>,
    lam_s: Vec<f64>,
    matrix: DMatrix<f64>,
}

fn observation_matrix(es: &EigenSystem, ts: &ThickSet) -> Result<DMatrix<f64>> {
    if *es.grid() != ts.grid {
        return Err(Error::GridMismatch);
    }
    let rows: Vec<usize> = (0..ts.grid.len()).filter(|&i| ts.contains(i)).collect();
    let psi = es.vectors();
    let sub = DMatrix::from_fn(rows.len(), psi.ncols(), |r, c| psi[(rows[r], c)]);
    let b = sub.tr_mul(&sub) * ts.grid.cell(Domain::Space);
    Ok((&b + b.transpose()) * 0.5)
}

impl Gramian {
    pub fn new(es: &EigenSystem, s: f64, ts: &ThickSet, horizon: f64, order: usize) -> Result<Self> {
        let b = observation_matrix(es, ts)?;
        Self::from_observation(es, s, b, horizon, order)
    }

    fn from_observation(es: &EigenSystem, s: f64, b: DMatrix<f64>, horizon: f64, order: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon T={horizon} must be positive")));
        }
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("power s={s} must be positive")));
        }
        if order < 2 {
            return Err(Error::InvalidArgument(format!("quadrature order {order} below 2")));
        }
        let (taus, weights) = gauss_legendre(order, 0.0, horizon);
        let lam_s: Vec<f64> = es.eigenvalues().iter().map(|l| l.powf(s)).collect();
        let m = lam_s.len();
        let kernel = DMatrix::from_fn(m, m, |a, c| {
            taus.iter().zip(&weights).map(|(t, w)| w * (-t * (lam_s[a] + lam_s[c])).exp()).sum::<f64>()
        });
        let matrix = b.component_mul(&kernel);
        Ok(Self { horizon, s, taus, weights, lam_s, matrix })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.lam_s.len()
    }

    fn decay(&self, t: f64) -> Vec<f64> {
        self.lam_s.iter().map(|l| (-t * l).exp()).collect()
    }

    /// `Λ` applied to the first `active` coefficients, full-length result.
    fn apply_block(&self, v: &[C], active: usize) -> Vec<C> {
        (0..self.modes())
            .map(|a| (0..active).map(|c| v[c] * self.matrix[(a, c)]).sum())
            .collect()
    }

    pub fn apply(&self, v: &[C]) -> Result<Vec<C>> {
        if v.len() != self.modes() {
            return Err(Error::InvalidArgument(format!("{} coefficients for {} modes", v.len(), self.modes())));
        }
        Ok(self.apply_block(v, self.modes()))
    }

    /// `Λ` acting on nodal functions through their retained coefficients.
    pub fn apply_nodal(&self, es: &EigenSystem, u: &SampledFunction) -> Result<SampledFunction> {
        let c = es.coefficients(u)?;
        es.synthesize(&self.apply(&c)?)
    }
}

pub const CG_TOLERANCE: f64 = 1e-10;
pub const CG_PLATEAU: usize = 50;
const CG_MAX_ITERATIONS: usize = 20_000;
const RESIDUAL_REFRESH: usize = 25;

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate gradients for a Hermitian positive definite operator. A plateau
/// (no 1% gain in the best residual over 50 iterations) is reported as stagnation.
pub fn conjugate_gradient(apply: impl Fn(&[C]) -> Vec<C>, b: &[C], tol: f64) -> Result<(Vec<C>, usize)> {
    let bn = norm(b);
    let mut x = vec![ZERO; b.len()];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let mut best = 1.0;
    let mut since = 0;
    for it in 1..=CG_MAX_ITERATIONS {
        let ap = apply(&p);
        let curv = dot(&p, &ap).re;
        if !(curv > 0.0) {
            return Err(Error::Stagnation { iterations: it, residual: rr.sqrt() / bn });
        }
        let alpha = rr / curv;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if it % RESIDUAL_REFRESH == 0 {
            let ax = apply(&x);
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        }
        let rr_new = dot(&r, &r).re;
        let res = rr_new.sqrt() / bn;
        if res <= tol {
            return Ok((x, it));
        }
        if res < 0.99 * best {
            best = res;
            since = 0;
        } else {
            since += 1;
            if since >= CG_PLATEAU {
                return Err(Error::Stagnation { iterations: it, residual: best });
            }
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Stagnation { iterations: CG_MAX_ITERATIONS, residual: best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumCheck {
    pub phi_norm: f64,
    /// `|⟨f(T),φ_T⟩ − ⟨f₀,φ(0)⟩ − ∫⟨h,𝟙_ωφ⟩|`, relative to the size of the terms.
    pub duality_defect: f64,
    /// `√ε‖φ_T‖/‖f₀‖`.
    pub penalization_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub index: usize,
    pub modes: usize,
    pub start: f64,
    pub length: f64,
    pub residual_before: f64,
    pub residual_after: f64,
    pub ratio: f64,
    /// The free half of the stage obeys `‖(1−π)e^{-τH^s}f‖ ≤ e^{-τλ_N^s}‖(1−π)f‖`.
    pub dissipation_holds: bool,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ControlSolution {
    pub horizon: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `h(t_q, ·)`, vanishing off `ω`.
    pub control: Vec<SampledFunction>,
    /// `‖f(T)‖/‖f₀‖` on the retained span.
    pub terminal_residual: f64,
    pub cost: f64,
    pub penalty: f64,
    pub cg_iterations: usize,
    /// `‖f₀ − Πf₀‖/‖f₀‖`, the part of the datum the retained modes cannot see.
    pub unresolved: f64,
    pub hum: Option<HumCheck>,
    pub stages: Vec<StageReport>,
}

pub const DEFAULT_QUADRATURE: usize = 32;

struct StageOutcome {
    terminal: Vec<C>,
    phi: Vec<C>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    control: Vec<SampledFunction>,
    iterations: usize,
}

fn synth(es: &EigenSystem, ts: &ThickSet, c: &[C]) -> Result<SampledFunction> {
    Ok(es.synthesize(c)?.mul_real(&ts.indicator))
}

/// Penalized HUM over `[start, start+T]` observing the first `active` modes.
fn hum_stage(
    es: &EigenSystem,
    ts: &ThickSet,
    gram: &Gramian,
    c0: &[C],
    active: usize,
    start: f64,
    epsilon: f64,
) -> Result<StageOutcome> {
    let t = gram.horizon;
    let d_t = gram.decay(t);
    let rhs: Vec<C> = (0..active).map(|a| -d_t[a] * c0[a]).collect();
    let (phi, iterations) = conjugate_gradient(
        |v| {
            let mut w = gram.apply_block(v, active);
            w.truncate(active);
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi += epsilon * vi);
            w
        },
        &rhs,
        CG_TOLERANCE,
    )?;
    let mut terminal: Vec<C> = c0.iter().zip(&d_t).map(|(c, d)| c * d).collect();
    let mut nodes = Vec::with_capacity(gram.taus.len());
    let mut control = Vec::with_capacity(gram.taus.len());
    for (&tau, &w) in gram.taus.iter().zip(&gram.weights) {
        let d = gram.decay(tau);
        let adj: Vec<C> = (0..active).map(|a| d[a] * phi[a]).collect();
        let h = synth(es, ts, &adj)?;
        // Duhamel: the control's coefficients propagated over the remaining τ.
        let hc = es.coefficients(&h)?;
        for a in 0..terminal.len() {
            terminal[a] += w * d[a] * hc[a];
        }
        nodes.push(start + t - tau);
        control.push(h);
    }
    Ok(StageOutcome { terminal, phi, nodes, weights: gram.weights.clone(), control, iterations })
}

fn quadrature_cost(control: &[SampledFunction], weights: &[f64]) -> f64 {
    control.iter().zip(weights).map(|(h, w)| w * h.norm().powi(2)).sum::<f64>().sqrt()
}

/// Solves `(Λ_T + εI)φ_T = −e^{-TH^s}f₀` by conjugate gradients and forms the
/// control `h(t) = 𝟙_ω e^{-(T−t)H^s}φ_T` on the quadrature nodes.
pub fn hum_solve(
    es: &EigenSystem,
    s: f64,
    ts: &ThickSet,
    horizon: f64,
    f0: &SampledFunction,
    epsilon: f64,
    order: usize,
) -> Result<ControlSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("penalty ε={epsilon} must be positive")));
    }
    let gram = Gramian::new(es, s, ts, horizon, order)?;
    hum_with(es, ts, &gram, f0, epsilon)
}

fn hum_with(
    es: &EigenSystem,
    ts: &ThickSet,
    gram: &Gramian,
    f0: &SampledFunction,
    epsilon: f64,
) -> Result<ControlSolution> {
    let f0n = f0.norm();
    let c0 = es.coefficients(f0)?;
    let m = es.count();
    let unresolved = if f0n > 0.0 { f0.sub(&es.synthesize(&c0)?)?.norm() / f0n } else { 0.0 };
    let out = hum_stage(es, ts, gram, &c0, m, 0.0, epsilon)?;
    let t = gram.horizon;
    let fin = es.synthesize(&out.terminal)?;
    let phi_t = es.synthesize(&out.phi)?;
    let d_t = gram.decay(t);
    let phi0: Vec<C> = out.phi.iter().zip(&d_t).map(|(p, d)| p * d).collect();
    let phi0 = es.synthesize(&phi0)?;
    let a = fin.inner(&phi_t)?;
    let b = f0.inner(&phi0)?;
    let mut integral = ZERO;
    for ((h, &w), &tau) in out.control.iter().zip(&out.weights).zip(&gram.taus) {
        let d = gram.decay(tau);
        let adj: Vec<C> = out.phi.iter().zip(&d).map(|(p, dq)| p * dq).collect();
        integral += w * h.inner(&synth(es, ts, &adj)?)?;
    }
    let scale = a.norm() + b.norm() + integral.norm();
    let duality_defect = if scale > 0.0 { (a - b - integral).norm() / scale } else { 0.0 };
    let phi_norm = phi_t.norm();
    let (terminal_residual, penalization_bound) =
        if f0n > 0.0 { (fin.norm() / f0n, epsilon.sqrt() * phi_norm / f0n) } else { (0.0, 0.0) };
    Ok(ControlSolution {
        horizon: t,
        cost: quadrature_cost(&out.control, &out.weights),
        nodes: out.nodes,
        weights: out.weights,
        control: out.control,
        terminal_residual,
        penalty: epsilon,
        cg_iterations: out.iterations,
        unresolved,
        hum: Some(HumCheck { phi_norm, duality_defect, penalization_bound }),
        stages: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrOrders {
    /// Spectral growth order: `log C_N ~ N^a` on the eigenmode family.
    pub a: f64,
    /// Dissipation order: `λ_N^s ~ N^b`.
    pub b: f64,
    pub theta: f64,
    pub spectral: SpectralConstantCurve,
}

/// Measures `a` from the eigenmode spectral constants on `ω` and `b = s·(Weyl slope)`.
pub fn measure_lr_orders(es: &EigenSystem, s: f64, ts: &ThickSet, orders: &[usize]) -> Result<LrOrders> {
    let spectral = spectral_constant_estimate(Some(es), Family::Eigenmode, ts, orders)?;
    let a = spectral
        .order_fit
        .ok_or_else(|| Error::DegenerateFit("spectral constants too flat to measure a growth order".into()))?
        .slope;
    let m = es.count();
    let weyl = weyl_fit(es, m / 4..m)?;
    let b = s * weyl.slope;
    Ok(LrOrders { a, b, theta: 2.0 / (a + b), spectral })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrOptions {
    pub initial_modes: usize,
    pub epsilon: f64,
    pub order: usize,
    pub max_stages: usize,
}

impl Default for LrOptions {
    fn default() -> Self {
        Self { initial_modes: 1, epsilon: 1e-8, order: DEFAULT_QUADRATURE, max_stages: 40 }
    }
}

/// Dyadic staging: stage `j` spans `T·2^{-j-1}`, controls the first
/// `N_j = ⌈N₀2^{jθ}⌉` modes on its first half and lets the semigroup act on
/// the second; the stage reaching the full span controls all remaining time.
pub fn lebeau_robbiano_solve(
    es: &EigenSystem,
    s: f64,
    ts: &ThickSet,
    horizon: f64,
    f0: &SampledFunction,
    orders: &LrOrders,
    options: &LrOptions,
) -> Result<ControlSolution> {
    if !(orders.a < orders.b) {
        return Err(Error::Hypotheses(format!(
            "spectral order a={:.3} does not stay below dissipation order b={:.3}",
            orders.a, orders.b
        )));
    }
    if !(horizon > 0.0) || !(options.epsilon > 0.0) || options.initial_modes == 0 {
        return Err(Error::InvalidArgument("need T > 0, ε > 0 and at least one initial mode".into()));
    }
    let f0n = f0.norm();
    let m = es.count();
    let mut c = es.coefficients(f0)?;
    let unresolved = if f0n > 0.0 { f0.sub(&es.synthesize(&c)?)?.norm() / f0n } else { 0.0 };
    let b = observation_matrix(es, ts)?;
    let lam_s: Vec<f64> = es.eigenvalues().iter().map(|l| l.powf(s)).collect();
    let mut sol = ControlSolution {
        horizon,
        nodes: Vec::new(),
        weights: Vec::new(),
        control: Vec::new(),
        terminal_residual: 0.0,
        cost: 0.0,
        penalty: options.epsilon,
        cg_iterations: 0,
        unresolved,
        hum: None,
        stages: Vec::new(),
    };
    let mut start = 0.0;
    for j in 0..options.max_stages {
        let modes = m.min((options.initial_modes as f64 * 2f64.powf(j as f64 * orders.theta)).ceil() as usize);
        let last = modes == m;
        let length = if last { horizon - start } else { horizon * 2f64.powi(-(j as i32) - 1) };
        let active_time = if last { length } else { length / 2.0 };
        let before = norm(&c);
        let gram = Gramian::from_observation(es, s, b.clone(), active_time, options.order)?;
        let out = hum_stage(es, ts, &gram, &c, modes, start, options.epsilon)?;
        c = out.terminal;
        let mut dissipation_holds = true;
        if !last {
            let tail_before = norm(&c[modes..]);
            let tau = length - active_time;
            c.iter_mut().zip(&lam_s).for_each(|(ci, l)| *ci *= (-tau * l).exp());
            let tail_after = norm(&c[modes..]);
            dissipation_holds = tail_after <= (-tau * lam_s[modes]).exp() * tail_before * (1.0 + 1e-12) + 1e-300;
        }
        let after = norm(&c);
        let ratio = if before > 0.0 { after / before } else { 0.0 };
        sol.stages.push(StageReport {
            index: j,
            modes,
            start,
            length,
            residual_before: before,
            residual_after: after,
            ratio,
            dissipation_holds,
            cg_iterations: out.iterations,
        });
        sol.cg_iterations += out.iterations;
        sol.nodes.extend(out.nodes);
        sol.weights.extend(out.weights);
        sol.control.extend(out.control);
        if before > 0.0 && ratio >= 1.0 {
            return Err(Error::StageNotContracting { stage: j, ratio });
        }
        start += length;
        if last {
            sol.terminal_residual = if f0n > 0.0 { after / f0n } else { 0.0 };
            sol.cost = quadrature_cost(&sol.control, &sol.weights);
            return Ok(sol);
        }
    }
    Err(Error::Unreachable(format!("full span not reached within {} stages", options.max_stages)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    /// `log cost = A + B·T^{-β}`: slope is `B`, intercept is `A`.
    pub fit: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSweep {
    pub times: Vec<f64>,
    pub costs: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Fit at the closed-form `β`; absent when `2sm <= 1`.
    pub fixed: Option<BetaFit>,
    /// Fit with `β` scanned over `[0.25, 4]` for the best `r²`.
    pub free: BetaFit,
}

/// Unit datum with the largest penalized control cost: top eigenvector of
/// `E(Λ+ε)^{-1}Λ(Λ+ε)^{-1}E`, `E = e^{-TH^s}`.
pub fn worst_case_datum(es: &EigenSystem, gram: &Gramian, epsilon: f64) -> Result<SampledFunction> {
    let m = gram.modes();
    let shifted = gram.matrix() + DMatrix::identity(m, m) * epsilon;
    let chol = shifted
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("penalized Gramian is not positive definite".into()))?;
    let e = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gram.decay(gram.horizon)));
    let x = chol.solve(&e);
    let cmat = x.transpose() * gram.matrix() * &x;
    let cmat = (&cmat + cmat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(cmat);
    let top = eig.eigenvalues.imax();
    let mut v: Vec<C> = eig.eigenvectors.column(top).iter().map(|&x| C::new(x, 0.0)).collect();
    if let Some(first) = v.iter().find(|x| x.norm() > 1e-3) {
        if first.re < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    es.synthesize(&v)
}

const BETA_SCAN: (f64, f64, f64) = (0.25, 4.0, 0.005);

fn beta_fit(times: &[f64], log_costs: &[f64], beta: f64) -> Result<BetaFit> {
    let x: Vec<f64> = times.iter().map(|t| t.powf(-beta)).collect();
    Ok(BetaFit { beta, fit: line_fit(&x, log_costs)? })
}

/// HUM per horizon on the worst-case unit datum, then `log cost` against `T^{-β}`.
pub fn cost_sweep(es: &EigenSystem, s: f64, ts: &ThickSet, times: &[f64], epsilon: f64) -> Result<CostSweep> {
    if times.len() < 4 || times.iter().any(|t| !(0.03..=0.5).contains(t)) {
        return Err(Error::InvalidArgument("need at least four horizons in [0.03, 0.5]".into()));
    }
    let b = observation_matrix(es, ts)?;
    let mut costs = Vec::new();
    let mut residuals = Vec::new();
    let mut iterations = Vec::new();
    for &t in times {
        let gram = Gramian::from_observation(es, s, b.clone(), t, DEFAULT_QUADRATURE)?;
        let f0 = worst_case_datum(es, &gram, epsilon)?;
        let sol = hum_with(es, ts, &gram, &f0, epsilon)?;
        costs.push(sol.cost);
        residuals.push(sol.terminal_residual);
        iterations.push(sol.cg_iterations);
    }
    let logs: Vec<f64> = costs.iter().map(|c| c.ln()).collect();
    let fixed = match derived_exponents(&es.spec().with_s(s)?).beta {
        Some(beta) => Some(beta_fit(times, &logs, beta)?),
        None => None,
    };
    let (lo, hi, step) = BETA_SCAN;
    let steps = ((hi - lo) / step).round() as usize;
    let mut free: Option<BetaFit> = None;
    for i in 0..=steps {
        let f = beta_fit(times, &logs, lo + i as f64 * step)?;
        if free.as_ref().is_none_or(|b| f.fit.r_squared > b.fit.r_squared) {
            free = Some(f);
        }
    }
    Ok(CostSweep {
        times: times.to_vec(),
        costs,
        residuals,
        iterations,
        fixed,
        free: free.expect("scan is non-empty"),
    })
}

/// Indices of `ω` as a plain mask, for export.
pub fn mask_nodes(ts: &ThickSet) -> Vec<u8> {
    ts.indicator.iter().map(|&v| v as u8).collect()
}
