//! One-dimensional Weyl calculus for the conjugated kinetic operator: cutoff
//! and weight families, Moyal products with ξ-polynomials, the commutator
//! tower, the conjugation identity, a Gårding probe and anti-Wick quantization.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    apply_multiplier, forward_transform, inverse_transform, spectral_derivative, Domain, Grid, SampledFunction,
};
use crate::rng::{normal, stream, uniform};
use crate::shubin_op::kinetic_multiplier;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const EXP_LIMIT: f64 = 700.0;

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn bump_prime(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp() / (t * t)
    } else {
        0.0
    }
}

/// Smooth step: 1 on `(-∞, 1]`, 0 on `[2, ∞)`.
fn step(t: f64) -> f64 {
    let (a, b) = (bump(2.0 - t), bump(t - 1.0));
    a / (a + b)
}

fn step_prime(t: f64) -> f64 {
    let (a, b) = (bump(2.0 - t), bump(t - 1.0));
    let s = a + b;
    (-bump_prime(2.0 - t) * b - a * bump_prime(t - 1.0)) / (s * s)
}

/// `χ_ε(x) = χ(εx)/ε` with `χ(x) = x·step(|x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    epsilon: f64,
}

pub fn make_cutoff(epsilon: f64) -> Result<CutoffFamily> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε={epsilon} outside (0, 1]")));
    }
    Ok(CutoffFamily { epsilon })
}

impl CutoffFamily {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn base(x: f64) -> f64 {
        x * step(x.abs())
    }

    pub fn base_prime(x: f64) -> f64 {
        step(x.abs()) + x.abs() * step_prime(x.abs())
    }

    pub fn value(&self, x: f64) -> f64 {
        Self::base(self.epsilon * x) / self.epsilon
    }

    pub fn derivative(&self, x: f64) -> f64 {
        Self::base_prime(self.epsilon * x)
    }
}

/// `φ(x) = ⟨x⟩^{σ(1+k/m)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgmonWeight {
    pub sigma: f64,
    pub k: u32,
    pub m: u32,
}

impl AgmonWeight {
    pub fn new(sigma: f64, k: u32, m: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) || k == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!("need σ ∈ [0,1], k, m >= 1 (σ={sigma})")));
        }
        Ok(Self { sigma, k, m })
    }

    pub fn power(&self) -> f64 {
        self.sigma * (1.0 + self.k as f64 / self.m as f64)
    }

    pub fn value(&self, x: f64) -> f64 {
        (1.0 + x * x).powf(self.power() / 2.0)
    }

    /// Closed-form derivatives up to second order.
    pub fn derivative(&self, x: f64, order: usize) -> Result<f64> {
        let p = self.power();
        let b = 1.0 + x * x;
        match order {
            0 => Ok(self.value(x)),
            1 => Ok(p * x * b.powf(p / 2.0 - 1.0)),
            2 => Ok(p * b.powf(p / 2.0 - 1.0) + p * (p - 2.0) * x * x * b.powf(p / 2.0 - 2.0)),
            _ => Err(Error::InvalidArgument(format!("derivative order {order} above 2"))),
        }
    }

    /// `sup |∂^ρφ| / ⟨x⟩^{p−ρ}` over the grid nodes, `ρ = 0, 1, 2`.
    pub fn derivative_ratios(&self, grid: &Grid) -> Result<[f64; 3]> {
        let p = self.power();
        let mut out = [0.0f64; 3];
        for (rho, o) in out.iter_mut().enumerate() {
            for x in grid.nodes() {
                let r = self.derivative(x, rho)?.abs() / (1.0 + x * x).powf((p - rho as f64) / 2.0);
                *o = (*o).max(r);
            }
        }
        Ok(out)
    }
}

fn one_dimensional(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the symbol calculus is one-dimensional".into()));
    }
    Ok(())
}

/// `φ_ε = χ_ε ∘ φ` sampled on the nodes.
pub fn cutoff_weight(grid: &Grid, cutoff: &CutoffFamily, weight: &AgmonWeight) -> Result<SampledFunction> {
    one_dimensional(grid)?;
    let v: Vec<f64> = grid.nodes().iter().map(|&x| cutoff.value(weight.value(x))).collect();
    SampledFunction::from_real(*grid, &v)
}

/// `Σ_p c_p(x) ξ^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymbol {
    grid: Grid,
    coefficients: Vec<SampledFunction>,
}

pub const MAX_XI_DEGREE: usize = 12;

impl PolySymbol {
    pub fn new(coefficients: Vec<SampledFunction>) -> Result<Self> {
        let first = coefficients.first().ok_or_else(|| Error::InvalidArgument("empty symbol".into()))?;
        let grid = *first.grid();
        one_dimensional(&grid)?;
        if coefficients.len() > MAX_XI_DEGREE + 1 {
            return Err(Error::InvalidArgument(format!("ξ-degree above {MAX_XI_DEGREE}")));
        }
        for c in &coefficients {
            if *c.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if c.domain() != Domain::Space {
                return Err(Error::DomainMismatch { expected: Domain::Space });
            }
        }
        Ok(Self { grid, coefficients })
    }

    /// `ξ^{degree}` with unit coefficient.
    pub fn monomial(grid: &Grid, degree: usize) -> Result<Self> {
        let mut c = vec![SampledFunction::zeros(*grid, Domain::Space); degree + 1];
        c[degree] = SampledFunction::from_real(*grid, &vec![1.0; grid.len()])?;
        Self::new(c)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[SampledFunction] {
        &self.coefficients
    }

    /// Formal degree (length of the coefficient list minus one).
    pub fn xi_degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Highest power whose coefficient exceeds `tol` in sup norm.
    pub fn effective_degree(&self, tol: f64) -> Option<usize> {
        self.coefficients.iter().rposition(|c| c.max_abs() > tol)
    }

    pub fn eval(&self, node: usize, xi: f64) -> C {
        self.coefficients.iter().rev().fold(ZERO, |acc, c| acc * xi + c.values()[node])
    }

    /// `∂_ξ^β`.
    pub fn xi_derivative(&self, beta: usize) -> Result<Self> {
        if beta > self.xi_degree() {
            return Self::new(vec![SampledFunction::zeros(self.grid, Domain::Space)]);
        }
        let c = (beta..=self.xi_degree())
            .map(|p| {
                let f: f64 = (p - beta + 1..=p).map(|v| v as f64).product();
                self.coefficients[p].scale(C::new(f, 0.0))
            })
            .collect();
        Self::new(c)
    }

    /// `∂_x^α` coefficientwise.
    pub fn x_derivative(&self, alpha: usize) -> Result<Self> {
        let c = self.coefficients.iter().map(|c| spectral_derivative(c, &[alpha])).collect::<Result<_>>()?;
        Self::new(c)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let n = self.coefficients.len().max(other.coefficients.len());
        let zero = SampledFunction::zeros(self.grid, Domain::Space);
        let c = (0..n)
            .map(|p| {
                let a = self.coefficients.get(p).unwrap_or(&zero);
                let b = other.coefficients.get(p).unwrap_or(&zero);
                a.sub(b)
            })
            .collect::<Result<_>>()?;
        Self::new(c)
    }

    /// `max_p sup |c_p − d_p|`.
    pub fn max_difference(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.coefficients.iter().map(|c| c.max_abs()).fold(0.0, f64::max))
    }
}

fn check_factor(a: &SampledFunction, p: &PolySymbol) -> Result<()> {
    if *a.grid() != p.grid {
        return Err(Error::GridMismatch);
    }
    if a.domain() != Domain::Space {
        return Err(Error::DomainMismatch { expected: Domain::Space });
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn moyal(a: &SampledFunction, p: &PolySymbol, sign: f64) -> Result<PolySymbol> {
    check_factor(a, p)?;
    let d = p.xi_degree();
    let mut out = vec![SampledFunction::zeros(p.grid, Domain::Space); d + 1];
    for l in 0..=d {
        let al = spectral_derivative(a, &[l])?;
        let coef = C::new(0.0, sign * 0.5).powu(l as u32) / factorial(l);
        let dp = p.xi_derivative(l)?;
        for (q, c) in dp.coefficients.iter().enumerate() {
            out[q] = out[q].axpy(coef, &c.mul(&al)?)?;
        }
    }
    PolySymbol::new(out)
}

/// `a ♯ P = Σ_l (i/2)^l/l! a^{(l)} ∂_ξ^l P`, exact for ξ-polynomial `P`.
pub fn moyal_mul_x_poly(a: &SampledFunction, p: &PolySymbol) -> Result<PolySymbol> {
    moyal(a, p, 1.0)
}

/// `P ♯ a = Σ_l (−i/2)^l/l! a^{(l)} ∂_ξ^l P`.
pub fn moyal_mul_poly_x(p: &PolySymbol, a: &SampledFunction) -> Result<PolySymbol> {
    moyal(a, p, -1.0)
}

/// Constant shift of `φ` to the midpoint of its range; commutators and
/// conjugations do not see it, but it keeps `e^{±tφ}` balanced.
fn centered(phi: &SampledFunction) -> SampledFunction {
    let re = phi.re();
    let hi = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (hi + lo);
    phi.map(|_, v| v - mid)
}

/// `σ_{j+1} = Σ_{odd l} 2^{1−l} i^l/l! (∂^l φ)(∂_ξ^l σ_j)` from `σ_0 = ξ^{2m}`;
/// entry `j−1` holds `σ_j` for `j = 1..=2m`.
pub fn commutator_tower(phi: &SampledFunction, m: u32) -> Result<Vec<PolySymbol>> {
    if !(1..=3).contains(&m) {
        return Err(Error::InvalidArgument(format!("m={m} outside 1..=3")));
    }
    let grid = *phi.grid();
    one_dimensional(&grid)?;
    let two_m = 2 * m as usize;
    let dphi: Vec<SampledFunction> =
        (0..=two_m).map(|l| spectral_derivative(phi, &[l])).collect::<Result<_>>()?;
    let mut sigma = PolySymbol::monomial(&grid, two_m)?;
    let mut tower = Vec::with_capacity(two_m);
    for j in 0..two_m {
        let deg = two_m - j;
        let mut next = vec![SampledFunction::zeros(grid, Domain::Space); deg];
        for l in (1..=deg).step_by(2) {
            let coef = C::new(0.0, 1.0).powu(l as u32) * 2f64.powi(1 - l as i32) / factorial(l);
            let ds = sigma.xi_derivative(l)?;
            for (q, c) in ds.coefficients.iter().enumerate() {
                if q < deg {
                    next[q] = next[q].axpy(coef, &c.mul(&dphi[l])?)?;
                }
            }
        }
        sigma = PolySymbol::new(next)?;
        tower.push(sigma.clone());
    }
    Ok(tower)
}

/// Left-quantized coefficients `b_q` with `Op^w(P) = Σ_q b_q(x) D^q`, `D = −i∂`:
/// `b_q = Σ_{p≥q} (−i/2)^{p−q}/(p−q)! · p!/q! · ∂^{p−q} c_p`.
pub fn weyl_to_standard(p: &PolySymbol) -> Result<Vec<SampledFunction>> {
    let d = p.xi_degree();
    (0..=d)
        .map(|q| {
            let mut b = SampledFunction::zeros(p.grid, Domain::Space);
            for pp in q..=d {
                let r = pp - q;
                let coef = C::new(0.0, -0.5).powu(r as u32) / factorial(r) * (factorial(pp) / factorial(q));
                b = b.axpy(coef, &spectral_derivative(&p.coefficients[pp], &[r])?)?;
            }
            Ok(b)
        })
        .collect()
}

/// `Σ_q b_q(x) D^q v`.
pub fn apply_standard(coefficients: &[SampledFunction], v: &SampledFunction) -> Result<SampledFunction> {
    let mut out = SampledFunction::zeros(*v.grid(), Domain::Space);
    for (q, b) in coefficients.iter().enumerate() {
        let dq = spectral_derivative(v, &[q])?.scale(C::new(0.0, -1.0).powu(q as u32));
        out = out.axpy(C::new(1.0, 0.0), &b.mul(&dq)?)?;
    }
    Ok(out)
}

fn kinetic(v: &SampledFunction, m: u32) -> Result<SampledFunction> {
    apply_multiplier(v, &kinetic_multiplier(v.grid(), m))
}

fn ad_rec(phi: &SampledFunction, m: u32, j: usize, v: &SampledFunction) -> Result<SampledFunction> {
    if j == 0 {
        return kinetic(v, m);
    }
    let a = ad_rec(phi, m, j - 1, v)?;
    let b = ad_rec(phi, m, j - 1, &phi.mul(v)?)?;
    phi.mul(&a)?.sub(&b)
}

/// `ad^j_φ(−Δ)^m v` by the recursion `ad^{j+1}v = φ·ad^j v − ad^j(φv)`.
/// `j = 2m+1` is accepted to check that the tower terminates.
pub fn ad_apply(phi: &SampledFunction, m: u32, j: usize, v: &SampledFunction) -> Result<SampledFunction> {
    if j > 2 * m as usize + 1 {
        return Err(Error::InvalidArgument(format!("j={j} above 2m+1")));
    }
    phi.check_compatible(v)?;
    ad_rec(&centered(phi), m, j, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugationCheck {
    pub lhs: Option<SampledFunction>,
    pub rhs: Option<SampledFunction>,
    pub rel_error: f64,
    pub overflow: bool,
}

/// `e^{tφ}(−Δ)^m e^{−tφ} v` against `Σ_{j≤2m} t^j/j! ad^j v`.
pub fn conjugation_check(phi: &SampledFunction, m: u32, t: f64, v: &SampledFunction) -> Result<ConjugationCheck> {
    phi.check_compatible(v)?;
    let c = centered(phi);
    let span = c.re().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if t.abs() * span > EXP_LIMIT {
        return Ok(ConjugationCheck { lhs: None, rhs: None, rel_error: f64::INFINITY, overflow: true });
    }
    let e = |sign: f64| -> Vec<f64> { c.re().iter().map(|p| (sign * t * p).exp()).collect() };
    let lhs = kinetic(&v.mul_real(&e(-1.0)), m)?.mul_real(&e(1.0));
    let mut rhs = SampledFunction::zeros(*v.grid(), Domain::Space);
    for j in 0..=2 * m as usize {
        rhs = rhs.axpy(C::new(t.powi(j as i32) / factorial(j), 0.0), &ad_rec(&c, m, j, v)?)?;
    }
    let ln = lhs.norm();
    let diff = lhs.sub(&rhs)?.norm();
    let rel_error = if ln > 0.0 { diff / ln } else { diff };
    Ok(ConjugationCheck { lhs: Some(lhs), rhs: Some(rhs), rel_error, overflow: false })
}

pub const XI_SAMPLE_MAX: f64 = 40.0;
pub const XI_SAMPLES: usize = 801;
pub const X_FRACTION: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolClassReport {
    pub j: usize,
    pub sigma: f64,
    pub epsilons: Vec<f64>,
    /// `ratios[e][α][β] = sup |∂_x^α ∂_ξ^β σ_{j,ε}| / (⟨x⟩^{σkj/m}⟨ξ⟩^{2m−j−β})`.
    pub ratios: Vec<[[f64; 3]; 3]>,
    /// Per `(α, β)`: largest ratio over ε divided by the ratio at the first ε.
    pub spread: [[f64; 3]; 3],
    pub uniform: bool,
}

/// Symbol-class sup ratios of `σ_{j,ε}` for each `ε`, over `|x| ≤ 0.85L`
/// and `ξ ∈ [0, 40]`. Uniform when no ratio exceeds twice its value at the first `ε`.
pub fn symbol_class_report(
    grid: &Grid,
    weight: &AgmonWeight,
    j: usize,
    epsilons: &[f64],
) -> Result<SymbolClassReport> {
    let m = weight.m;
    if j == 0 || j > 2 * m as usize {
        return Err(Error::InvalidArgument(format!("j={j} outside 1..=2m")));
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument("no ε values".into()));
    }
    let l = grid.half_width();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.node(i).abs() <= X_FRACTION * l).collect();
    let xis: Vec<f64> = (0..XI_SAMPLES).map(|i| XI_SAMPLE_MAX * i as f64 / (XI_SAMPLES - 1) as f64).collect();
    let xw = weight.sigma * weight.k as f64 * j as f64 / m as f64;
    let mut ratios = Vec::new();
    for &eps in epsilons {
        let phi = cutoff_weight(grid, &make_cutoff(eps)?, weight)?;
        let sigma = commutator_tower(&phi, m)?.swap_remove(j - 1);
        let mut r = [[0.0; 3]; 3];
        for (alpha, row) in r.iter_mut().enumerate() {
            let dx = sigma.x_derivative(alpha)?;
            for (beta, cell) in row.iter_mut().enumerate() {
                let d = dx.xi_derivative(beta)?;
                let xi_pow = (2 * m as usize) as f64 - j as f64 - beta as f64;
                let mut sup = 0.0f64;
                for &i in &nodes {
                    let x = grid.node(i);
                    let wx = (1.0 + x * x).powf(xw / 2.0);
                    for &xi in &xis {
                        let wxi = (1.0 + xi * xi).powf(xi_pow / 2.0);
                        sup = sup.max(d.eval(i, xi).norm() / (wx * wxi));
                    }
                }
                *cell = sup;
            }
        }
        ratios.push(r);
    }
    let mut spread = [[1.0; 3]; 3];
    let mut uniform = true;
    for a in 0..3 {
        for b in 0..3 {
            let base = ratios[0][a][b];
            let top = ratios.iter().map(|r| r[a][b]).fold(0.0, f64::max);
            spread[a][b] = if base > 0.0 {
                top / base
            } else if top > 1e-12 {
                f64::INFINITY
            } else {
                1.0
            };
            if spread[a][b] > 2.0 {
                uniform = false;
            }
        }
    }
    Ok(SymbolClassReport { j, sigma: weight.sigma, epsilons: epsilons.to_vec(), ratios, spread, uniform })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    Gaussian,
    BandLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub c0_required: f64,
    pub worst_index: Option<usize>,
    pub worst_kind: Option<ProbeKind>,
    pub overflow_count: usize,
    pub family_size: usize,
}

/// Highest modulation frequency used by the Gårding family.
pub const MODULATION_CAP: f64 = 8.0;
pub const DEFAULT_FAMILY_SIZE: usize = 500;

/// Member `index` of the seeded Gårding family: even indices are modulated
/// Gaussians, odd ones random fields band-limited to `|ξ| ≤ 8` on multiples of `π/L`.
pub fn garding_member(grid: &Grid, seed: u64, index: usize) -> Result<(ProbeKind, SampledFunction)> {
    one_dimensional(grid)?;
    let mut rng = stream(seed, index as u64);
    let l = grid.half_width();
    let x = grid.nodes();
    if index.is_multiple_of(2) {
        let c = uniform(&mut rng, -l / 2.0, l / 2.0);
        let w = uniform(&mut rng, 0.3, 3.0);
        let k = uniform(&mut rng, 0.0, MODULATION_CAP);
        let v = x.iter().map(|&y| C::from_polar((-(y - c).powi(2) / (2.0 * w * w)).exp(), k * y)).collect();
        Ok((ProbeKind::Gaussian, SampledFunction::new(*grid, Domain::Space, v)?))
    } else {
        let qmax = (MODULATION_CAP * l / PI).floor() as i64;
        let coeffs: Vec<(f64, C)> = (-qmax..=qmax)
            .map(|q| (q as f64 * PI / l, C::new(normal(&mut rng), normal(&mut rng))))
            .collect();
        let v = x.iter().map(|&y| coeffs.iter().map(|(k, a)| a * C::from_polar(1.0, k * y)).sum()).collect();
        Ok((ProbeKind::BandLimited, SampledFunction::new(*grid, Domain::Space, v)?))
    }
}

/// `Q(v) = Re⟨(−Δ)^m e^{−tφ_ε}v, e^{tφ_ε}v⟩` evaluated in frequency.
fn garding_form(phi: &[f64], m: u32, t: f64, v: &SampledFunction) -> Result<f64> {
    let w = v.map(|i, z| z * (-t * phi[i]).exp());
    let z = v.map(|i, z| z * (t * phi[i]).exp());
    let (wh, zh) = (forward_transform(&w)?, forward_transform(&z)?);
    let mult = kinetic_multiplier(v.grid(), m);
    let s: f64 = wh.values().iter().zip(zh.values()).zip(&mult).map(|((a, b), k)| k * (a * b.conj()).re).sum();
    Ok(s * v.grid().cell(Domain::Frequency) / (2.0 * PI))
}

/// `c₀ = max(0, sup_v −Q(v)/(‖v‖² + t‖⟨x⟩^{σk}v‖²))` over the seeded family.
pub fn garding_probe(
    grid: &Grid,
    weight: &AgmonWeight,
    epsilon: f64,
    t: f64,
    family_size: usize,
    seed: u64,
) -> Result<GardingReport> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t={t} outside [0, 1]")));
    }
    let phi = centered(&cutoff_weight(grid, &make_cutoff(epsilon)?, weight)?).re();
    let span = phi.iter().fold(0.0f64, |a, p| a.max(p.abs()));
    let lower: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|x| (1.0 + x * x).powf(weight.sigma * weight.k as f64))
        .collect();
    let mut report = GardingReport { c0_required: 0.0, worst_index: None, worst_kind: None, overflow_count: 0, family_size };
    for index in 0..family_size {
        let (kind, v) = garding_member(grid, seed, index)?;
        if t * span > EXP_LIMIT {
            report.overflow_count += 1;
            continue;
        }
        let q = garding_form(&phi, weight.m, t, &v)?;
        let denom = v.norm().powi(2) + t * v.mul_real(&lower).norm().powi(2);
        let need = -q / denom;
        if need > report.c0_required {
            report.c0_required = need;
            report.worst_index = Some(index);
            report.worst_kind = Some(kind);
        }
    }
    Ok(report)
}

/// Phase-space samples on nodes × dual nodes, `values[j·N + q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField<T> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Copy> PhaseField<T> {
    pub fn new(grid: &Grid, values: Vec<T>) -> Result<Self> {
        one_dimensional(grid)?;
        if values.len() != grid.len() * grid.len() {
            return Err(Error::InvalidArgument("phase field size must be N²".into()));
        }
        Ok(Self { grid: *grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> T) -> Result<Self> {
        one_dimensional(grid)?;
        let n = grid.len();
        let values = (0..n * n).map(|i| f(grid.node(i / n), grid.dual_node(i % n))).collect();
        Ok(Self { grid: *grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, j: usize, q: usize) -> T {
        self.values[j * self.grid.len() + q]
    }
}

fn window(grid: &Grid, width: f64, center: f64) -> Vec<f64> {
    let period = 2.0 * grid.half_width();
    let norm = (PI * width * width).powf(-0.25);
    grid.nodes()
        .iter()
        .map(|&y| {
            let d = (y - center + grid.half_width()).rem_euclid(period) - grid.half_width();
            norm * (-d * d / (2.0 * width * width)).exp()
        })
        .collect()
}

/// `Vu(x_j, ξ_q) = ∫ u(y) g(y − x_j) e^{−iyξ_q} dy` with the periodized
/// Gaussian `g(y) = (πw²)^{-1/4} e^{−y²/(2w²)}`.
pub fn stft(u: &SampledFunction, width: f64) -> Result<PhaseField<C>> {
    let grid = *u.grid();
    one_dimensional(&grid)?;
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("window width {width} must be positive")));
    }
    let mut values = Vec::with_capacity(grid.len() * grid.len());
    for j in 0..grid.len() {
        let g = window(&grid, width, grid.node(j));
        values.extend(forward_transform(&u.mul_real(&g))?.into_values());
    }
    PhaseField::new(&grid, values)
}

fn stft_adjoint(field: &PhaseField<C>, width: f64) -> Result<SampledFunction> {
    let grid = field.grid;
    let n = grid.len();
    let h = grid.spacing();
    let mut out = vec![ZERO; n];
    for j in 0..n {
        let row = SampledFunction::new(grid, Domain::Frequency, field.values[j * n..(j + 1) * n].to_vec())?;
        let back = inverse_transform(&row)?;
        let g = window(&grid, width, grid.node(j));
        for (o, (b, w)) in out.iter_mut().zip(back.values().iter().zip(&g)) {
            *o += b * (w * h);
        }
    }
    SampledFunction::new(grid, Domain::Space, out)
}

/// `A_a u = (2π)^{-1} V*(a Vu)` with the unit Gaussian window.
pub fn anti_wick_apply(a: &PhaseField<f64>, u: &SampledFunction) -> Result<SampledFunction> {
    if a.grid != *u.grid() {
        return Err(Error::GridMismatch);
    }
    let v = stft(u, 1.0)?;
    anti_wick_from_stft(a, &v)
}

/// As [`anti_wick_apply`], reusing a precomputed transform.
pub fn anti_wick_from_stft(a: &PhaseField<f64>, v: &PhaseField<C>) -> Result<SampledFunction> {
    if a.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let prod = v.values.iter().zip(&a.values).map(|(z, w)| z * w).collect();
    stft_adjoint(&PhaseField { grid: v.grid, values: prod }, 1.0)
}

/// `c·x^px·ξ^pxi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTerm {
    pub coef: f64,
    pub px: u32,
    pub pxi: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePolynomial {
    pub terms: Vec<PhaseTerm>,
}

impl PhasePolynomial {
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * x.powi(t.px as i32) * xi.powi(t.pxi as i32)).sum()
    }

    fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.px.max(t.pxi)).max().unwrap_or(0)
    }

    /// Merges equal monomials and drops zero coefficients.
    fn simplified(mut self) -> Self {
        self.terms.sort_by_key(|t| (t.px, t.pxi));
        let mut out: Vec<PhaseTerm> = Vec::new();
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.px == t.px && last.pxi == t.pxi => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0.0);
        Self { terms: out }
    }
}

/// `E X^r` for `X ~ N(0, 1/2)`, `r ≤ 4`.
fn half_moment(r: u32) -> f64 {
    match r {
        0 => 1.0,
        2 => 0.5,
        4 => 0.75,
        _ => 0.0,
    }
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Weyl symbol `b = π^{-1} e^{−|·|²} ∗ a` of `A_a` for polynomial `a` of degree
/// at most 4 in each variable, by Gaussian moments.
pub fn anti_wick_weyl_symbol_poly(a: &PhasePolynomial) -> Result<PhasePolynomial> {
    if a.degree() > 4 {
        return Err(Error::InvalidArgument("polynomial symbols are supported up to degree 4".into()));
    }
    let mut terms = Vec::new();
    for t in &a.terms {
        for rx in 0..=t.px {
            for rxi in 0..=t.pxi {
                let c = t.coef
                    * binomial(t.px, rx)
                    * binomial(t.pxi, rxi)
                    * half_moment(rx)
                    * half_moment(rxi);
                if c != 0.0 {
                    terms.push(PhaseTerm { coef: c, px: t.px - rx, pxi: t.pxi - rxi });
                }
            }
        }
    }
    Ok(PhasePolynomial { terms }.simplified())
}

/// Numeric Gaussian smoothing of sampled symbols (separable, no periodization);
/// intended for symbols that decay inside the phase-space box.
pub fn anti_wick_weyl_symbol(a: &PhaseField<f64>) -> Result<PhaseField<f64>> {
    let grid = a.grid;
    let n = grid.len();
    let kernel = |step: f64| -> Vec<f64> {
        (0..n).map(|d| step * (-(d as f64 * step).powi(2)).exp() / PI.sqrt()).collect()
    };
    let kx = kernel(grid.spacing());
    let kxi = kernel(grid.dual_spacing());
    let mut tmp = vec![0.0; n * n];
    for j in 0..n {
        for q in 0..n {
            tmp[j * n + q] = (0..n).map(|p| kxi[q.abs_diff(p)] * a.values[j * n + p]).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for q in 0..n {
            out[j * n + q] = (0..n).map(|i| kx[j.abs_diff(i)] * tmp[i * n + q]).sum();
        }
    }
    PhaseField::new(&grid, out)
}
