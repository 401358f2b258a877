//! Uniform collocation lattices on `[-L, L)^n`, the scaled discrete Fourier
//! transform `û(ξ) ≈ ∫ e^{-ix·ξ} u(x) dx`, sampling and spectral derivatives.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Uniform grid with `N` nodes per axis on `[-L, L)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    points: usize,
    half_width: f64,
}

/// Whether samples sit on spatial nodes or on dual (frequency) nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    Frequency,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{points} nodes per axis; need a power of two >= 16"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        Ok(Self { dim, points, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total node count `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Dual lattice spacing `π/L`.
    pub fn dual_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest dual frequency magnitude `πN/(2L)`.
    pub fn max_frequency(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_width)
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn dual_node(&self, q: usize) -> f64 {
        (q as f64 - (self.points / 2) as f64) * self.dual_spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    pub fn dual_nodes(&self) -> Vec<f64> {
        (0..self.points).map(|q| self.dual_node(q)).collect()
    }

    /// Per-axis indices of a flat index (axis 0 is the slow index).
    pub fn axis_indices(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    /// Coordinates of a flat index in the given domain; unused axes are zero.
    pub fn coords(&self, flat: usize, domain: Domain) -> [f64; 2] {
        let idx = self.axis_indices(flat);
        let at = |i: usize| match domain {
            Domain::Space => self.node(i),
            Domain::Frequency => self.dual_node(i),
        };
        if self.dim == 1 {
            [at(idx[0]), 0.0]
        } else {
            [at(idx[0]), at(idx[1])]
        }
    }

    pub fn radius(&self, flat: usize, domain: Domain) -> f64 {
        let c = self.coords(flat, domain);
        c[0].hypot(c[1])
    }

    /// Quadrature weight of one sample: `h^n` in space, `(π/L)^n` in frequency.
    pub fn cell(&self, domain: Domain) -> f64 {
        let w = match domain {
            Domain::Space => self.spacing(),
            Domain::Frequency => self.dual_spacing(),
        };
        w.powi(self.dim as i32)
    }

    /// True when some coordinate lies in the outer 15% of the box.
    pub fn in_outer_band(&self, flat: usize) -> bool {
        let c = self.coords(flat, Domain::Space);
        let edge = 0.85 * self.half_width;
        c[..self.dim].iter().any(|x| x.abs() > edge)
    }
}

/// Complex nodal samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    domain: Domain,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, domain, values })
    }

    pub fn zeros(grid: Grid, domain: Domain) -> Self {
        Self { grid, domain, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, Domain::Space, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub(crate) fn from_parts(grid: Grid, domain: Domain, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, domain, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Discrete L² norm with the quadrature weight of the domain.
    pub fn norm(&self) -> f64 {
        (self.grid.cell(self.domain) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `⟨u, v⟩ = w Σ u_j conj(v_j)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell(self.domain))
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch { expected: self.domain });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        Self { grid: self.grid, domain: self.domain, values }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|_, v| v * a)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: Complex64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map(|i, v| v + a * other.values[i]))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Pointwise product with real nodal weights.
    pub fn mul_real(&self, w: &[f64]) -> Self {
        self.map(|i, v| v * w[i])
    }

    /// Pointwise product of two functions on the same grid and domain.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map(|i, v| v * other.values[i]))
    }

    fn expect(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::DomainMismatch { expected: domain });
        }
        Ok(())
    }
}

fn parity_sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Runs `op` over every axis-aligned line of a row-major `N^dim` array.
fn for_each_line(values: &mut [Complex64], dim: usize, n: usize, mut op: impl FnMut(&mut [Complex64])) {
    if dim == 1 {
        op(values);
        return;
    }
    for row in values.chunks_mut(n) {
        op(row);
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..n {
        for (r, slot) in line.iter_mut().enumerate() {
            *slot = values[r * n + col];
        }
        op(&mut line);
        for (r, v) in line.iter().enumerate() {
            values[r * n + col] = *v;
        }
    }
}

/// `û(ξ_q) = h^n Σ_j u_j e^{-i x_j·ξ_q}`, so `‖û‖ = (2π)^{n/2}‖u‖`.
pub fn forward_transform(u: &SampledFunction) -> Result<SampledFunction> {
    u.expect(Domain::Space)?;
    let g = u.grid;
    let n = g.points;
    let fft = plan(n, false);
    let h = g.spacing();
    let half = n / 2;
    let mut values = u.values.clone();
    for_each_line(&mut values, g.dim, n, |line| {
        for (j, v) in line.iter_mut().enumerate() {
            *v *= parity_sign(j);
        }
        fft.process(line);
        for (q, v) in line.iter_mut().enumerate() {
            *v *= h * parity_sign(q + half);
        }
    });
    Ok(SampledFunction { grid: g, domain: Domain::Frequency, values })
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(u_hat: &SampledFunction) -> Result<SampledFunction> {
    u_hat.expect(Domain::Frequency)?;
    let g = u_hat.grid;
    let n = g.points;
    let ifft = plan(n, true);
    let scale = 1.0 / (g.spacing() * n as f64);
    let half = n / 2;
    let mut values = u_hat.values.clone();
    for_each_line(&mut values, g.dim, n, |line| {
        for (q, v) in line.iter_mut().enumerate() {
            *v *= parity_sign(q + half);
        }
        ifft.process(line);
        for (j, v) in line.iter_mut().enumerate() {
            *v *= scale * parity_sign(j);
        }
    });
    Ok(SampledFunction { grid: g, domain: Domain::Space, values })
}

/// Applies a real Fourier multiplier (indexed like frequency samples) to a spatial function.
pub fn apply_multiplier(u: &SampledFunction, multiplier: &[f64]) -> Result<SampledFunction> {
    let mut hat = forward_transform(u)?;
    for (v, m) in hat.values.iter_mut().zip(multiplier) {
        *v *= *m;
    }
    inverse_transform(&hat)
}

/// Evaluates `f` at every spatial node; `f` receives the first `n` coordinates.
pub fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<SampledFunction> {
    sample_complex(grid, |x| Complex64::new(f(x), 0.0))
}

pub fn sample_complex(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<SampledFunction> {
    let values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i, Domain::Space);
            f(&c[..grid.dim])
        })
        .collect();
    SampledFunction::new(*grid, Domain::Space, values)
}

/// Samples a function of frequency on the dual lattice.
pub fn sample_frequency(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<SampledFunction> {
    let values: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i, Domain::Frequency);
            f(&c[..grid.dim])
        })
        .collect();
    SampledFunction::new(*grid, Domain::Frequency, values)
}

/// `∂^α u` through the multiplier `(iξ)^α`. The unpaired Nyquist mode is
/// dropped along axes with odd order so real inputs stay real.
pub fn spectral_derivative(u: &SampledFunction, order: &[usize]) -> Result<SampledFunction> {
    let g = u.grid;
    if order.len() != g.dim {
        return Err(Error::InvalidArgument(format!(
            "multi-index of length {} on a {}-dimensional grid",
            order.len(),
            g.dim
        )));
    }
    if order.iter().all(|&a| a == 0) {
        return Ok(u.clone());
    }
    let mut hat = forward_transform(u)?;
    for (i, v) in hat.values.iter_mut().enumerate() {
        let idx = g.axis_indices(i);
        let mut factor = Complex64::new(1.0, 0.0);
        for (axis, &a) in order.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if idx[axis] == 0 && a % 2 == 1 {
                factor = Complex64::new(0.0, 0.0);
                break;
            }
            factor *= (Complex64::i() * g.dual_node(idx[axis])).powu(a as u32);
        }
        *v *= factor;
    }
    inverse_transform(&hat)
}
