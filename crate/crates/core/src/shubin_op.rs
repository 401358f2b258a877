//! The discrete operator `H_{k,m} = (-Δ)^m + |x|^{2k}` and its closed-form exponents.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{apply_multiplier, Domain, Grid, SampledFunction};

/// Largest node count for which a dense matrix is built.
pub const DENSE_LIMIT: usize = 4096;

const MAGNITUDE_LIMIT: f64 = 1e120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub k: u32,
    pub m: u32,
    pub s: f64,
    pub dim: usize,
}

impl OperatorSpec {
    pub fn new(k: u32, m: u32, s: f64, dim: usize) -> Result<Self> {
        let spec = Self { k, m, s, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.k) || !(1..=6).contains(&self.m) {
            return Err(Error::InvalidOperator(format!(
                "k={} m={} must lie in 1..=6",
                self.k, self.m
            )));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidOperator(format!("s={} must be positive", self.s)));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidOperator(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        Ok(())
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(self.k, self.m, s, self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub nu: f64,
    pub mu: f64,
    pub s_cr: f64,
    /// `None` when `2sm <= 1`, where the observability exponent is undefined.
    pub beta: Option<f64>,
    pub weyl: f64,
    pub prefactor_power: f64,
    pub spatial_agmon: f64,
    pub frequency_agmon: f64,
    pub eigen_scaling: f64,
}

pub fn derived_exponents(spec: &OperatorSpec) -> DerivedExponents {
    let k = spec.k as f64;
    let m = spec.m as f64;
    let s = spec.s;
    let n = spec.dim as f64;
    let two_sm = 2.0 * s * m;
    DerivedExponents {
        nu: (1.0 / (2.0 * s * k)).max(m / (k + m)),
        mu: (1.0 / two_sm).max(k / (k + m)),
        s_cr: 1.0 / (2.0 * k) + 1.0 / (2.0 * m),
        beta: (two_sm > 1.0).then(|| (1.0 / (two_sm - 1.0)).max(k / m)),
        weyl: 2.0 * k * m / (n * (k + m)),
        prefactor_power: n * (k + m) / (2.0 * s * k * m),
        spatial_agmon: 1.0 + k / m,
        frequency_agmon: 1.0 + m / k,
        eigen_scaling: 1.0 / (2.0 * k) + 1.0 / (2.0 * m),
    }
}

/// `|ξ|^{2m}` on the dual lattice, indexed like frequency samples.
pub fn kinetic_multiplier(grid: &Grid, m: u32) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let r2 = grid.radius(i, Domain::Frequency).powi(2);
            r2.powi(m as i32)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    spec: OperatorSpec,
    grid: Grid,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    dense: Option<DMatrix<f64>>,
}

/// Assembles densely when the grid is small enough, matrix-free otherwise.
pub fn assemble(spec: &OperatorSpec, grid: &Grid) -> Result<DiscreteOperator> {
    let rep = if grid.len() <= DENSE_LIMIT { Representation::Dense } else { Representation::MatrixFree };
    assemble_with(spec, grid, rep)
}

pub fn assemble_with(spec: &OperatorSpec, grid: &Grid, rep: Representation) -> Result<DiscreteOperator> {
    spec.validate()?;
    if spec.dim != grid.dim() {
        return Err(Error::InvalidOperator(format!(
            "operator dimension {} on a {}-dimensional grid",
            spec.dim,
            grid.dim()
        )));
    }
    if rep == Representation::Dense && grid.len() > DENSE_LIMIT {
        return Err(Error::DenseUnavailable(format!(
            "{} nodes exceed the dense limit {DENSE_LIMIT}",
            grid.len()
        )));
    }
    let potential: Vec<f64> = (0..grid.len())
        .map(|i| grid.radius(i, Domain::Space).powi(2 * spec.k as i32))
        .collect();
    let kinetic = kinetic_multiplier(grid, spec.m);
    let vmax = potential.iter().cloned().fold(0.0, f64::max);
    let kmax = kinetic.iter().cloned().fold(0.0, f64::max);
    if !(vmax < MAGNITUDE_LIMIT && kmax < MAGNITUDE_LIMIT) {
        return Err(Error::Overflow(format!(
            "operator entries reach {:.3e} (potential) and {:.3e} (kinetic)",
            vmax, kmax
        )));
    }
    let mut op = DiscreteOperator { spec: *spec, grid: *grid, kinetic, potential, dense: None };
    if rep == Representation::Dense {
        op.dense = Some(op.build_dense()?);
    }
    Ok(op)
}

impl DiscreteOperator {
    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn dense(&self) -> Option<&DMatrix<f64>> {
        self.dense.as_ref()
    }

    pub fn exponents(&self) -> DerivedExponents {
        derived_exponents(&self.spec)
    }

    fn build_dense(&self) -> Result<DMatrix<f64>> {
        let g = &self.grid;
        let len = g.len();
        let n = g.points();
        let mut delta = vec![Complex64::new(0.0, 0.0); len];
        delta[0] = Complex64::new(1.0, 0.0);
        let column = apply_multiplier(&SampledFunction::new(*g, Domain::Space, delta)?, &self.kinetic)?;
        let column: Vec<f64> = column.values().iter().map(|v| v.re).collect();
        let mut a = DMatrix::from_fn(len, len, |i, j| {
            let (ii, jj) = (g.axis_indices(i), g.axis_indices(j));
            let d0 = (ii[0] + n - jj[0]) % n;
            let d1 = (ii[1] + n - jj[1]) % n;
            let flat = if g.dim() == 1 { d0 } else { d0 * n + d1 };
            column[flat]
        });
        for i in 0..len {
            a[(i, i)] += self.potential[i];
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(sym)
    }

    fn check(&self, u: &SampledFunction) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if u.domain() != Domain::Space {
            return Err(Error::DomainMismatch { expected: Domain::Space });
        }
        Ok(())
    }

    /// `(-Δ)^m u` by transform, multiply, inverse.
    pub fn apply_kinetic(&self, u: &SampledFunction) -> Result<SampledFunction> {
        self.check(u)?;
        apply_multiplier(u, &self.kinetic)
    }

    /// Dense matrix-vector product; errors when no dense matrix was assembled.
    pub fn apply_dense(&self, u: &SampledFunction) -> Result<SampledFunction> {
        self.check(u)?;
        let a = self
            .dense
            .as_ref()
            .ok_or_else(|| Error::DenseUnavailable("operator was assembled matrix-free".into()))?;
        let re = DVector::from_iterator(u.values().len(), u.values().iter().map(|v| v.re));
        let im = DVector::from_iterator(u.values().len(), u.values().iter().map(|v| v.im));
        let (ar, ai) = (a * re, a * im);
        let values = ar.iter().zip(ai.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
        SampledFunction::new(self.grid, Domain::Space, values)
    }
}

/// `Hu` through the Fourier multiplier plus the diagonal potential.
pub fn apply(op: &DiscreteOperator, u: &SampledFunction) -> Result<SampledFunction> {
    let kin = op.apply_kinetic(u)?;
    Ok(kin.map(|i, v| v + u.values()[i] * op.potential[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn exponents_harmonic() {
        let e = derived_exponents(&OperatorSpec::new(1, 1, 1.0, 1).unwrap());
        assert!(close(e.nu, 0.5) && close(e.mu, 0.5) && close(e.s_cr, 1.0));
        assert!(close(e.beta.unwrap(), 1.0) && close(e.weyl, 1.0));
    }

    #[test]
    fn exponents_quartic() {
        let e = derived_exponents(&OperatorSpec::new(2, 1, 1.0, 1).unwrap());
        assert!(close(e.nu, 1.0 / 3.0) && close(e.mu, 2.0 / 3.0) && close(e.s_cr, 0.75));
        assert!(close(e.beta.unwrap(), 2.0) && close(e.weyl, 4.0 / 3.0));
        assert!(close(e.spatial_agmon, 3.0) && close(e.frequency_agmon, 1.5));
    }

    #[test]
    fn exponents_bilaplacian_half() {
        let e = derived_exponents(&OperatorSpec::new(1, 2, 0.5, 1).unwrap());
        assert!(close(e.nu, 1.0) && close(e.mu, 0.5) && close(e.s_cr, 0.75));
        assert!(close(e.beta.unwrap(), 1.0) && close(e.weyl, 4.0 / 3.0));
    }

    #[test]
    fn beta_undefined_in_low_diffusion() {
        let e = derived_exponents(&OperatorSpec::new(1, 1, 0.2, 1).unwrap());
        assert!(e.beta.is_none());
    }

    #[test]
    fn spec_validation() {
        assert!(OperatorSpec::new(0, 1, 1.0, 1).is_err());
        assert!(OperatorSpec::new(1, 7, 1.0, 1).is_err());
        assert!(OperatorSpec::new(1, 1, 0.0, 1).is_err());
        assert!(OperatorSpec::new(1, 1, 1.0, 3).is_err());
    }

    #[test]
    fn dense_mode_limit() {
        let spec = OperatorSpec::new(1, 1, 1.0, 1).unwrap();
        let g = Grid::new(1, 8192, 40.0).unwrap();
        assert!(matches!(
            assemble_with(&spec, &g, Representation::Dense),
            Err(Error::DenseUnavailable(_))
        ));
        assert!(assemble(&spec, &g).unwrap().dense().is_none());
    }

    #[test]
    fn overflow_rejected() {
        let spec = OperatorSpec::new(6, 1, 1.0, 1).unwrap();
        let g = Grid::new(1, 64, 1e11).unwrap();
        assert!(matches!(assemble(&spec, &g), Err(Error::Overflow(_))));
    }
}
