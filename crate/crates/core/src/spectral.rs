//! Dense eigendecomposition of the discrete operator, spectral calculus
//! (fractional powers, semigroups) and the two projection families.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{forward_transform, inverse_transform, Domain, Grid, SampledFunction};
use crate::shubin_op::{apply, DiscreteOperator, OperatorSpec};

/// Largest mass in the outer 15% band for which an eigenpair is kept.
pub const BOUNDARY_MASS_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
pub const MIN_RETAINED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationReason {
    BoundaryMass,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub first_rejected: usize,
    pub reason: TruncationReason,
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    spec: OperatorSpec,
    grid: Grid,
    requested: usize,
    eigenvalues: Vec<f64>,
    /// Columns are nodal eigenvectors with `h^n Σ ψ_i ψ_j = δ_ij`.
    vectors: DMatrix<f64>,
    boundary_mass: Vec<f64>,
    residuals: Vec<f64>,
    truncation: Option<Truncation>,
}

/// A spectral result together with the norm of the input outside the retained span.
#[derive(Debug, Clone)]
pub struct Applied {
    pub function: SampledFunction,
    pub tail_norm: f64,
}

pub fn eigensystem(op: &DiscreteOperator, count: usize) -> Result<EigenSystem> {
    let a = op
        .dense()
        .ok_or_else(|| Error::DenseUnavailable("eigensolve needs the dense matrix".into()))?;
    let grid = *op.grid();
    let len = grid.len();
    if count == 0 || count > len {
        return Err(Error::InvalidArgument(format!("requested {count} pairs of {len}")));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric QR iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let cell = grid.cell(Domain::Space);
    let scale = 1.0 / cell.sqrt();
    let outer: Vec<usize> = (0..len).filter(|&i| grid.in_outer_band(i)).collect();

    let mut eigenvalues = Vec::new();
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut boundary_mass = Vec::new();
    let mut residuals = Vec::new();
    let mut truncation = None;
    for (j, &idx) in order.iter().take(count).enumerate() {
        let lambda = eig.eigenvalues[idx];
        let mut v: DVector<f64> = eig.eigenvectors.column(idx) * scale;
        let vmax = v.amax();
        if let Some(first) = v.iter().position(|x| x.abs() > 1e-3 * vmax) {
            if v[first] < 0.0 {
                v.neg_mut();
            }
        }
        let mass = cell * outer.iter().map(|&i| v[i] * v[i]).sum::<f64>();
        if mass > BOUNDARY_MASS_TOL {
            truncation = Some(Truncation { first_rejected: j, reason: TruncationReason::BoundaryMass });
            break;
        }
        let psi = SampledFunction::from_real(grid, v.as_slice())?;
        let hpsi = apply(op, &psi)?;
        let res = hpsi.axpy(Complex64::new(-lambda, 0.0), &psi)?.norm();
        if !(lambda > 0.0) || res > RESIDUAL_TOL * lambda {
            truncation = Some(Truncation { first_rejected: j, reason: TruncationReason::Residual });
            break;
        }
        eigenvalues.push(lambda);
        columns.push(v);
        boundary_mass.push(mass);
        residuals.push(res);
    }
    let required = MIN_RETAINED.min(count);
    if eigenvalues.len() < required {
        return Err(Error::TooFewModes { retained: eigenvalues.len(), required });
    }
    let vectors = DMatrix::from_columns(&columns);
    let es = EigenSystem {
        spec: *op.spec(),
        grid,
        requested: count,
        eigenvalues,
        vectors,
        boundary_mass,
        residuals,
        truncation,
    };
    let defect = es.orthonormality_defect();
    if defect > ORTHONORMALITY_TOL {
        return Err(Error::Eigen(format!("eigenvectors deviate from orthonormality by {defect:e}")));
    }
    Ok(es)
}

impl EigenSystem {
    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary_mass
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn vector(&self, j: usize) -> Result<SampledFunction> {
        if j >= self.count() {
            return Err(Error::InvalidArgument(format!("mode {j} of {} retained", self.count())));
        }
        SampledFunction::from_real(self.grid, self.vectors.column(j).as_slice())
    }

    /// `max |⟨ψ_i, ψ_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.tr_mul(&self.vectors) * self.grid.cell(Domain::Space);
        let mut worst = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    fn check(&self, g: &SampledFunction) -> Result<()> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if g.domain() != Domain::Space {
            return Err(Error::DomainMismatch { expected: Domain::Space });
        }
        Ok(())
    }

    /// `c_j = ⟨g, ψ_j⟩` for every retained mode.
    pub fn coefficients(&self, g: &SampledFunction) -> Result<Vec<Complex64>> {
        self.check(g)?;
        let len = g.values().len();
        let re = DVector::from_iterator(len, g.values().iter().map(|v| v.re));
        let im = DVector::from_iterator(len, g.values().iter().map(|v| v.im));
        let cell = self.grid.cell(Domain::Space);
        let (cr, ci) = (self.vectors.tr_mul(&re), self.vectors.tr_mul(&im));
        Ok(cr.iter().zip(ci.iter()).map(|(&r, &i)| Complex64::new(r, i) * cell).collect())
    }

    /// `Σ c_j ψ_j`; missing trailing coefficients are treated as zero.
    pub fn synthesize(&self, coefficients: &[Complex64]) -> Result<SampledFunction> {
        if coefficients.len() > self.count() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} modes",
                coefficients.len(),
                self.count()
            )));
        }
        let used = coefficients.len();
        let basis = self.vectors.columns(0, used);
        let re = DVector::from_iterator(used, coefficients.iter().map(|c| c.re));
        let im = DVector::from_iterator(used, coefficients.iter().map(|c| c.im));
        let (vr, vi) = (basis * re, basis * im);
        let values = vr.iter().zip(vi.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
        Ok(SampledFunction::from_parts(self.grid, Domain::Space, values))
    }

    /// `Πg` with the tail norm `‖g − Πg‖`.
    pub fn project(&self, g: &SampledFunction) -> Result<Applied> {
        let c = self.coefficients(g)?;
        let function = self.synthesize(&c)?;
        let tail_norm = g.sub(&function)?.norm();
        Ok(Applied { function, tail_norm })
    }

    fn spectral_map(&self, g: &SampledFunction, f: impl Fn(f64) -> f64) -> Result<Applied> {
        let mut c = self.coefficients(g)?;
        let proj = self.synthesize(&c)?;
        let tail_norm = g.sub(&proj)?.norm();
        for (cj, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= f(l);
        }
        Ok(Applied { function: self.synthesize(&c)?, tail_norm })
    }
}

/// `H^s g = Σ λ_j^s ⟨g, ψ_j⟩ ψ_j` over the retained pairs.
pub fn fractional_apply(es: &EigenSystem, s: f64, g: &SampledFunction) -> Result<Applied> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("power s={s} must be positive")));
    }
    es.spectral_map(g, |l| l.powf(s))
}

/// `e^{-tH^s} g = Σ e^{-tλ_j^s} ⟨g, ψ_j⟩ ψ_j` over the retained pairs.
pub fn semigroup_apply(es: &EigenSystem, s: f64, t: f64, g: &SampledFunction) -> Result<Applied> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("power s={s} must be positive")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time t={t} must be non-negative")));
    }
    es.spectral_map(g, |l| (-t * l.powf(s)).exp())
}

/// Orthogonal projection onto the first `modes` eigenvectors.
pub fn eigen_project(es: &EigenSystem, modes: usize, g: &SampledFunction) -> Result<SampledFunction> {
    if modes > es.count() {
        return Err(Error::InvalidArgument(format!("{modes} modes of {} retained", es.count())));
    }
    let c = es.coefficients(g)?;
    es.synthesize(&c[..modes])
}

/// Zeroes every frequency outside `[-K, K]^n`.
pub fn frequency_project(grid: &Grid, cutoff: f64, g: &SampledFunction) -> Result<SampledFunction> {
    if *g.grid() != *grid {
        return Err(Error::GridMismatch);
    }
    if !(cutoff >= 0.0 && cutoff <= grid.max_frequency()) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} outside [0, {}]",
            grid.max_frequency()
        )));
    }
    let hat = forward_transform(g)?;
    let tol = 1e-9 * grid.dual_spacing();
    let kept = hat.map(|i, v| {
        let c = grid.coords(i, Domain::Frequency);
        if c[..grid.dim()].iter().all(|x| x.abs() <= cutoff + tol) {
            v
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    inverse_transform(&kept)
}

const MAGIC: &[u8; 8] = b"SHUBINES";
const FORMAT_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Corrupt("truncated payload".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

impl EigenSystem {
    /// Little-endian binary encoding followed by a SHA-256 of the payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.spec.k.to_le_bytes());
        out.extend_from_slice(&self.spec.m.to_le_bytes());
        out.extend_from_slice(&self.spec.s.to_le_bytes());
        out.extend_from_slice(&(self.spec.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.grid.points() as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.half_width().to_le_bytes());
        out.extend_from_slice(&(self.requested as u64).to_le_bytes());
        out.extend_from_slice(&(self.count() as u64).to_le_bytes());
        let (code, first) = match self.truncation {
            None => (0u32, 0u64),
            Some(t) => (
                match t.reason {
                    TruncationReason::BoundaryMass => 1,
                    TruncationReason::Residual => 2,
                },
                t.first_rejected as u64,
            ),
        };
        out.extend_from_slice(&code.to_le_bytes());
        out.extend_from_slice(&first.to_le_bytes());
        for block in [&self.eigenvalues, &self.boundary_mass, &self.residuals] {
            for v in block.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for v in self.vectors.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 32 {
            return Err(Error::Corrupt("payload too short".into()));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::Corrupt("checksum mismatch".into()));
        }
        let mut r = Reader { bytes: payload, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Corrupt("bad magic".into()));
        }
        if r.u32()? != FORMAT_VERSION {
            return Err(Error::Corrupt("unsupported format version".into()));
        }
        let k = r.u32()?;
        let m = r.u32()?;
        let s = r.f64()?;
        let dim = r.u64()? as usize;
        let points = r.u64()? as usize;
        let half_width = r.f64()?;
        let spec = OperatorSpec::new(k, m, s, dim).map_err(|e| Error::Corrupt(e.to_string()))?;
        let grid = Grid::new(dim, points, half_width).map_err(|e| Error::Corrupt(e.to_string()))?;
        let requested = r.u64()? as usize;
        let count = r.u64()? as usize;
        if count > grid.len() {
            return Err(Error::Corrupt("mode count exceeds grid size".into()));
        }
        let code = r.u32()?;
        let first = r.u64()? as usize;
        let truncation = match code {
            0 => None,
            1 => Some(Truncation { first_rejected: first, reason: TruncationReason::BoundaryMass }),
            2 => Some(Truncation { first_rejected: first, reason: TruncationReason::Residual }),
            _ => return Err(Error::Corrupt("unknown truncation code".into())),
        };
        let eigenvalues = r.f64s(count)?;
        let boundary_mass = r.f64s(count)?;
        let residuals = r.f64s(count)?;
        let data = r.f64s(count * grid.len())?;
        if r.pos != payload.len() {
            return Err(Error::Corrupt("trailing bytes".into()));
        }
        let vectors = DMatrix::from_vec(grid.len(), count, data);
        Ok(Self { spec, grid, requested, eigenvalues, vectors, boundary_mass, residuals, truncation })
    }
}
