//! On-disk eigendata keyed by a SHA-256 of the operator, grid and mode count.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use shubin_core::lattice::Grid;
use shubin_core::shubin_op::{assemble, OperatorSpec};
use shubin_core::spectral::{eigensystem, EigenSystem};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// A stored file failed verification and was recomputed.
    Recovered,
}

pub struct EigenCache {
    dir: PathBuf,
}

#[derive(Serialize)]
struct Key<'a> {
    format: u32,
    spec: &'a OperatorSpec,
    dim: usize,
    points: usize,
    half_width: u64,
    count: usize,
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(spec: &OperatorSpec, grid: &Grid, count: usize) -> String {
        let key = Key {
            format: 1,
            spec,
            dim: grid.dim(),
            points: grid.points(),
            half_width: grid.half_width().to_bits(),
            count,
        };
        let bytes = serde_json::to_vec(&key).expect("key serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn path(&self, spec: &OperatorSpec, grid: &Grid, count: usize) -> PathBuf {
        self.dir.join(format!("{}.eig", Self::key(spec, grid, count)))
    }

    /// Loads the stored eigensystem or computes and stores it. Corrupted or
    /// mismatched files are reported in `warnings` and replaced.
    pub fn load_or_compute(
        &self,
        spec: &OperatorSpec,
        grid: &Grid,
        count: usize,
        warnings: &mut Vec<String>,
    ) -> Result<(EigenSystem, CacheOutcome), RunError> {
        let path = self.path(spec, grid, count);
        let mut outcome = CacheOutcome::Miss;
        if let Ok(bytes) = std::fs::read(&path) {
            match EigenSystem::from_bytes(&bytes) {
                Ok(es) if es.spec() == spec && es.grid() == grid && es.requested() == count => {
                    return Ok((es, CacheOutcome::Hit));
                }
                Ok(_) => {
                    warnings.push(format!("{}: stored eigensystem does not match the config; recomputing", path.display()));
                    outcome = CacheOutcome::Recovered;
                }
                Err(e) => {
                    warnings.push(format!("{}: {e}; recomputing", path.display()));
                    outcome = CacheOutcome::Recovered;
                }
            }
            eprintln!("warning: {}", warnings.last().unwrap());
        }
        let stage = |source| RunError::Compute { stage: "eigensolve".into(), source };
        let op = assemble(spec, grid).map_err(stage)?;
        let es = eigensystem(&op, count).map_err(stage)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| RunError::io(&self.dir, e))?;
        write_atomic(&path, &es.to_bytes())?;
        Ok((es, outcome))
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| RunError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}
