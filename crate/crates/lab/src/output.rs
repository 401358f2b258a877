//! CSV tables, JSON summaries and the run manifest.
//!
//! Every CSV starts with one comment line `# units: col=unit, ...` followed by
//! the header row. Floats use the shortest round-trip representation, so
//! identical runs produce identical bytes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cache::{write_atomic, CacheOutcome};
use crate::commands::Context;
use crate::{ExperimentConfig, RunArgs, RunError};

pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) if v.is_nan() => "nan".into(),
            Cell::F(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::output::Cell::from($v)),*] };
}

impl Table {
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let units: Vec<String> = self.columns.iter().map(|(c, u)| format!("{c}={u}")).collect();
        let mut out = format!("# units: {}\n", units.join(", ")).into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(c, _)| *c)).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory flush"));
        out
    }
}

pub struct Product {
    pub table: Table,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailMass {
    pub requested: usize,
    pub retained: usize,
    pub max_boundary_mass: f64,
    pub max_residual: f64,
    pub truncation: Option<shubin_core::spectral::Truncation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: crate::Command,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub cache: Option<CacheOutcome>,
    /// True when the eigendata came from the cache and no eigensolve ran.
    pub cached: bool,
    pub tail_mass: Option<TailMass>,
    pub warnings: Vec<String>,
    pub files: Vec<FileRecord>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn record(dir: &Path, name: String, bytes: &[u8]) -> Result<FileRecord, RunError> {
    write_atomic(&dir.join(&name), bytes)?;
    Ok(FileRecord { name, bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) })
}

/// Writes the table, the summary and finally the manifest, each atomically.
pub fn persist(args: &RunArgs, ctx: &Context, product: Product, started: Instant) -> Result<RunManifest, RunError> {
    let name = args.command.name();
    let csv = product.table.to_bytes();
    let summary = serde_json::to_vec_pretty(&product.summary).expect("summary serializes");
    let files = vec![
        record(&args.out, format!("{name}.csv"), &csv)?,
        record(&args.out, format!("{name}.summary.json"), &summary)?,
    ];
    let manifest = RunManifest {
        command: args.command,
        version: env!("CARGO_PKG_VERSION"),
        config: ctx.config.clone(),
        seed: ctx.config.seed,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        stages: ctx.timings.clone(),
        cache: ctx.cache_outcome,
        cached: ctx.cache_outcome == Some(CacheOutcome::Hit),
        tail_mass: ctx.tail_mass.clone(),
        warnings: ctx.warnings.clone(),
        files,
        out_dir: args.out.clone(),
    };
    let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&args.out.join("manifest.json"), &bytes)?;
    Ok(manifest)
}
