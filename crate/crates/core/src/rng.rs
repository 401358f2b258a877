//! Seeded random families. Every family draws from a ChaCha8 stream selected
//! by `(seed, stream)`, so independent families never share a sequence.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::lattice::{Grid, SampledFunction};

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Real white noise normalized to unit discrete norm.
pub fn white_noise(grid: &Grid, rng: &mut ChaCha8Rng) -> Result<SampledFunction> {
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let u = SampledFunction::from_real(*grid, &values)?;
    let norm = u.norm();
    Ok(u.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Complex Gaussian samples, one per node.
pub fn complex_noise(grid: &Grid, rng: &mut ChaCha8Rng) -> Result<SampledFunction> {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    SampledFunction::new(*grid, crate::lattice::Domain::Space, values)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
