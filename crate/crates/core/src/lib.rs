//! Numerical laboratory for anisotropic Shubin operators `(-Δ)^m + |x|^{2k}`.

// Guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control_lab;
pub mod decay_lab;
pub mod error;
pub mod fit;
pub mod lattice;
pub mod rng;
pub mod shubin_op;
pub mod spectral;
pub mod weyl_calc;

pub use error::{Error, Result};
