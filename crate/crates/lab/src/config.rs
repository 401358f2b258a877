//! Experiment configuration: one TOML table per module namespace.

use serde::{Deserialize, Serialize};
use shubin_core::control_lab::Family;
use shubin_core::lattice::Grid;
use shubin_core::shubin_op::OperatorSpec;

use crate::{Command, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub operator: OperatorSection,
    pub grid: GridSection,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub weyl_law: WeylLawSection,
    #[serde(default)]
    pub agmon: AgmonSection,
    #[serde(default)]
    pub smoothing: SmoothingSection,
    #[serde(default)]
    pub seminorms: SeminormSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub thickset: ThickSetSection,
    #[serde(default)]
    pub spectral_constant: SpectralConstantSection,
    #[serde(default)]
    pub dissipation: DissipationSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub cost_sweep: CostSweepSection,
    #[serde(default)]
    pub lr_control: LrSection,
    #[serde(default)]
    pub commutator: CommutatorSection,
    #[serde(default)]
    pub garding: GardingSection,
    #[serde(default)]
    pub antiwick: AntiWickSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub k: u32,
    pub m: u32,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub count: usize,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self { count: 120 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylLawSection {
    pub start: usize,
    pub end: usize,
}

impl Default for WeylLawSection {
    fn default() -> Self {
        Self { start: 20, end: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgmonSection {
    pub modes: Vec<usize>,
    pub sigma: f64,
    pub t: f64,
    pub scaling_start: usize,
    pub scaling_end: usize,
}

impl Default for AgmonSection {
    fn default() -> Self {
        Self { modes: vec![0, 1, 2, 3], sigma: 1.0, t: 0.05, scaling_start: 5, scaling_end: 26 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingSection {
    /// Diffusion indices; each is paired with every entry of `times`.
    pub s: Vec<f64>,
    pub times: Vec<f64>,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        Self { s: vec![0.3, 0.75, 1.5], times: vec![0.1, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeminormSection {
    pub t: f64,
    pub alpha: usize,
    pub beta: usize,
}

impl Default for SeminormSection {
    fn default() -> Self {
        Self { t: 0.1, alpha: 4, beta: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientSection {
    pub t: f64,
    pub a: f64,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self { t: 0.1, a: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThickKindName {
    Periodic,
    Density,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThickSetSection {
    pub kind: ThickKindName,
    pub gamma: f64,
    pub scale: f64,
    /// Density sets only: window half-length `ρ(x) = max(floor, radius·⟨x⟩^delta)`.
    pub delta: f64,
    pub radius: f64,
    pub floor: f64,
}

impl Default for ThickSetSection {
    fn default() -> Self {
        Self { kind: ThickKindName::Periodic, gamma: 0.3, scale: 1.0, delta: 0.5, radius: 1.0, floor: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Eigenmode,
    Frequency,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Eigenmode => Family::Eigenmode,
            FamilyName::Frequency => Family::Frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConstantSection {
    pub family: FamilyName,
    pub orders: Vec<usize>,
}

impl Default for SpectralConstantSection {
    fn default() -> Self {
        Self { family: FamilyName::Frequency, orders: (4..=24).step_by(2).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DissipationSection {
    pub family: FamilyName,
    pub order: usize,
    pub times: Vec<f64>,
}

impl Default for DissipationSection {
    fn default() -> Self {
        Self { family: FamilyName::Eigenmode, order: 10, times: vec![0.05, 0.1, 0.2, 0.4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub horizon: f64,
    pub epsilon: f64,
    pub quadrature: usize,
    /// The initial datum is the sum of these eigenvectors.
    pub datum: Vec<usize>,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { horizon: 0.3, epsilon: 1e-8, quadrature: 32, datum: vec![0, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSweepSection {
    pub times: Vec<f64>,
    pub epsilon: f64,
}

impl Default for CostSweepSection {
    fn default() -> Self {
        Self { times: vec![0.05, 0.1, 0.2, 0.3, 0.4], epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrSection {
    pub horizon: f64,
    pub orders: Vec<usize>,
    pub initial_modes: usize,
    pub max_stages: usize,
}

impl Default for LrSection {
    fn default() -> Self {
        Self { horizon: 0.4, orders: (4..=24).collect(), initial_modes: 1, max_stages: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorSection {
    pub epsilons: Vec<f64>,
    pub sigma: f64,
    pub t: f64,
    /// Frequency band of the random test functions.
    pub band: f64,
}

impl Default for CommutatorSection {
    fn default() -> Self {
        Self { epsilons: vec![1.0, 0.5, 0.25, 0.1], sigma: 1.0, t: 0.2, band: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GardingSection {
    pub epsilon: f64,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub family_size: usize,
}

impl Default for GardingSection {
    fn default() -> Self {
        Self { epsilon: 1.0, sigma: 1.0, times: vec![0.0, 0.25, 0.5], family_size: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntiWickSection {
    pub points: usize,
    pub half_width: f64,
    pub symbols: usize,
}

impl Default for AntiWickSection {
    fn default() -> Self {
        Self { points: 64, half_width: 6.0, symbols: 200 }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.message().to_string()))
    }

    pub fn spec(&self) -> Result<OperatorSpec, RunError> {
        let o = &self.operator;
        OperatorSpec::new(o.k, o.m, o.s, o.dim).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, RunError> {
        Grid::new(self.operator.dim, self.grid.points, self.grid.half_width).map_err(|e| RunError::Config(e.to_string()))
    }

    /// Checks every precondition the chosen command can know about before any compute.
    pub fn validate(&self, command: Command) -> Result<(), RunError> {
        let spec = self.spec()?;
        let grid = self.grid()?;
        let mut v = Checks::default();
        let count = self.eigen.count;
        if command.needs_eigensystem() {
            v.check(count >= 1 && count <= grid.len(), format!("eigen.count {count} outside 1..={}", grid.len()));
            v.check(grid.len() <= shubin_core::shubin_op::DENSE_LIMIT, "grid too large for the dense eigensolver");
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match command {
            Command::Spectrum => {}
            Command::WeylLaw => {
                let w = &self.weyl_law;
                v.check(w.start < w.end && w.end <= count, format!("weyl_law window {}..{} must lie in 0..{count}", w.start, w.end));
            }
            Command::Agmon => {
                let a = &self.agmon;
                v.check(!a.modes.is_empty(), "agmon.modes is empty");
                v.check(a.modes.iter().all(|&j| j < count), "agmon.modes beyond eigen.count");
                v.check(positive(a.sigma) && a.sigma <= 1.0, "agmon.sigma must lie in (0, 1]");
                v.check(positive(a.t), "agmon.t must be positive");
                v.check(a.scaling_start < a.scaling_end && a.scaling_end <= count, "agmon scaling window outside eigen.count");
            }
            Command::Smoothing => {
                let s = &self.smoothing;
                v.check(!s.s.is_empty() && s.s.iter().all(|&x| positive(x)), "smoothing.s must be positive");
                v.check(!s.times.is_empty() && s.times.iter().all(|&x| positive(x)), "smoothing.times must be positive");
            }
            Command::Seminorms => {
                let s = &self.seminorms;
                v.check(positive(s.t), "seminorms.t must be positive");
                let cap = shubin_core::decay_lab::SEMINORM_CAP;
                v.check(s.alpha <= cap && s.beta <= cap, format!("seminorm orders capped at {cap}"));
            }
            Command::Coefficients => {
                v.check(positive(self.coefficients.t), "coefficients.t must be positive");
                v.check(positive(self.coefficients.a), "coefficients.a must be positive");
            }
            Command::Thickset => self.check_thickset(&mut v),
            Command::SpectralConstant => {
                self.check_thickset(&mut v);
                let s = &self.spectral_constant;
                v.check(s.orders.len() >= 3, "spectral_constant.orders needs at least 3 entries");
                v.check(s.orders.iter().all(|&n| n >= 1), "spectral_constant.orders must be positive");
                if s.family == FamilyName::Eigenmode {
                    v.check(s.orders.iter().all(|&n| n <= count), "eigenmode orders beyond eigen.count");
                } else {
                    v.check(s.orders.iter().all(|&n| 2 * n < grid.points()), "frequency orders not resolved by the grid");
                }
            }
            Command::Dissipation => {
                let d = &self.dissipation;
                v.check(d.times.iter().all(|&t| positive(t)) && !d.times.is_empty(), "dissipation.times must be positive");
                if d.family == FamilyName::Eigenmode {
                    v.check(d.order + 1 < count, "dissipation.order must leave modes above it");
                }
            }
            Command::Control => {
                self.check_thickset(&mut v);
                let c = &self.control;
                v.check(positive(c.horizon), "control.horizon must be positive");
                v.check(positive(c.epsilon), "control.epsilon must be positive");
                v.check(c.quadrature >= 2, "control.quadrature must be at least 2");
                v.check(!c.datum.is_empty() && c.datum.iter().all(|&j| j < count), "control.datum indices outside eigen.count");
            }
            Command::CostSweep => {
                self.check_thickset(&mut v);
                let c = &self.cost_sweep;
                v.check(c.times.len() >= 4, "cost_sweep.times needs at least 4 entries");
                v.check(c.times.iter().all(|&t| (0.03..=0.5).contains(&t)), "cost_sweep.times must lie in [0.03, 0.5]");
                v.check(positive(c.epsilon), "cost_sweep.epsilon must be positive");
                v.check(self.control.datum.iter().all(|&j| j < count), "control.datum indices outside eigen.count");
            }
            Command::LrControl => {
                self.check_thickset(&mut v);
                let l = &self.lr_control;
                v.check(positive(l.horizon), "lr_control.horizon must be positive");
                v.check(l.orders.len() >= 3 && l.orders.iter().all(|&n| n >= 1 && n <= count), "lr_control.orders must lie in 1..=eigen.count");
                v.check(l.initial_modes >= 1 && l.max_stages >= 1, "lr_control stage parameters must be positive");
                v.check(!self.control.datum.is_empty() && self.control.datum.iter().all(|&j| j < count), "control.datum indices outside eigen.count");
            }
            Command::Commutator => {
                v.check(spec.dim == 1, "the symbol calculus is one-dimensional");
                v.check(spec.m <= 3, "commutator towers are available for m <= 3");
                let c = &self.commutator;
                v.check(!c.epsilons.is_empty() && c.epsilons.iter().all(|&e| positive(e) && e <= 1.0), "commutator.epsilons must lie in (0, 1]");
                v.check(positive(c.sigma) && c.sigma <= 1.0, "commutator.sigma must lie in (0, 1]");
                v.check(c.t.is_finite() && c.t >= 0.0, "commutator.t must be nonnegative");
                v.check(positive(c.band), "commutator.band must be positive");
            }
            Command::Garding => {
                v.check(spec.dim == 1, "the symbol calculus is one-dimensional");
                let g = &self.garding;
                v.check(positive(g.epsilon) && g.epsilon <= 1.0, "garding.epsilon must lie in (0, 1]");
                v.check(positive(g.sigma) && g.sigma <= 1.0, "garding.sigma must lie in (0, 1]");
                v.check(!g.times.is_empty() && g.times.iter().all(|&t| (0.0..=1.0).contains(&t)), "garding.times must lie in [0, 1]");
                v.check(g.family_size >= 1, "garding.family_size must be positive");
            }
            Command::Antiwick => {
                let a = &self.antiwick;
                v.check(Grid::new(1, a.points, a.half_width).is_ok(), "antiwick grid is invalid");
                v.check(a.points <= 256, "antiwick.points capped at 256");
                v.check(a.symbols >= 1, "antiwick.symbols must be positive");
            }
        }
        v.finish()
    }

    fn check_thickset(&self, v: &mut Checks) {
        let t = &self.thickset;
        let positive = |x: f64| x.is_finite() && x > 0.0;
        v.check(positive(t.gamma) && t.gamma <= 1.0, "thickset.gamma must lie in (0, 1]");
        let h = 2.0 * self.grid.half_width / self.grid.points as f64;
        if t.kind == ThickKindName::Periodic {
            v.check(t.scale >= 4.0 * h, "thickset.scale must span at least four grid steps");
        }
        v.check(t.scale <= self.grid.half_width, "thickset.scale exceeds the box");
        if t.kind == ThickKindName::Density {
            v.check(self.operator.dim == 1, "density thick sets are one-dimensional");
            v.check(t.delta.is_finite() && (0.0..1.0).contains(&t.delta), "thickset.delta must lie in [0, 1)");
            v.check(positive(t.radius) && positive(t.floor), "thickset radius and floor must be positive");
        }
    }
}

#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.0.push(msg.into());
        }
    }

    fn finish(self) -> Result<(), RunError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(RunError::Config(self.0.join("; ")))
        }
    }
}
