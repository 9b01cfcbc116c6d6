use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cbbm::{CountOptions, Mode, RunOptions};
use crate::error::{KppError, Result};
use crate::measure::ReproductionMeasure;
use crate::spde::{InitialProfile, SpdeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMode {
    /// One skeleton per seed, slope of `log I_t` against `𝔰²/2`.
    Quenched,
    /// Skeleton resampled per replica, mean of `I_T` against `e^{𝐫T}`.
    Annealed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbbmSettings {
    pub cap: usize,
    pub counts_only: bool,
    /// Spacing of `(t, I_t, S_t)` records.
    pub record_every: f64,
    pub snapshot_times: Vec<f64>,
    pub counts: CountOptions,
}

impl Default for CbbmSettings {
    fn default() -> Self {
        Self {
            cap: 1_000_000,
            counts_only: false,
            record_every: 0.5,
            snapshot_times: Vec::new(),
            counts: CountOptions::default(),
        }
    }
}

impl CbbmSettings {
    pub fn run_options(&self, counts_only: bool, checkpoints: Vec<f64>) -> RunOptions {
        RunOptions {
            mode: if counts_only { Mode::CountsOnly } else { Mode::Positions },
            cap: self.cap,
            checkpoints,
            record_every: Some(self.record_every),
            snapshot_times: self.snapshot_times.clone(),
            counts: self.counts,
        }
    }
}

/// Everything a subcommand needs, read from one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub measure: ReproductionMeasure,
    pub delta: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Seeds for the per-seed protocols, replicas per side otherwise.
    pub replicas: usize,
    pub eps: f64,
    /// Fit window; `[T/3, T]` when absent.
    pub window: Option<[f64; 2]>,
    pub relative_tolerance: f64,
    /// Share of seeds that must pass in multi-seed protocols.
    pub required_fraction: f64,
    pub sigmas: f64,
    pub spde: SpdeConfig,
    /// Initial profile; a unit ramp starting at `-0.8 L` when absent.
    pub initial: Option<InitialProfile>,
    /// Strict ceiling on the fitted front speed.
    pub max_speed: Option<f64>,
    pub cbbm: CbbmSettings,
    /// Starting positions of the particle system.
    pub x0: Vec<f64>,
    /// Evaluation points of the duality check.
    pub xs: Vec<f64>,
    pub growth_mode: GrowthMode,
    /// Levels for the tail check; `1.1·√(2c_δ)` and `0.9·√(2c̲_δ)` when absent.
    pub lambdas: Option<Vec<f64>>,
    /// Tail checkpoints; evenly spaced from `5/c_δ` to `T` when absent.
    pub checkpoints: Option<Vec<f64>>,
    /// Exponents reported by the formulas table.
    pub moments: Vec<f64>,
    /// Drift for the eigenvalue and box-size rows; `√(c̲_δ)` when absent.
    pub lambda: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            measure: ReproductionMeasure::new(0.0, [(0.5, 1.0)]).expect("valid default measure"),
            delta: 0.25,
            horizon: 30.0,
            seed: 0,
            replicas: 20,
            eps: 0.0,
            window: None,
            relative_tolerance: 0.1,
            required_fraction: 0.9,
            sigmas: 3.0,
            spde: SpdeConfig::default(),
            initial: None,
            max_speed: None,
            cbbm: CbbmSettings::default(),
            x0: vec![0.0],
            xs: vec![-0.5, 0.5],
            growth_mode: GrowthMode::Quenched,
            lambdas: None,
            checkpoints: None,
            moments: vec![0.0, 1.0, 2.0],
            lambda: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KppError::Config(vec![e.to_string()]))
    }

    /// Every violated constraint at once.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            v.push(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.replicas == 0 {
            v.push("replicas must be at least 1".to_owned());
        }
        if !(self.eps >= 0.0) {
            v.push(format!("eps must be nonnegative, got {}", self.eps));
        }
        if let Some([lo, hi]) = self.window {
            if !(lo < hi) {
                v.push(format!("window needs t_lo < t_hi, got [{lo}, {hi}]"));
            }
            if hi > self.horizon {
                v.push(format!("window end {hi} exceeds horizon {}", self.horizon));
            }
        }
        if !(self.relative_tolerance > 0.0) {
            v.push("relative_tolerance must be positive".to_owned());
        }
        if !(0.0..=1.0).contains(&self.required_fraction) {
            v.push("required_fraction must lie in [0, 1]".to_owned());
        }
        if !(self.sigmas > 0.0) {
            v.push("sigmas must be positive".to_owned());
        }
        v.extend(self.spde.violations().into_iter().map(|s| format!("spde: {s}")));
        if let Some(p) = &self.initial {
            if let Err(e) = p.validate() {
                v.push(e.to_string());
            }
        }
        if self.cbbm.cap == 0 {
            v.push("cbbm.cap must be positive".to_owned());
        }
        if !(self.cbbm.record_every > 0.0) {
            v.push("cbbm.record_every must be positive".to_owned());
        }
        if self.x0.is_empty() {
            v.push("x0 needs at least one particle".to_owned());
        }
        if self.xs.is_empty() || self.xs.len() > crate::analysis::MAX_DUALITY_POINTS {
            v.push(format!(
                "xs needs 1 to {} points, got {}",
                crate::analysis::MAX_DUALITY_POINTS,
                self.xs.len()
            ));
        }
        if let Some(ls) = &self.lambdas {
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0)) {
                v.push("lambdas must be a nonempty list of positive values".to_owned());
            }
        }
        if let Some(cs) = &self.checkpoints {
            if cs.iter().any(|t| !(*t > 0.0 && *t <= self.horizon)) {
                v.push("checkpoints must lie in (0, horizon]".to_owned());
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(KppError::Config(v))
        }
    }

    pub fn window(&self) -> (f64, f64) {
        match self.window {
            Some([lo, hi]) => (lo, hi),
            None => (self.horizon / 3.0, self.horizon),
        }
    }

    pub fn initial_profile(&self) -> InitialProfile {
        self.initial.clone().unwrap_or_else(|| {
            let a = -0.8 * self.spde.half_width;
            InitialProfile::Ramp { a, b: a + 1.0 }
        })
    }
}
