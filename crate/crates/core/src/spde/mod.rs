//! Jump-driven FKPP `du = ½Δu dt + r0 u(1-u) dt + ∫ y u(1-u) 𝓡(dt, dy)` on a
//! truncated domain `[-L, L]`.
//!
//! Between jumps the solution is advanced by Strang splitting (heat half-step,
//! exact logistic step, heat half-step). Jumps act pointwise and globally in
//! space at their exact event times.

mod evolve;
mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KppError, Result};
use tridiag::CrankNicolson;

pub use evolve::{evolve, JumpEvent, JumpSource, SpdeRecord, SpdeTrajectory};

/// Grid-sampled solution on `[-L, L]` with spacing `dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    dx: f64,
    half_width: f64,
    time: f64,
}

/// Number of nodes of the uniform grid on `[-L, L]`, or an error when `2L` is
/// not a whole multiple of `dx`.
pub fn grid_len(half_width: f64, dx: f64) -> Result<usize> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(invalid("dx", format!("must be positive, got {dx}")));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(invalid("half_width", format!("must be positive, got {half_width}")));
    }
    let cells = 2.0 * half_width / dx;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
        return Err(invalid(
            "dx",
            format!("2L = {} is not a multiple of dx = {dx}", 2.0 * half_width),
        ));
    }
    let n = rounded as usize + 1;
    if n < 3 {
        return Err(invalid("dx", "grid needs at least 3 nodes"));
    }
    Ok(n)
}

impl Field {
    /// Wrap grid values; every value is clamped into `[0, 1]`.
    pub fn new(mut values: Vec<f64>, dx: f64, half_width: f64, time: f64) -> Result<Self> {
        let n = grid_len(half_width, dx)?;
        if values.len() != n {
            return Err(invalid(
                "field",
                format!("expected {n} values for L = {half_width}, dx = {dx}, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(invalid("field", "NaN value"));
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            values,
            dx,
            half_width,
            time,
        })
    }

    /// Sample `f` at every grid node.
    pub fn from_fn(half_width: f64, dx: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid_len(half_width, dx)?;
        let values = (0..n).map(|i| f(-half_width + i as f64 * dx)).collect();
        Self::new(values, dx, half_width, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Location of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    /// Linear interpolation; outside the domain the nearest boundary value.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = (x + self.half_width) / self.dx;
        if s <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if s >= last as f64 {
            return self.values[last];
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// `∫ u dx` by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        self.dx * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    }

    fn with_values(&self, values: Vec<f64>, time: f64) -> Self {
        Self {
            values,
            dx: self.dx,
            half_width: self.half_width,
            time,
        }
    }
}

/// Initial data that can be both rendered on a grid and evaluated at any
/// real point (the dual particle side needs the latter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    Constant { value: f64 },
    /// `1` left of `a`, `0` right of `b`, linear in between.
    Ramp { a: f64, b: f64 },
    /// `1` on `x ≤ at`, `0` after.
    Step { at: f64 },
    /// `exp(-(x - center)² / (2 variance))`.
    Gaussian { center: f64, variance: f64 },
}

impl InitialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Ramp { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Self::Step { at } => {
                if x <= at {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gaussian { center, variance } => (-(x - center).powi(2) / (2.0 * variance)).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { value } if !(0.0..=1.0).contains(&value) => {
                Err(invalid("initial profile", format!("constant {value} outside [0, 1]")))
            }
            Self::Ramp { a, b } if !(a < b) => {
                Err(invalid("initial profile", format!("ramp needs a < b, got a = {a}, b = {b}")))
            }
            Self::Gaussian { variance, .. } if !(variance > 0.0) => {
                Err(invalid("initial profile", "gaussian variance must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn render(&self, half_width: f64, dx: f64) -> Result<Field> {
        self.validate()?;
        Field::from_fn(half_width, dx, |x| self.eval(x))
    }
}

/// Monotone ramp from `1` (left of `a`) to `0` (right of `b`); its width
/// `b - a` sets the smoothness of the initial front.
pub fn initial_ramp(half_width: f64, dx: f64, a: f64, b: f64) -> Result<Field> {
    if !(a < b) {
        return Err(invalid("ramp", format!("need a < b, got a = {a}, b = {b}")));
    }
    if a < -half_width || b > half_width {
        return Err(invalid(
            "ramp",
            format!("[{a}, {b}] not inside the domain [-{half_width}, {half_width}]"),
        ));
    }
    InitialProfile::Ramp { a, b }.render(half_width, dx)
}

/// Grid and stepping parameters of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpdeConfig {
    /// Domain is `[-half_width, half_width]`.
    pub half_width: f64,
    pub dx: f64,
    /// Largest Strang step; must not exceed `dx²`.
    pub dt_max: f64,
    /// Primary front level.
    pub theta: f64,
    /// Further levels tracked for sensitivity checks.
    pub extra_thetas: Vec<f64>,
    /// Spacing of (t, front, mass) records.
    pub record_every: f64,
    /// Times at which the full field is stored.
    pub snapshot_times: Vec<f64>,
    /// Minimum distance, in wave-lengths `1/𝔰`, between front and right boundary.
    pub margin_wavelengths: f64,
    /// Event-log limit before the run is truncated.
    pub max_events: usize,
}

impl Default for SpdeConfig {
    fn default() -> Self {
        Self {
            half_width: 50.0,
            dx: 0.1,
            dt_max: 0.01,
            theta: 0.5,
            extra_thetas: vec![0.25, 0.75],
            record_every: 0.5,
            snapshot_times: Vec::new(),
            margin_wavelengths: 10.0,
            max_events: 10_000_000,
        }
    }
}

impl SpdeConfig {
    /// All violated constraints, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = grid_len(self.half_width, self.dx) {
            v.push(e.to_string());
        }
        if !(self.dt_max > 0.0) {
            v.push(format!("dt_max must be positive, got {}", self.dt_max));
        } else if self.dt_max > self.dx * self.dx * (1.0 + 1e-12) {
            v.push(format!(
                "dt_max = {} exceeds dx² = {} (stability guard)",
                self.dt_max,
                self.dx * self.dx
            ));
        }
        for &th in std::iter::once(&self.theta).chain(&self.extra_thetas) {
            if !(th > 0.0 && th < 1.0) {
                v.push(format!("front level {th} outside (0, 1)"));
            }
        }
        if !(self.record_every > 0.0) {
            v.push(format!("record_every must be positive, got {}", self.record_every));
        }
        if !(self.margin_wavelengths >= 0.0) {
            v.push("margin_wavelengths must be nonnegative".to_owned());
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

    /// Primary level followed by the extra ones.
    pub fn thetas(&self) -> Vec<f64> {
        std::iter::once(self.theta).chain(self.extra_thetas.iter().copied()).collect()
    }
}

/// Advance the heat semigroup `P_h` for `½Δ` by Crank–Nicolson substeps of
/// size at most `dt_max` (required `≤ dx²`).
pub fn heat_step(f: &Field, h: f64, dt_max: f64) -> Result<Field> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if !(dt_max > 0.0) || dt_max > f.dx * f.dx * (1.0 + 1e-12) {
        return Err(invalid(
            "dt_max",
            format!("stability guard: need 0 < dt_max <= dx² = {}, got {dt_max}", f.dx * f.dx),
        ));
    }
    let steps = substeps(h, dt_max);
    let mut cn = CrankNicolson::new(f.len(), f.dx, h / steps as f64);
    let mut values = f.values.clone();
    for _ in 0..steps {
        cn.step(&mut values);
    }
    Ok(f.with_values(values, f.time + h))
}

/// Exact logistic flow `u ↦ u / (u + (1-u) e^{-rh})` applied pointwise.
pub fn logistic_step(f: &Field, r: f64, h: f64) -> Field {
    let mut values = f.values.clone();
    apply_logistic(&mut values, r, h);
    f.with_values(values, f.time + h)
}

/// Pointwise jump `u ← u + y u(1-u)`.
pub fn jump_apply(f: &Field, y: f64) -> Result<Field> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(invalid("y", format!("jump impact must lie in (0, 1], got {y}")));
    }
    let mut values = f.values.clone();
    apply_jump(&mut values, y);
    Ok(f.with_values(values, f.time))
}

/// Rightmost crossing of level `theta`, linearly interpolated; `None` when
/// `u < theta` everywhere.
pub fn front_position(f: &Field, theta: f64) -> Option<f64> {
    let i = f.values.iter().rposition(|&v| v >= theta)?;
    if i + 1 == f.values.len() {
        return Some(f.x(i));
    }
    let (hi, lo) = (f.values[i], f.values[i + 1]);
    Some(f.x(i) + f.dx * (hi - theta) / (hi - lo))
}

pub(crate) fn substeps(h: f64, dt_max: f64) -> usize {
    ((h / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

pub(crate) fn apply_logistic(values: &mut [f64], r: f64, h: f64) {
    if r == 0.0 {
        return;
    }
    let decay = (-r * h).exp();
    for u in values {
        if *u > 0.0 {
            *u = (*u / (*u + (1.0 - *u) * decay)).clamp(0.0, 1.0);
        }
    }
}

pub(crate) fn apply_jump(values: &mut [f64], y: f64) {
    for u in values {
        *u = (*u + y * *u * (1.0 - *u)).clamp(0.0, 1.0);
    }
}
