use std::path::Path;

use serde::Serialize;

use super::tridiag::CrankNicolson;
use super::{apply_jump, apply_logistic, front_position, substeps, Field, SpdeConfig};
use crate::error::{invalid, Result};
use crate::measure::ReproductionMeasure;
use crate::output::{self, fmt17};
use crate::randomness::{sample_marked_poisson, sample_skeleton, Skeleton, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSource {
    /// Large jump shared through the skeleton.
    Skeleton,
    /// Jump with impact `y ≤ δ`, sampled privately by this run.
    Small,
}

impl JumpSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Skeleton => "skeleton",
            Self::Small => "small",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub t: f64,
    pub y: f64,
    pub source: JumpSource,
}

/// One `(t, fronts, mass)` row. `fronts[k]` is the crossing of
/// `SpdeConfig::thetas()[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpdeRecord {
    pub t: f64,
    pub fronts: Vec<Option<f64>>,
    pub mass: f64,
}

impl SpdeRecord {
    /// Front at the primary level.
    pub fn front(&self) -> Option<f64> {
        self.fronts[0]
    }
}

#[derive(Debug, Clone)]
pub struct SpdeTrajectory {
    pub thetas: Vec<f64>,
    pub records: Vec<SpdeRecord>,
    pub events: Vec<JumpEvent>,
    pub snapshots: Vec<Field>,
    pub final_field: Field,
    /// Set when the run stopped before the horizon, with the reason.
    pub truncation: Option<String>,
}

impl SpdeTrajectory {
    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }

    /// `(t, front)` series at level index `k` of [`Self::thetas`].
    pub fn front_series(&self, k: usize) -> Vec<(f64, Option<f64>)> {
        self.records.iter().map(|r| (r.t, r.fronts[k])).collect()
    }

    /// Columns `t, front_position, mass`; a missing front is written as `-inf`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "front_position", "mass"],
            self.records.iter().map(|r| {
                [
                    fmt17(r.t),
                    fmt17(r.front().unwrap_or(f64::NEG_INFINITY)),
                    fmt17(r.mass),
                ]
            }),
        )
    }

    /// Columns `t, y, source`.
    pub fn write_events_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "y", "source"],
            self.events
                .iter()
                .map(|e| [fmt17(e.t), fmt17(e.y), e.source.as_str().to_owned()]),
        )
    }

    /// Long format `t, x, u` over all stored snapshots.
    pub fn write_snapshots_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "x", "u"],
            self.snapshots.iter().flat_map(|f| {
                (0..f.len()).map(move |i| [fmt17(f.time()), fmt17(f.x(i)), fmt17(f.values()[i])])
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Jump(f64, JumpSource),
    Snapshot,
    Record,
}

impl Stop {
    // jumps land before observations at the same instant (paths are càdlàg)
    fn rank(&self) -> u8 {
        match self {
            Stop::Jump(..) => 0,
            Stop::Snapshot => 1,
            Stop::Record => 2,
        }
    }
}

/// Solve the jump-driven FKPP from `u0` up to `horizon`.
///
/// Large jumps (`y > δ`) come from `skeleton`, or are sampled from
/// `key.fork("skeleton", 0)` when none is given. Small jumps (`0 < y ≤ δ`)
/// are always sampled from `key.fork("small-jumps", 0)`. Boundary nodes are
/// frozen at their initial values.
pub fn evolve(
    u0: &Field,
    measure: &ReproductionMeasure,
    delta: f64,
    horizon: f64,
    skeleton: Option<&Skeleton>,
    key: &StreamKey,
    cfg: &SpdeConfig,
) -> Result<SpdeTrajectory> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    if (u0.half_width - cfg.half_width).abs() > 1e-12 || (u0.dx - cfg.dx).abs() > 1e-15 {
        return Err(invalid(
            "u0",
            format!(
                "grid (L = {}, dx = {}) differs from config (L = {}, dx = {})",
                u0.half_width, u0.dx, cfg.half_width, cfg.dx
            ),
        ));
    }
    let split = measure.split(delta)?;
    let sampled;
    let skeleton = match skeleton {
        Some(s) => {
            if s.delta() != delta {
                return Err(invalid(
                    "skeleton",
                    format!("sampled for delta = {}, run uses {delta}", s.delta()),
                ));
            }
            if s.horizon() < horizon {
                return Err(invalid(
                    "skeleton",
                    format!("covers [0, {}] but horizon is {horizon}", s.horizon()),
                ));
            }
            s
        }
        None => {
            sampled = sample_skeleton(&split, horizon, &key.fork("skeleton", 0))?;
            &sampled
        }
    };
    let small = sample_marked_poisson(
        split.minus.atoms(),
        horizon,
        &mut key.fork("small-jumps", 0).rng(),
    )?;

    let mut stops: Vec<(f64, Stop)> = Vec::new();
    stops.extend(
        skeleton
            .points()
            .iter()
            .take_while(|p| p.t <= horizon)
            .map(|p| (p.t, Stop::Jump(p.y, JumpSource::Skeleton))),
    );
    stops.extend(small.iter().map(|&(t, y)| (t, Stop::Jump(y, JumpSource::Small))));
    stops.extend(
        cfg.snapshot_times
            .iter()
            .filter(|&&t| (0.0..=horizon).contains(&t))
            .map(|&t| (t, Stop::Snapshot)),
    );
    let n_records = (horizon / cfg.record_every * (1.0 + 1e-12)).floor() as usize;
    stops.extend((1..=n_records).map(|k| (k as f64 * cfg.record_every, Stop::Record)));
    if (n_records as f64 * cfg.record_every - horizon).abs() > 1e-9 * horizon {
        stops.push((horizon, Stop::Record));
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.rank().cmp(&b.1.rank())));

    let thetas = cfg.thetas();
    let wave_length = measure.wave_speed().map(|s| 1.0 / s).unwrap_or(1.0);
    let right_limit = cfg.half_width - cfg.margin_wavelengths * wave_length;
    // a right boundary frozen at or above θ pins the level set there
    let tracks_front = u0.values().last().is_some_and(|&v| v < cfg.theta);
    let r0 = split.minus.atom_at_zero();

    let record = |f: &Field, t: f64| SpdeRecord {
        t,
        fronts: thetas.iter().map(|&th| front_position(f, th)).collect(),
        mass: f.mass(),
    };

    let mut field = u0.clone();
    field.time = 0.0;
    let mut stepper = Stepper::new(field.len(), cfg.dx, cfg.dt_max);
    let mut records = vec![record(&field, 0.0)];
    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    let mut truncation = None;
    for (t, stop) in stops {
        if t > field.time {
            stepper.advance(&mut field.values, t - field.time, r0);
            field.time = t;
        }
        match stop {
            Stop::Jump(y, source) => {
                let n = field.values.len();
                apply_jump(&mut field.values[1..n - 1], y);
                events.push(JumpEvent { t, y, source });
                if events.len() > cfg.max_events {
                    truncation = Some(format!("event limit {} exceeded at t = {t}", cfg.max_events));
                    break;
                }
            }
            Stop::Snapshot => snapshots.push(field.clone()),
            Stop::Record => {
                let rec = record(&field, t);
                let front = rec.front();
                records.push(rec);
                if let (true, Some(x)) = (tracks_front, front) {
                    if x > right_limit {
                        truncation = Some(format!(
                            "front {x} within {} wave-lengths of the right boundary at t = {t}",
                            cfg.margin_wavelengths
                        ));
                        break;
                    }
                }
            }
        }
    }

    Ok(SpdeTrajectory {
        thetas,
        records,
        events,
        snapshots,
        final_field: field,
        truncation,
    })
}

/// Strang integrator with a cached Crank–Nicolson factorization per step size.
struct Stepper {
    n: usize,
    dx: f64,
    dt_max: f64,
    cache: Option<CrankNicolson>,
}

impl Stepper {
    fn new(n: usize, dx: f64, dt_max: f64) -> Self {
        Self {
            n,
            dx,
            dt_max,
            cache: None,
        }
    }

    fn heat(&mut self, u: &mut [f64], dt: f64) {
        let stale = self.cache.as_ref().is_none_or(|c| c.dt() != dt);
        if stale {
            self.cache = Some(CrankNicolson::new(self.n, self.dx, dt));
        }
        self.cache.as_mut().expect("just built").step(u);
    }

    /// Heat(h/2) · logistic(h) · heat(h/2), repeated with `h ≤ dt_max`.
    fn advance(&mut self, u: &mut [f64], span: f64, r0: f64) {
        let steps = substeps(span, self.dt_max);
        let h = span / steps as f64;
        let n = u.len();
        for _ in 0..steps {
            self.heat(u, 0.5 * h);
            apply_logistic(&mut u[1..n - 1], r0, h);
            self.heat(u, 0.5 * h);
        }
    }
}
