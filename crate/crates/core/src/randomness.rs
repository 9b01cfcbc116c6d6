//! Seedable, splittable random streams and the skeleton of large jumps.
//!
//! A [`StreamKey`] is a pure value: `(master seed, lane path)` hashed into a
//! 256-bit ChaCha seed. Forking never touches generator state, so the output of
//! every replica depends only on its key and never on scheduling order.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, KppError, Result};
use crate::measure::SplitMeasure;
use crate::output::{self, fmt17};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "KPP_SEED";

/// Generator type handed out by [`StreamKey::rng`].
pub type StreamRng = ChaCha8Rng;

/// The lane a key addresses: a purpose tag and a replica index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lane {
    pub purpose: &'static str,
    pub index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    master_seed: u64,
    lane: Lane,
    digest: [u8; 32],
}

impl StreamKey {
    /// Root key for a master seed.
    pub fn new(master_seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"kpp-lab/root");
        h.update(master_seed.to_le_bytes());
        Self {
            master_seed,
            lane: Lane {
                purpose: "root",
                index: 0,
            },
            digest: h.finalize().into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn lane(&self) -> Lane {
        self.lane
    }

    /// Child key for `(purpose, index)`. The child digest hashes the parent
    /// digest together with a length-prefixed purpose and the index, so
    /// distinct paths give distinct keys.
    pub fn fork(&self, purpose: &'static str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.digest);
        h.update((purpose.len() as u64).to_le_bytes());
        h.update(purpose.as_bytes());
        h.update(index.to_le_bytes());
        Self {
            master_seed: self.master_seed,
            lane: Lane { purpose, index },
            digest: h.finalize().into(),
        }
    }

    /// A fresh generator positioned at the start of this key's stream.
    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.digest)
    }
}

/// Free-function form of [`StreamKey::fork`].
pub fn fork(key: &StreamKey, purpose: &'static str, index: u64) -> StreamKey {
    key.fork(purpose, index)
}

/// Read [`SEED_ENV`], if set. Unparseable values are an error rather than
/// silently ignored.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| invalid("KPP_SEED", format!("not a u64: {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// A point `(t, y)` of the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkeletonPoint {
    pub t: f64,
    pub y: f64,
}

/// Ordered realisation of the Poisson point process of jumps with impact
/// `y > δ` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skeleton {
    horizon: f64,
    delta: f64,
    points: Vec<SkeletonPoint>,
}

impl Skeleton {
    pub fn new(horizon: f64, delta: f64, points: Vec<SkeletonPoint>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1], got {delta}")));
        }
        let mut prev = 0.0;
        for p in &points {
            if !(p.t > prev && p.t <= horizon) {
                return Err(invalid(
                    "skeleton",
                    format!("times must be strictly increasing in (0, {horizon}], got {} after {prev}", p.t),
                ));
            }
            if !(p.y > delta && p.y <= 1.0) {
                return Err(invalid("skeleton", format!("mark {} outside ({delta}, 1]", p.y)));
            }
            prev = p.t;
        }
        Ok(Self {
            horizon,
            delta,
            points,
        })
    }

    /// Skeleton without points.
    pub fn empty(horizon: f64, delta: f64) -> Result<Self> {
        Self::new(horizon, delta, Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn points(&self) -> &[SkeletonPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points with `t_j ≤ t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.points.partition_point(|p| p.t <= t)
    }

    /// `Σ_{t_j ≤ t} log(1 + y_j + ε)`.
    pub fn log_sum(&self, t: f64, eps: f64) -> f64 {
        self.points[..self.count_until(t)]
            .iter()
            .map(|p| (p.y + eps).ln_1p())
            .sum()
    }

    /// Time reversal on `[0, t]`: each point `(s, y)` with `s ≤ t` becomes
    /// `(t - s, y)`. This is the environment seen by the dual run backwards
    /// from time `t`. A point at exactly `t` lands just after `0`.
    pub fn reflect(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(invalid("t", format!("must lie in (0, {}], got {t}", self.horizon)));
        }
        let points = self.points[..self.count_until(t)]
            .iter()
            .rev()
            .map(|p| SkeletonPoint {
                t: (t - p.t).max(f64::MIN_POSITIVE),
                y: p.y,
            })
            .collect();
        Self::new(t, self.delta, points)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "y"],
            self.points.iter().map(|p| [fmt17(p.t), fmt17(p.y)]),
        )
    }

    /// Read a `t,y` CSV written by [`Skeleton::write_csv`].
    pub fn read_csv(path: &Path, horizon: f64, delta: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| invalid("skeleton csv", format!("bad row {rec:?}")))
            };
            points.push(SkeletonPoint {
                t: parse(0)?,
                y: parse(1)?,
            });
        }
        Self::new(horizon, delta, points)
    }
}

/// Sample the skeleton on `[0, horizon]`: exponential inter-arrival times with
/// total rate `Λ = Σ_{y > δ} w/y`, marks chosen with probability `(w/y)/Λ`.
pub fn sample_skeleton(split: &SplitMeasure, horizon: f64, key: &StreamKey) -> Result<Skeleton> {
    let points = sample_marked_poisson(&split.plus, horizon, &mut key.rng())?
        .into_iter()
        .map(|(t, y)| SkeletonPoint { t, y })
        .collect();
    Skeleton::new(horizon, split.delta, points)
}

/// Marked Poisson process on `[0, horizon]` with intensity `dt ⊗ Σ (w/y) δ_y`.
pub(crate) fn sample_marked_poisson<R: Rng + ?Sized>(
    atoms: &[crate::measure::Atom],
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if !(horizon > 0.0) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let rates: Vec<f64> = atoms.iter().map(|a| a.jump_rate()).collect();
    let total: f64 = rates.iter().sum();
    if atoms.is_empty() || total <= 0.0 {
        return Ok(Vec::new());
    }
    let marks = WeightedIndex::new(&rates).map_err(|e| KppError::InvalidMeasure(e.to_string()))?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += e / total;
        if t > horizon {
            break;
        }
        out.push((t, atoms[marks.sample(rng)].y));
    }
    Ok(out)
}
