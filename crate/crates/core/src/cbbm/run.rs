use std::path::Path;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{
    binomial, schedule_small_event, yule_increment, CountOptions, Mode, ParticleSystem, SmallAtom,
};
use crate::error::{invalid, KppError, Result};
use crate::measure::{ReproductionMeasure, SplitMeasure};
use crate::output::{self, fmt17};
use crate::randomness::{Skeleton, SkeletonPoint, StreamKey};

/// Visible small events of an atom stop depending on `n` once `(1-y)^n` is
/// below `e^{-BULK_MIN_NY}`.
const BULK_MIN_NY: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub mode: Mode,
    /// Largest population allowed in positions mode.
    pub cap: usize,
    /// Times at which `(t, I_t, S_t)` is recorded, in addition to `t = 0` and
    /// the horizon.
    pub checkpoints: Vec<f64>,
    /// Regular record spacing, if any.
    pub record_every: Option<f64>,
    /// Times at which all positions are stored (positions mode).
    pub snapshot_times: Vec<f64>,
    pub counts: CountOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Positions,
            cap: 1_000_000,
            checkpoints: Vec::new(),
            record_every: None,
            snapshot_times: Vec::new(),
            counts: CountOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CbbmRecord {
    pub t: f64,
    pub count: f64,
    /// `None` in counts-only mode.
    pub rightmost: Option<f64>,
}

/// Population just before and just after a skeleton event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeEventRecord {
    pub t: f64,
    pub y: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapExceeded {
    pub cap: usize,
    pub time: f64,
    pub count: f64,
}

#[derive(Debug, Clone)]
pub struct CbbmTrajectory {
    pub initial_count: f64,
    pub records: Vec<CbbmRecord>,
    pub large_events: Vec<LargeEventRecord>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// Set when positions mode outgrew the cap; the run stopped there.
    pub cap_exceeded: Option<CapExceeded>,
    pub final_state: ParticleSystem,
}

impl CbbmTrajectory {
    /// Turn a cap overflow into an error.
    pub fn ensure_complete(&self) -> Result<()> {
        match self.cap_exceeded {
            Some(c) => Err(KppError::CapExceeded {
                cap: c.cap,
                time: c.time,
                count: c.count,
            }),
            None => Ok(()),
        }
    }

    /// The record taken at exactly time `t`, if any.
    pub fn record_at(&self, t: f64) -> Option<&CbbmRecord> {
        self.records.iter().find(|r| r.t == t)
    }

    /// `(t, I_t)` pairs.
    pub fn count_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.count)).collect()
    }

    /// Columns `t, I_t, S_t`; `S_t` blank in counts-only mode.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "I_t", "S_t"],
            self.records.iter().map(|r| {
                [
                    fmt17(r.t),
                    fmt17(r.count),
                    r.rightmost.map(fmt17).unwrap_or_default(),
                ]
            }),
        )
    }

    /// Columns `t, x` for every stored snapshot.
    pub fn write_snapshots_csv(&self, path: &Path) -> Result<()> {
        output::write_csv(
            path,
            &["t", "x"],
            self.snapshots
                .iter()
                .flat_map(|(t, xs)| xs.iter().map(move |x| [fmt17(*t), fmt17(*x)])),
        )
    }
}

/// The two event sources of a run: the shared skeleton (large events at fixed
/// times) and the state-dependent small-event clock.
#[derive(Debug, Clone)]
pub struct EventSchedule<'a> {
    skeleton: &'a [SkeletonPoint],
    next_large: usize,
    minus: &'a ReproductionMeasure,
}

impl<'a> EventSchedule<'a> {
    pub fn new(skeleton: &'a Skeleton, minus: &'a ReproductionMeasure) -> Self {
        Self {
            skeleton: skeleton.points(),
            next_large: 0,
            minus,
        }
    }

    /// Next skeleton point not yet consumed.
    pub fn peek_large(&self) -> Option<SkeletonPoint> {
        self.skeleton.get(self.next_large).copied()
    }

    pub fn pop_large(&mut self) -> Option<SkeletonPoint> {
        let p = self.peek_large();
        if p.is_some() {
            self.next_large += 1;
        }
        p
    }

    /// Fresh small-event clock for a population of size `n`; rates change
    /// with `n`, so this is redrawn after every event (valid by memorylessness).
    pub fn draw_small<R: Rng + ?Sized>(&self, n: f64, rng: &mut R) -> Option<(f64, SmallAtom)> {
        schedule_small_event(n, self.minus, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fixed {
    Large(f64),
    Snapshot,
    Record,
}

impl Fixed {
    fn rank(&self) -> u8 {
        match self {
            Fixed::Large(_) => 0,
            Fixed::Snapshot => 1,
            Fixed::Record => 2,
        }
    }
}

/// Simulate the CBBM conditional on `skeleton` from `x0` up to `horizon`.
///
/// In counts-only mode only `x0.len()` matters. The run draws from a single
/// generator seeded by `key`.
pub fn run(
    x0: &[f64],
    split: &SplitMeasure,
    skeleton: &Skeleton,
    horizon: f64,
    key: &StreamKey,
    opts: &RunOptions,
) -> Result<CbbmTrajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    if skeleton.delta() != split.delta {
        return Err(invalid(
            "skeleton",
            format!("sampled for delta = {}, split uses {}", skeleton.delta(), split.delta),
        ));
    }
    if skeleton.horizon() < horizon {
        return Err(invalid(
            "skeleton",
            format!("covers [0, {}] but horizon is {horizon}", skeleton.horizon()),
        ));
    }
    let mut ps = match opts.mode {
        Mode::Positions => ParticleSystem::from_positions(x0)?,
        Mode::CountsOnly => ParticleSystem::counts_only(x0.len() as f64)?,
    };
    let positions = opts.mode == Mode::Positions;
    let initial_count = ps.count();

    let mut fixed: Vec<(f64, Fixed)> = skeleton
        .points()
        .iter()
        .take_while(|p| p.t <= horizon)
        .map(|p| (p.t, Fixed::Large(p.y)))
        .collect();
    fixed.extend(
        opts.checkpoints
            .iter()
            .filter(|&&t| t > 0.0 && t <= horizon)
            .map(|&t| (t, Fixed::Record)),
    );
    if let Some(every) = opts.record_every {
        if !(every > 0.0) {
            return Err(invalid("record_every", "must be positive"));
        }
        let n = (horizon / every * (1.0 + 1e-12)).floor() as usize;
        fixed.extend((1..=n).map(|k| (k as f64 * every, Fixed::Record)));
    }
    fixed.push((horizon, Fixed::Record));
    if positions {
        fixed.extend(
            opts.snapshot_times
                .iter()
                .filter(|&&t| (0.0..=horizon).contains(&t))
                .map(|&t| (t, Fixed::Snapshot)),
        );
    }
    fixed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.rank().cmp(&b.1.rank())));
    fixed.dedup_by(|a, b| a.0 == b.0 && a.1 == Fixed::Record && b.1 == Fixed::Record);

    let mut rng = key.rng();
    let minus = &split.minus;
    let mut schedule = EventSchedule::new(skeleton, minus);
    let observe = |ps: &ParticleSystem, t: f64| CbbmRecord {
        t,
        count: ps.count(),
        rightmost: if positions { ps.rightmost().ok() } else { None },
    };

    let mut records = vec![observe(&ps, 0.0)];
    let mut large_events = Vec::new();
    let mut snapshots = Vec::new();
    if positions && opts.snapshot_times.contains(&0.0) {
        snapshots.push((0.0, ps.positions()?.to_vec()));
    }
    let over_cap = |ps: &ParticleSystem| positions && ps.count() > opts.cap as f64;
    let mut cap_exceeded = None;

    'stops: for (target, stop) in fixed {
        if stop == Fixed::Snapshot && target == 0.0 {
            continue;
        }
        // small events up to the next fixed time
        loop {
            if !positions && bulk_eligible(ps.count(), minus, &opts.counts) {
                advance_counts_bulk(&mut ps, target, minus, &mut rng, &opts.counts);
                break;
            }
            match schedule.draw_small(ps.count(), &mut rng) {
                Some((wait, atom)) if ps.time() + wait < target => {
                    ps.advance(wait);
                    ps.small_event_lazy(atom, &mut rng, &opts.counts);
                    if over_cap(&ps) {
                        cap_exceeded = Some(CapExceeded {
                            cap: opts.cap,
                            time: ps.time(),
                            count: ps.count(),
                        });
                        break 'stops;
                    }
                }
                _ => {
                    ps.set_time(target);
                    break;
                }
            }
        }
        match stop {
            Fixed::Large(y) => {
                let p = schedule.pop_large().expect("fixed stops mirror the skeleton");
                debug_assert_eq!(p.t, target);
                let before = ps.count();
                ps.large_event_lazy(y, &mut rng, &opts.counts);
                large_events.push(LargeEventRecord {
                    t: target,
                    y,
                    before,
                    after: ps.count(),
                });
                if over_cap(&ps) {
                    cap_exceeded = Some(CapExceeded {
                        cap: opts.cap,
                        time: target,
                        count: ps.count(),
                    });
                    break 'stops;
                }
            }
            Fixed::Record => {
                ps.sync(&mut rng);
                records.push(observe(&ps, target));
            }
            Fixed::Snapshot => {
                ps.sync(&mut rng);
                snapshots.push((target, ps.positions()?.to_vec()));
            }
        }
    }
    ps.sync(&mut rng);

    Ok(CbbmTrajectory {
        initial_count,
        records,
        large_events,
        snapshots,
        cap_exceeded,
        final_state: ps,
    })
}

fn bulk_eligible(n: f64, minus: &ReproductionMeasure, opts: &CountOptions) -> bool {
    n >= opts.bulk_threshold && minus.atoms().iter().all(|a| n * a.y >= BULK_MIN_NY)
}

/// Counts-only advance for large populations: atom events at their saturated
/// rate `w/y`, atom-at-zero branching as negative-binomial Yule increments.
fn advance_counts_bulk<R: Rng + ?Sized>(
    ps: &mut ParticleSystem,
    target: f64,
    minus: &ReproductionMeasure,
    rng: &mut R,
    opts: &CountOptions,
) {
    let r0 = minus.atom_at_zero();
    let rate = minus.jump_rate();
    let mut n = ps.count();
    let mut t = ps.time();
    loop {
        let next = if rate > 0.0 {
            let e: f64 = Exp1.sample(rng);
            t + e / rate
        } else {
            f64::INFINITY
        };
        let stop = next.min(target);
        n += yule_increment(n, r0, stop - t, rng, opts);
        t = stop;
        if next >= target {
            break;
        }
        let mut pick = rng.random::<f64>() * rate;
        let atom = minus
            .atoms()
            .iter()
            .find(|a| {
                let r = a.jump_rate();
                if pick < r {
                    true
                } else {
                    pick -= r;
                    false
                }
            })
            .or(minus.atoms().last())
            .expect("positive rate implies atoms");
        let mut k = 0.0;
        while k == 0.0 {
            k = binomial(n, atom.y, rng, opts);
        }
        n += k;
    }
    ps.pop = super::Population::Counts(n);
    ps.set_time(target);
}

/// `M_n = e^{-t_n m} Π_{j ≤ n} I_{t_j-} / I_{t_{j-1}}` for `n = 0..=len`,
/// where `m = R_δ⁻([0, δ])` and `t_0 = 0`.
pub fn martingale_series(traj: &CbbmTrajectory, minus_mass: f64) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut log_prod = 0.0;
    let mut prev_after = traj.initial_count;
    for e in &traj.large_events {
        log_prod += (e.before / prev_after).ln();
        prev_after = e.after;
        out.push((log_prod - e.t * minus_mass).exp());
    }
    out
}
