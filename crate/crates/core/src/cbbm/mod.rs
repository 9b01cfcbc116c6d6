//! Coordinated branching Brownian motion conditional on a skeleton.
//!
//! Particles diffuse as independent Brownian motions. At each skeleton point
//! `(t_j, y_j)` every particle independently duplicates in place with
//! probability `y_j`. Between skeleton points, for every nonempty subset `I`
//! of the `n` particles, `I` duplicates at rate `∫ y^{|I|}(1-y)^{n-|I|} (1/y) R_δ⁻(dy)`.
//!
//! The sampler fires one aggregated event per atom at the visible rate
//! `(w/y)(1 - (1-y)^n)` and draws the participants as i.i.d. Bernoulli(`y`)
//! conditioned to be nonempty; the atom at zero becomes binary branching of a
//! single uniformly chosen particle at rate `r0·n`.

mod run;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, KppError, Result};
use crate::measure::ReproductionMeasure;

pub use run::{
    martingale_series, run, CapExceeded, CbbmRecord, CbbmTrajectory, EventSchedule,
    LargeEventRecord, RunOptions,
};

/// Whether particle positions are tracked or only their number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Positions,
    CountsOnly,
}

/// Sampling switches for the counts-only representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountOptions {
    /// Above this count binomial and negative-binomial draws are replaced by
    /// their Gaussian approximations.
    pub gaussian_threshold: f64,
    /// Counts at or above this size advance the atom-at-zero branching in bulk
    /// (negative-binomial increments) instead of event by event.
    pub bulk_threshold: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            gaussian_threshold: 1e9,
            bulk_threshold: 1e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Population {
    /// `x[i]` is the position of particle `i` at time `stamp[i]`; diffusion up
    /// to the system time is applied on demand.
    Positions { x: Vec<f64>, stamp: Vec<f64> },
    /// Exact integer while below 2⁵³.
    Counts(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    time: f64,
    pop: Population,
}

/// Which component of `R_δ⁻` fired a small event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmallAtom {
    /// The atom at zero: one particle branches.
    Zero,
    /// An atom at `y ∈ (0, δ]`.
    Atom { y: f64, w: f64 },
}

impl ParticleSystem {
    /// Particles at the given positions, time 0.
    pub fn from_positions(x0: &[f64]) -> Result<Self> {
        if x0.is_empty() {
            return Err(invalid("x0", "need at least one particle"));
        }
        Ok(Self {
            time: 0.0,
            pop: Population::Positions {
                x: x0.to_vec(),
                stamp: vec![0.0; x0.len()],
            },
        })
    }

    /// Counts-only system with `n ≥ 1` particles.
    pub fn counts_only(n: f64) -> Result<Self> {
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(invalid("count", format!("need an integer >= 1, got {n}")));
        }
        Ok(Self {
            time: 0.0,
            pop: Population::Counts(n),
        })
    }

    pub fn mode(&self) -> Mode {
        match self.pop {
            Population::Positions { .. } => Mode::Positions,
            Population::Counts(_) => Mode::CountsOnly,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of particles `I_t`.
    pub fn count(&self) -> f64 {
        match &self.pop {
            Population::Positions { x, .. } => x.len() as f64,
            Population::Counts(n) => *n,
        }
    }

    /// Current positions. Public mutators keep every particle up to date, so
    /// this is always consistent with [`Self::time`].
    pub fn positions(&self) -> Result<&[f64]> {
        match &self.pop {
            Population::Positions { x, .. } => Ok(x),
            Population::Counts(_) => Err(KppError::CountsOnly),
        }
    }

    /// `S_t = max C_t`.
    pub fn rightmost(&self) -> Result<f64> {
        Ok(self
            .positions()?
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Move time forward by `h`, giving each particle an independent
    /// `N(0, h)` increment.
    pub fn diffuse<R: Rng + ?Sized>(&mut self, h: f64, rng: &mut R) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("must be positive, got {h}")));
        }
        self.advance(h);
        self.sync(rng);
        Ok(())
    }

    /// Every particle duplicates in place with probability `y`.
    pub fn large_event<R: Rng + ?Sized>(
        &mut self,
        y: f64,
        rng: &mut R,
        opts: &CountOptions,
    ) -> Result<()> {
        check_impact(y)?;
        self.large_event_lazy(y, rng, opts);
        self.sync(rng);
        Ok(())
    }

    /// Apply a small event: the participants are Bernoulli(`y`) conditioned to
    /// be nonempty, or a single uniform particle for [`SmallAtom::Zero`].
    pub fn small_event_apply<R: Rng + ?Sized>(
        &mut self,
        atom: SmallAtom,
        rng: &mut R,
        opts: &CountOptions,
    ) -> Result<()> {
        if let SmallAtom::Atom { y, .. } = atom {
            check_impact(y)?;
        }
        self.small_event_lazy(atom, rng, opts);
        self.sync(rng);
        Ok(())
    }

    pub(crate) fn advance(&mut self, h: f64) {
        self.time += h;
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Bring every particle up to the system time.
    pub(crate) fn sync<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Population::Positions { x, stamp } = &mut self.pop {
            for (xi, si) in x.iter_mut().zip(stamp.iter_mut()) {
                catch_up(xi, si, self.time, rng);
            }
        }
    }

    pub(crate) fn large_event_lazy<R: Rng + ?Sized>(&mut self, y: f64, rng: &mut R, opts: &CountOptions) {
        let now = self.time;
        match &mut self.pop {
            Population::Positions { x, stamp } => {
                let n = x.len();
                let mut i = geometric_skip(y, rng);
                while i < n {
                    duplicate(x, stamp, i, now, rng);
                    i += 1 + geometric_skip(y, rng);
                }
            }
            Population::Counts(n) => *n += binomial(*n, y, rng, opts),
        }
    }

    pub(crate) fn small_event_lazy<R: Rng + ?Sized>(
        &mut self,
        atom: SmallAtom,
        rng: &mut R,
        opts: &CountOptions,
    ) {
        let now = self.time;
        match (&mut self.pop, atom) {
            (Population::Positions { x, stamp }, SmallAtom::Zero) => {
                let i = rng.random_range(0..x.len());
                duplicate(x, stamp, i, now, rng);
            }
            (Population::Positions { x, stamp }, SmallAtom::Atom { y, .. }) => {
                let n = x.len();
                let mut i = truncated_geometric(n as f64, y, rng) as usize;
                while i < n {
                    duplicate(x, stamp, i, now, rng);
                    i += 1 + geometric_skip(y, rng);
                }
            }
            (Population::Counts(n), SmallAtom::Zero) => *n += 1.0,
            (Population::Counts(n), SmallAtom::Atom { y, .. }) => {
                *n += conditional_participants(*n, y, rng, opts);
            }
        }
    }
}

fn check_impact(y: f64) -> Result<()> {
    if y > 0.0 && y <= 1.0 {
        Ok(())
    } else {
        Err(invalid("y", format!("impact must lie in (0, 1], got {y}")))
    }
}

fn catch_up<R: Rng + ?Sized>(x: &mut f64, stamp: &mut f64, now: f64, rng: &mut R) {
    let h = now - *stamp;
    if h > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        *x += h.sqrt() * z;
        *stamp = now;
    }
}

fn duplicate<R: Rng + ?Sized>(x: &mut Vec<f64>, stamp: &mut Vec<f64>, i: usize, now: f64, rng: &mut R) {
    catch_up(&mut x[i], &mut stamp[i], now, rng);
    x.push(x[i]);
    stamp.push(now);
}

/// Failures before the first success of Bernoulli(`y`) trials.
fn geometric_skip<R: Rng + ?Sized>(y: f64, rng: &mut R) -> usize {
    if y >= 1.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let g = (u.ln() / (-y).ln_1p()).floor();
    if g >= usize::MAX as f64 {
        usize::MAX / 2
    } else {
        g as usize
    }
}

/// Index of the first success among `n` Bernoulli(`y`) trials, conditioned on
/// at least one success.
fn truncated_geometric<R: Rng + ?Sized>(n: f64, y: f64, rng: &mut R) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let log_q = (-y).ln_1p();
    let p_any = -(n * log_q).exp_m1();
    let u: f64 = rng.random();
    let j = ((-u * p_any).ln_1p() / log_q).floor();
    j.clamp(0.0, n - 1.0)
}

/// Probability that at least one of `n` particles takes part, `1 - (1-y)^n`.
pub fn visible_fraction(n: f64, y: f64) -> f64 {
    if y >= 1.0 {
        1.0
    } else {
        -(n * (-y).ln_1p()).exp_m1()
    }
}

/// `Binomial(n, p)` with `n` carried as a float; Gaussian above the threshold.
pub(crate) fn binomial<R: Rng + ?Sized>(n: f64, p: f64, rng: &mut R, opts: &CountOptions) -> f64 {
    if n <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n;
    }
    if n > opts.gaussian_threshold {
        let z: f64 = StandardNormal.sample(rng);
        return (n * p + (n * p * (1.0 - p)).sqrt() * z).round().clamp(0.0, n);
    }
    Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as f64
}

/// Number of participants in a visible small event: `Binomial(n, y)`
/// conditioned to be at least one.
pub fn conditional_participants<R: Rng + ?Sized>(n: f64, y: f64, rng: &mut R, opts: &CountOptions) -> f64 {
    if n > opts.gaussian_threshold {
        return binomial(n, y, rng, opts).max(1.0);
    }
    let first = truncated_geometric(n, y, rng);
    1.0 + binomial(n - 1.0 - first, y, rng, opts)
}

/// Increment of a Yule process with per-particle rate `r` started from `n`
/// over time `h`: negative binomial with `n` successes and `p = e^{-rh}`.
pub(crate) fn yule_increment<R: Rng + ?Sized>(n: f64, r: f64, h: f64, rng: &mut R, opts: &CountOptions) -> f64 {
    if r <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let growth = (r * h).exp_m1();
    if n > opts.gaussian_threshold {
        let mean = n * growth;
        let sd = (n * (1.0 + growth) * growth).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        return (mean + sd * z).round().max(0.0);
    }
    // Poisson–Gamma mixture
    let lambda = Gamma::new(n, growth).expect("valid gamma").sample(rng);
    if lambda > 1e15 {
        let z: f64 = StandardNormal.sample(rng);
        return (lambda + lambda.sqrt() * z).round().max(0.0);
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng)
}

/// Waiting time to the next visible small event with `n` particles and the
/// component that fires, or `None` when `R_δ⁻` is the zero measure.
pub fn schedule_small_event<R: Rng + ?Sized>(
    n: f64,
    minus: &ReproductionMeasure,
    rng: &mut R,
) -> Option<(f64, SmallAtom)> {
    let zero_rate = minus.atom_at_zero() * n;
    let atom_rate = |y: f64, w: f64| (w / y) * visible_fraction(n, y);
    let total = zero_rate
        + minus
            .atoms()
            .iter()
            .map(|a| atom_rate(a.y, a.w))
            .sum::<f64>();
    if !(total > 0.0) {
        return None;
    }
    let e: f64 = Exp1.sample(rng);
    let wait = e / total;
    let mut pick = rng.random::<f64>() * total;
    if pick < zero_rate {
        return Some((wait, SmallAtom::Zero));
    }
    pick -= zero_rate;
    let atoms = minus.atoms();
    for a in atoms {
        let r = atom_rate(a.y, a.w);
        if pick < r {
            return Some((wait, SmallAtom::Atom { y: a.y, w: a.w }));
        }
        pick -= r;
    }
    let last = atoms.last().expect("positive atom rate implies atoms");
    Some((wait, SmallAtom::Atom { y: last.y, w: last.w }))
}
