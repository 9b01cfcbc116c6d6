use serde::Serialize;

use super::stats::{linear_fit, MeanEstimate};
use crate::error::{invalid, KppError, Result};
use crate::measure::ReproductionMeasure;
use crate::spde::SpdeTrajectory;

/// Fewest points a growth or speed fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

/// A fitted rate compared with an analytic target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub estimate: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub target: f64,
    pub target_name: String,
    pub relative_tolerance: f64,
    pub pass: bool,
}

/// One-sided comparison `estimate < bound - sigmas·stderr`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub bound_name: String,
    pub sigmas: f64,
    /// `(bound - estimate) / stderr`.
    pub margin_in_stderr: f64,
    pub pass: bool,
}

impl RateReport {
    pub fn gap_below(&self, bound: f64, bound_name: &str, sigmas: f64) -> GapReport {
        let gap = bound - self.estimate;
        GapReport {
            estimate: self.estimate,
            stderr: self.stderr,
            bound,
            bound_name: bound_name.to_owned(),
            sigmas,
            margin_in_stderr: if self.stderr > 0.0 {
                gap / self.stderr
            } else if gap > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            pass: gap > sigmas * self.stderr,
        }
    }
}

fn window_points(window: (f64, f64)) -> Result<()> {
    if !(window.0 < window.1) {
        return Err(invalid(
            "window",
            format!("need t_lo < t_hi, got [{}, {}]", window.0, window.1),
        ));
    }
    Ok(())
}

fn relative_pass(estimate: f64, target: f64, tol: f64) -> bool {
    (estimate - target).abs() <= tol * target.abs()
}

/// Least-squares slope of `log I_t` against `t` over `window`.
pub fn fit_growth(
    series: &[(f64, f64)],
    window: (f64, f64),
    target: f64,
    target_name: &str,
    relative_tolerance: f64,
) -> Result<RateReport> {
    window_points(window)?;
    let (ts, logs): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|&(t, i)| (t, i.ln()))
        .unzip();
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(KppError::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: ts.len(),
        });
    }
    let fit = linear_fit(&ts, &logs)?;
    Ok(RateReport {
        estimate: fit.slope,
        stderr: fit.slope_stderr,
        window,
        samples: fit.samples,
        target,
        target_name: target_name.to_owned(),
        relative_tolerance,
        pass: relative_pass(fit.slope, target, relative_tolerance),
    })
}

/// Front speed at a single level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedFit {
    pub theta: f64,
    pub speed: f64,
    pub stderr: f64,
}

/// Least-squares slope of the front against `t`; any missing front inside
/// the window is an error.
pub fn fit_front_speed(series: &[(f64, Option<f64>)], window: (f64, f64), theta: f64) -> Result<SpeedFit> {
    window_points(window)?;
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for &(t, x) in series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1) {
        ts.push(t);
        xs.push(x.ok_or(KppError::MissingFront(t))?);
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(KppError::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: ts.len(),
        });
    }
    let fit = linear_fit(&ts, &xs)?;
    Ok(SpeedFit {
        theta,
        speed: fit.slope,
        stderr: fit.slope_stderr,
    })
}

/// Fitted front speed with the wave-speed target and the deterministic
/// speed at equal total mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub speed: f64,
    pub stderr: f64,
    pub theta: f64,
    pub window: (f64, f64),
    /// `𝔰`.
    pub target: f64,
    /// `√(2𝐫)`.
    pub jensen_bound: f64,
    pub relative_tolerance: f64,
    /// Optional strict ceiling on the fitted speed.
    pub upper_bound: Option<f64>,
    pub theta_sensitivity: Vec<SpeedFit>,
    /// Largest `|speed_θ - speed| / stderr_θ` across the extra levels.
    pub theta_spread_in_stderr: f64,
    pub pass: bool,
}

/// Fit every tracked level of `traj` and compare the primary one with the
/// wave speed of `measure`.
pub fn speed_report(
    traj: &SpdeTrajectory,
    window: (f64, f64),
    measure: &ReproductionMeasure,
    relative_tolerance: f64,
    upper_bound: Option<f64>,
) -> Result<SpeedReport> {
    if traj.is_truncated() {
        return Err(invalid(
            "trajectory",
            format!("truncated: {}", traj.truncation.as_deref().unwrap_or("")),
        ));
    }
    let fits = traj
        .thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| fit_front_speed(&traj.front_series(k), window, theta))
        .collect::<Result<Vec<_>>>()?;
    let main = fits[0];
    let target = measure.wave_speed()?;
    let spread = fits[1..]
        .iter()
        .map(|f| {
            let se = f.stderr.hypot(main.stderr);
            if se > 0.0 {
                (f.speed - main.speed).abs() / se
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let below = upper_bound.is_none_or(|b| main.speed < b);
    Ok(SpeedReport {
        speed: main.speed,
        stderr: main.stderr,
        theta: main.theta,
        window,
        target,
        jensen_bound: (2.0 * measure.annealed_rate()).sqrt(),
        relative_tolerance,
        upper_bound,
        theta_sensitivity: fits,
        theta_spread_in_stderr: spread,
        pass: relative_pass(main.speed, target, relative_tolerance) && below,
    })
}

/// Sample mean of `I_t` against `I_0 e^{𝐫t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealedReport {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub target: f64,
    pub z: f64,
    pub pass: bool,
}

pub fn annealed_mean_check(
    counts: &[f64],
    initial: f64,
    t: f64,
    measure: &ReproductionMeasure,
    sigmas: f64,
) -> Result<AnnealedReport> {
    let m = MeanEstimate::of(counts)?;
    let target = initial * (measure.annealed_rate() * t).exp();
    let z = z_score(m.mean - target, m.stderr);
    Ok(AnnealedReport {
        t,
        mean: m.mean,
        stderr: m.stderr,
        replicas: m.samples,
        target,
        z,
        pass: z <= sigmas,
    })
}

/// `|d| / se`, with `0/0 = 0`.
pub(crate) fn z_score(d: f64, se: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d.abs() / se
    } else {
        f64::INFINITY
    }
}
