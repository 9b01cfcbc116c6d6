use serde::Serialize;

use super::fits::z_score;
use super::stats::{compensated_sum, normal_upper_tail, MeanEstimate};
use crate::cbbm::CbbmTrajectory;
use crate::error::{invalid, KppError, Result};
use crate::measure::ReproductionMeasure;
use crate::randomness::Skeleton;

/// Fewest replicas a martingale mean test accepts.
pub const MIN_MARTINGALE_REPLICAS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub runs: usize,
    pub exceedances: usize,
    /// Empirical `P(S_t > λt)`.
    pub frequency: f64,
    pub stderr: f64,
    /// Mean over runs of `min(1, I_t·P(B_t > λt))`.
    pub many_to_one: f64,
    /// `e^{(c_δ + ε)t - λ²t/2}`.
    pub exponential_bound: f64,
    /// Rows before the burn-in time are reported but not judged.
    pub judged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub lambda: f64,
    pub c_delta: f64,
    pub eps: f64,
    /// Rows with `t` below this are not judged.
    pub burn_in: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// Compare the empirical frequency of `{S_t > λt}` with the quenched
/// exponential bound at each of `times`.
///
/// Runs must start from a single particle at the origin and carry a record
/// at every requested time. The test is one-sided: a row fails when the
/// frequency exceeds the bound by more than `sigmas` binomial standard errors
/// computed at the bound. Rows with `t < 5/c_δ` are not judged.
pub fn tail_bound_check(
    runs: &[CbbmTrajectory],
    lambda: f64,
    times: &[f64],
    c_delta: f64,
    eps: f64,
    sigmas: f64,
) -> Result<TailReport> {
    if runs.is_empty() {
        return Err(KppError::TooFewSamples { needed: 1, got: 0 });
    }
    if !(c_delta > 0.0) {
        return Err(invalid("c_delta", "must be positive"));
    }
    let burn_in = 5.0 / c_delta;
    let n = runs.len();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let mut hits = 0;
        let mut m2o = Vec::with_capacity(n);
        for run in runs {
            run.ensure_complete()?;
            let rec = run
                .record_at(t)
                .ok_or_else(|| invalid("runs", format!("no record at t = {t}")))?;
            let s = rec.rightmost.ok_or(KppError::CountsOnly)?;
            if s > lambda * t {
                hits += 1;
            }
            m2o.push((rec.count * normal_upper_tail(lambda * t.sqrt())).min(1.0));
        }
        let frequency = hits as f64 / n as f64;
        let stderr = (frequency * (1.0 - frequency) / n as f64).sqrt();
        let exponential_bound = ((c_delta + eps) * t - 0.5 * lambda * lambda * t).exp();
        let b = exponential_bound.min(1.0);
        let judged = t >= burn_in;
        let pass = !judged || frequency <= b + sigmas * (b * (1.0 - b) / n as f64).sqrt();
        rows.push(TailRow {
            t,
            runs: n,
            exceedances: hits,
            frequency,
            stderr,
            many_to_one: compensated_sum(m2o) / n as f64,
            exponential_bound,
            judged,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(TailReport {
        lambda,
        c_delta,
        eps,
        burn_in,
        rows,
        pass,
    })
}

/// Non-strict monotonicity of `values` in the given direction.
pub fn is_monotone(values: &[f64], increasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if increasing { w[1] >= w[0] } else { w[1] <= w[0] })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleRow {
    pub n: usize,
    pub replicas: usize,
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub replicas: usize,
    /// No replica saw a skeleton event, so only `M_0` exists.
    pub skipped: bool,
    pub rows: Vec<MartingaleRow>,
    pub sigmas: f64,
    pub pass: bool,
}

/// Check that the mean of `M_n` stays at `M_0 = 1` for `n ≤ n_max`.
///
/// Each inner vector is one replica's `M_0, M_1, …`; replicas shorter than
/// `n + 1` do not contribute to row `n`, and rows with fewer than
/// [`MIN_MARTINGALE_REPLICAS`] contributors are omitted.
pub fn martingale_mean_test(series: &[Vec<f64>], n_max: usize, sigmas: f64) -> Result<MartingaleReport> {
    if series.len() < MIN_MARTINGALE_REPLICAS {
        return Err(KppError::TooFewSamples {
            needed: MIN_MARTINGALE_REPLICAS,
            got: series.len(),
        });
    }
    let skipped = series.iter().all(|s| s.len() <= 1);
    let mut rows = Vec::new();
    if !skipped {
        for n in 0..=n_max {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(n).copied()).collect();
            if vals.len() < MIN_MARTINGALE_REPLICAS {
                break;
            }
            let m = MeanEstimate::of(&vals)?;
            let z = z_score(m.mean - 1.0, m.stderr);
            rows.push(MartingaleRow {
                n,
                replicas: vals.len(),
                mean: m.mean,
                stderr: m.stderr,
                z,
                pass: z <= sigmas,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(MartingaleReport {
        replicas: series.len(),
        skipped,
        rows,
        sigmas,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnReport {
    pub horizon: f64,
    pub delta: f64,
    pub eps: f64,
    pub events: usize,
    /// `𝔡_{δ,ε}(T) / T`.
    pub observed: f64,
    /// `𝔡_{δ,ε}`.
    pub target: f64,
    pub relative_error: f64,
    /// `sigmas · sqrt(Σ (w/y) log²(1+y+ε) / T)`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare the skeleton's log-sum rate with its limit.
pub fn lln_check(skeleton: &Skeleton, measure: &ReproductionMeasure, eps: f64, sigmas: f64) -> Result<LlnReport> {
    let delta = skeleton.delta();
    let horizon = skeleton.horizon();
    let split = measure.split(delta)?;
    let target = measure.d_delta_eps(delta, eps)?;
    let expected_events = split.plus_rate() * horizon;
    if skeleton.is_empty() && expected_events > 30.0 {
        return Err(invalid(
            "skeleton",
            format!("empty although {expected_events} events are expected on [0, {horizon}]"),
        ));
    }
    let observed = skeleton.log_sum(horizon, eps) / horizon;
    let second = compensated_sum(
        split
            .plus
            .iter()
            .map(|a| a.jump_rate() * (1.0 + a.y + eps).ln().powi(2)),
    );
    let tolerance = sigmas * (second / horizon).sqrt();
    Ok(LlnReport {
        horizon,
        delta,
        eps,
        events: skeleton.len(),
        observed,
        target,
        relative_error: if target != 0.0 {
            (observed - target).abs() / target
        } else {
            0.0
        },
        tolerance,
        pass: (observed - target).abs() <= tolerance,
    })
}
