use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, GrowthMode};
use crate::analysis::{
    annealed_mean_check, duality_check, fit_growth, is_monotone, lln_check, martingale_mean_test,
    speed_report, tail_bound_check, try_par_replicas, DualityOptions,
    MIN_MARTINGALE_REPLICAS,
};
use crate::cbbm::{self, martingale_series, CbbmTrajectory, ParticleSystem};
use crate::error::Result;
use crate::measure::{box_size, dirichlet_drift_eigenvalue, ReproductionMeasure};
use crate::output::{self, fmt17};
use crate::randomness::{sample_skeleton, StreamKey};
use crate::spde::evolve;

/// Result of one subcommand: a verdict, a one-line summary and the report
/// that goes to `report.json`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub report: Value,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct FormulaRow {
    pub name: &'static str,
    pub symbol: String,
    /// `None` when the quantity does not exist for this measure.
    pub value: Option<f64>,
}

/// Every closed form the measure module provides, for one configuration.
pub fn formula_table(cfg: &ExperimentConfig) -> Result<Vec<FormulaRow>> {
    let r = &cfg.measure;
    let d = cfg.delta;
    let c_low = r.c_delta_lower(d)?;
    let mut rows = vec![
        FormulaRow { name: "wave_speed", symbol: "s".into(), value: r.wave_speed().ok() },
        FormulaRow { name: "quenched_rate", symbol: "s^2/2".into(), value: Some(r.quenched_rate()) },
        FormulaRow { name: "annealed_rate", symbol: "r".into(), value: Some(r.annealed_rate()) },
        FormulaRow { name: "c_delta", symbol: "c_delta".into(), value: Some(r.c_delta(d)?) },
        FormulaRow { name: "c_delta_lower", symbol: "c_delta_lower".into(), value: Some(c_low) },
        FormulaRow {
            name: "d_delta_eps",
            symbol: format!("d_delta,eps (eps={})", cfg.eps),
            value: Some(r.d_delta_eps(d, cfg.eps)?),
        },
    ];
    for &p in &cfg.moments {
        rows.push(FormulaRow {
            name: "moment_r",
            symbol: format!("r^(delta,{p})"),
            value: Some(r.moment_r(d, p)?),
        });
    }
    let lambda = cfg.lambda.unwrap_or_else(|| c_low.sqrt());
    let box_eps = if cfg.eps > 0.0 { cfg.eps } else { 0.01 };
    let rbox = box_size(lambda, c_low, box_eps).ok();
    rows.push(FormulaRow {
        name: "box_size",
        symbol: format!("R(lambda={lambda}, eps={box_eps})"),
        value: rbox,
    });
    rows.push(FormulaRow {
        name: "dirichlet_drift_eigenvalue",
        symbol: format!("mu(lambda={lambda}, R(lambda))"),
        value: rbox.and_then(|b| dirichlet_drift_eigenvalue(lambda, b).ok()),
    });
    Ok(rows)
}

pub fn formulas(cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<Outcome> {
    let rows = formula_table(cfg)?;
    output::write_csv(
        &out.join("formulas.csv"),
        &["name", "symbol", "value"],
        rows.iter().map(|r| {
            [
                r.name.to_owned(),
                r.symbol.clone(),
                r.value.map(fmt17).unwrap_or_default(),
            ]
        }),
    )?;
    if !quiet {
        for r in &rows {
            let v = r.value.map(|v| format!("{v:.10}")).unwrap_or_else(|| "undefined".into());
            println!("{:<28} {:<34} {v}", r.name, r.symbol);
        }
    }
    Ok(Outcome {
        pass: true,
        summary: format!("{} formulas evaluated", rows.len()),
        report: json!({
            "measure": to_value(&cfg.measure)?,
            "delta": cfg.delta,
            "rows": to_value(&rows)?,
        }),
    })
}

pub fn spde(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let profile = cfg.initial_profile();
    let u0 = profile.render(cfg.spde.half_width, cfg.spde.dx)?;
    let split = cfg.measure.split(cfg.delta)?;
    let skeleton = sample_skeleton(&split, cfg.horizon, &key.fork("skeleton", 0))?;
    let traj = evolve(&u0, &cfg.measure, cfg.delta, cfg.horizon, Some(&skeleton), key, &cfg.spde)?;
    traj.write_csv(&out.join("trajectory.csv"))?;
    traj.write_events_csv(&out.join("events.csv"))?;
    skeleton.write_csv(&out.join("skeleton.csv"))?;
    if !cfg.spde.snapshot_times.is_empty() {
        traj.write_snapshots_csv(&out.join("snapshots.csv"))?;
    }
    let speed = speed_report(&traj, cfg.window(), &cfg.measure, cfg.relative_tolerance, cfg.max_speed);
    let (pass, summary, speed_json) = match &speed {
        Ok(s) => (
            s.pass,
            format!("front speed {:.4} ± {:.4}, target {:.4}", s.speed, s.stderr, s.target),
            to_value(s)?,
        ),
        Err(e) => (false, format!("no speed estimate: {e}"), json!({ "error": e.to_string() })),
    };
    Ok(Outcome {
        pass,
        summary,
        report: json!({
            "initial": to_value(&profile)?,
            "horizon": cfg.horizon,
            "skeleton_events": skeleton.len(),
            "events": traj.events.len(),
            "truncation": traj.truncation,
            "final_mass": traj.final_field.mass(),
            "speed": speed_json,
        }),
    })
}

pub fn cbbm_cmd(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let split = cfg.measure.split(cfg.delta)?;
    let skeleton = sample_skeleton(&split, cfg.horizon, &key.fork("skeleton", 0))?;
    let opts = cfg.cbbm.run_options(cfg.cbbm.counts_only, Vec::new());
    let runs: Vec<CbbmTrajectory> = try_par_replicas(cfg.replicas, |i| {
        cbbm::run(&cfg.x0, &split, &skeleton, cfg.horizon, &key.fork("cbbm", i), &opts)
    })?;
    let first = &runs[0];
    first.write_csv(&out.join("trajectory.csv"))?;
    skeleton.write_csv(&out.join("skeleton.csv"))?;
    if !first.snapshots.is_empty() {
        first.write_snapshots_csv(&out.join("snapshots.csv"))?;
    }
    let capped = runs.iter().filter(|r| r.cap_exceeded.is_some()).count();
    let minus_mass = split.minus.total_mass();
    let martingale = if runs.len() >= MIN_MARTINGALE_REPLICAS {
        let series: Vec<Vec<f64>> = runs.iter().map(|r| martingale_series(r, minus_mass)).collect();
        Some(martingale_mean_test(&series, 5, cfg.sigmas)?)
    } else {
        None
    };
    let growth = fit_growth(
        &first.count_series(),
        cfg.window(),
        cfg.measure.quenched_rate(),
        "s^2/2",
        cfg.relative_tolerance,
    )
    .ok();
    let pass = capped == 0 && martingale.as_ref().is_none_or(|m| m.pass);
    let last = first.records.last().expect("a run always records t = 0");
    Ok(Outcome {
        pass,
        summary: format!(
            "{} replica(s), I_T = {} in replica 0, {capped} over the cap",
            runs.len(),
            last.count
        ),
        report: json!({
            "replicas": runs.len(),
            "skeleton_events": skeleton.len(),
            "cap_exceeded": capped,
            "first_replica": {
                "final_count": last.count,
                "final_rightmost": last.rightmost,
                "cap_exceeded": to_value(&first.cap_exceeded)?,
                "growth": to_value(&growth)?,
            },
            "martingale": to_value(&martingale)?,
        }),
    })
}

pub fn growth(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let split = cfg.measure.split(cfg.delta)?;
    match cfg.growth_mode {
        GrowthMode::Annealed => {
            let opts = cfg.cbbm.run_options(true, Vec::new());
            let counts = try_par_replicas(cfg.replicas, |i| {
                let k = key.fork("annealed", i);
                let sk = sample_skeleton(&split, cfg.horizon, &k.fork("skeleton", 0))?;
                let traj = cbbm::run(&cfg.x0, &split, &sk, cfg.horizon, &k.fork("cbbm", 0), &opts)?;
                Ok(traj.final_state.count())
            })?;
            output::write_csv(
                &out.join("growth.csv"),
                &["replica", "I_T"],
                counts.iter().enumerate().map(|(i, c)| [i.to_string(), fmt17(*c)]),
            )?;
            let rep = annealed_mean_check(&counts, cfg.x0.len() as f64, cfg.horizon, &cfg.measure, cfg.sigmas)?;
            Ok(Outcome {
                pass: rep.pass,
                summary: format!("mean I_T = {:.4} ± {:.4}, target {:.4}", rep.mean, rep.stderr, rep.target),
                report: json!({ "mode": "annealed", "annealed": to_value(&rep)? }),
            })
        }
        GrowthMode::Quenched => {
            let opts = cfg.cbbm.run_options(true, Vec::new());
            let window = cfg.window();
            let target = cfg.measure.quenched_rate();
            let annealed = cfg.measure.annealed_rate();
            let per_seed = try_par_replicas(cfg.replicas, |i| {
                let k = key.fork("quenched", i);
                let sk = sample_skeleton(&split, cfg.horizon, &k.fork("skeleton", 0))?;
                let traj = cbbm::run(&cfg.x0, &split, &sk, cfg.horizon, &k.fork("cbbm", 0), &opts)?;
                let rate = fit_growth(&traj.count_series(), window, target, "s^2/2", cfg.relative_tolerance)?;
                let gap = rate.gap_below(annealed, "r", cfg.sigmas);
                let skeleton_rate = sk.log_sum(window.1, 0.0) - sk.log_sum(window.0, 0.0);
                Ok((rate, gap, skeleton_rate / (window.1 - window.0)))
            })?;
            output::write_csv(
                &out.join("growth.csv"),
                &["seed", "slope", "stderr", "skeleton_log_rate", "within_tolerance", "gap_margin_se", "pass"],
                per_seed.iter().enumerate().map(|(i, (r, g, s))| {
                    [
                        i.to_string(),
                        fmt17(r.estimate),
                        fmt17(r.stderr),
                        fmt17(*s),
                        r.pass.to_string(),
                        fmt17(g.margin_in_stderr),
                        (r.pass && g.pass).to_string(),
                    ]
                }),
            )?;
            let passed = per_seed.iter().filter(|(r, g, _)| r.pass && g.pass).count();
            let needed = (cfg.required_fraction * cfg.replicas as f64).ceil() as usize;
            let rows: Vec<Value> = per_seed
                .iter()
                .map(|(r, g, s)| Ok(json!({ "rate": to_value(r)?, "gap": to_value(g)?, "skeleton_log_rate": s })))
                .collect::<Result<_>>()?;
            Ok(Outcome {
                pass: passed >= needed,
                summary: format!("{passed}/{} seeds within tolerance of {target:.4} and below {annealed}", cfg.replicas),
                report: json!({
                    "mode": "quenched",
                    "target": target,
                    "annealed_rate": annealed,
                    "window": [window.0, window.1],
                    "passed": passed,
                    "required": needed,
                    "seeds": rows,
                }),
            })
        }
    }
}

pub fn duality(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let opts = DualityOptions {
        replicas: cfg.replicas,
        spde: cfg.spde.clone(),
        cap: cfg.cbbm.cap,
        sigmas: cfg.sigmas,
    };
    let profile = cfg.initial_profile();
    let rep = duality_check(&cfg.measure, cfg.delta, &cfg.xs, &profile, cfg.horizon, key, &opts)?;
    output::write_csv(
        &out.join("duality.csv"),
        &["side", "mean", "stderr", "replicas"],
        [
            ["spde".to_owned(), fmt17(rep.lhs_mean), fmt17(rep.lhs_stderr), rep.lhs_replicas.to_string()],
            ["cbbm".to_owned(), fmt17(rep.rhs_mean), fmt17(rep.rhs_stderr), rep.rhs_replicas.to_string()],
        ],
    )?;
    Ok(Outcome {
        pass: rep.pass,
        summary: format!(
            "lhs {:.5} vs rhs {:.5}, |diff| = {:.2} SE",
            rep.lhs_mean, rep.rhs_mean, rep.z
        ),
        report: json!({ "initial": to_value(&profile)?, "duality": to_value(&rep)? }),
    })
}

/// Default tail levels: just above the upper and just below the lower
/// critical speed.
pub fn default_lambdas(measure: &ReproductionMeasure, delta: f64) -> Result<Vec<f64>> {
    Ok(vec![
        1.1 * (2.0 * measure.c_delta(delta)?).sqrt(),
        0.9 * (2.0 * measure.c_delta_lower(delta)?).sqrt(),
    ])
}

/// Default tail checkpoints: eight evenly spaced times from `5/c_δ` to `T`.
pub fn default_checkpoints(c_delta: f64, horizon: f64) -> Vec<f64> {
    let start = (5.0 / c_delta).min(horizon);
    (0..8).map(|k| start + (horizon - start) * k as f64 / 7.0).collect()
}

pub fn tailbound(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let split = cfg.measure.split(cfg.delta)?;
    let c = cfg.measure.c_delta(cfg.delta)?;
    let c_low = cfg.measure.c_delta_lower(cfg.delta)?;
    let lambdas = match &cfg.lambdas {
        Some(l) => l.clone(),
        None => default_lambdas(&cfg.measure, cfg.delta)?,
    };
    let times = cfg.checkpoints.clone().unwrap_or_else(|| default_checkpoints(c, cfg.horizon));
    let skeleton = sample_skeleton(&split, cfg.horizon, &key.fork("skeleton", 0))?;
    let opts = cfg.cbbm.run_options(false, times.clone());
    let runs = try_par_replicas(cfg.replicas, |i| {
        let mut traj = cbbm::run(&[0.0], &split, &skeleton, cfg.horizon, &key.fork("cbbm", i), &opts)?;
        traj.final_state = ParticleSystem::counts_only(traj.final_state.count())?;
        Ok(traj)
    })?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let rep = tail_bound_check(&runs, lambda, &times, c, cfg.eps, cfg.sigmas)?;
        let freqs: Vec<f64> = rep.rows.iter().map(|r| r.frequency).collect();
        let tail = &freqs[freqs.len().saturating_sub(3)..];
        let increasing = lambda < (2.0 * c_low).sqrt();
        let monotone = is_monotone(tail, increasing);
        for r in &rep.rows {
            rows.push([
                fmt17(lambda),
                fmt17(r.t),
                fmt17(r.frequency),
                fmt17(r.stderr),
                fmt17(r.many_to_one),
                fmt17(r.exponential_bound),
                r.pass.to_string(),
            ]);
        }
        reports.push(json!({
            "lambda": lambda,
            "expected_trend": if increasing { "increasing" } else { "decreasing" },
            "trend_monotone": monotone,
            "check": to_value(&rep)?,
        }));
    }
    output::write_csv(
        &out.join("tail.csv"),
        &["lambda", "t", "frequency", "stderr", "many_to_one", "exponential_bound", "pass"],
        rows,
    )?;
    skeleton.write_csv(&out.join("skeleton.csv"))?;
    let pass = reports.iter().all(|r| r["check"]["pass"] == Value::Bool(true));
    Ok(Outcome {
        pass,
        summary: format!("{} level(s), {} runs, bound respected: {pass}", lambdas.len(), runs.len()),
        report: json!({
            "c_delta": c,
            "c_delta_lower": c_low,
            "checkpoints": times,
            "levels": reports,
        }),
    })
}

pub fn lln(cfg: &ExperimentConfig, key: &StreamKey, out: &Path) -> Result<Outcome> {
    let split = cfg.measure.split(cfg.delta)?;
    let reports = try_par_replicas(cfg.replicas, |i| {
        let sk = sample_skeleton(&split, cfg.horizon, &key.fork("lln", i))?;
        lln_check(&sk, &cfg.measure, cfg.eps, cfg.sigmas)
    })?;
    let within_5 = reports.iter().filter(|r| r.relative_error <= 0.05).count();
    output::write_csv(
        &out.join("lln.csv"),
        &["seed", "events", "observed", "target", "relative_error", "tolerance", "pass"],
        reports.iter().enumerate().map(|(i, r)| {
            [
                i.to_string(),
                r.events.to_string(),
                fmt17(r.observed),
                fmt17(r.target),
                fmt17(r.relative_error),
                fmt17(r.tolerance),
                r.pass.to_string(),
            ]
        }),
    )?;
    let passed = reports.iter().filter(|r| r.pass).count();
    let needed = (cfg.required_fraction * cfg.replicas as f64).ceil() as usize;
    Ok(Outcome {
        pass: passed >= needed,
        summary: format!(
            "{passed}/{} seeds within the CLT tolerance, {within_5} within 5%",
            reports.len()
        ),
        report: json!({
            "target": reports[0].target,
            "passed": passed,
            "required": needed,
            "within_5_percent": within_5,
            "seeds": to_value(&reports)?,
        }),
    })
}
