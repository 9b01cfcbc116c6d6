//! Acceptance suite. Prints one verdict line per criterion, followed by
//! indented evidence, and exits non-zero if any criterion fails.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use kpp_lab::analysis::{
    annealed_mean_check, duality_check, fit_growth, is_monotone, martingale_mean_test, par_replicas,
    speed_report, tail_bound_check, try_par_replicas, DualityOptions, MeanEstimate,
};
use kpp_lab::cbbm::{self, martingale_series, schedule_small_event, CountOptions, Mode, ParticleSystem, RunOptions};
use kpp_lab::measure::{bernoulli_rate, box_size, dirichlet_drift_eigenvalue};
use kpp_lab::spde::{evolve, heat_step, Field, InitialProfile, SpdeConfig};
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};
use rand::Rng;

use common::{bisect, fd_principal_eigenvalue, heat_kernel_convolution, rel_err};

const SEED: u64 = 20_240_601;

type Criterion = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    evidence: Vec<String>,
}

/// Collects named checks; the verdict passes when all of them do.
#[derive(Default)]
struct Checks {
    total: usize,
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.total += 1;
        if !ok {
            self.failed.push(label.into());
        }
    }

    fn close(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let err = rel_err(got, want);
        self.check(format!("{label}: got {got:.15e}, want {want:.15e}, rel err {err:.2e}"), err <= tol);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn verdict(self) -> Verdict {
        let pass = self.failed.is_empty();
        let mut evidence = vec![format!("{} of {} checks passed", self.total - self.failed.len(), self.total)];
        evidence.extend(self.failed.into_iter().map(|f| format!("failed: {f}")));
        evidence.extend(self.notes);
        Verdict { pass, evidence }
    }
}

fn measure(r0: f64, atoms: &[(f64, f64)]) -> ReproductionMeasure {
    ReproductionMeasure::new(r0, atoms.iter().copied()).expect("valid measure")
}

fn need(passed: usize, needed: usize, of: usize) -> String {
    format!("{passed}/{of} seeds passed, {needed} required")
}

fn criterion_1() -> Verdict {
    let clock = Instant::now();
    let mut c = Checks::default();
    let tol = 1e-12;
    // Rounded decimals quoted alongside the closed forms are reported, not judged.
    let printed = |c: &mut Checks, label: &str, got: f64, decimal: f64, digits: i32| {
        let half_ulp = 0.5 * 10f64.powi(-digits) + 1e-15;
        if (got - decimal).abs() > half_ulp {
            c.note(format!(
                "{label}: closed form gives {got:.10}, quoted decimal {decimal} is off by {:.1e}",
                (got - decimal).abs()
            ));
        }
    };

    let classical = measure(2.0, &[]);
    c.close("wave_speed {r0:2}", classical.wave_speed().unwrap(), 2.0, tol);
    let unit = measure(0.0, &[(1.0, 1.0)]);
    let s_unit = (2.0 * LN_2).sqrt();
    c.close("wave_speed {(1,1)}", unit.wave_speed().unwrap(), s_unit, tol);
    printed(&mut c, "wave_speed {(1,1)}", unit.wave_speed().unwrap(), 1.1774100, 7);
    let mixed = measure(0.5, &[(0.5, 0.5)]);
    let half_sq = 0.5 + 0.5 * 1.5f64.ln() / 0.5;
    let s_mixed = mixed.wave_speed().unwrap();
    c.close("s^2/2 {r0:.5,(.5,.5)}", s_mixed * s_mixed / 2.0, half_sq, tol);
    c.close("wave_speed {r0:.5,(.5,.5)}", s_mixed, (2.0 * half_sq).sqrt(), tol);
    printed(&mut c, "s^2/2 {r0:.5,(.5,.5)}", mixed.quenched_rate(), 0.9054651, 7);
    printed(&mut c, "wave_speed {r0:.5,(.5,.5)}", s_mixed, 1.3457081, 7);
    c.check("wave_speed of the zero measure is an error", ReproductionMeasure::zero().wave_speed().is_err());

    let half = measure(0.0, &[(0.5, 1.0)]);
    let ln15 = 1.5f64.ln() / 0.5;
    c.close("c_delta {(.5,1)} d=.25", half.c_delta(0.25).unwrap(), ln15, tol);
    printed(&mut c, "c_delta {(.5,1)} d=.25", half.c_delta(0.25).unwrap(), 0.8109302, 7);
    c.close("c_delta {r0:.7} d=.3", measure(0.7, &[]).c_delta(0.3).unwrap(), 0.7, tol);
    c.close("c_delta {(.5,1)} d=.75", half.c_delta(0.75).unwrap(), 1.0, tol);

    c.close("c_delta_lower {(.5,1)} d=.25", half.c_delta_lower(0.25).unwrap(), ln15, tol);
    c.close("c_delta_lower {r0:1} d=.5", measure(1.0, &[]).c_delta_lower(0.5).unwrap(), 1.0, tol);
    let two = measure(0.5, &[(0.3, 0.4), (0.7, 0.6)]);
    let lower = 0.5 + 0.6 * 1.7f64.ln() / 0.7;
    c.close("c_delta_lower {r0:.5,(.3,.4),(.7,.6)} d=.5", two.c_delta_lower(0.5).unwrap(), lower, tol);
    printed(&mut c, "c_delta_lower {r0:.5,(.3,.4),(.7,.6)}", two.c_delta_lower(0.5).unwrap(), 0.9548737, 7);

    c.close("d_delta_eps {(.5,1)} d=.25 e=0", half.d_delta_eps(0.25, 0.0).unwrap(), ln15, tol);
    c.close("d_delta_eps d=1", two.d_delta_eps(1.0, 0.0).unwrap(), 0.0, tol);
    let d_eps = 1.6f64.ln() / 0.5;
    c.close("d_delta_eps {(.5,1)} d=.25 e=.1", half.d_delta_eps(0.25, 0.1).unwrap(), d_eps, tol);
    printed(&mut c, "d_delta_eps e=.1", half.d_delta_eps(0.25, 0.1).unwrap(), 0.9400073, 7);

    c.close("annealed {r0:1}", measure(1.0, &[]).annealed_rate(), 1.0, tol);
    c.close("annealed {(.5,1)}", half.annealed_rate(), 1.0, tol);
    let three = measure(0.2, &[(0.3, 0.2), (0.7, 0.5)]);
    c.close("annealed {r0:.2,(.3,.2),(.7,.5)}", three.annealed_rate(), 0.2 + 0.2 + 0.5, tol);

    c.close("moment_r {(.5,1)} d=0 p=1", half.moment_r(0.0, 1.0).unwrap(), 0.5, tol);
    c.close("moment_r {(.5,1)} d=0 p=0", half.moment_r(0.0, 0.0).unwrap(), 1.0, tol);
    let m = measure(0.3, &[(0.5, 0.7)]);
    c.close("moment_r {r0:.3,(.5,.7)} d=0 p=1", m.moment_r(0.0, 1.0).unwrap(), 0.3 + 0.7 * 0.5, tol);

    c.close("bernoulli_rate eps=p", bernoulli_rate(0.3, 0.3).unwrap(), 0.0, tol);
    let kl = 0.1 * (0.1f64 / 0.5).ln() + 0.9 * (0.9f64 / 0.5).ln();
    c.close("bernoulli_rate .1 .5", bernoulli_rate(0.1, 0.5).unwrap(), kl, tol);
    printed(&mut c, "bernoulli_rate .1 .5", bernoulli_rate(0.1, 0.5).unwrap(), 0.3680644, 7);

    let mu0 = dirichlet_drift_eigenvalue(0.0, 1.0).unwrap();
    c.close("eigenvalue l=0 R=1", mu0, -PI * PI / 8.0, tol);
    printed(&mut c, "eigenvalue l=0 R=1", mu0, -1.2337006, 7);
    let mu1 = dirichlet_drift_eigenvalue(1.0, 2.0).unwrap();
    c.close("eigenvalue l=1 R=2", mu1, -0.5 - PI * PI / 32.0, tol);
    printed(&mut c, "eigenvalue l=1 R=2", mu1, -0.8084252, 7);
    let far = dirichlet_drift_eigenvalue(1.0, 1e6).unwrap();
    c.check(format!("eigenvalue l=1 R=1e6 = {far} not within 1e-6 of -0.5"), (far + 0.5).abs() <= 1e-6);
    for (lambda, r) in [(0.0, 1.0), (1.0, 2.0), (0.7, 3.0)] {
        let fd = fd_principal_eigenvalue(lambda, r, 4000);
        let exact = dirichlet_drift_eigenvalue(lambda, r).unwrap();
        c.close(&format!("finite-difference eigenvalue l={lambda} R={r}"), exact, fd, 1e-5);
    }

    let c_low = 0.81093;
    let rbox = box_size(1.0, c_low, 0.01).unwrap();
    let oracle = bisect(|r| dirichlet_drift_eigenvalue(1.0, r).unwrap() + c_low - 0.01, 0.5, 100.0);
    c.close("box_size l=1 c=.81093 e=.01 vs bisection", rbox, oracle, 1e-12);
    c.note(format!("box_size(1, 0.81093, 0.01) = {rbox:.7} (closed-form inversion)"));
    c.close("box_size l=0 c=1 e=.5", box_size(0.0, 1.0, 0.5).unwrap(), PI / 2.0, tol);
    c.check("infeasible box is an error", box_size(2.0, 1.0, 0.01).is_err());

    let mut rng = StreamKey::new(SEED).fork("ordering", 0).rng();
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let mut atoms: Vec<(f64, f64)> = (0..n)
            .map(|_| (1.0 - rng.random::<f64>(), rng.random_range(0.01..2.0)))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms.dedup_by(|a, b| a.0 == b.0);
        let r0 = if rng.random::<bool>() { rng.random_range(0.0..1.0) } else { 0.0 };
        let delta = 1.0 - rng.random::<f64>();
        let m = measure(r0, &atoms);
        let lo = m.c_delta_lower(delta).unwrap();
        let q = m.quenched_rate();
        let hi = m.c_delta(delta).unwrap();
        let r = m.annealed_rate();
        let slack = 1e-12 * r;
        if !(lo <= q + slack && q <= hi + slack && hi <= r + slack && q < r) {
            violations += 1;
        }
    }
    c.check(format!("ordering chain violated on {violations} of 1000 measures"), violations == 0);

    let elapsed = clock.elapsed().as_secs_f64();
    c.check(format!("runtime {elapsed:.3} s exceeds 1 s"), elapsed < 1.0);
    c.verdict()
}

fn criterion_2() -> Verdict {
    let (l, dx, var, h) = (20.0, 0.01, 0.5, 0.5);
    let f = Field::from_fn(l, dx, |x| (-x * x / (2.0 * var)).exp()).unwrap();
    let g = heat_step(&f, h, dx * dx).unwrap();
    let exact = |x: f64| (var / (var + h)).sqrt() * (-x * x / (2.0 * (var + h))).exp();
    let sup = (0..g.len()).map(|i| (g.values()[i] - exact(g.x(i))).abs()).fold(0.0, f64::max);
    let mut c = Checks::default();
    c.check(format!("sup error {sup:.3e} exceeds 1e-4"), sup <= 1e-4);
    let quad = [-1.0, 0.0, 0.7]
        .map(|x| (heat_kernel_convolution(|z| (-z * z / (2.0 * var)).exp(), x, h) - exact(x)).abs())
        .into_iter()
        .fold(0.0, f64::max);
    c.check(format!("closed form disagrees with quadrature by {quad:.3e}"), quad <= 1e-10);
    c.note(format!("sup |u_h - G_(var+h)| = {sup:.3e} on {} nodes", g.len()));
    c.verdict()
}

fn criterion_3() -> Verdict {
    let clock = Instant::now();
    let r = measure(0.0, &[(0.5, 1.0)]);
    let (delta, t) = (0.25, 2.0);
    let split = r.split(delta).unwrap();
    let key = StreamKey::new(SEED).fork("criterion-3", 0);
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        ..RunOptions::default()
    };
    let counts = try_par_replicas(10_000, |i| {
        let k = key.fork("annealed", i);
        let sk = sample_skeleton(&split, t, &k.fork("skeleton", 0))?;
        Ok(cbbm::run(&[0.0], &split, &sk, t, &k.fork("cbbm", 0), &opts)?.final_state.count())
    })
    .unwrap();
    let rep = annealed_mean_check(&counts, 1.0, t, &r, 3.0).unwrap();
    let target = 2f64.exp();
    let z = (rep.mean - target).abs() / rep.stderr;
    let mut c = Checks::default();
    c.close("library target vs e^2", rep.target, target, 1e-12);
    c.check(format!("mean {:.4} is {z:.2} SE from e^2", rep.mean), z <= 3.0);
    let elapsed = clock.elapsed().as_secs_f64();
    c.check(format!("runtime {elapsed:.1} s exceeds 60 s"), elapsed < 60.0);
    c.note(format!(
        "mean I_2 = {:.4} ± {:.4} over {} replicas, e^2 = {target:.4}, z = {z:.2}",
        rep.mean, rep.stderr, rep.replicas
    ));
    c.verdict()
}

fn criterion_4() -> Verdict {
    let r = measure(0.0, &[(0.5, 1.0)]);
    let (delta, horizon, window) = (0.25, 30.0, (10.0, 30.0));
    let target = 2.0 * 1.5f64.ln();
    let split = r.split(delta).unwrap();
    let key = StreamKey::new(SEED).fork("criterion-4", 0);
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        record_every: Some(0.5),
        ..RunOptions::default()
    };
    let rows = try_par_replicas(20, |i| {
        let k = key.fork("seed", i);
        let sk = sample_skeleton(&split, horizon, &k.fork("skeleton", 0))?;
        let traj = cbbm::run(&[0.0], &split, &sk, horizon, &k.fork("cbbm", 0), &opts)?;
        let rate = fit_growth(&traj.count_series(), window, target, "2 ln 1.5", 0.1)?;
        let gap = rate.gap_below(1.0, "r", 3.0);
        let sk_rate = (sk.log_sum(window.1, 0.0) - sk.log_sum(window.0, 0.0)) / (window.1 - window.0);
        Ok((rate, gap, sk_rate))
    })
    .unwrap();
    let passed = rows.iter().filter(|(r, g, _)| r.pass && g.pass).count();
    let slopes: Vec<f64> = rows.iter().map(|(r, _, _)| r.estimate).collect();
    let spread = MeanEstimate::of(&slopes).unwrap();
    let mut evidence = vec![need(passed, 18, 20)];
    evidence.push(format!(
        "mean slope {:.4} ± {:.4} (target {target:.4}), seed-to-seed sd {:.4}",
        spread.mean,
        spread.stderr,
        spread.stderr * (slopes.len() as f64).sqrt()
    ));
    for (i, (rate, gap, sk)) in rows.iter().enumerate() {
        evidence.push(format!(
            "seed {i:>2}: slope {:.4} ± {:.4}, skeleton log-rate {sk:.4}, within 10%: {}, gap {:.1} SE",
            rate.estimate, rate.stderr, rate.pass, gap.margin_in_stderr
        ));
    }
    Verdict {
        pass: passed >= 18,
        evidence,
    }
}

fn criterion_5() -> Verdict {
    let mut c = Checks::default();
    let spde = SpdeConfig {
        half_width: 16.0,
        dx: 0.05,
        dt_max: 0.0025,
        ..SpdeConfig::default()
    };
    let opts = DualityOptions {
        replicas: 10_000,
        spde: spde.clone(),
        ..DualityOptions::default()
    };
    let key = StreamKey::new(SEED).fork("criterion-5", 0);
    let u0 = InitialProfile::Ramp { a: -0.5, b: 0.5 };
    let xs = [-0.25, 0.75];

    let r = measure(0.3, &[(0.5, 0.3)]);
    let split = r.split(0.25).unwrap();
    // first key whose shared skeleton has at least one large event
    let noisy_key = (0..)
        .map(|k| key.fork("noisy", k))
        .find(|k| !sample_skeleton(&split, 1.0, &k.fork("skeleton", 0)).unwrap().is_empty())
        .unwrap();
    match duality_check(&r, 0.25, &xs, &u0, 1.0, &noisy_key, &opts) {
        Ok(rep) => {
            c.check(format!("duality: |LHS - RHS| = {:.2} combined SE", rep.z), rep.pass);
            c.note(format!(
                "noisy: {} skeleton events, LHS {:.6} ± {:.2e} ({} solve), RHS {:.6} ± {:.2e} ({} runs), z = {:.2}",
                rep.skeleton_events,
                rep.lhs_mean,
                rep.lhs_stderr,
                rep.lhs_replicas,
                rep.rhs_mean,
                rep.rhs_stderr,
                rep.rhs_replicas,
                rep.z
            ));
        }
        Err(e) => c.check(format!("duality run failed: {e}"), false),
    }

    match duality_check(&ReproductionMeasure::zero(), 0.25, &xs, &u0, 1.0, &key.fork("noiseless", 0), &opts) {
        Ok(rep) => {
            let oracle: f64 = xs
                .iter()
                .map(|&x| 1.0 - heat_kernel_convolution(|z| u0.eval(z), x, 1.0))
                .product();
            let z_rhs = (rep.rhs_mean - oracle).abs() / rep.rhs_stderr;
            let z_lhs = (rep.lhs_mean - oracle).abs() / rep.combined_stderr;
            c.check(format!("noiseless: sides {:.2} combined SE apart", rep.z), rep.pass);
            c.check(format!("noiseless RHS {z_rhs:.2} SE from heat-kernel oracle"), z_rhs <= 3.0);
            c.check(format!("noiseless LHS {z_lhs:.2} SE from heat-kernel oracle"), z_lhs <= 3.0);
            c.note(format!(
                "noiseless: oracle {oracle:.6}, LHS {:.6}, RHS {:.6} ± {:.2e}",
                rep.lhs_mean, rep.rhs_mean, rep.rhs_stderr
            ));
        }
        Err(e) => c.check(format!("noiseless run failed: {e}"), false),
    }
    c.verdict()
}

fn criterion_6() -> Verdict {
    let cfg = SpdeConfig::default();
    let (horizon, window) = (50.0, (50.0 / 3.0, 50.0));
    let u0 = InitialProfile::Ramp { a: -40.0, b: -39.0 }
        .render(cfg.half_width, cfg.dx)
        .unwrap();
    let key = StreamKey::new(SEED).fork("criterion-6", 0);
    let mut evidence = Vec::new();

    let det = measure(0.5, &[]);
    let a = evolve(&u0, &det, 0.5, horizon, None, &key.fork("a", 0), &cfg)
        .and_then(|traj| speed_report(&traj, window, &det, 0.1, None));
    let pass_a = match &a {
        Ok(rep) => {
            evidence.push(format!(
                "(a) r0 = 0.5: speed {:.4} ± {:.1e}, target {:.4}, pass {}",
                rep.speed, rep.stderr, rep.target, rep.pass
            ));
            rep.pass && rel_err(rep.target, 1.0) < 1e-12
        }
        Err(e) => {
            evidence.push(format!("(a) failed: {e}"));
            false
        }
    };

    let jumpy = measure(0.0, &[(1.0, 1.0)]);
    let target = (2.0 * LN_2).sqrt();
    let runs = par_replicas(20, |i| {
        evolve(&u0, &jumpy, 0.5, horizon, None, &key.fork("b", i), &cfg)
            .and_then(|traj| speed_report(&traj, window, &jumpy, 0.15, Some(1.35)))
    });
    let mut passed = 0;
    for (i, r) in runs.iter().enumerate() {
        match r {
            Ok(rep) => {
                let ok = rep.pass && rel_err(rep.target, target) < 1e-12;
                passed += ok as usize;
                let thetas: Vec<String> = rep
                    .theta_sensitivity
                    .iter()
                    .map(|f| format!("θ={}: {:.4}", f.theta, f.speed))
                    .collect();
                evidence.push(format!(
                    "(b) seed {i:>2}: speed {:.4} ± {:.4} [{}], pass {ok}",
                    rep.speed,
                    rep.stderr,
                    thetas.join(", ")
                ));
            }
            Err(e) => evidence.push(format!("(b) seed {i:>2}: failed: {e}")),
        }
    }
    evidence.insert(0, format!("(a) pass {pass_a}; (b) {}", need(passed, 18, 20)));
    Verdict {
        pass: pass_a && passed >= 18,
        evidence,
    }
}

fn criterion_7() -> Verdict {
    let r = measure(0.0, &[(0.5, 1.0)]);
    let (delta, horizon) = (0.25, 200.0);
    let split = r.split(delta).unwrap();
    let target = 1.5f64.ln() / 0.5;
    let key = StreamKey::new(SEED).fork("criterion-7", 0);
    let ratios = par_replicas(100, |i| {
        let sk = sample_skeleton(&split, horizon, &key.fork("seed", i)).expect("skeleton");
        (sk.log_sum(horizon, 0.0) / horizon, sk.len())
    });
    let passed = ratios.iter().filter(|(x, _)| rel_err(*x, target) <= 0.05).count();
    let values: Vec<f64> = ratios.iter().map(|(x, _)| *x).collect();
    let m = MeanEstimate::of(&values).unwrap();
    let sd = m.stderr * (values.len() as f64).sqrt();
    let clt_sd = (2.0 * 1.5f64.ln().powi(2) / horizon).sqrt();
    Verdict {
        pass: passed >= 95 && split.plus_rate() == 2.0,
        evidence: vec![
            need(passed, 95, 100),
            format!(
                "mean ratio {:.4} (target {target:.4}), empirical sd {sd:.4}, Poisson CLT sd {clt_sd:.4} = {:.1}% of target",
                m.mean,
                100.0 * clt_sd / target
            ),
        ],
    }
}

fn criterion_8() -> Verdict {
    let r = measure(0.5, &[(0.5, 0.5)]);
    let delta = 0.25;
    let split = r.split(delta).unwrap();
    let key = StreamKey::new(SEED).fork("criterion-8", 0);
    let sk = (0..)
        .map(|k| sample_skeleton(&split, 40.0, &key.fork("skeleton", k)).unwrap())
        .find(|s| s.len() >= 5)
        .unwrap();
    let t5 = sk.points()[4].t;
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        ..RunOptions::default()
    };
    let minus_mass = split.minus.total_mass();
    let series = par_replicas(10_000, |i| {
        let traj = cbbm::run(&[0.0], &split, &sk, t5, &key.fork("cbbm", i), &opts).expect("run");
        martingale_series(&traj, minus_mass)
    });
    let mut c = Checks::default();
    c.check(
        format!("replica series have {} entries, need 6", series[0].len()),
        series.iter().all(|s| s.len() == 6),
    );
    match martingale_mean_test(&series, 5, 3.0) {
        Ok(rep) => {
            c.check(format!("{} rows, need n = 0..=5", rep.rows.len()), rep.rows.len() == 6);
            for row in &rep.rows {
                c.check(format!("M_{} mean {:.4} is {:.2} SE from 1", row.n, row.mean, row.z), row.pass);
                c.note(format!("n = {}: mean {:.5} ± {:.5}, z = {:.2}", row.n, row.mean, row.stderr, row.z));
            }
        }
        Err(e) => c.check(format!("martingale test failed: {e}"), false),
    }
    c.note(format!("skeleton events at {:?}", sk.points().iter().take(5).map(|p| p.t).collect::<Vec<_>>()));
    c.verdict()
}

/// Fire small events from `n` labelled particles at rest and tally which
/// subset duplicated.
fn subset_tally(n: usize, minus: &ReproductionMeasure, events: usize, key: &StreamKey) -> (f64, BTreeMap<u32, usize>) {
    let mut rng = key.rng();
    let opts = CountOptions::default();
    let labels: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut time = 0.0;
    let mut tally = BTreeMap::new();
    for _ in 0..events {
        let (wait, atom) = schedule_small_event(n as f64, minus, &mut rng).expect("nonzero rate");
        time += wait;
        let mut ps = ParticleSystem::from_positions(&labels).unwrap();
        ps.small_event_apply(atom, &mut rng, &opts).unwrap();
        let mut mask = 0u32;
        for &x in ps.positions().unwrap() {
            let i = x as usize;
            if ps.positions().unwrap().iter().filter(|&&y| y == x).count() > 1 {
                mask |= 1 << i;
            }
        }
        *tally.entry(mask).or_insert(0) += 1;
    }
    (time, tally)
}

fn criterion_9() -> Verdict {
    let (y, w) = (0.3, 0.7);
    let events = 200_000;
    let key = StreamKey::new(SEED).fork("criterion-9", 0);
    let mut c = Checks::default();
    let poisson_check = |c: &mut Checks, label: String, count: usize, time: f64, rate: f64| {
        let se = rate.sqrt() / time.sqrt();
        let z = (count as f64 / time - rate).abs() / se;
        c.check(format!("{label}: empirical {:.5} vs {rate:.5}, {z:.2} SE", count as f64 / time), z <= 3.0);
    };
    let atom = measure(0.0, &[(y, w)]);
    for n in 1..=3usize {
        let (time, tally) = subset_tally(n, &atom, events, &key.fork("atom", n as u64));
        c.check(format!("n = {n}: empty subset fired"), !tally.contains_key(&0));
        for mask in 1u32..(1 << n) {
            let k = mask.count_ones() as i32;
            let rate = w * y.powi(k - 1) * (1.0 - y).powi(n as i32 - k);
            let count = tally.get(&mask).copied().unwrap_or(0);
            poisson_check(&mut c, format!("n = {n}, subset {mask:0n$b}"), count, time, rate);
        }
        for k in 1..=n as i32 {
            let rate = common::binomial_coefficient(n as u64, k as u64) * w * y.powi(k - 1) * (1.0 - y).powi(n as i32 - k);
            let count: usize = tally.iter().filter(|(m, _)| m.count_ones() as i32 == k).map(|(_, c)| c).sum();
            poisson_check(&mut c, format!("n = {n}, size {k}"), count, time, rate);
        }
        c.note(format!("n = {n}: {events} events over time {time:.1}"));
    }
    let zero = measure(0.5, &[]);
    let (time, tally) = subset_tally(3, &zero, events, &key.fork("zero", 0));
    for mask in 1u32..8 {
        let rate = if mask.count_ones() == 1 { 0.5 } else { 0.0 };
        let count = tally.get(&mask).copied().unwrap_or(0);
        if rate > 0.0 {
            poisson_check(&mut c, format!("zero atom, n = 3, subset {mask:03b}"), count, time, rate);
        } else {
            c.check(format!("zero atom, n = 3: subset {mask:03b} fired {count} times"), count == 0);
        }
    }
    c.verdict()
}

fn criterion_10() -> Verdict {
    let r = measure(0.0, &[(0.5, 1.0)]);
    let delta = 0.25;
    let horizon = 20.0;
    let split = r.split(delta).unwrap();
    let c_hi = r.c_delta(delta).unwrap();
    let c_lo = r.c_delta_lower(delta).unwrap();
    let lambda_hi = 1.1 * (2.0 * c_hi).sqrt();
    let lambda_lo = 0.9 * (2.0 * c_lo).sqrt();
    let times = vec![8.0, 12.0, 16.0, 20.0];
    let opts = RunOptions {
        mode: Mode::Positions,
        cap: 20_000_000,
        checkpoints: times.clone(),
        ..RunOptions::default()
    };
    let key = StreamKey::new(SEED).fork("criterion-10", 0);
    let mut evidence = Vec::new();
    let (mut dec_ok, mut inc_ok) = (0, 0);
    for seed in 0..20u64 {
        let k = key.fork("seed", seed);
        let sk = sample_skeleton(&split, horizon, &k.fork("skeleton", 0)).unwrap();
        let mut runs = Vec::new();
        let mut capped = 0;
        for i in 0..20u64 {
            let mut traj = cbbm::run(&[0.0], &split, &sk, horizon, &k.fork("cbbm", i), &opts).unwrap();
            if traj.cap_exceeded.is_some() {
                capped += 1;
            }
            // only the checkpoint records are needed; free the population
            traj.final_state = ParticleSystem::counts_only(1.0).unwrap();
            runs.push(traj);
        }
        if capped > 0 {
            evidence.push(format!("seed {seed:>2}: {capped} of 20 runs exceeded the cap, seed fails"));
            continue;
        }
        let mut line = format!("seed {seed:>2}:");
        for (lambda, increasing) in [(lambda_hi, false), (lambda_lo, true)] {
            let rep = tail_bound_check(&runs, lambda, &times, c_hi, 0.0, 3.0).unwrap();
            let freqs: Vec<f64> = rep.rows.iter().map(|r| r.frequency).collect();
            let ok = is_monotone(&freqs[1..], increasing);
            if increasing {
                inc_ok += ok as usize;
            } else {
                dec_ok += ok as usize;
            }
            line += &format!(
                " λ={lambda:.3} P = {:?} {} {};",
                freqs,
                if increasing { "increasing" } else { "decreasing" },
                if ok { "ok" } else { "no" }
            );
        }
        evidence.push(line);
    }
    evidence.insert(
        0,
        format!(
            "decreasing at λ={lambda_hi:.4}: {dec_ok}/20, increasing at λ={lambda_lo:.4}: {inc_ok}/20, 16 required for each"
        ),
    );
    Verdict {
        pass: dec_ok >= 16 && inc_ok >= 16,
        evidence,
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 10] = [
        (1, "formula suite", criterion_1),
        (2, "heat-step exactness", criterion_2),
        (3, "annealed growth", criterion_3),
        (4, "quenched growth and gap", criterion_4),
        (5, "moment duality", criterion_5),
        (6, "wave-speed reproduction", criterion_6),
        (7, "skeleton LLN", criterion_7),
        (8, "martingale diagnostic", criterion_8),
        (9, "generator equivalence", criterion_9),
        (10, "tail behavior", criterion_10),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        ran += 1;
        let clock = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Verdict {
            pass: false,
            evidence: vec![format!(
                "panicked: {}",
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            )],
        });
        println!(
            "criterion {n:>2} ({name}): {} [{:.1} s] {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            verdict.evidence.first().map(String::as_str).unwrap_or("")
        );
        for line in verdict.evidence.iter().skip(1) {
            println!("    {line}");
        }
        if !verdict.pass {
            failed.push(n);
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
