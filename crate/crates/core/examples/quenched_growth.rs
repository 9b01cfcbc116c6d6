//! Growth of the particle count on a fixed skeleton, counts only.
//!
//! `cargo run --release --example quenched_growth [seeds]`

use kpp_lab::analysis::fit_growth;
use kpp_lab::cbbm::{run, Mode, RunOptions};
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let m = ReproductionMeasure::new(0.0, [(0.5, 1.0)])?;
    let split = m.split(0.25)?;
    let horizon = 30.0;
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        record_every: Some(0.5),
        ..RunOptions::default()
    };
    println!("target s^2/2 = {:.4}, annealed r = {}", m.quenched_rate(), m.annealed_rate());
    for s in 0..seeds {
        let key = StreamKey::new(s);
        let sk = sample_skeleton(&split, horizon, &key.fork("skeleton", 0))?;
        let traj = run(&[0.0], &split, &sk, horizon, &key.fork("cbbm", 0), &opts)?;
        let rate = fit_growth(&traj.count_series(), (10.0, 30.0), m.quenched_rate(), "s^2/2", 0.1)?;
        let realized = (sk.log_sum(30.0, 0.0) - sk.log_sum(10.0, 0.0)) / 20.0;
        println!(
            "seed {s}: I_30 = {:.3e}, slope {:.4} ± {:.4}, skeleton log-rate {realized:.4}",
            traj.final_state.count(),
            rate.estimate,
            rate.stderr
        );
    }
    Ok(())
}
