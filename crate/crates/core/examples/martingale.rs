//! Mean of the normalised product martingale along skeleton events.
//!
//! `cargo run --release --example martingale`

use kpp_lab::analysis::{martingale_mean_test, par_replicas};
use kpp_lab::cbbm::{martingale_series, run, Mode, RunOptions};
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let m = ReproductionMeasure::new(0.5, [(0.5, 0.5)])?;
    let split = m.split(0.25)?;
    let key = StreamKey::new(8);
    let sk = sample_skeleton(&split, 10.0, &key.fork("skeleton", 0))?;
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        ..RunOptions::default()
    };
    let mass = split.minus.total_mass();
    let series = par_replicas(5000, |i| {
        let traj = run(&[0.0], &split, &sk, 10.0, &key.fork("cbbm", i), &opts).expect("run");
        martingale_series(&traj, mass)
    });
    let rep = martingale_mean_test(&series, 8, 3.0)?;
    println!("{} skeleton events", sk.len());
    for r in &rep.rows {
        println!("  n = {}: mean {:.4} ± {:.4}", r.n, r.mean, r.stderr);
    }
    Ok(())
}
