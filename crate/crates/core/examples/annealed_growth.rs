//! Mean particle count with the skeleton resampled each time.
//!
//! `cargo run --release --example annealed_growth`

use kpp_lab::analysis::{annealed_mean_check, try_par_replicas};
use kpp_lab::cbbm::{run, Mode, RunOptions};
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let m = ReproductionMeasure::new(0.0, [(0.5, 1.0)])?;
    let split = m.split(0.25)?;
    let t = 2.0;
    let key = StreamKey::new(0);
    let opts = RunOptions {
        mode: Mode::CountsOnly,
        ..RunOptions::default()
    };
    let counts = try_par_replicas(10_000, |i| {
        let k = key.fork("annealed", i);
        let sk = sample_skeleton(&split, t, &k.fork("skeleton", 0))?;
        Ok(run(&[0.0], &split, &sk, t, &k.fork("cbbm", 0), &opts)?.final_state.count())
    })?;
    let rep = annealed_mean_check(&counts, 1.0, t, &m, 3.0)?;
    println!(
        "E[I_{t}] ≈ {:.4} ± {:.4}, exact {:.4}, z = {:.2}",
        rep.mean, rep.stderr, rep.target, rep.z
    );
    Ok(())
}
