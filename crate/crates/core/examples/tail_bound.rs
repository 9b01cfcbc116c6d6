//! Frequency of `S_t > λt` for the rightmost particle on one skeleton.
//!
//! `cargo run --release --example tail_bound`

use kpp_lab::analysis::{tail_bound_check, try_par_replicas};
use kpp_lab::cbbm::{run, RunOptions};
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let m = ReproductionMeasure::new(0.0, [(0.5, 1.0)])?;
    let delta = 0.25;
    let split = m.split(delta)?;
    let c = m.c_delta(delta)?;
    let horizon = 12.0;
    let times = vec![4.0, 6.0, 8.0, 10.0, 12.0];
    let key = StreamKey::new(3);
    let sk = sample_skeleton(&split, horizon, &key.fork("skeleton", 0))?;
    let opts = RunOptions {
        checkpoints: times.clone(),
        ..RunOptions::default()
    };
    let runs = try_par_replicas(50, |i| run(&[0.0], &split, &sk, horizon, &key.fork("cbbm", i), &opts))?;
    for lambda in [1.1 * (2.0 * c).sqrt(), 0.9 * (2.0 * m.c_delta_lower(delta)?).sqrt()] {
        let rep = tail_bound_check(&runs, lambda, &times, c, 0.0, 3.0)?;
        println!("lambda = {lambda:.4}");
        for r in &rep.rows {
            println!(
                "  t = {:>4}: P(S_t > λt) ≈ {:.3}, many-to-one {:.3e}, bound {:.3e}",
                r.t, r.frequency, r.many_to_one, r.exponential_bound
            );
        }
    }
    Ok(())
}
