//! Law of large numbers for the skeleton log-sum.
//!
//! `cargo run --example skeleton_lln`

use kpp_lab::analysis::lln_check;
use kpp_lab::{sample_skeleton, ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let m = ReproductionMeasure::new(0.0, [(0.5, 1.0)])?;
    let split = m.split(0.25)?;
    for horizon in [50.0, 200.0, 1000.0, 5000.0] {
        let sk = sample_skeleton(&split, horizon, &StreamKey::new(1))?;
        let rep = lln_check(&sk, &m, 0.0, 3.0)?;
        println!(
            "T = {horizon:>6}: {:>5} events, ratio {:.4} vs {:.4}, 3-sigma band {:.4}",
            rep.events, rep.observed, rep.target, rep.tolerance
        );
    }
    Ok(())
}
