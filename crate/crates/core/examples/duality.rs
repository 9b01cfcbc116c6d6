//! Both sides of the conditional moment duality on one skeleton.
//!
//! `cargo run --release --example duality`

use kpp_lab::analysis::{duality_check, DualityOptions};
use kpp_lab::spde::{InitialProfile, SpdeConfig};
use kpp_lab::{ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let m = ReproductionMeasure::new(0.3, [(0.5, 0.3)])?;
    let opts = DualityOptions {
        replicas: 4000,
        spde: SpdeConfig {
            half_width: 16.0,
            dx: 0.05,
            dt_max: 0.0025,
            ..SpdeConfig::default()
        },
        ..DualityOptions::default()
    };
    let u0 = InitialProfile::Ramp { a: -0.5, b: 0.5 };
    for seed in 0..3 {
        let rep = duality_check(&m, 0.25, &[-0.25, 0.75], &u0, 1.0, &StreamKey::new(seed), &opts)?;
        println!(
            "seed {seed}: {} skeleton events, SPDE {:.5}, CBBM {:.5} ± {:.5}, z = {:.2}",
            rep.skeleton_events, rep.lhs_mean, rep.rhs_mean, rep.rhs_stderr, rep.z
        );
    }
    Ok(())
}
