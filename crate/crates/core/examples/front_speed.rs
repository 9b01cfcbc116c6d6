//! Front of the jump-driven equation against the wave speed and the
//! deterministic speed at equal mass.
//!
//! `cargo run --release --example front_speed [seed]`

use kpp_lab::analysis::speed_report;
use kpp_lab::spde::{evolve, InitialProfile, SpdeConfig};
use kpp_lab::{ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SpdeConfig::default();
    let horizon = 50.0;
    let u0 = InitialProfile::Ramp { a: -40.0, b: -39.0 }.render(cfg.half_width, cfg.dx)?;
    let m = ReproductionMeasure::new(0.0, [(1.0, 1.0)])?;
    let traj = evolve(&u0, &m, 0.5, horizon, None, &StreamKey::new(seed), &cfg)?;
    let rep = speed_report(&traj, (horizon / 3.0, horizon), &m, 0.15, Some(1.35))?;
    println!("{} jumps on [0, {horizon}]", traj.events.len());
    for f in &rep.theta_sensitivity {
        println!("  theta {:.2}: speed {:.4} ± {:.4}", f.theta, f.speed, f.stderr);
    }
    println!("wave speed {:.4}, annealed speed {:.4}", rep.target, rep.jensen_bound);
    Ok(())
}
