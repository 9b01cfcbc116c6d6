//! Closed-form constants of a reproduction measure.
//!
//! `cargo run --example formulas`

use kpp_lab::measure::{box_size, dirichlet_drift_eigenvalue};
use kpp_lab::ReproductionMeasure;

fn main() -> kpp_lab::Result<()> {
    let delta = 0.25;
    for m in [
        ReproductionMeasure::continuous(2.0)?,
        ReproductionMeasure::new(0.0, [(1.0, 1.0)])?,
        ReproductionMeasure::new(0.0, [(0.5, 1.0)])?,
        ReproductionMeasure::new(0.5, [(0.5, 0.5)])?,
    ] {
        let c_low = m.c_delta_lower(delta)?;
        println!("R = {}", m.to_literal());
        println!("  wave speed              {:.7}", m.wave_speed()?);
        println!("  quenched rate s^2/2     {:.7}", m.quenched_rate());
        println!("  c_delta / lower (d=1/4) {:.7} / {c_low:.7}", m.c_delta(delta)?);
        println!("  annealed rate           {:.7}", m.annealed_rate());
        let lambda = 0.5 * (2.0 * c_low).sqrt();
        println!(
            "  box for lambda={lambda:.3}: R = {:.4}, eigenvalue there {:.4}",
            box_size(lambda, c_low, 0.01)?,
            dirichlet_drift_eigenvalue(lambda, box_size(lambda, c_low, 0.01)?)?
        );
    }
    Ok(())
}
