//! Empirical subset rates of the small-event sampler for three particles.
//!
//! `cargo run --release --example generator_check`

use std::collections::BTreeMap;

use kpp_lab::cbbm::{schedule_small_event, CountOptions, ParticleSystem};
use kpp_lab::{ReproductionMeasure, StreamKey};

fn main() -> kpp_lab::Result<()> {
    let (y, w) = (0.3, 0.7);
    let minus = ReproductionMeasure::new(0.0, [(y, w)])?;
    let mut rng = StreamKey::new(5).rng();
    let opts = CountOptions::default();
    let labels = [0.0, 1.0, 2.0];
    let mut time = 0.0;
    let mut tally: BTreeMap<u32, u32> = BTreeMap::new();
    for _ in 0..100_000 {
        let (wait, atom) = schedule_small_event(3.0, &minus, &mut rng).expect("positive rate");
        time += wait;
        let mut ps = ParticleSystem::from_positions(&labels)?;
        ps.small_event_apply(atom, &mut rng, &opts)?;
        let pos = ps.positions()?;
        let mask = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| pos.iter().filter(|p| p == l).count() == 2)
            .fold(0, |m, (i, _)| m | 1 << i);
        *tally.entry(mask).or_default() += 1;
    }
    for (mask, count) in tally {
        let k = mask.count_ones() as i32;
        let exact = w * y.powi(k - 1) * (1.0 - y).powi(3 - k);
        println!("subset {mask:03b}: rate {:.4} (exact {exact:.4})", count as f64 / time);
    }
    Ok(())
}
