use serde::{Deserialize, Serialize};

use super::fits::z_score;
use super::stats::{try_par_replicas, MeanEstimate};
use crate::cbbm::{self, Mode, RunOptions};
use crate::error::{invalid, Result};
use crate::measure::ReproductionMeasure;
use crate::randomness::{sample_skeleton, StreamKey};
use crate::spde::{evolve, InitialProfile, SpdeConfig};

/// Products are taken over at most this many points.
pub const MAX_DUALITY_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualityOptions {
    /// Replicas per side.
    pub replicas: usize,
    pub spde: SpdeConfig,
    /// Particle cap for the CBBM side.
    pub cap: usize,
    pub sigmas: f64,
}

impl Default for DualityOptions {
    fn default() -> Self {
        Self {
            replicas: 10_000,
            spde: SpdeConfig::default(),
            cap: 1_000_000,
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub t: f64,
    pub xs: Vec<f64>,
    pub skeleton_events: usize,
    /// `E^δ Π_i (1 - u_t(x_i))`.
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub lhs_replicas: usize,
    /// `E^δ Π_{c ∈ C_t} (1 - u_0(c))` with `C_0 = xs`.
    pub rhs_mean: f64,
    pub rhs_stderr: f64,
    pub rhs_replicas: usize,
    pub combined_stderr: f64,
    /// `|lhs - rhs| / combined_stderr`.
    pub z: f64,
    pub sigmas: f64,
    pub pass: bool,
}

/// Estimate both sides of the conditional moment duality on one shared
/// skeleton. The particle side runs in reversed time and therefore sees the
/// skeleton reflected on `[0, t]`.
///
/// When `R_δ⁻` has no atoms away from zero the SPDE side is deterministic
/// given the skeleton and is solved once.
pub fn duality_check(
    measure: &ReproductionMeasure,
    delta: f64,
    xs: &[f64],
    u0: &InitialProfile,
    t: f64,
    key: &StreamKey,
    opts: &DualityOptions,
) -> Result<DualityReport> {
    if xs.is_empty() || xs.len() > MAX_DUALITY_POINTS {
        return Err(invalid(
            "x",
            format!("need 1 to {MAX_DUALITY_POINTS} points, got {}", xs.len()),
        ));
    }
    let l = opts.spde.half_width;
    if let Some(x) = xs.iter().find(|x| !(x.abs() < l)) {
        return Err(invalid("x", format!("{x} outside the open domain (-{l}, {l})")));
    }
    if opts.replicas == 0 {
        return Err(invalid("replicas", "must be positive"));
    }
    u0.validate()?;
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);

    let split = measure.split(delta)?;
    let skeleton = sample_skeleton(&split, t, &key.fork("skeleton", 0))?;
    let field0 = u0.render(l, opts.spde.dx)?;
    let spde_cfg = SpdeConfig {
        record_every: t,
        snapshot_times: Vec::new(),
        ..opts.spde.clone()
    };

    let lhs_replicas = if split.minus.atoms().is_empty() { 1 } else { opts.replicas };
    let lhs = try_par_replicas(lhs_replicas, |i| {
        let traj = evolve(&field0, measure, delta, t, Some(&skeleton), &key.fork("spde", i), &spde_cfg)?;
        if let Some(why) = &traj.truncation {
            return Err(invalid("spde", format!("duality run truncated: {why}")));
        }
        Ok(xs.iter().map(|&x| 1.0 - traj.final_field.interpolate(x)).product::<f64>())
    })?;

    let run_opts = RunOptions {
        mode: Mode::Positions,
        cap: opts.cap,
        ..RunOptions::default()
    };
    let reflected = skeleton.reflect(t)?;
    let rhs = try_par_replicas(opts.replicas, |i| {
        let traj = cbbm::run(&xs, &split, &reflected, t, &key.fork("cbbm", i), &run_opts)?;
        traj.ensure_complete()?;
        let mut p = 1.0;
        for &c in traj.final_state.positions()? {
            p *= 1.0 - u0.eval(c);
            if p == 0.0 {
                break;
            }
        }
        Ok(p)
    })?;

    let l = MeanEstimate::of(&lhs)?;
    let r = MeanEstimate::of(&rhs)?;
    let se = l.stderr.hypot(r.stderr);
    let z = z_score(l.mean - r.mean, se);
    Ok(DualityReport {
        t,
        xs,
        skeleton_events: skeleton.len(),
        lhs_mean: l.mean,
        lhs_stderr: l.stderr,
        lhs_replicas,
        rhs_mean: r.mean,
        rhs_stderr: r.stderr,
        rhs_replicas: opts.replicas,
        combined_stderr: se,
        z,
        sigmas: opts.sigmas,
        pass: z <= opts.sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> DualityOptions {
        DualityOptions {
            replicas: 200,
            spde: SpdeConfig {
                half_width: 20.0,
                dx: 0.1,
                dt_max: 0.01,
                ..SpdeConfig::default()
            },
            ..DualityOptions::default()
        }
    }

    #[test]
    fn constant_profiles_are_exact() {
        let r = ReproductionMeasure::new(0.3, [(0.5, 0.3)]).unwrap();
        let key = StreamKey::new(3);
        let zero = duality_check(&r, 0.25, &[0.0, 1.0], &InitialProfile::Constant { value: 0.0 }, 1.0, &key, &opts()).unwrap();
        assert_eq!((zero.lhs_mean, zero.rhs_mean), (1.0, 1.0));
        assert!(zero.pass);
        let one = duality_check(&r, 0.25, &[0.0, 1.0], &InitialProfile::Constant { value: 1.0 }, 1.0, &key, &opts()).unwrap();
        assert_eq!((one.lhs_mean, one.rhs_mean), (0.0, 0.0));
        assert!(one.pass);
    }

    #[test]
    fn point_order_is_irrelevant() {
        let r = ReproductionMeasure::new(0.3, [(0.5, 0.3)]).unwrap();
        let key = StreamKey::new(4);
        let u0 = InitialProfile::Ramp { a: -1.0, b: 1.0 };
        let a = duality_check(&r, 0.25, &[0.5, -0.5], &u0, 0.5, &key, &opts()).unwrap();
        let b = duality_check(&r, 0.25, &[-0.5, 0.5], &u0, 0.5, &key, &opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_points() {
        let r = ReproductionMeasure::continuous(1.0).unwrap();
        let u0 = InitialProfile::Constant { value: 0.0 };
        let key = StreamKey::new(1);
        assert!(duality_check(&r, 0.5, &[], &u0, 1.0, &key, &opts()).is_err());
        assert!(duality_check(&r, 0.5, &[0.0; 5], &u0, 1.0, &key, &opts()).is_err());
        assert!(duality_check(&r, 0.5, &[20.0], &u0, 1.0, &key, &opts()).is_err());
    }
}
