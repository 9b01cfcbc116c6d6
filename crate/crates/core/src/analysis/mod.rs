//! Estimators and comparators that turn trajectories into verdicts.
//!
//! Every report carries its estimate, standard error and target, and is a
//! pure function of the trajectories it is given.

mod diagnostics;
mod duality;
mod fits;
pub mod stats;

pub use diagnostics::{
    is_monotone, lln_check, martingale_mean_test, tail_bound_check, LlnReport, MartingaleReport,
    MartingaleRow, TailReport, TailRow, MIN_MARTINGALE_REPLICAS,
};
pub use duality::{duality_check, DualityOptions, DualityReport, MAX_DUALITY_POINTS};
pub use fits::{
    annealed_mean_check, fit_front_speed, fit_growth, speed_report, AnnealedReport, GapReport,
    RateReport, SpeedFit, SpeedReport, MIN_FIT_SAMPLES,
};
pub use stats::{compensated_sum, linear_fit, par_replicas, try_par_replicas, LinearFit, MeanEstimate};
