//! Simulation and verification lab for the Fisher–KPP equation driven by
//! Poisson-jump ("rare selection") noise, and for its dual, the coordinated
//! branching Brownian motion.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cbbm;
pub mod cli;
pub mod error;
pub mod measure;
pub mod output;
pub mod randomness;
pub mod spde;

pub use error::{KppError, Result};
pub use measure::{Atom, ReproductionMeasure, SplitMeasure};
pub use randomness::{sample_skeleton, Skeleton, SkeletonPoint, StreamKey};
