//! Bayesian change-point linear regression for high-dimensional covariates.
//!
//! Observations `(y_i, x_i, t_i)` are split at unknown thresholds
//! `tau_1 < ... < tau_K` of `t`; each segment has its own sparse coefficient
//! vector under a spike-and-slab (BASAD), Bayesian Lasso or group Lasso
//! prior. Posterior draws come from a Gibbs sampler with a random-walk
//! Metropolis step on the change points. The number of change points is
//! chosen by DIC over independent per-K fits.

pub mod error;
pub mod inference;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod samplers;
pub mod simulation;
pub mod stats;
pub mod timeseries;

pub use error::{Error, Result};
pub use model::{
    ChangePointState, Dataset, McmcState, NoiseModel, PriorFamily, PriorSpec, SegmentPartition,
};
pub use parallel::Execution;
pub use rng::RngStream;
