//! Chain orchestration and everything computed from retained draws.

mod chain;
mod forecast;
mod select;
mod summary;

pub use chain::{run_chain, ChainConfig, PosteriorSamples, PriorChoice};
pub use forecast::{one_step_ahead_forecast, rmspe, Forecast};
pub use select::{select_num_changepoints, KReport, KSelection};
pub use summary::{
    compute_dic, dic_from_deviances, interval_selection, median_probability_model, summarize, Dic,
    PosteriorSummary,
};
