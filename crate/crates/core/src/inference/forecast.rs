use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::credible_interval;

use super::chain::PosteriorSamples;

/// Posterior predictive draws for a set of new rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// `draws[d][i]`: draw `d` for new row `i`.
    pub draws: Vec<Vec<f64>>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// One-step-ahead predictive distribution. Lagged-response columns of
/// `new_x` must already hold the observed previous responses. For every
/// retained draw the segment of `t_new[i]` is taken from that draw's change
/// points, and the prediction is `x' beta + N(0, sigma2)`.
pub fn one_step_ahead_forecast<R: Rng + ?Sized>(
    samples: &PosteriorSamples,
    new_x: &DMatrix<f64>,
    t_new: &[f64],
    level: f64,
    rng: &mut R,
) -> Result<Forecast> {
    if new_x.nrows() != t_new.len() {
        return Err(Error::Dimension(format!(
            "{} forecast rows but {} thresholds",
            new_x.nrows(),
            t_new.len()
        )));
    }
    if new_x.ncols() != samples.p {
        return Err(Error::Dimension(format!(
            "forecast rows have {} columns, model has {}",
            new_x.ncols(),
            samples.p
        )));
    }
    if samples.n_draws() == 0 {
        return Err(Error::InsufficientData("no retained draws to forecast from".into()));
    }
    let m = t_new.len();
    let mut draws = Vec::with_capacity(samples.n_draws());
    for d in 0..samples.n_draws() {
        let tau = samples.tau_draw(d);
        let sd = samples.sigma2[d].max(0.0).sqrt();
        let row: Vec<f64> = (0..m)
            .map(|i| {
                let seg = tau.partition_point(|&c| t_new[i] > c);
                let mean: f64 = (0..samples.p)
                    .map(|j| new_x[(i, j)] * samples.beta_at(d, seg, j))
                    .sum();
                let e: f64 = rng.sample(StandardNormal);
                mean + sd * e
            })
            .collect();
        draws.push(row);
    }
    let mut median = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        let col: Vec<f64> = draws.iter().map(|r| r[i]).collect();
        let iv = credible_interval(&col, level);
        median.push(iv.median);
        lower.push(iv.lower);
        upper.push(iv.upper);
    }
    Ok(Forecast {
        draws,
        median,
        lower,
        upper,
    })
}

/// Root mean squared prediction error.
pub fn rmspe(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() || predictions.is_empty() {
        return Err(Error::Dimension(format!(
            "rmspe needs equal non-empty lengths, got {} and {}",
            predictions.len(),
            actuals.len()
        )));
    }
    let ss: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a).powi(2))
        .sum();
    Ok((ss / predictions.len() as f64).sqrt())
}
