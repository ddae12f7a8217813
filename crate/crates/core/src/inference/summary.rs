use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_likelihood, partition_by_threshold, ChangePointState, Dataset, PriorFamily};
use crate::stats::{credible_interval, mean, median, Interval};

use super::chain::PosteriorSamples;

/// Variables `j` with inclusion probability strictly above 1/2, per segment.
pub fn median_probability_model(inclusion: &[Vec<f64>]) -> Vec<Vec<usize>> {
    inclusion
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.5)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Variables whose equal-tailed `level` interval excludes zero, per segment.
pub fn interval_selection(samples: &PosteriorSamples, level: f64) -> Vec<Vec<usize>> {
    (0..samples.num_segments())
        .map(|s| {
            (0..samples.p)
                .filter(|&j| credible_interval(&samples.beta_series(s, j), level).excludes_zero())
                .collect()
        })
        .collect()
}

/// Deviance information criterion of one fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub dic: f64,
    pub p_d: f64,
    /// Posterior mean of the deviance `-2 log L`.
    pub mean_deviance: f64,
    /// Deviance at the plug-in estimate.
    pub plugin_deviance: f64,
}

/// `DIC = 2 mean(D) - D(plug-in)`, `p_D = mean(D) - D(plug-in)`.
pub fn dic_from_deviances(deviances: &[f64], plugin_deviance: f64) -> Result<Dic> {
    if deviances.is_empty() {
        return Err(Error::InsufficientData("DIC needs at least one retained draw".into()));
    }
    let mean_deviance = mean(deviances);
    Ok(Dic {
        dic: 2.0 * mean_deviance - plugin_deviance,
        p_d: mean_deviance - plugin_deviance,
        mean_deviance,
        plugin_deviance,
    })
}

/// DIC with the plug-in at the posterior means of the coefficients and the
/// noise variance and the posterior medians of the change points.
pub fn compute_dic(samples: &PosteriorSamples, data: &Dataset) -> Result<Dic> {
    let n = samples.n_draws();
    if n == 0 {
        return Err(Error::InsufficientData("DIC needs at least one retained draw".into()));
    }
    let deviances: Vec<f64> = samples.log_lik.iter().map(|ll| -2.0 * ll).collect();
    let segs = samples.num_segments();
    let mut beta_hat = vec![DVector::zeros(samples.p); segs];
    for d in 0..n {
        for (s, b) in samples.beta_draw(d).into_iter().enumerate() {
            beta_hat[s] += b;
        }
    }
    for b in &mut beta_hat {
        *b /= n as f64;
    }
    let sigma2_hat = mean(&samples.sigma2);
    let tau_hat: Vec<f64> = (0..samples.k).map(|i| median(&samples.tau_series(i))).collect();
    let cp = ChangePointState {
        tau: tau_hat,
        a_tau: samples.cp_bounds.0,
        b_tau: samples.cp_bounds.1,
    };
    let part = partition_by_threshold(data.t(), &cp);
    let plugin = -2.0 * log_likelihood(data, &part, &beta_hat, sigma2_hat)?;
    dic_from_deviances(&deviances, plugin)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub family: PriorFamily,
    pub k: usize,
    pub p: usize,
    pub n_draws: usize,
    pub level: f64,
    /// `beta[segment][variable]`.
    pub beta: Vec<Vec<Interval>>,
    pub sigma2: Interval,
    pub tau: Vec<Interval>,
    /// BASAD inclusion probabilities `[segment][variable]`.
    pub inclusion: Option<Vec<Vec<f64>>>,
    /// Selected variables per segment: median probability model for BASAD,
    /// interval exclusion of zero otherwise.
    pub selected: Vec<Vec<usize>>,
    pub tau_acceptance: f64,
    pub dic: Option<f64>,
    pub p_d: Option<f64>,
    pub rmspe: Option<f64>,
}

/// Summaries that need only the draws. DIC is filled in when `data` is given.
pub fn summarize(
    samples: &PosteriorSamples,
    data: Option<&Dataset>,
    level: f64,
) -> Result<PosteriorSummary> {
    if samples.n_draws() == 0 {
        return Err(Error::InsufficientData("no retained draws to summarize".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config(format!("credible level {level} outside (0, 1)")));
    }
    let segs = samples.num_segments();
    let beta = (0..segs)
        .map(|s| {
            (0..samples.p)
                .map(|j| credible_interval(&samples.beta_series(s, j), level))
                .collect()
        })
        .collect();
    let tau = (0..samples.k)
        .map(|i| credible_interval(&samples.tau_series(i), level))
        .collect();
    let inclusion = samples.inclusion_probabilities();
    let selected = match &inclusion {
        Some(probs) => median_probability_model(probs),
        None => interval_selection(samples, level),
    };
    let (dic, p_d) = match data {
        Some(d) => {
            let v = compute_dic(samples, d)?;
            (Some(v.dic), Some(v.p_d))
        }
        None => (None, None),
    };
    Ok(PosteriorSummary {
        family: samples.family(),
        k: samples.k,
        p: samples.p,
        n_draws: samples.n_draws(),
        level,
        beta,
        sigma2: credible_interval(&samples.sigma2, level),
        tau,
        inclusion,
        selected,
        tau_acceptance: samples.tau_acceptance,
        dic,
        p_d,
        rmspe: None,
    })
}
