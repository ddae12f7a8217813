use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::parallel::{self, Execution};
use crate::stats::{credible_interval, Interval};

use super::chain::{run_chain, ChainConfig, PosteriorSamples};
use super::summary::compute_dic;

/// DIC and change-point summaries of one candidate number of change points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub k: usize,
    pub dic: f64,
    pub p_d: f64,
    pub tau: Vec<Interval>,
    pub tau_acceptance: f64,
}

#[derive(Clone, Debug)]
pub struct KSelection {
    pub reports: Vec<KReport>,
    pub best_k: usize,
    /// Draws of each fit, in the order of `reports`.
    pub samples: Vec<PosteriorSamples>,
}

/// Fits one chain per candidate `K` and picks the one with the lowest DIC.
/// Ties go to the smaller `K`. Each fit uses its own RNG stream, so the
/// result does not depend on `exec`.
pub fn select_num_changepoints(
    data: &Dataset,
    ks: &[usize],
    base: &ChainConfig,
    level: f64,
    exec: Execution,
) -> Result<KSelection> {
    if ks.is_empty() {
        return Err(Error::config("no candidate change-point counts given"));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let fits = parallel::map(exec, ks.clone(), |k| {
        let config = ChainConfig { k, ..base.clone() };
        let samples = run_chain(data, &config)?;
        let dic = compute_dic(&samples, data)?;
        Ok::<_, Error>((samples, dic))
    });
    let mut reports = Vec::with_capacity(ks.len());
    let mut samples = Vec::with_capacity(ks.len());
    for (k, fit) in ks.iter().zip(fits) {
        let (s, dic) = fit?;
        reports.push(KReport {
            k: *k,
            dic: dic.dic,
            p_d: dic.p_d,
            tau: (0..*k).map(|i| credible_interval(&s.tau_series(i), level)).collect(),
            tau_acceptance: s.tau_acceptance,
        });
        samples.push(s);
    }
    let best_k = reports
        .iter()
        .min_by(|a, b| a.dic.total_cmp(&b.dic))
        .map(|r| r.k)
        .expect("non-empty");
    Ok(KSelection {
        reports,
        best_k,
        samples,
    })
}
