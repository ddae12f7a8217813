//! Synthetic change-point regression scenarios and scoring of fits against
//! the truth that generated them.
//!
//! Variable indices are 0-based throughout; the support written `{1, 2, 5}`
//! in 1-based notation is `[0, 1, 4]` here.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{run_chain, summarize, ChainConfig, PriorChoice};
use crate::model::{Dataset, NoiseModel, PriorFamily};
use crate::parallel::{self, Execution};
use crate::rng::RngStream;
use crate::stats::Interval;

/// Stream used for design and noise draws, kept apart from chain streams.
const DATA_STREAM: u64 = 0xDA7A_0000_0000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    /// `Sigma_ij = rho^|i-j|`.
    Ar,
    /// `Sigma_ij = rho + (1 - rho) I(i = j)`.
    Cs,
}

impl std::str::FromStr for CovKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar" => Ok(CovKind::Ar),
            "cs" => Ok(CovKind::Cs),
            other => Err(Error::config(format!("unknown covariance kind `{other}` (ar, cs)"))),
        }
    }
}

pub fn gen_covariance(p: usize, kind: CovKind, rho: f64) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::domain("covariance needs p >= 1"));
    }
    let m = DMatrix::from_fn(p, p, |i, j| match kind {
        CovKind::Ar => rho.powi((i as i32 - j as i32).abs()),
        CovKind::Cs if i == j => 1.0,
        CovKind::Cs => rho,
    });
    if m.clone().cholesky().is_none() {
        return Err(Error::domain(format!("{kind:?} covariance with rho = {rho} is not positive definite")));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    /// One coefficient vector per segment.
    pub beta: Vec<Vec<f64>>,
    /// True change points on the `t = 1..n` scale.
    pub tau: Vec<f64>,
    pub sigma2: f64,
    pub cov: CovKind,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub seed: u64,
}

fn default_rho() -> f64 {
    0.5
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::config(format!("scenario needs n >= 2 and p >= 1, got n={} p={}", self.n, self.p)));
        }
        if self.beta.len() != self.tau.len() + 1 {
            return Err(Error::config(format!(
                "{} coefficient vectors for {} change points",
                self.beta.len(),
                self.tau.len()
            )));
        }
        if let Some(b) = self.beta.iter().find(|b| b.len() != self.p) {
            return Err(Error::config(format!("coefficient vector of length {} for p = {}", b.len(), self.p)));
        }
        let inside = self.tau.iter().all(|&t| t > 1.0 && t < self.n as f64);
        let increasing = self.tau.windows(2).all(|w| w[0] < w[1]);
        if !inside || !increasing {
            return Err(Error::config(format!(
                "change points {:?} must be increasing inside (1, {})",
                self.tau, self.n
            )));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::config("noise variance must be non-negative"));
        }
        Ok(())
    }

    /// Nonzero coordinates of each segment's coefficients.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.beta
            .iter()
            .map(|b| b.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub beta: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub sigma2: f64,
    pub supports: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Rows of `X` i.i.d. `N(0, Sigma)`, `t_i = i`, and
/// `y_i = x_i' beta_k + N(0, sigma2)` for the segment `k` containing `i`.
pub fn gen_dataset(spec: &ScenarioSpec) -> Result<(Dataset, Truth)> {
    spec.validate()?;
    let sigma = gen_covariance(spec.p, spec.cov, spec.rho)?;
    let l = sigma.cholesky().expect("checked positive definite").unpack();
    let mut rng = RngStream::new(spec.seed, DATA_STREAM);
    let z = DMatrix::from_fn(spec.n, spec.p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = z * l.transpose();
    let t: Vec<f64> = (1..=spec.n).map(|i| i as f64).collect();
    let betas: Vec<DVector<f64>> = spec.beta.iter().map(|b| DVector::from_column_slice(b)).collect();
    let sd = spec.sigma2.sqrt();
    let y: Vec<f64> = (0..spec.n)
        .map(|i| {
            let seg = spec.tau.partition_point(|&c| t[i] > c);
            let e: f64 = rng.sample(StandardNormal);
            x.row(i).dot(&betas[seg].transpose()) + sd * e
        })
        .collect();
    let data = Dataset::new(y, x, t)?;
    let truth = Truth {
        beta: spec.beta.clone(),
        tau: spec.tau.clone(),
        sigma2: spec.sigma2,
        supports: spec.supports(),
        seed: spec.seed,
    };
    Ok((data, truth))
}

/// Correct and incorrect selections plus truncated MSE, per segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub correct: Vec<usize>,
    pub incorrect: Vec<usize>,
    pub mse: Vec<f64>,
}

/// `(|truth ∩ est|, |est \ truth|)` for each segment.
pub fn selection_metrics(truth: &[Vec<usize>], est: &[Vec<usize>]) -> Result<(Vec<usize>, Vec<usize>)> {
    if truth.len() != est.len() {
        return Err(Error::Dimension(format!(
            "{} true supports vs {} estimated",
            truth.len(),
            est.len()
        )));
    }
    let mut c = Vec::with_capacity(truth.len());
    let mut ic = Vec::with_capacity(truth.len());
    for (t, e) in truth.iter().zip(est) {
        let t: BTreeSet<_> = t.iter().collect();
        let e: BTreeSet<_> = e.iter().collect();
        c.push(t.intersection(&e).count());
        ic.push(e.difference(&t).count());
    }
    Ok((c, ic))
}

/// `||beta[S] - est[S]||^2` over the true support `S`.
pub fn truncated_mse(truth: &[f64], est: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&j| (truth[j] - est[j]).powi(2)).sum()
}

/// Which posterior statistic stands in for the coefficient estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointEstimate {
    #[default]
    Median,
    Mean,
}

/// A scenario together with the fitting settings it is meant to be run with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub scenario: ScenarioSpec,
    pub cp_bounds: (f64, f64),
    pub proposal_sd: f64,
    pub noise: NoiseModel,
}

/// `(3, 1.5, 0, 0, 2, 0, ...)`.
pub fn sparse_beta(p: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut b = vec![0.0; p];
    for &(j, v) in entries {
        if j < p {
            b[j] = v;
        }
    }
    b
}

fn sec3_base(name: &str, p: usize, cov: CovKind, beta: Vec<Vec<f64>>, tau: Vec<f64>, seed: u64) -> Preset {
    Preset {
        name: name.into(),
        scenario: ScenarioSpec {
            n: 200,
            p,
            beta,
            tau,
            sigma2: 1.0,
            cov,
            rho: 0.5,
            seed,
        },
        cp_bounds: (20.0, 180.0),
        proposal_sd: 0.1f64.sqrt(),
        noise: NoiseModel::default(),
    }
}

impl Preset {
    /// `n = 200`, one change point at 100.5, `beta_2 = -beta_1` with
    /// `beta_1 = (3, 1.5, 0, 0, 2, 0, ...)`, unit noise, change-point prior
    /// on `(20, 180)`, proposal variance 0.1.
    pub fn paper_sec3(p: usize, cov: CovKind, seed: u64) -> Self {
        let b1 = sparse_beta(p, &[(0, 3.0), (1, 1.5), (4, 2.0)]);
        let b2 = b1.iter().map(|v| -v).collect();
        sec3_base("paper-sec3", p, cov, vec![b1, b2], vec![100.5], seed)
    }

    /// Two change points at 50.5 and 100.5 with nested supports
    /// `{0}`, `{0, 1}`, `{0, 1, 4}`.
    pub fn paper_sec3_two(p: usize, cov: CovKind, seed: u64) -> Self {
        let beta = vec![
            sparse_beta(p, &[(0, 3.0)]),
            sparse_beta(p, &[(0, 3.0), (1, 1.5)]),
            sparse_beta(p, &[(0, 3.0), (1, 1.5), (4, 2.0)]),
        ];
        sec3_base("paper-sec3-two", p, cov, beta, vec![50.5, 100.5], seed)
    }

    /// Small strong-signal design for comparing one change point against
    /// none: `n = 100`, `p = 20`, AR design, break at 50.5 with
    /// `beta_2 = -beta_1`, or no break at all (`beta_2 = beta_1`).
    pub fn dic_strong(with_change: bool, seed: u64) -> Self {
        let p = 20;
        let b1 = sparse_beta(p, &[(0, 3.0), (1, 1.5), (4, 2.0)]);
        let b2 = if with_change { b1.iter().map(|v| -v).collect() } else { b1.clone() };
        Preset {
            name: if with_change { "dic-change" } else { "dic-null" }.into(),
            scenario: ScenarioSpec {
                n: 100,
                p,
                beta: vec![b1, b2],
                tau: vec![50.5],
                sigma2: 1.0,
                cov: CovKind::Ar,
                rho: 0.5,
                seed,
            },
            cp_bounds: (10.0, 90.0),
            proposal_sd: 0.1f64.sqrt(),
            noise: NoiseModel::default(),
        }
    }

    /// Named presets: `paper-sec3`, `paper-sec3-cs`, `paper-sec3-two`,
    /// `paper-sec3-two-cs`, `dic-change`, `dic-null`.
    pub fn by_name(name: &str, p: Option<usize>, seed: u64) -> Result<Self> {
        let p = p.unwrap_or(250);
        Ok(match name {
            "paper-sec3" => Self::paper_sec3(p, CovKind::Ar, seed),
            "paper-sec3-cs" => Self::paper_sec3(p, CovKind::Cs, seed),
            "paper-sec3-two" => Self::paper_sec3_two(p, CovKind::Ar, seed),
            "paper-sec3-two-cs" => Self::paper_sec3_two(p, CovKind::Cs, seed),
            "dic-change" => Self::dic_strong(true, seed),
            "dic-null" => Self::dic_strong(false, seed),
            other => return Err(Error::config(format!("unknown preset `{other}`"))),
        })
    }

    /// Chain settings matching the preset, with the true number of change
    /// points.
    pub fn chain_config(&self, iterations: usize, burn_in: usize, family: PriorFamily) -> ChainConfig {
        let mut c = ChainConfig::new(self.scenario.tau.len(), self.cp_bounds)
            .with_sweeps(iterations, burn_in)
            .with_seed(self.scenario.seed)
            .with_prior(PriorChoice::default_for(family));
        c.proposal_sd = self.proposal_sd;
        c.noise = self.noise;
        c
    }
}

/// One fitted cell of a scenario grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: String,
    pub family: PriorFamily,
    pub replicate: usize,
    pub seed: u64,
    pub tau: Vec<Interval>,
    pub beta_hat: Vec<Vec<f64>>,
    pub beta: Vec<Vec<Interval>>,
    pub selected: Vec<Vec<usize>>,
    pub selection: SelectionReport,
    pub tau_acceptance: f64,
}

/// Long-format table row: one per cell and metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub prior: String,
    pub replicate: usize,
    pub metric: String,
    pub value: f64,
}

/// Per-coefficient record for plotting estimates against the truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub scenario: String,
    pub prior: String,
    pub replicate: usize,
    pub segment: usize,
    pub variable: usize,
    pub truth: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CellResult {
    pub fn metric_rows(&self) -> Vec<MetricRow> {
        let row = |metric: String, value: f64| MetricRow {
            scenario: self.scenario.clone(),
            prior: self.family.name().into(),
            replicate: self.replicate,
            metric,
            value,
        };
        let mut out = Vec::new();
        for (i, iv) in self.tau.iter().enumerate() {
            out.push(row(format!("tau{}_median", i + 1), iv.median));
            out.push(row(format!("tau{}_lower", i + 1), iv.lower));
            out.push(row(format!("tau{}_upper", i + 1), iv.upper));
        }
        for s in 0..self.selection.correct.len() {
            out.push(row(format!("C{}", s + 1), self.selection.correct[s] as f64));
            out.push(row(format!("IC{}", s + 1), self.selection.incorrect[s] as f64));
            out.push(row(format!("MSE{}", s + 1), self.selection.mse[s]));
        }
        out.push(row("tau_acceptance".into(), self.tau_acceptance));
        out
    }

    pub fn coefficient_rows(&self, truth: &[Vec<f64>]) -> Vec<CoefficientRow> {
        let mut out = Vec::new();
        for (s, ivs) in self.beta.iter().enumerate() {
            for (j, iv) in ivs.iter().enumerate() {
                out.push(CoefficientRow {
                    scenario: self.scenario.clone(),
                    prior: self.family.name().into(),
                    replicate: self.replicate,
                    segment: s,
                    variable: j,
                    truth: truth[s][j],
                    estimate: self.beta_hat[s][j],
                    lower: iv.lower,
                    upper: iv.upper,
                });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub iterations: usize,
    pub burn_in: usize,
    /// Replicate `r` (1-based) uses the preset seed plus `r - 1`.
    pub replicates: usize,
    pub level: f64,
    pub estimate: PointEstimate,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            iterations: 40_000,
            burn_in: 20_000,
            replicates: 1,
            level: 0.95,
            estimate: PointEstimate::Median,
        }
    }
}

/// Fits every preset x prior family x replicate cell as an independent job.
pub fn run_scenario_grid(
    presets: &[Preset],
    families: &[PriorFamily],
    settings: &GridSettings,
    exec: Execution,
) -> Result<Vec<CellResult>> {
    let mut jobs = Vec::new();
    for preset in presets {
        for &family in families {
            for r in 1..=settings.replicates.max(1) {
                jobs.push((preset, family, r));
            }
        }
    }
    parallel::map(exec, jobs, |(preset, family, r)| run_cell(preset, family, r, settings))
        .into_iter()
        .collect()
}

fn run_cell(preset: &Preset, family: PriorFamily, replicate: usize, settings: &GridSettings) -> Result<CellResult> {
    let mut preset = preset.clone();
    preset.scenario.seed = preset.scenario.seed.wrapping_add(replicate as u64 - 1);
    let (data, truth) = gen_dataset(&preset.scenario)?;
    let config = preset.chain_config(settings.iterations, settings.burn_in, family);
    let samples = run_chain(&data, &config)?;
    let summary = summarize(&samples, None, settings.level)?;
    let beta_hat: Vec<Vec<f64>> = match settings.estimate {
        PointEstimate::Median => summary.beta.iter().map(|s| s.iter().map(|iv| iv.median).collect()).collect(),
        PointEstimate::Mean => (0..samples.num_segments())
            .map(|s| (0..samples.p).map(|j| crate::stats::mean(&samples.beta_series(s, j))).collect())
            .collect(),
    };
    let (correct, incorrect) = selection_metrics(&truth.supports, &summary.selected)?;
    let mse = (0..truth.beta.len())
        .map(|s| truncated_mse(&truth.beta[s], &beta_hat[s], &truth.supports[s]))
        .collect();
    Ok(CellResult {
        scenario: preset.name.clone(),
        family,
        replicate,
        seed: preset.scenario.seed,
        tau: summary.tau,
        beta_hat,
        beta: summary.beta,
        selected: summary.selected,
        selection: SelectionReport { correct, incorrect, mse },
        tau_acceptance: summary.tau_acceptance,
    })
}
