use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    default_basad_scales, partition_by_threshold, solve_prior_inclusion, BasadPrior, BasadSegment,
    ChangePointState, Dataset, GammaHyper, NoiseModel, PriorFamily, PriorSpec,
};
use crate::rng::RngStream;
use crate::samplers::{initial_state, ConditionalForm, GibbsSampler, KernelSettings};

/// How the coefficient prior is obtained for a given number of change points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorChoice {
    /// Hyperparameters given explicitly; must match the segment count.
    Fixed { spec: PriorSpec },
    /// Spike-and-slab with data-driven scales computed on the segments of the
    /// initial change points, and `q` set so that the prior model size
    /// exceeds its threshold with probability `tail_prob`.
    BasadDefault {
        tail_prob: f64,
        /// Per-variable forced inclusion, applied to every segment.
        #[serde(default)]
        forced_in: Vec<bool>,
    },
    /// Bayesian Lasso with the same Gamma hyperprior in every segment.
    Lasso { hyper: GammaHyper },
    /// Group Lasso over `(beta_1j, beta_2j)`; single change point only.
    GroupLasso { hyper: GammaHyper },
}

impl Default for PriorChoice {
    fn default() -> Self {
        PriorChoice::BasadDefault {
            tail_prob: 0.1,
            forced_in: vec![],
        }
    }
}

impl PriorChoice {
    pub fn family(&self) -> PriorFamily {
        match self {
            PriorChoice::Fixed { spec } => spec.family(),
            PriorChoice::BasadDefault { .. } => PriorFamily::Basad,
            PriorChoice::Lasso { .. } => PriorFamily::Lasso,
            PriorChoice::GroupLasso { .. } => PriorFamily::GroupLasso,
        }
    }

    pub fn default_for(family: PriorFamily) -> Self {
        match family {
            PriorFamily::Basad => PriorChoice::default(),
            PriorFamily::Lasso => PriorChoice::Lasso {
                hyper: GammaHyper::default(),
            },
            PriorFamily::GroupLasso => PriorChoice::GroupLasso {
                hyper: GammaHyper::default(),
            },
        }
    }

    pub fn resolve(&self, data: &Dataset, k: usize, bounds: (f64, f64)) -> Result<PriorSpec> {
        let segments = k + 1;
        let spec = match self {
            PriorChoice::Fixed { spec } => spec.clone(),
            PriorChoice::BasadDefault {
                tail_prob,
                forced_in,
            } => {
                let p = data.p();
                let mask = if forced_in.is_empty() {
                    vec![false; p]
                } else if forced_in.len() == p {
                    forced_in.clone()
                } else {
                    return Err(Error::config(format!(
                        "forced-inclusion mask has {} entries for {p} covariates",
                        forced_in.len()
                    )));
                };
                let cp0 = ChangePointState::equally_spaced(k, bounds.0, bounds.1)?;
                let part = partition_by_threshold(data.t(), &cp0);
                let mut segs = Vec::with_capacity(segments);
                for s in 0..segments {
                    let range = part.range(s);
                    let n_k = range.len();
                    let var = data.response_variance(range)?;
                    let (gamma0, gamma1) = default_basad_scales(var, n_k, p)?;
                    let q = solve_prior_inclusion(p, n_k, *tail_prob)?.q;
                    segs.push(BasadSegment { gamma0, gamma1, q });
                }
                PriorSpec::Basad(BasadPrior {
                    segments: segs,
                    forced_in: vec![mask; segments],
                })
            }
            PriorChoice::Lasso { hyper } => PriorSpec::Lasso {
                segments: vec![*hyper; segments],
            },
            PriorChoice::GroupLasso { hyper } => PriorSpec::GroupLasso(*hyper),
        };
        spec.validate(segments, data.p())?;
        Ok(spec)
    }
}

/// Everything that determines a chain, given the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Chain index; selects the RNG stream together with `k`.
    #[serde(default)]
    pub chain: usize,
    pub proposal_sd: f64,
    pub prior: PriorChoice,
    pub noise: NoiseModel,
    pub cp_bounds: (f64, f64),
    pub k: usize,
    #[serde(default)]
    pub conditionals: ConditionalForm,
    /// Start change points at a seed-dependent random point of the support
    /// instead of the equally spaced default.
    #[serde(default)]
    pub jitter_start: bool,
}

impl ChainConfig {
    /// Long-run defaults: 100,000 sweeps with the first 50,000 discarded,
    /// no thinning, `IG(2, 1)` noise prior, BASAD with default scales.
    pub fn new(k: usize, cp_bounds: (f64, f64)) -> Self {
        Self {
            iterations: 100_000,
            burn_in: 50_000,
            thin: 1,
            seed: 0,
            chain: 0,
            proposal_sd: 0.1f64.sqrt(),
            prior: PriorChoice::default(),
            noise: NoiseModel::default(),
            cp_bounds,
            k,
            conditionals: ConditionalForm::Exact,
            jitter_start: false,
        }
    }

    pub fn with_sweeps(mut self, iterations: usize, burn_in: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_prior(mut self, prior: PriorChoice) -> Self {
        self.prior = prior;
        self
    }

    pub fn retained_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::config("thin must be at least 1"));
        }
        if !(self.proposal_sd > 0.0) {
            return Err(Error::config("proposal sd must be positive"));
        }
        if !(self.cp_bounds.0 < self.cp_bounds.1) {
            return Err(Error::config(format!(
                "change-point bounds {:?} must be increasing",
                self.cp_bounds
            )));
        }
        NoiseModel::new(self.noise.a_sigma, self.noise.b_sigma)?;
        Ok(())
    }

    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed, RngStream::chain_stream_id(self.k, self.chain))
    }
}

/// Retained draws of one chain. Arrays are flattened draw-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSamples {
    pub k: usize,
    pub p: usize,
    pub prior: PriorSpec,
    pub cp_bounds: (f64, f64),
    /// `draws x segments x p`.
    pub beta: Vec<f64>,
    /// `draws x segments x p`, BASAD only.
    pub z: Vec<u8>,
    /// `draws x eta_len`: `segments x p` for the Lasso, `p` for the group
    /// Lasso.
    pub eta: Vec<f64>,
    /// `draws x lambda_len`.
    pub lambda2: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// `draws x k`.
    pub tau: Vec<f64>,
    pub log_lik: Vec<f64>,
    pub tau_acceptance: f64,
}

impl PosteriorSamples {
    fn empty(k: usize, p: usize, prior: PriorSpec, cp_bounds: (f64, f64), capacity: usize) -> Self {
        let segs = k + 1;
        let has_z = matches!(prior, PriorSpec::Basad(_));
        let (eta_len, lambda_len) = eta_lambda_len(&prior, segs, p);
        Self {
            k,
            p,
            cp_bounds,
            beta: Vec::with_capacity(capacity * segs * p),
            z: Vec::with_capacity(if has_z { capacity * segs * p } else { 0 }),
            eta: Vec::with_capacity(capacity * eta_len),
            lambda2: Vec::with_capacity(capacity * lambda_len),
            sigma2: Vec::with_capacity(capacity),
            tau: Vec::with_capacity(capacity * k),
            log_lik: Vec::with_capacity(capacity),
            tau_acceptance: 0.0,
            prior,
        }
    }

    pub fn num_segments(&self) -> usize {
        self.k + 1
    }

    pub fn n_draws(&self) -> usize {
        self.sigma2.len()
    }

    pub fn family(&self) -> PriorFamily {
        self.prior.family()
    }

    pub fn eta_len(&self) -> usize {
        eta_lambda_len(&self.prior, self.num_segments(), self.p).0
    }

    pub fn lambda_len(&self) -> usize {
        eta_lambda_len(&self.prior, self.num_segments(), self.p).1
    }

    pub fn beta_at(&self, draw: usize, seg: usize, j: usize) -> f64 {
        self.beta[(draw * self.num_segments() + seg) * self.p + j]
    }

    pub fn beta_draw(&self, draw: usize) -> Vec<DVector<f64>> {
        (0..self.num_segments())
            .map(|s| {
                let off = (draw * self.num_segments() + s) * self.p;
                DVector::from_column_slice(&self.beta[off..off + self.p])
            })
            .collect()
    }

    pub fn beta_series(&self, seg: usize, j: usize) -> Vec<f64> {
        (0..self.n_draws()).map(|d| self.beta_at(d, seg, j)).collect()
    }

    pub fn tau_draw(&self, draw: usize) -> &[f64] {
        &self.tau[draw * self.k..(draw + 1) * self.k]
    }

    pub fn tau_series(&self, i: usize) -> Vec<f64> {
        (0..self.n_draws()).map(|d| self.tau[d * self.k + i]).collect()
    }

    pub fn lambda2_series(&self, i: usize) -> Vec<f64> {
        let len = self.lambda_len();
        (0..self.n_draws()).map(|d| self.lambda2[d * len + i]).collect()
    }

    /// Posterior inclusion probabilities `P(Z_kj = 1 | y)`, BASAD only.
    pub fn inclusion_probabilities(&self) -> Option<Vec<Vec<f64>>> {
        if !matches!(self.prior, PriorSpec::Basad(_)) {
            return None;
        }
        let segs = self.num_segments();
        let mut counts = vec![vec![0usize; self.p]; segs];
        for d in 0..self.n_draws() {
            for (s, row) in counts.iter_mut().enumerate() {
                let off = (d * segs + s) * self.p;
                for (c, &z) in row.iter_mut().zip(&self.z[off..off + self.p]) {
                    *c += z as usize;
                }
            }
        }
        let n = self.n_draws().max(1) as f64;
        Some(
            counts
                .into_iter()
                .map(|row| row.into_iter().map(|c| c as f64 / n).collect())
                .collect(),
        )
    }

    /// Concatenates the draws of several chains of the same model.
    pub fn concat(chains: &[PosteriorSamples]) -> Result<Self> {
        let first = chains
            .first()
            .ok_or_else(|| Error::config("no chains to concatenate"))?;
        let mut out = first.clone();
        let mut accepted = first.tau_acceptance * first.n_draws() as f64;
        for c in &chains[1..] {
            if c.k != first.k || c.p != first.p || c.prior != first.prior {
                return Err(Error::config("chains describe different models"));
            }
            out.beta.extend_from_slice(&c.beta);
            out.z.extend_from_slice(&c.z);
            out.eta.extend_from_slice(&c.eta);
            out.lambda2.extend_from_slice(&c.lambda2);
            out.sigma2.extend_from_slice(&c.sigma2);
            out.tau.extend_from_slice(&c.tau);
            out.log_lik.extend_from_slice(&c.log_lik);
            accepted += c.tau_acceptance * c.n_draws() as f64;
        }
        out.tau_acceptance = if out.n_draws() > 0 {
            accepted / out.n_draws() as f64
        } else {
            0.0
        };
        Ok(out)
    }

    fn push(&mut self, sampler: &GibbsSampler, log_lik: f64) {
        let st = sampler.state();
        for b in &st.beta {
            self.beta.extend_from_slice(b.as_slice());
        }
        for z in &st.z {
            self.z.extend(z.iter().map(|&v| v as u8));
        }
        for e in &st.eta {
            self.eta.extend_from_slice(e.as_slice());
        }
        self.lambda2.extend_from_slice(&st.lambda2);
        self.sigma2.push(st.sigma2);
        self.tau.extend_from_slice(&st.cp.tau);
        self.log_lik.push(log_lik);
    }
}

fn eta_lambda_len(prior: &PriorSpec, segs: usize, p: usize) -> (usize, usize) {
    match prior {
        PriorSpec::Basad(_) => (0, 0),
        PriorSpec::Lasso { .. } => (segs * p, segs),
        PriorSpec::GroupLasso(_) => (p, 1),
    }
}

/// Runs one chain from the deterministic (or seed-jittered) start and keeps
/// every `thin`-th draw after burn-in.
pub fn run_chain(data: &Dataset, config: &ChainConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    let prior = config.prior.resolve(data, config.k, config.cp_bounds)?;
    let mut rng = config.rng();
    let mut state = initial_state(data, &prior, config.k, config.cp_bounds)?;
    if config.jitter_start && config.k > 0 {
        state.cp = jittered_start(data, config, &mut rng.derive(1))?;
    }
    let settings = KernelSettings {
        prior: prior.clone(),
        noise: config.noise,
        form: config.conditionals,
        proposal_sd: config.proposal_sd,
    };
    let mut sampler = GibbsSampler::new(data, settings, state)?;
    let mut out = PosteriorSamples::empty(
        config.k,
        data.p(),
        prior,
        config.cp_bounds,
        config.retained_draws(),
    );
    for sweep in 0..config.iterations {
        sampler.sweep(data, &mut rng).map_err(|e| e.at_sweep(sweep))?;
        if sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thin == 0 {
            let ll = sampler.log_likelihood(data).map_err(|e| e.at_sweep(sweep))?;
            out.push(&sampler, ll);
        }
    }
    out.tau_acceptance = sampler.tau_acceptance_rate();
    Ok(out)
}

/// Uniformly drawn ordered change points that satisfy the minimum segment
/// size, by rejection from the ordered-uniform prior.
fn jittered_start(data: &Dataset, config: &ChainConfig, rng: &mut RngStream) -> Result<ChangePointState> {
    let (a, b) = config.cp_bounds;
    for _ in 0..10_000 {
        let mut tau: Vec<f64> = (0..config.k).map(|_| a + (b - a) * rng.random::<f64>()).collect();
        tau.sort_by(f64::total_cmp);
        if let Ok(cp) = ChangePointState::new(tau, a, b) {
            if partition_by_threshold(data.t(), &cp).satisfies_min_size() {
                return Ok(cp);
            }
        }
    }
    Err(Error::InsufficientData(
        "could not place change points with the minimum segment size".into(),
    ))
}
