use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    log_likelihood, partition_by_threshold, residual_sum_of_squares, ChangePointState, Dataset,
    McmcState, NoiseModel, PriorSpec,
};

use super::kernels::{
    sample_beta_segment, sample_grouplasso_eta, sample_grouplasso_lambda2, sample_inclusion,
    sample_lasso_eta, sample_lasso_lambda2, sample_sigma2, ConditionalForm,
};
use super::metropolis::metropolis_tau;
use super::workspace::KernelWorkspace;

/// Static settings of a Gibbs sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSettings {
    pub prior: PriorSpec,
    pub noise: NoiseModel,
    pub form: ConditionalForm,
    pub proposal_sd: f64,
}

/// One Markov chain: state, cached segment statistics and acceptance
/// counters. The dataset is passed to each call rather than held.
#[derive(Clone, Debug)]
pub struct GibbsSampler {
    settings: KernelSettings,
    state: McmcState,
    ws: KernelWorkspace,
    tau_proposals: u64,
    tau_accepts: u64,
}

impl GibbsSampler {
    pub fn new(data: &Dataset, settings: KernelSettings, state: McmcState) -> Result<Self> {
        let segments = state.cp.num_segments();
        settings.prior.validate(segments, data.p())?;
        if !(settings.proposal_sd > 0.0) {
            return Err(Error::config(format!(
                "proposal sd must be positive, got {}",
                settings.proposal_sd
            )));
        }
        check_state_shape(&state, &settings.prior, data.p())?;
        let ws = KernelWorkspace::new(data, &state.cp);
        if segments > 1 && !ws.partition().satisfies_min_size() {
            return Err(Error::InsufficientData(format!(
                "initial change points {:?} leave a segment with fewer than {} rows",
                state.cp.tau,
                crate::model::MIN_SEGMENT_SIZE
            )));
        }
        Ok(Self {
            settings,
            state,
            ws,
            tau_proposals: 0,
            tau_accepts: 0,
        })
    }

    pub fn state(&self) -> &McmcState {
        &self.state
    }

    pub fn settings(&self) -> &KernelSettings {
        &self.settings
    }

    pub fn workspace(&self) -> &KernelWorkspace {
        &self.ws
    }

    /// Replaces the state (e.g. with a fresh prior draw). Segment statistics
    /// are rebuilt for the new change points.
    pub fn set_state(&mut self, data: &Dataset, state: McmcState) -> Result<()> {
        check_state_shape(&state, &self.settings.prior, data.p())?;
        self.ws = KernelWorkspace::new(data, &state.cp);
        self.state = state;
        Ok(())
    }

    /// Call after the response vector changed but covariates did not.
    pub fn refresh_response(&mut self, data: &Dataset) {
        self.ws.refresh_cross(data);
    }

    pub fn tau_acceptance_rate(&self) -> f64 {
        if self.tau_proposals == 0 {
            0.0
        } else {
            self.tau_accepts as f64 / self.tau_proposals as f64
        }
    }

    pub fn log_likelihood(&self, data: &Dataset) -> Result<f64> {
        log_likelihood(data, self.ws.partition(), &self.state.beta, self.state.sigma2)
    }

    /// One full sweep: coefficients and their latent selectors/scales segment
    /// by segment, then the noise variance, the Lasso penalties and finally
    /// the change points.
    pub fn sweep<R: Rng + ?Sized>(&mut self, data: &Dataset, rng: &mut R) -> Result<()> {
        self.update_coefficients(rng)?;
        self.update_sigma2(data, rng)?;
        self.update_penalties(rng)?;
        if self.state.cp.k() > 0 {
            self.update_tau(data, rng);
        }
        Ok(())
    }

    fn update_coefficients<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let segments = self.state.cp.num_segments();
        let sigma2 = self.state.sigma2;
        for k in 0..segments {
            let diag = self.state.prior_diag(&self.settings.prior, k);
            let beta = sample_beta_segment(self.ws.gram(k), self.ws.cross(k), sigma2, &diag, rng)
                .map_err(|e| in_segment(e, k))?;
            match &self.settings.prior {
                PriorSpec::Basad(b) => {
                    let s = b.segments[k];
                    self.state.z[k] =
                        sample_inclusion(&beta, sigma2, s.gamma0, s.gamma1, s.q, &b.forced_in[k], rng);
                }
                PriorSpec::Lasso { .. } => {
                    self.state.eta[k] = sample_lasso_eta(&beta, sigma2, self.state.lambda2[k], rng)?;
                }
                PriorSpec::GroupLasso(_) => {}
            }
            self.state.beta[k] = beta;
        }
        if let PriorSpec::GroupLasso(_) = self.settings.prior {
            let norms = group_norms(&self.state.beta);
            self.state.eta[0] = sample_grouplasso_eta(&norms, sigma2, self.state.lambda2[0], rng)?;
        }
        Ok(())
    }

    fn update_sigma2<R: Rng + ?Sized>(&mut self, data: &Dataset, rng: &mut R) -> Result<()> {
        let rss = residual_sum_of_squares(data, self.ws.partition(), &self.state.beta)?;
        let segments = self.state.cp.num_segments();
        let mut quad = 0.0;
        for k in 0..segments {
            let diag = self.state.prior_diag(&self.settings.prior, k);
            quad += self.state.beta[k]
                .iter()
                .zip(diag.iter())
                .map(|(b, d)| b * b / d)
                .sum::<f64>();
        }
        let sigma2 = sample_sigma2(
            rss,
            quad,
            data.n(),
            segments * data.p(),
            &self.settings.noise,
            self.settings.form,
            rng,
        )?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Numerical {
                sweep: None,
                segment: 0,
                detail: format!("noise variance draw {sigma2}"),
            });
        }
        self.state.sigma2 = sigma2;
        Ok(())
    }

    fn update_penalties<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        match &self.settings.prior {
            PriorSpec::Basad(_) => {}
            PriorSpec::Lasso { segments } => {
                for (k, h) in segments.iter().enumerate() {
                    self.state.lambda2[k] =
                        sample_lasso_lambda2(&self.state.eta[k], h.r, h.s, self.settings.form, rng)?;
                }
            }
            PriorSpec::GroupLasso(h) => {
                self.state.lambda2[0] = sample_grouplasso_lambda2(&self.state.eta[0], h.r, h.s, rng)?;
            }
        }
        Ok(())
    }

    fn update_tau<R: Rng + ?Sized>(&mut self, data: &Dataset, rng: &mut R) {
        let step = metropolis_tau(
            &self.state.cp,
            self.ws.partition(),
            &self.state.beta,
            self.state.sigma2,
            data,
            self.settings.proposal_sd,
            rng,
        );
        self.tau_proposals += 1;
        if step.accepted {
            self.tau_accepts += 1;
            if &step.partition != self.ws.partition() {
                self.ws.move_to(data, step.partition);
            }
            self.state.cp = step.cp;
        }
    }
}

/// `||(beta_1j, ..., beta_Sj)||` for every column `j`.
pub fn group_norms(beta: &[DVector<f64>]) -> Vec<f64> {
    let p = beta.first().map_or(0, |b| b.len());
    (0..p)
        .map(|j| beta.iter().map(|b| b[j] * b[j]).sum::<f64>().sqrt())
        .collect()
}

fn in_segment(e: Error, k: usize) -> Error {
    match e {
        Error::Numerical { sweep, detail, .. } => Error::Numerical {
            sweep,
            segment: k,
            detail,
        },
        other => other,
    }
}

fn check_state_shape(state: &McmcState, prior: &PriorSpec, p: usize) -> Result<()> {
    let segments = state.cp.num_segments();
    let bad = |what: &str| Err(Error::Dimension(format!("state {what} inconsistent with K and p")));
    if state.beta.len() != segments || state.beta.iter().any(|b| b.len() != p) {
        return bad("beta");
    }
    if !(state.sigma2 > 0.0) {
        return Err(Error::domain("state sigma2 must be positive"));
    }
    match prior {
        PriorSpec::Basad(_) => {
            if state.z.len() != segments || state.z.iter().any(|z| z.len() != p) {
                return bad("Z");
            }
        }
        PriorSpec::Lasso { .. } => {
            if state.eta.len() != segments
                || state.eta.iter().any(|e| e.len() != p || e.iter().any(|v| !(*v > 0.0)))
            {
                return bad("eta");
            }
            if state.lambda2.len() != segments || state.lambda2.iter().any(|l| !(*l > 0.0)) {
                return bad("lambda2");
            }
        }
        PriorSpec::GroupLasso(_) => {
            if state.eta.len() != 1 || state.eta[0].len() != p {
                return bad("eta");
            }
            if state.lambda2.len() != 1 || !(state.lambda2[0] > 0.0) {
                return bad("lambda2");
            }
        }
    }
    Ok(())
}

/// Deterministic starting point: zero coefficients, all spikes except forced
/// entries, unit scales and penalties, the sample variance of `y`, and change
/// points equally spaced inside their bounds.
pub fn initial_state(data: &Dataset, prior: &PriorSpec, k: usize, bounds: (f64, f64)) -> Result<McmcState> {
    let cp = ChangePointState::equally_spaced(k, bounds.0, bounds.1)?;
    let p = data.p();
    let segments = k + 1;
    let sigma2 = if data.n() >= 2 {
        data.response_variance(0..data.n())?
    } else {
        1.0
    };
    let sigma2 = if sigma2 > 0.0 { sigma2 } else { 1.0 };
    let (z, eta, lambda2) = match prior {
        PriorSpec::Basad(b) => (b.forced_in.clone(), vec![], vec![]),
        PriorSpec::Lasso { .. } => (vec![], vec![DVector::from_element(p, 1.0); segments], vec![1.0; segments]),
        PriorSpec::GroupLasso(_) => (vec![], vec![DVector::from_element(p, 1.0)], vec![1.0]),
    };
    let state = McmcState {
        beta: vec![DVector::zeros(p); segments],
        z,
        eta,
        lambda2,
        sigma2,
        cp,
    };
    let part = partition_by_threshold(data.t(), &state.cp);
    if k > 0 && !part.satisfies_min_size() {
        return Err(Error::InsufficientData(format!(
            "initial change points {:?} give segment sizes {:?}",
            state.cp.tau,
            part.counts()
        )));
    }
    Ok(state)
}
