//! Markov kernels for the segmented regression: coefficient, noise-variance,
//! inclusion-indicator and latent-scale Gibbs draws plus the random-walk
//! Metropolis move on the change points.

mod kernels;
mod metropolis;
mod sweep;
mod workspace;

pub use kernels::{
    gamma_rate, inverse_gamma, sample_beta_segment, sample_grouplasso_eta, sample_grouplasso_lambda2,
    sample_grouplasso_latents, sample_inclusion, sample_inverse_gaussian, sample_lasso_eta,
    sample_lasso_lambda2, sample_sigma2, slab_probability, ConditionalForm, BETA_CLAMP,
};
pub use metropolis::{metropolis_tau, ordered_uniform_log_prior, tau_log_acceptance, TauStep};
pub use sweep::{group_norms, initial_state, GibbsSampler, KernelSettings};
pub use workspace::KernelWorkspace;
