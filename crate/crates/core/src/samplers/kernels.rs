//! Conjugate full-conditional draws.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NoiseModel;

/// Which form of the noise-variance and Lasso-penalty conditionals to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalForm {
    /// Conditionals derived from the joint model, where the coefficient prior
    /// variance scales with `sigma2` and the Lasso scales are exponential
    /// with rate `lambda2 / 2`.
    #[default]
    Exact,
    /// The simpler published forms: `sigma2 ~ IG(a + n/2, b + RSS/2)` and
    /// `lambda2 ~ Gamma(r + p/2, s + ||eta||^2 / 2)`. Not invariant for the
    /// joint model; kept for comparison runs.
    Published,
}

impl ConditionalForm {
    pub fn from_exact_flag(exact: bool) -> Self {
        if exact {
            ConditionalForm::Exact
        } else {
            ConditionalForm::Published
        }
    }

    pub fn is_exact(self) -> bool {
        self == ConditionalForm::Exact
    }
}

/// Floor applied to `|beta|` (relative to `sigma`) before inverse-Gaussian
/// draws; the conditional mean diverges at zero.
pub const BETA_CLAMP: f64 = 1e-10;

fn numerical(detail: impl Into<String>) -> Error {
    Error::Numerical {
        sweep: None,
        segment: 0,
        detail: detail.into(),
    }
}

/// Draws `beta ~ N(A^-1 c, sigma2 A^-1)` with `A = gram + diag(prior_diag)^-1`.
///
/// With the Cholesky factor `A = L L'`, the draw is `L'^-1 (L^-1 c + sigma z)`
/// for standard normal `z`: one forward and one backward substitution.
pub fn sample_beta_segment<R: Rng + ?Sized>(
    gram: &DMatrix<f64>,
    cross: &DVector<f64>,
    sigma2: f64,
    prior_diag: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let p = cross.len();
    if gram.nrows() != p || gram.ncols() != p || prior_diag.len() != p {
        return Err(Error::Dimension(format!(
            "gram {}x{}, cross {p}, prior diagonal {}",
            gram.nrows(),
            gram.ncols(),
            prior_diag.len()
        )));
    }
    let mut a = gram.clone();
    for j in 0..p {
        a[(j, j)] += 1.0 / prior_diag[j];
    }
    let chol = a.cholesky().ok_or_else(|| {
        numerical("coefficient precision matrix is not positive definite (NaN contamination?)")
    })?;
    let l = chol.l_dirty();
    let mut w = cross.clone();
    if !l.solve_lower_triangular_mut(&mut w) {
        return Err(numerical("singular Cholesky factor"));
    }
    let sd = sigma2.sqrt();
    for v in w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sd * z;
    }
    if !l.tr_solve_lower_triangular_mut(&mut w) {
        return Err(numerical("singular Cholesky factor"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(numerical("non-finite coefficient draw"));
    }
    Ok(w)
}

/// Draws the noise variance from its inverse-gamma conditional.
///
/// `Exact`: `IG(a + n/2 + count/2, b + rss/2 + quad/2)`.
/// `Published`: `IG(a + n/2, b + rss/2)`.
pub fn sample_sigma2<R: Rng + ?Sized>(
    residual_ss: f64,
    prior_quadratic: f64,
    n: usize,
    total_coeff_count: usize,
    noise: &NoiseModel,
    form: ConditionalForm,
    rng: &mut R,
) -> Result<f64> {
    if residual_ss < 0.0 || prior_quadratic < 0.0 || !residual_ss.is_finite() {
        return Err(Error::domain(format!(
            "sums of squares must be nonnegative, got rss = {residual_ss}, quad = {prior_quadratic}"
        )));
    }
    let (shape, scale) = match form {
        ConditionalForm::Exact => (
            noise.a_sigma + 0.5 * n as f64 + 0.5 * total_coeff_count as f64,
            noise.b_sigma + 0.5 * residual_ss + 0.5 * prior_quadratic,
        ),
        ConditionalForm::Published => (
            noise.a_sigma + 0.5 * n as f64,
            noise.b_sigma + 0.5 * residual_ss,
        ),
    };
    inverse_gamma(shape, scale, rng)
}

/// `1 / Gamma(shape, rate = scale)`.
pub fn inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    let g = gamma_rate(shape, scale, rng)?;
    Ok(1.0 / g)
}

/// Gamma draw parameterized by shape and rate.
pub fn gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::domain(format!("gamma(shape {shape}, rate {rate}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Posterior slab probability for one coefficient, from fully normalized
/// spike `N(0, sigma2 gamma0)` and slab `N(0, sigma2 gamma1)` densities.
pub fn slab_probability(beta: f64, sigma2: f64, gamma0: f64, gamma1: f64, q: f64) -> f64 {
    let b2 = beta * beta / (2.0 * sigma2);
    let log_odds = q.ln() - (-q).ln_1p() - 0.5 * (gamma1 / gamma0).ln() - b2 / gamma1 + b2 / gamma0;
    logistic(log_odds)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draws the inclusion indicators of one segment. Forced entries are 1.
pub fn sample_inclusion<R: Rng + ?Sized>(
    beta_k: &DVector<f64>,
    sigma2: f64,
    gamma0: f64,
    gamma1: f64,
    q: f64,
    forced_in: &[bool],
    rng: &mut R,
) -> Vec<bool> {
    beta_k
        .iter()
        .zip(forced_in)
        .map(|(&b, &forced)| {
            // Always consume a uniform so forced masks don't shift the stream.
            let u: f64 = rng.random();
            forced || u < slab_probability(b, sigma2, gamma0, gamma1, q)
        })
        .collect()
}

/// Inverse-Gaussian draw (Michael, Schucany and Haas transformation).
///
/// The smaller root is taken as `mean^2 / x_big`, which stays accurate when
/// `mean` is huge relative to `shape`.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    debug_assert!(mean > 0.0 && shape > 0.0);
    let nu: f64 = rng.sample(StandardNormal);
    let y = nu * nu;
    let my = mean * y;
    let big = mean + mean * my / (2.0 * shape)
        + mean / (2.0 * shape) * (4.0 * shape * my + my * my).sqrt();
    let small = mean * (mean / big);
    let u: f64 = rng.random();
    if u <= mean / (mean + small) {
        small
    } else {
        big
    }
}

/// Draws the Lasso scales of one segment:
/// `1/eta_j ~ InvGauss(sqrt(lambda2 sigma2 / beta_j^2), lambda2)`.
pub fn sample_lasso_eta<R: Rng + ?Sized>(
    beta_k: &DVector<f64>,
    sigma2: f64,
    lambda2: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(lambda2 > 0.0 && sigma2 > 0.0) {
        return Err(Error::domain(format!(
            "lambda2 and sigma2 must be positive, got {lambda2}, {sigma2}"
        )));
    }
    let floor = BETA_CLAMP * sigma2.sqrt();
    let mut out = DVector::zeros(beta_k.len());
    for (o, &b) in out.iter_mut().zip(beta_k.iter()) {
        let b = b.abs().max(floor);
        let mean = (lambda2 * sigma2).sqrt() / b;
        *o = 1.0 / sample_inverse_gaussian(mean, lambda2, rng);
    }
    Ok(out)
}

/// Draws a segment's squared Lasso penalty.
///
/// `Exact`: `Gamma(r + p, s + sum(eta)/2)`.
/// `Published`: `Gamma(r + p/2, s + ||eta||^2 / 2)`.
pub fn sample_lasso_lambda2<R: Rng + ?Sized>(
    eta_k: &DVector<f64>,
    r: f64,
    s: f64,
    form: ConditionalForm,
    rng: &mut R,
) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::domain(format!("r and s must be positive, got {r}, {s}")));
    }
    let p = eta_k.len() as f64;
    let (shape, rate) = match form {
        ConditionalForm::Exact => (r + p, s + 0.5 * eta_k.sum()),
        ConditionalForm::Published => (r + 0.5 * p, s + 0.5 * eta_k.norm_squared()),
    };
    gamma_rate(shape, rate, rng)
}

/// Group scales for two-member groups `zeta_j = (beta_1j, beta_2j)` under
/// `zeta_j ~ N(0, sigma2 eta_j I)`, `eta_j ~ Gamma(3/2, rate lambda2)`:
/// `1/eta_j ~ InvGauss(sqrt(2 lambda2 sigma2) / ||zeta_j||, 2 lambda2)`.
pub fn sample_grouplasso_eta<R: Rng + ?Sized>(
    zeta_norms: &[f64],
    sigma2: f64,
    lambda2: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(lambda2 > 0.0 && sigma2 > 0.0) {
        return Err(Error::domain(format!(
            "lambda2 and sigma2 must be positive, got {lambda2}, {sigma2}"
        )));
    }
    let floor = BETA_CLAMP * sigma2.sqrt();
    let shape = 2.0 * lambda2;
    Ok(DVector::from_iterator(
        zeta_norms.len(),
        zeta_norms.iter().map(|&nrm| {
            let nrm = nrm.abs().max(floor);
            let mean = (shape * sigma2).sqrt() / nrm;
            1.0 / sample_inverse_gaussian(mean, shape, rng)
        }),
    ))
}

/// `lambda2 | eta ~ Gamma(r + 3p/2, s + sum(eta))`.
pub fn sample_grouplasso_lambda2<R: Rng + ?Sized>(
    eta: &DVector<f64>,
    r: f64,
    s: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::domain(format!("r and s must be positive, got {r}, {s}")));
    }
    gamma_rate(r + 1.5 * eta.len() as f64, s + eta.sum(), rng)
}

/// Both group-Lasso latent blocks: the scales given the current penalty, then
/// the penalty given the new scales.
pub fn sample_grouplasso_latents<R: Rng + ?Sized>(
    zeta_norms: &[f64],
    sigma2: f64,
    lambda2: f64,
    r: f64,
    s: f64,
    rng: &mut R,
) -> Result<(DVector<f64>, f64)> {
    let eta = sample_grouplasso_eta(zeta_norms, sigma2, lambda2, rng)?;
    let lambda2 = sample_grouplasso_lambda2(&eta, r, s, rng)?;
    Ok((eta, lambda2))
}
