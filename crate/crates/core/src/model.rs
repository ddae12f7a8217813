//! Domain types shared by every sampler: the data triple, change points,
//! segment partitions, prior families and the Markov chain state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of observations every segment must hold. Configurations
/// violating it lie outside the change-point prior support.
pub const MIN_SEGMENT_SIZE: usize = 2;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Response `y`, covariates `x` (n×p) and threshold variable `t`, with rows
/// sorted ascending by `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    t: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset, stably sorting rows by `t`.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, t: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InsufficientData("dataset has no rows".into()));
        }
        if x.ncols() == 0 {
            return Err(Error::Dimension("dataset has no covariates".into()));
        }
        if x.nrows() != n || t.len() != n {
            return Err(Error::Dimension(format!(
                "y has {n} rows, X has {}, t has {}",
                x.nrows(),
                t.len()
            )));
        }
        if let Some(i) = t.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("threshold value at row {i} is not finite")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Ok(Self {
                y: DVector::from_vec(y),
                x,
                t,
            });
        }
        let y_sorted = DVector::from_iterator(n, order.iter().map(|&i| y[i]));
        let x_sorted = x.select_rows(order.iter());
        let t_sorted = order.iter().map(|&i| t[i]).collect();
        Ok(Self {
            y: y_sorted,
            x: x_sorted,
            t: t_sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// Same covariates and thresholds with a new response vector.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response has {} rows, dataset has {}",
                y.len(),
                self.n()
            )));
        }
        Ok(Self {
            y,
            x: self.x.clone(),
            t: self.t.clone(),
        })
    }

    /// Rows `range` as a new dataset.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n() {
            return Err(Error::Dimension(format!(
                "row range {range:?} invalid for {} rows",
                self.n()
            )));
        }
        let len = range.end - range.start;
        Ok(Self {
            y: self.y.rows(range.start, len).into_owned(),
            x: self.x.rows(range.start, len).into_owned(),
            t: self.t[range].to_vec(),
        })
    }

    /// Sample variance (denominator n-1) of the responses in `range`.
    pub fn response_variance(&self, range: std::ops::Range<usize>) -> Result<f64> {
        let len = range.len();
        if len < 2 {
            return Err(Error::InsufficientData(format!(
                "sample variance needs at least 2 rows, got {len}"
            )));
        }
        let ys = self.y.rows(range.start, len);
        let mean = ys.mean();
        Ok(ys.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len as f64 - 1.0))
    }
}

/// Ordered change points with the bounds of their uniform prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangePointState {
    pub tau: Vec<f64>,
    pub a_tau: f64,
    pub b_tau: f64,
}

impl ChangePointState {
    pub fn new(tau: Vec<f64>, a_tau: f64, b_tau: f64) -> Result<Self> {
        if !(a_tau < b_tau) || !a_tau.is_finite() || !b_tau.is_finite() {
            return Err(Error::config(format!(
                "change-point bounds ({a_tau}, {b_tau}) must be finite and increasing"
            )));
        }
        let cp = Self { tau, a_tau, b_tau };
        if !cp.is_ordered_in_bounds() {
            return Err(Error::config(format!(
                "change points {:?} not strictly increasing inside ({a_tau}, {b_tau})",
                cp.tau
            )));
        }
        Ok(cp)
    }

    /// `k` change points equally spaced inside the prior bounds.
    pub fn equally_spaced(k: usize, a_tau: f64, b_tau: f64) -> Result<Self> {
        let width = b_tau - a_tau;
        let tau = (1..=k)
            .map(|i| a_tau + width * i as f64 / (k as f64 + 1.0))
            .collect();
        Self::new(tau, a_tau, b_tau)
    }

    pub fn k(&self) -> usize {
        self.tau.len()
    }

    pub fn num_segments(&self) -> usize {
        self.tau.len() + 1
    }

    /// `a < tau_1 < ... < tau_K < b`.
    pub fn is_ordered_in_bounds(&self) -> bool {
        let mut prev = self.a_tau;
        for &v in &self.tau {
            if !(v > prev) {
                return false;
            }
            prev = v;
        }
        prev < self.b_tau || self.tau.is_empty()
    }
}

/// Assignment of t-sorted observations to segments. Labels are 0-based:
/// segment `k` holds observations with `tau[k-1] < t <= tau[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentPartition {
    /// First row of each segment plus a trailing `n`; segment `k` is
    /// `starts[k]..starts[k + 1]`.
    starts: Vec<usize>,
}

impl SegmentPartition {
    pub fn num_segments(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.starts[k]..self.starts[k + 1]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.starts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn segment_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(*self.starts.last().unwrap_or(&0));
        for k in 0..self.num_segments() {
            out.extend(std::iter::repeat_n(k, self.range(k).len()));
        }
        out
    }

    /// Segment holding row `i`.
    pub fn segment_of_row(&self, i: usize) -> usize {
        self.starts[1..].partition_point(|&s| s <= i)
    }

    pub fn min_count(&self) -> usize {
        self.counts().into_iter().min().unwrap_or(0)
    }

    pub fn satisfies_min_size(&self) -> bool {
        self.min_count() >= MIN_SEGMENT_SIZE
    }
}

/// Splits t-sorted observations at the change points, right-closed:
/// observation `i` is in segment `k` iff `tau[k-1] < t[i] <= tau[k]`.
pub fn partition_by_threshold(t: &[f64], cp: &ChangePointState) -> SegmentPartition {
    let mut starts = Vec::with_capacity(cp.k() + 2);
    starts.push(0);
    for &tau in &cp.tau {
        starts.push(t.partition_point(|&ti| ti <= tau));
    }
    starts.push(t.len());
    SegmentPartition { starts }
}

/// Gaussian log-likelihood of the segmented regression, constants included.
pub fn log_likelihood(
    data: &Dataset,
    part: &SegmentPartition,
    beta: &[DVector<f64>],
    sigma2: f64,
) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if beta.len() != part.num_segments() {
        return Err(Error::Dimension(format!(
            "{} coefficient vectors for {} segments",
            beta.len(),
            part.num_segments()
        )));
    }
    let rss = residual_sum_of_squares(data, part, beta)?;
    let n = data.n() as f64;
    Ok(-0.5 * n * (LN_2PI + sigma2.ln()) - 0.5 * rss / sigma2)
}

/// `sum_k ||Y_k - X_k beta_k||^2`.
pub fn residual_sum_of_squares(
    data: &Dataset,
    part: &SegmentPartition,
    beta: &[DVector<f64>],
) -> Result<f64> {
    let mut rss = 0.0;
    for (k, b) in beta.iter().enumerate() {
        if b.len() != data.p() {
            return Err(Error::Dimension(format!(
                "beta[{k}] has length {}, expected {}",
                b.len(),
                data.p()
            )));
        }
        let r = part.range(k);
        if r.is_empty() {
            continue;
        }
        let len = r.len();
        let fitted = data.x.rows(r.start, len) * b;
        rss += (data.y.rows(r.start, len) - fitted).norm_squared();
    }
    Ok(rss)
}

/// Inverse-gamma prior on the noise variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub a_sigma: f64,
    pub b_sigma: f64,
}

impl NoiseModel {
    pub fn new(a_sigma: f64, b_sigma: f64) -> Result<Self> {
        if !(a_sigma > 0.0 && b_sigma > 0.0) {
            return Err(Error::domain(format!(
                "inverse-gamma shape and scale must be positive, got ({a_sigma}, {b_sigma})"
            )));
        }
        Ok(Self { a_sigma, b_sigma })
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            a_sigma: 2.0,
            b_sigma: 1.0,
        }
    }
}

/// Spike-and-slab hyperparameters for one segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasadSegment {
    pub gamma0: f64,
    pub gamma1: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasadPrior {
    pub segments: Vec<BasadSegment>,
    /// `forced_in[k][j]`: variable `j` always takes the slab in segment `k`.
    pub forced_in: Vec<Vec<bool>>,
}

/// Gamma(shape `r`, rate `s`) hyperprior on a squared Lasso penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaHyper {
    pub r: f64,
    pub s: f64,
}

impl Default for GammaHyper {
    fn default() -> Self {
        Self { r: 1.0, s: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    Basad(BasadPrior),
    Lasso { segments: Vec<GammaHyper> },
    GroupLasso(GammaHyper),
}

impl PriorSpec {
    pub fn family(&self) -> PriorFamily {
        match self {
            PriorSpec::Basad(_) => PriorFamily::Basad,
            PriorSpec::Lasso { .. } => PriorFamily::Lasso,
            PriorSpec::GroupLasso(_) => PriorFamily::GroupLasso,
        }
    }

    /// Checks the hyperparameters against the number of segments and
    /// covariates they will be used with.
    pub fn validate(&self, num_segments: usize, p: usize) -> Result<()> {
        match self {
            PriorSpec::Basad(b) => {
                if b.segments.len() != num_segments {
                    return Err(Error::config(format!(
                        "BASAD prior has {} segments, model has {num_segments}",
                        b.segments.len()
                    )));
                }
                if b.forced_in.len() != num_segments || b.forced_in.iter().any(|m| m.len() != p) {
                    return Err(Error::config(format!(
                        "forced-inclusion mask must be {num_segments}x{p}"
                    )));
                }
                for (k, s) in b.segments.iter().enumerate() {
                    if !(s.gamma0 > 0.0 && s.gamma0 < s.gamma1 && s.gamma1.is_finite()) {
                        return Err(Error::config(format!(
                            "segment {k}: need 0 < gamma0 < gamma1, got ({}, {})",
                            s.gamma0, s.gamma1
                        )));
                    }
                    if !(s.q > 0.0 && s.q < 1.0) {
                        return Err(Error::config(format!(
                            "segment {k}: inclusion probability {} outside (0, 1)",
                            s.q
                        )));
                    }
                }
            }
            PriorSpec::Lasso { segments } => {
                if segments.len() != num_segments {
                    return Err(Error::config(format!(
                        "Lasso prior has {} segments, model has {num_segments}",
                        segments.len()
                    )));
                }
                for h in segments {
                    check_gamma_hyper(h)?;
                }
            }
            PriorSpec::GroupLasso(h) => {
                if num_segments != 2 {
                    return Err(Error::config(format!(
                        "group Lasso groups coefficients across exactly 2 segments (K = 1), got {num_segments}"
                    )));
                }
                check_gamma_hyper(h)?;
            }
        }
        Ok(())
    }
}

fn check_gamma_hyper(h: &GammaHyper) -> Result<()> {
    if !(h.r > 0.0 && h.s > 0.0) {
        return Err(Error::domain(format!(
            "gamma hyperparameters must be positive, got r = {}, s = {}",
            h.r, h.s
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorFamily {
    Basad,
    Lasso,
    GroupLasso,
}

impl PriorFamily {
    pub fn name(self) -> &'static str {
        match self {
            PriorFamily::Basad => "basad",
            PriorFamily::Lasso => "lasso",
            PriorFamily::GroupLasso => "group_lasso",
        }
    }
}

impl std::str::FromStr for PriorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "basad" => Ok(PriorFamily::Basad),
            "lasso" | "bl" => Ok(PriorFamily::Lasso),
            "group_lasso" | "grouplasso" | "bgl" => Ok(PriorFamily::GroupLasso),
            other => Err(Error::config(format!("unknown prior family '{other}'"))),
        }
    }
}

/// Current values of every sampled quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct McmcState {
    pub beta: Vec<DVector<f64>>,
    /// Inclusion indicators, BASAD only.
    pub z: Vec<Vec<bool>>,
    /// Latent scales: one vector per segment for the Lasso, a single shared
    /// vector for the group Lasso, empty for BASAD.
    pub eta: Vec<DVector<f64>>,
    /// One per segment for the Lasso, one shared value for the group Lasso.
    pub lambda2: Vec<f64>,
    pub sigma2: f64,
    pub cp: ChangePointState,
}

impl McmcState {
    /// Prior variance multipliers `D_k` so that `beta_k ~ N(0, sigma2 D_k)`.
    pub fn prior_diag(&self, prior: &PriorSpec, k: usize) -> DVector<f64> {
        match prior {
            PriorSpec::Basad(b) => {
                let s = b.segments[k];
                DVector::from_iterator(
                    self.z[k].len(),
                    self.z[k].iter().map(|&z| if z { s.gamma1 } else { s.gamma0 }),
                )
            }
            PriorSpec::Lasso { .. } => self.eta[k].clone(),
            PriorSpec::GroupLasso(_) => self.eta[0].clone(),
        }
    }
}

/// Default spike and slab scales for a segment:
/// `gamma0 = var / (10 n_k)`, `gamma1 = var * max(p^2.1 / (100 n_k), ln n_k)`.
pub fn default_basad_scales(segment_variance: f64, n_k: usize, p: usize) -> Result<(f64, f64)> {
    if n_k < 2 {
        return Err(Error::InsufficientData(format!(
            "segment with {n_k} observations has no sample variance"
        )));
    }
    if p == 0 {
        return Err(Error::Dimension("p must be at least 1".into()));
    }
    if !(segment_variance > 0.0) || !segment_variance.is_finite() {
        return Err(Error::domain(format!(
            "segment variance must be positive, got {segment_variance}"
        )));
    }
    let nk = n_k as f64;
    let gamma0 = segment_variance / (10.0 * nk);
    let gamma1 = segment_variance * ((p as f64).powf(2.1) / (100.0 * nk)).max(nk.ln());
    debug_assert!(gamma0 < gamma1);
    Ok((gamma0, gamma1))
}

/// Result of [`solve_prior_inclusion`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InclusionSolution {
    pub q: f64,
    /// The target tail probability was unreachable inside `(eps, 1 - eps)`
    /// and `q` sits on the boundary.
    pub clamped: bool,
}

const Q_EPS: f64 = 1e-10;

/// Prior inclusion probability `q` such that
/// `P(Binomial(p, q) > m) = tail_prob` with `m = min(p - 1, max(10, ln n_k))`.
pub fn solve_prior_inclusion(p: usize, n_k: usize, tail_prob: f64) -> Result<InclusionSolution> {
    if p == 0 {
        return Err(Error::Dimension("p must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&tail_prob) {
        return Err(Error::domain(format!("tail probability {tail_prob} outside [0, 1]")));
    }
    let m = model_size_threshold(p, n_k);
    // smallest model size strictly above m
    let first = m.floor() as usize + 1;
    let tail = |q: f64| binomial_upper_tail(p, first, q);

    let (lo_tail, hi_tail) = (tail(Q_EPS), tail(1.0 - Q_EPS));
    if tail_prob <= lo_tail {
        return Ok(InclusionSolution {
            q: Q_EPS,
            clamped: true,
        });
    }
    if tail_prob >= hi_tail {
        return Ok(InclusionSolution {
            q: 1.0 - Q_EPS,
            clamped: true,
        });
    }
    let (mut lo, mut hi) = (Q_EPS, 1.0 - Q_EPS);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = tail(mid);
        if (v - tail_prob).abs() < 1e-8 || hi - lo < 1e-15 {
            break;
        }
        if v < tail_prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(InclusionSolution {
        q: mid,
        clamped: false,
    })
}

/// `min(p - 1, max(10, ln n_k))`.
pub fn model_size_threshold(p: usize, n_k: usize) -> f64 {
    let log_n = if n_k > 0 { (n_k as f64).ln() } else { 0.0 };
    ((p - 1) as f64).min(log_n.max(10.0))
}

/// `P(X >= first)` for `X ~ Binomial(p, q)`, summed exactly in log space.
pub fn binomial_upper_tail(p: usize, first: usize, q: f64) -> f64 {
    if first == 0 {
        return 1.0;
    }
    if first > p {
        return 0.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let (lq, l1q) = (q.ln(), (-q).ln_1p());
    let mut log_choose = 0.0;
    for x in 1..first {
        log_choose += ((p - x + 1) as f64).ln() - (x as f64).ln();
    }
    let mut terms = Vec::with_capacity(p - first + 1);
    for x in first..=p {
        if x > 0 {
            log_choose += ((p - x + 1) as f64).ln() - (x as f64).ln();
        }
        terms.push(log_choose + x as f64 * lq + (p - x) as f64 * l1q);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (max + terms.iter().map(|v| (v - max).exp()).sum::<f64>().ln())
        .exp()
        .min(1.0)
}
