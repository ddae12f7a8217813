use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{partition_by_threshold, ChangePointState, Dataset, SegmentPartition};

use super::workspace::changed_rows;

/// Log density of the ordered statistics of `K` uniforms on `(a, b)`:
/// `ln K! - K ln(b - a)` on the ordered support, `-inf` elsewhere.
pub fn ordered_uniform_log_prior(cp: &ChangePointState) -> f64 {
    if !cp.is_ordered_in_bounds() || !(cp.a_tau < cp.b_tau) {
        return f64::NEG_INFINITY;
    }
    let k = cp.k();
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    ln_fact - k as f64 * (cp.b_tau - cp.a_tau).ln()
}

/// Outcome of one change-point update.
#[derive(Clone, Debug)]
pub struct TauStep {
    pub cp: ChangePointState,
    pub partition: SegmentPartition,
    pub accepted: bool,
    /// Log acceptance ratio; `-inf` when the proposal left the support.
    pub log_ratio: f64,
}

/// Log-likelihood difference between two partitions with the coefficients
/// and variance held fixed. Only rows that switch segment contribute.
pub fn tau_log_acceptance(
    data: &Dataset,
    beta: &[DVector<f64>],
    sigma2: f64,
    current: &SegmentPartition,
    proposed: &SegmentPartition,
) -> f64 {
    let mut delta = 0.0;
    for range in changed_rows(current, proposed) {
        for i in range {
            let (from, to) = (current.segment_of_row(i), proposed.segment_of_row(i));
            if from == to {
                continue;
            }
            let row = data.x().row(i);
            let y = data.y()[i];
            let r_old = y - row.dot(&beta[from].transpose());
            let r_new = y - row.dot(&beta[to].transpose());
            delta += r_old * r_old - r_new * r_new;
        }
    }
    delta / (2.0 * sigma2)
}

/// Random-walk Metropolis update of the whole change-point vector.
///
/// `tau' = tau + eps`, `eps ~ N(0, proposal_sd^2 I)`. Proposals that break
/// the ordering, leave `(a, b)` or leave a segment with fewer than the
/// minimum number of rows have zero prior density and are rejected. The
/// ordered-uniform density is constant on its support and the proposal is
/// symmetric, so the acceptance ratio is the likelihood ratio.
pub fn metropolis_tau<R: Rng + ?Sized>(
    cp: &ChangePointState,
    current: &SegmentPartition,
    beta: &[DVector<f64>],
    sigma2: f64,
    data: &Dataset,
    proposal_sd: f64,
    rng: &mut R,
) -> TauStep {
    let tau: Vec<f64> = cp
        .tau
        .iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            v + proposal_sd * e
        })
        .collect();
    let proposal = ChangePointState {
        tau,
        a_tau: cp.a_tau,
        b_tau: cp.b_tau,
    };
    let reject = |log_ratio| TauStep {
        cp: cp.clone(),
        partition: current.clone(),
        accepted: false,
        log_ratio,
    };
    if !proposal.is_ordered_in_bounds() {
        return reject(f64::NEG_INFINITY);
    }
    let partition = partition_by_threshold(data.t(), &proposal);
    if !partition.satisfies_min_size() {
        return reject(f64::NEG_INFINITY);
    }
    let log_ratio = tau_log_acceptance(data, beta, sigma2, current, &partition);
    let u: f64 = rng.random();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        TauStep {
            cp: proposal,
            partition,
            accepted: true,
            log_ratio,
        }
    } else {
        reject(log_ratio)
    }
}
