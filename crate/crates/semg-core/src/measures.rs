//! Shannon and semantic information quantities.
//!
//! The central object is [`MeasureReport`]: for a (source, channel, semantic
//! channel) triple it carries the Shannon mutual information, the semantic
//! mutual information, the three semantic entropies, and the residual KL term
//! that separates the two MIs. The decomposition
//!
//! ```text
//! I(X;Y) = I(X;Y_theta) + sum_j P(y_j) KL(P(x|y_j) || P(x|theta_j))
//! ```
//!
//! holds exactly for every triple, so the semantic MI never exceeds the
//! Shannon MI. All values are in bits; convert at the boundary with
//! [`MeasureReport::to_base`].

use serde::{Deserialize, Serialize};

use crate::base::{log2_ratio, wlog2_ratio, LogBase, EPS};
use crate::error::{Error, Result};
use crate::prob::{semantic_bayes, JointDistribution, LabelDistribution, SemanticChannel, ShannonChannel, Source};

/// All information quantities of one (source, channel, semantic channel) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    /// I(X;Y).
    pub shannon_mi: f64,
    /// I(X;Y_theta), the semantic MI.
    pub semantic_mi: f64,
    /// H(Y_theta) = -sum_j P(y_j) log T(theta_j).
    pub semantic_entropy: f64,
    /// H(Y_theta|X), the fuzzy entropy; equals the average distortion.
    pub fuzzy_entropy: f64,
    /// H(X|Y_theta), the semantic posterior entropy (variational free energy).
    pub semantic_posterior_entropy: f64,
    /// sum_j P(y_j) KL(P(x|y_j) || P(x|theta_j)) >= 0.
    pub residual_kl: f64,
    /// Unit of all six fields.
    pub log_base: LogBase,
}

impl MeasureReport {
    /// Convert every field to the given base.
    pub fn to_base(&self, base: LogBase) -> MeasureReport {
        if base == self.log_base {
            return self.clone();
        }
        debug_assert_eq!(self.log_base, LogBase::Bits);
        MeasureReport {
            shannon_mi: base.from_bits(self.shannon_mi),
            semantic_mi: base.from_bits(self.semantic_mi),
            semantic_entropy: base.from_bits(self.semantic_entropy),
            fuzzy_entropy: base.from_bits(self.fuzzy_entropy),
            semantic_posterior_entropy: base.from_bits(self.semantic_posterior_entropy),
            residual_kl: base.from_bits(self.residual_kl),
            log_base: base,
        }
    }
}

/// Shannon mutual information of a joint distribution, in bits.
///
/// Zero-probability cells contribute nothing.
pub fn shannon_mi(joint: &JointDistribution) -> f64 {
    let px = joint.x_marginal();
    let py = joint.y_marginal();
    let mut mi = 0.0;
    for i in 0..joint.n_instances() {
        for j in 0..joint.n_labels() {
            let w = joint.matrix().get(i, j);
            if w > EPS {
                mi += w * log2_ratio(w, px[i] * py[j]);
            }
        }
    }
    mi
}

/// Shannon MI of the joint induced by a source and a channel, in bits.
pub fn shannon_mi_of_channel(source: &Source, channel: &ShannonChannel) -> Result<f64> {
    Ok(shannon_mi(&JointDistribution::from_source_channel(
        source, channel,
    )?))
}

/// Compute the full [`MeasureReport`] for a triple.
///
/// Labels with zero marginal probability are skipped. A used label whose
/// truth column has no overlap with the source propagates
/// [`Error::AllZeroOverlap`].
pub fn semantic_mi_report(
    source: &Source,
    channel: &ShannonChannel,
    sem: &SemanticChannel,
) -> Result<MeasureReport> {
    let n = source.len();
    let m = channel.n_labels();
    if channel.n_instances() != n || sem.n_instances() != n || sem.n_labels() != m {
        return Err(Error::DimensionMismatch(format!(
            "triple dimensions disagree: source {n}, channel {}x{}, semantic {}x{}",
            channel.n_instances(),
            channel.n_labels(),
            sem.n_instances(),
            sem.n_labels()
        )));
    }
    let joint = JointDistribution::from_source_channel(source, channel)?;
    let py = joint.y_marginal();
    let logical = sem.logical_probs(source)?;

    // Per-label semantic posteriors P(x|theta_j); only needed for used labels.
    let mut posteriors: Vec<Option<Vec<f64>>> = vec![None; m];
    for (j, post) in posteriors.iter_mut().enumerate() {
        if py[j] > EPS {
            let (p, _) = semantic_bayes(source, &sem.truth_column(j))?;
            *post = Some(p);
        }
    }

    let mut semantic_mi = 0.0;
    let mut fuzzy_entropy = 0.0;
    let mut semantic_posterior_entropy = 0.0;
    let mut semantic_entropy = 0.0;
    let mut residual_kl = 0.0;

    for j in 0..m {
        if py[j] <= EPS {
            continue;
        }
        semantic_entropy -= wlog2_ratio(py[j], logical[j], 1.0);
        let post = posteriors[j].as_ref().expect("posterior for used label");
        let cond = joint.x_given_y(j).expect("conditional for used label");
        for i in 0..n {
            let w = joint.matrix().get(i, j);
            if w > EPS {
                let t = sem.truth(i, j);
                semantic_mi += w * log2_ratio(t, logical[j]);
                fuzzy_entropy -= w * log2_ratio(t, 1.0);
                semantic_posterior_entropy -= w * log2_ratio(post[i], 1.0);
            }
            residual_kl += py[j] * wlog2_ratio(cond[i], cond[i], post[i]);
        }
    }

    Ok(MeasureReport {
        shannon_mi: shannon_mi(&joint),
        semantic_mi,
        semantic_entropy,
        fuzzy_entropy,
        semantic_posterior_entropy,
        residual_kl,
        log_base: LogBase::Bits,
    })
}

/// Pointwise semantic information log(T(theta|x) / T(theta)) in bits.
///
/// Negative when the hypothesis is more wrong than its prior logical
/// probability allows.
pub fn pointwise_g(truth_value: f64, logical_prob: f64) -> Result<f64> {
    if !(logical_prob > 0.0) {
        return Err(Error::NonPositiveLogicalProb(logical_prob));
    }
    Ok(log2_ratio(truth_value, logical_prob))
}

/// Semantic KL information sum_i P(x_i|y_j) log[T(theta_j|x_i)/T(theta_j)],
/// with the logical probability taken against `source`.
pub fn semantic_kl_info(cond: &[f64], source: &Source, truth_column: &[f64]) -> Result<f64> {
    if cond.len() != source.len() || truth_column.len() != source.len() {
        return Err(Error::DimensionMismatch(format!(
            "semantic_kl_info: cond {}, truth {}, source {}",
            cond.len(),
            truth_column.len(),
            source.len()
        )));
    }
    let logical: f64 = source
        .probs()
        .iter()
        .zip(truth_column)
        .map(|(&p, &t)| p * t)
        .sum();
    if logical <= EPS {
        return Err(Error::AllZeroOverlap);
    }
    Ok(cond
        .iter()
        .zip(truth_column)
        .map(|(&w, &t)| wlog2_ratio(w, t, logical))
        .sum())
}

/// Semantic information loss when label k's likelihood replaces label j's:
/// sum_i P(x_i|y_j) log[P(x_i|theta_j)/P(x_i|theta_k)], in bits.
///
/// Returns `+inf` when the replacement likelihood vanishes somewhere the
/// conditional has mass; the loss is asymmetric in (j, k).
pub fn semantic_info_loss(cond_j: &[f64], likelihood_j: &[f64], likelihood_k: &[f64]) -> f64 {
    debug_assert_eq!(cond_j.len(), likelihood_j.len());
    debug_assert_eq!(cond_j.len(), likelihood_k.len());
    cond_j
        .iter()
        .zip(likelihood_j.iter().zip(likelihood_k))
        .map(|(&w, (&lj, &lk))| if w <= EPS { 0.0 } else { w * log2_ratio(lj, lk) })
        .sum()
}

/// Average semantic information loss of a label substitution channel:
/// sum_j sum_k P(y_j) P(yhat_k|y_j) KL(P(x|theta_j) || P(x|theta_k)).
pub fn average_semantic_info_loss(
    label_dist: &LabelDistribution,
    substitution: &ShannonChannel,
    likelihoods: &[Vec<f64>],
) -> Result<f64> {
    let m = label_dist.len();
    if substitution.n_instances() != m || likelihoods.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "substitution is {}x{}, {} likelihoods, {} labels",
            substitution.n_instances(),
            substitution.n_labels(),
            likelihoods.len(),
            m
        )));
    }
    let mut total = 0.0;
    for (j, &pj) in label_dist.probs().iter().enumerate() {
        if pj <= EPS {
            continue;
        }
        for k in 0..substitution.n_labels() {
            let w = pj * substitution.prob(j, k);
            if w <= EPS {
                continue;
            }
            total += w * semantic_info_loss(&likelihoods[j], &likelihoods[j], &likelihoods[k]);
        }
    }
    Ok(total)
}
