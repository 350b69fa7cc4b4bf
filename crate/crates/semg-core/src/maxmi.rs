//! Semi-supervised maximum-mutual-information classification of unseen
//! instances by alternating channel matching.
//!
//! Observations z carry indirect evidence about x. A partition of the z
//! alphabet induces a Shannon channel P(y|x) (Matching I), which yields truth
//! functions and a per-z reward I(X; theta_j | z); reassigning each z to its
//! best-reward label (Matching II) closes the loop. The alternation stops at
//! a fixed point; cycles are detected by hashing assignments and resolved by
//! returning the best-MI partition seen.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::base::{log2_ratio, EPS};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::measures::shannon_mi_of_channel;
use crate::prob::{SemanticChannel, ShannonChannel, Source};

/// The observation model linking instances x to observations z.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationModel {
    z_ids: Vec<String>,
    source: Source,
    /// P(z|x): instances by observations.
    z_given_x: ShannonChannel,
    /// P(x|z): observations by instances.
    x_given_z: Mat,
    /// P(z).
    z_probs: Vec<f64>,
}

impl ObservationModel {
    /// Build from the forward model P(z|x) and the source; P(z) and P(x|z)
    /// follow by Bayes. Observations with zero probability keep the prior as
    /// their conditional.
    pub fn from_forward(
        source: Source,
        z_ids: Vec<String>,
        z_given_x: ShannonChannel,
    ) -> Result<Self> {
        if z_given_x.n_instances() != source.len() {
            return Err(Error::DimensionMismatch(format!(
                "P(z|x) has {} rows, source has {} points",
                z_given_x.n_instances(),
                source.len()
            )));
        }
        if z_ids.len() != z_given_x.n_labels() {
            return Err(Error::DimensionMismatch(format!(
                "{} observation ids, P(z|x) has {} columns",
                z_ids.len(),
                z_given_x.n_labels()
            )));
        }
        let n = source.len();
        let nz = z_ids.len();
        let mut z_probs = vec![0.0; nz];
        for (i, &px) in source.probs().iter().enumerate() {
            for (k, zp) in z_probs.iter_mut().enumerate() {
                *zp += px * z_given_x.prob(i, k);
            }
        }
        let x_given_z = Mat::from_fn(nz, n, |k, i| {
            if z_probs[k] <= EPS {
                source.probs()[i]
            } else {
                source.probs()[i] * z_given_x.prob(i, k) / z_probs[k]
            }
        });
        Ok(ObservationModel {
            z_ids,
            source,
            z_given_x,
            x_given_z,
            z_probs,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.source.len()
    }

    pub fn n_observations(&self) -> usize {
        self.z_ids.len()
    }

    pub fn z_ids(&self) -> &[String] {
        &self.z_ids
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn z_probs(&self) -> &[f64] {
        &self.z_probs
    }

    pub fn x_given_z(&self, k: usize) -> &[f64] {
        self.x_given_z.row(k)
    }
}

/// A total assignment of observations to label indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub n_labels: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, n_labels: usize) -> Result<Self> {
        if n_labels == 0 {
            return Err(Error::BadConfig("need at least one label".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&j| j >= n_labels) {
            return Err(Error::BadConfig(format!(
                "assignment {bad} out of range for {n_labels} labels"
            )));
        }
        Ok(Partition {
            assignment,
            n_labels,
        })
    }

    /// Split at a threshold observation index: z before `split` to label 0.
    pub fn threshold(n_observations: usize, split: usize, n_labels: usize) -> Result<Self> {
        Partition::new(
            (0..n_observations)
                .map(|k| usize::from(k >= split).min(n_labels - 1))
                .collect(),
            n_labels,
        )
    }
}

/// Output of one Matching I sweep.
#[derive(Debug, Clone)]
pub struct MatchingOutcome {
    /// Induced Shannon channel P(y_j|x) = sum_{z in C_j} P(z|x). Columns of
    /// empty classes are all zero.
    pub channel: ShannonChannel,
    /// Per-label truth function (None for dropped empty classes).
    pub truth: Vec<Option<Vec<f64>>>,
    /// Logical probabilities of the truth functions (0 for dropped labels).
    pub logical: Vec<f64>,
    /// Reward I(X; theta_j | z): observations by labels; -inf for dropped
    /// labels.
    pub reward: Mat,
    /// Labels dropped because no observation (with mass) maps to them.
    pub empty_labels: Vec<usize>,
}

impl MatchingOutcome {
    /// The semantic channel over the non-dropped labels, if all survive.
    pub fn semantic_channel(&self) -> Result<SemanticChannel> {
        let cols: Option<Vec<Vec<f64>>> = self.truth.iter().cloned().collect();
        match cols {
            Some(cols) => SemanticChannel::from_columns(cols),
            None => Err(Error::EmptyLabel(
                self.empty_labels.first().copied().unwrap_or(0),
            )),
        }
    }
}

/// Matching I: induce the Shannon channel from the partition, learn the truth
/// functions, and fill the per-observation reward matrix.
pub fn matching_one(obs: &ObservationModel, part: &Partition) -> Result<MatchingOutcome> {
    if part.assignment.len() != obs.n_observations() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} observations, model has {}",
            part.assignment.len(),
            obs.n_observations()
        )));
    }
    let n = obs.n_instances();
    let m = part.n_labels;
    // P(y_j|x) = sum over assigned z of P(z|x).
    let mut channel = Mat::zeros(n, m);
    for (k, &j) in part.assignment.iter().enumerate() {
        for i in 0..n {
            let v = channel.get(i, j) + obs.z_given_x.prob(i, k);
            channel.set(i, j, v);
        }
    }
    let mut truth: Vec<Option<Vec<f64>>> = Vec::with_capacity(m);
    let mut logical = vec![0.0; m];
    let mut empty_labels = Vec::new();
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| channel.get(i, j)).collect();
        let max = col.iter().cloned().fold(0.0, f64::max);
        if max <= EPS {
            empty_labels.push(j);
            truth.push(None);
            continue;
        }
        let t: Vec<f64> = col.into_iter().map(|p| p / max).collect();
        logical[j] = obs
            .source
            .probs()
            .iter()
            .zip(&t)
            .map(|(&p, &ti)| p * ti)
            .sum();
        truth.push(Some(t));
    }
    let nz = obs.n_observations();
    let reward = Mat::from_fn(nz, m, |k, j| match &truth[j] {
        None => f64::NEG_INFINITY,
        Some(t) => {
            let cond = obs.x_given_z.row(k);
            let mut r = 0.0;
            for i in 0..n {
                if cond[i] > EPS {
                    r += cond[i] * log2_ratio(t[i], logical[j]);
                }
            }
            r
        }
    });
    Ok(MatchingOutcome {
        channel: ShannonChannel::new(channel)?,
        truth,
        logical,
        reward,
        empty_labels,
    })
}

/// Matching II: reassign every observation to its best-reward label,
/// ties to the lowest index.
pub fn matching_two(reward: &Mat, n_labels: usize) -> Result<Partition> {
    let assignment = (0..reward.rows())
        .map(|k| {
            let row = reward.row(k);
            let mut best = (0usize, f64::NEG_INFINITY);
            for (j, &r) in row.iter().enumerate() {
                if r > best.1 {
                    best = (j, r);
                }
            }
            best.0
        })
        .collect();
    Partition::new(assignment, n_labels)
}

/// How a [`classify_iterate`] run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateStatus {
    FixedPoint,
    CycleDetected,
    MaxIterations,
}

/// Result of the alternating classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub partition: Partition,
    /// Shannon MI of the induced channel at the start of each round, bits.
    pub mi_trace: Vec<f64>,
    pub status: IterateStatus,
    pub rounds: usize,
}

/// Repeat Matching I / Matching II until the partition stops changing.
/// On a cycle the best-MI partition seen is returned.
pub fn classify_iterate(
    obs: &ObservationModel,
    init: &Partition,
    max_iter: usize,
) -> Result<ClassifyOutcome> {
    let mut part = init.clone();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut mi_trace = Vec::new();
    let mut best: Option<(f64, Partition)> = None;
    let mut status = IterateStatus::MaxIterations;
    let mut rounds = 0;
    for _ in 0..max_iter {
        rounds += 1;
        seen.insert(part.assignment.clone());
        let outcome = matching_one(obs, &part)?;
        let mi = shannon_mi_of_channel(&obs.source, &outcome.channel)?;
        mi_trace.push(mi);
        if best.as_ref().map_or(true, |(b, _)| mi > *b) {
            best = Some((mi, part.clone()));
        }
        let next = matching_two(&outcome.reward, part.n_labels)?;
        if next == part {
            status = IterateStatus::FixedPoint;
            break;
        }
        if seen.contains(&next.assignment) {
            status = IterateStatus::CycleDetected;
            part = best.as_ref().expect("at least one round ran").1.clone();
            break;
        }
        part = next;
    }
    if status == IterateStatus::CycleDetected {
        return Ok(ClassifyOutcome {
            partition: part,
            mi_trace,
            status,
            rounds,
        });
    }
    Ok(ClassifyOutcome {
        partition: part,
        mi_trace,
        status,
        rounds,
    })
}

/// Shannon MI induced by a partition, bits. Shared by tests and oracles.
pub fn partition_mi(obs: &ObservationModel, part: &Partition) -> Result<f64> {
    let outcome = matching_one(obs, part)?;
    shannon_mi_of_channel(&obs.source, &outcome.channel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::gaussian_truth;

    /// Two 1-D Gaussian classes observed through a binned z.
    fn gaussian_obs(n_bins: usize, sep: f64) -> ObservationModel {
        let centers = [-sep / 2.0, sep / 2.0];
        let zvals: Vec<f64> = (0..n_bins)
            .map(|k| -4.0 + 8.0 * (k as f64 + 0.5) / n_bins as f64)
            .collect();
        let rows: Vec<Vec<f64>> = centers
            .iter()
            .map(|&c| {
                let mut row = gaussian_truth(&zvals, c, 1.0).unwrap();
                crate::base::normalize(&mut row);
                row
            })
            .collect();
        let z_ids = (0..n_bins).map(|k| format!("z{k}")).collect();
        ObservationModel::from_forward(
            Source::uniform(2),
            z_ids,
            ShannonChannel::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn matching_one_reward_fixed_point_on_separated_data() {
        let obs = gaussian_obs(16, 5.0);
        let part = Partition::threshold(16, 8, 2).unwrap();
        let outcome = matching_one(&obs, &part).unwrap();
        assert!(outcome.empty_labels.is_empty());
        let next = matching_two(&outcome.reward, 2).unwrap();
        assert_eq!(next, part);
    }

    #[test]
    fn single_class_reward_is_all_zero() {
        let obs = gaussian_obs(8, 4.0);
        let part = Partition::new(vec![0; 8], 1).unwrap();
        let outcome = matching_one(&obs, &part).unwrap();
        // One class = tautology: every truth value 1, reward 0.
        for k in 0..8 {
            assert!(outcome.reward.get(k, 0).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_matches_hand_computation() {
        let obs = gaussian_obs(6, 4.0);
        let part = Partition::threshold(6, 3, 2).unwrap();
        let outcome = matching_one(&obs, &part).unwrap();
        for k in 0..6 {
            for j in 0..2 {
                let t = outcome.truth[j].as_ref().unwrap();
                let mut expected = 0.0;
                for i in 0..2 {
                    let c = obs.x_given_z(k)[i];
                    if c > 0.0 {
                        expected += c * (t[i] / outcome.logical[j]).log2();
                    }
                }
                assert!((outcome.reward.get(k, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matching_two_tie_rule_and_dominance() {
        let reward = Mat::from_rows(vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        let part = matching_two(&reward, 2).unwrap();
        assert_eq!(part.assignment, vec![0, 1]);
        let constant = Mat::from_rows(vec![vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        let part = matching_two(&constant, 2).unwrap();
        assert_eq!(part.assignment, vec![0, 0]);
    }

    #[test]
    fn iterate_from_optimum_fixes_immediately() {
        let obs = gaussian_obs(16, 5.0);
        let init = Partition::threshold(16, 8, 2).unwrap();
        let out = classify_iterate(&obs, &init, 20).unwrap();
        assert_eq!(out.status, IterateStatus::FixedPoint);
        assert_eq!(out.partition, init);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn iterate_recovers_from_bad_init() {
        let obs = gaussian_obs(24, 4.0);
        // Nearly everything starts in class 1.
        let init = Partition::threshold(24, 2, 2).unwrap();
        let out = classify_iterate(&obs, &init, 20).unwrap();
        assert_eq!(out.status, IterateStatus::FixedPoint);
        assert!(out.rounds <= 10);
        // MI is non-decreasing and improves over the initial split.
        for pair in out.mi_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
        assert!(out.mi_trace.last().unwrap() > &out.mi_trace[0]);
        // The fixed point is a threshold partition (monotone likelihood ratio).
        let a = &out.partition.assignment;
        let flips = a.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
    }

    #[test]
    fn iterate_attains_exhaustive_optimum_small_instance() {
        let obs = gaussian_obs(10, 4.0);
        let init = Partition::threshold(10, 1, 2).unwrap();
        let out = classify_iterate(&obs, &init, 30).unwrap();
        let achieved = *out.mi_trace.last().unwrap();
        // Exhaustive search over all 2^10 assignments.
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << 10) {
            let assignment: Vec<usize> =
                (0..10).map(|k| ((mask >> k) & 1) as usize).collect();
            let part = Partition::new(assignment, 2).unwrap();
            let mi = partition_mi(&obs, &part).unwrap();
            if mi > best {
                best = mi;
            }
        }
        assert!((achieved - best).abs() < 1e-6, "{achieved} vs {best}");
    }

    #[test]
    fn empty_class_is_dropped_with_warning() {
        let obs = gaussian_obs(8, 4.0);
        let part = Partition::new(vec![0, 0, 0, 0, 2, 2, 2, 2], 3).unwrap();
        let outcome = matching_one(&obs, &part).unwrap();
        assert_eq!(outcome.empty_labels, vec![1]);
        assert!(outcome.truth[1].is_none());
        for k in 0..8 {
            assert_eq!(outcome.reward.get(k, 1), f64::NEG_INFINITY);
        }
        assert!(outcome.semantic_channel().is_err());
    }
}
