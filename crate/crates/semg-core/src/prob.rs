//! Discrete probability and truth-function primitives.
//!
//! A [`Source`] is a distribution over a finite instance alphabet. A
//! [`ShannonChannel`] holds transition probabilities P(y|x); a
//! [`SemanticChannel`] holds one truth function per label, column-wise, with
//! no normalization constraint across labels. The operations here implement
//! the semantic Bayes prediction, the truth-from-likelihood inversion, and the
//! truth/distortion conversion pair.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::base::{normalize, LogBase, EPS, NORM_TOL};
use crate::error::{Error, Result};
use crate::mat::Mat;

fn validate_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    if let Some(&p) = probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {p} out of range"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

fn validate_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidDistribution(format!(
                "{what}: duplicate identifier {id:?}"
            )));
        }
    }
    Ok(())
}

/// A probability distribution P(x) over a finite, ordered instance alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    ids: Vec<String>,
    probs: Vec<f64>,
}

impl Source {
    pub fn new(ids: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if ids.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "source: {} ids vs {} probs",
                ids.len(),
                probs.len()
            )));
        }
        validate_unique(&ids, "source")?;
        validate_probs(&probs, "source")?;
        Ok(Source { ids, probs })
    }

    /// Source with identifiers `x1..xn` and the given probabilities.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let ids = (1..=probs.len()).map(|i| format!("x{i}")).collect();
        Source::new(ids, probs)
    }

    /// Uniform source on `n` points with identifiers `x1..xn`.
    pub fn uniform(n: usize) -> Self {
        Source::from_probs(vec![1.0 / n as f64; n]).expect("uniform source is valid")
    }

    /// Source whose identifiers are the decimal renderings of grid values.
    pub fn from_values(values: &[f64], probs: Vec<f64>) -> Result<Self> {
        let ids = values.iter().map(|v| format!("{v}")).collect();
        Source::new(ids, probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Parse the identifiers as numbers, for grid-valued alphabets.
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        self.ids
            .iter()
            .map(|id| {
                id.parse::<f64>().map_err(|_| {
                    Error::BadConfig(format!("instance id {id:?} is not numeric"))
                })
            })
            .collect()
    }
}

/// A probability distribution P(y) over a finite, ordered label alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "labels: {} ids vs {} probs",
                labels.len(),
                probs.len()
            )));
        }
        validate_unique(&labels, "labels")?;
        validate_probs(&probs, "labels")?;
        Ok(LabelDistribution { labels, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (1..=probs.len()).map(|j| format!("y{j}")).collect();
        LabelDistribution::new(labels, probs)
    }

    pub fn uniform(n: usize) -> Self {
        LabelDistribution::from_probs(vec![1.0 / n as f64; n]).expect("uniform labels are valid")
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Row-stochastic transition matrix P(y_j | x_i), instances by labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShannonChannel {
    mat: Mat,
}

impl ShannonChannel {
    pub fn new(mat: Mat) -> Result<Self> {
        if let Some((i, j, v)) = mat.check_entries(|v| (0.0..=1.0 + NORM_TOL).contains(&v)) {
            return Err(Error::InvalidDistribution(format!(
                "channel entry ({i},{j}) = {v} outside [0,1]"
            )));
        }
        for (i, row) in mat.iter_rows().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "channel row {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(ShannonChannel { mat })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        ShannonChannel::new(Mat::from_rows(rows)?)
    }

    /// The identity channel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        ShannonChannel {
            mat: Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }),
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn n_instances(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_labels(&self) -> usize {
        self.mat.cols()
    }

    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.mat.col(j)
    }

    /// Output marginal P(y_j) = sum_i P(x_i) P(y_j | x_i).
    pub fn output_marginal(&self, source: &Source) -> Result<LabelDistribution> {
        if source.len() != self.n_instances() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} rows, source has {} points",
                self.n_instances(),
                source.len()
            )));
        }
        let mut probs = vec![0.0; self.n_labels()];
        for (i, &px) in source.probs().iter().enumerate() {
            for (j, p) in probs.iter_mut().enumerate() {
                *p += px * self.prob(i, j);
            }
        }
        // Absorb rounding so the result passes validation exactly.
        normalize(&mut probs);
        LabelDistribution::from_probs(probs)
    }
}

/// One truth function per label, column-wise: entry (i, j) = T(theta_j | x_i).
///
/// Columns are membership functions in [0,1] with no cross-label constraint;
/// the sum of logical probabilities may exceed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticChannel {
    mat: Mat,
}

impl SemanticChannel {
    pub fn new(mat: Mat) -> Result<Self> {
        if let Some((i, j, v)) = mat.check_entries(|v| (0.0..=1.0 + NORM_TOL).contains(&v)) {
            return Err(Error::InvalidDistribution(format!(
                "truth value ({i},{j}) = {v} outside [0,1]"
            )));
        }
        for j in 0..mat.cols() {
            if (0..mat.rows()).all(|i| mat.get(i, j) <= EPS) {
                return Err(Error::EmptyLabel(j));
            }
        }
        Ok(SemanticChannel { mat })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::DimensionMismatch("no truth columns".into()));
        }
        let n = columns[0].len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "truth columns of unequal length ({n} vs {})",
                bad.len()
            )));
        }
        let mat = Mat::from_fn(n, columns.len(), |i, j| columns[j][i]);
        SemanticChannel::new(mat)
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn n_instances(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_labels(&self) -> usize {
        self.mat.cols()
    }

    #[inline]
    pub fn truth(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn truth_column(&self, j: usize) -> Vec<f64> {
        self.mat.col(j)
    }

    /// Logical probabilities T(theta_j) = sum_i P(x_i) T(theta_j | x_i).
    pub fn logical_probs(&self, source: &Source) -> Result<Vec<f64>> {
        if source.len() != self.n_instances() {
            return Err(Error::DimensionMismatch(format!(
                "semantic channel has {} rows, source has {} points",
                self.n_instances(),
                source.len()
            )));
        }
        Ok((0..self.n_labels())
            .map(|j| {
                source
                    .probs()
                    .iter()
                    .enumerate()
                    .map(|(i, &px)| px * self.truth(i, j))
                    .sum()
            })
            .collect())
    }
}

/// Joint distribution P(x_i, y_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    mat: Mat,
}

impl JointDistribution {
    pub fn new(mat: Mat) -> Result<Self> {
        if let Some((i, j, v)) = mat.check_entries(|v| v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "joint entry ({i},{j}) = {v} negative or non-finite"
            )));
        }
        let total = mat.sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "joint sums to {total}, expected 1"
            )));
        }
        Ok(JointDistribution { mat })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        JointDistribution::new(Mat::from_rows(rows)?)
    }

    /// P(x_i, y_j) = P(x_i) P(y_j | x_i).
    pub fn from_source_channel(source: &Source, channel: &ShannonChannel) -> Result<Self> {
        if source.len() != channel.n_instances() {
            return Err(Error::DimensionMismatch(format!(
                "source has {} points, channel has {} rows",
                source.len(),
                channel.n_instances()
            )));
        }
        let mat = Mat::from_fn(channel.n_instances(), channel.n_labels(), |i, j| {
            source.probs()[i] * channel.prob(i, j)
        });
        JointDistribution::new(mat)
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn n_instances(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_labels(&self) -> usize {
        self.mat.cols()
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.mat.iter_rows().map(|r| r.iter().sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.n_labels())
            .map(|j| (0..self.n_instances()).map(|i| self.mat.get(i, j)).sum())
            .collect()
    }

    /// P(x | y_j), or `None` when P(y_j) = 0.
    pub fn x_given_y(&self, j: usize) -> Option<Vec<f64>> {
        let py: f64 = (0..self.n_instances()).map(|i| self.mat.get(i, j)).sum();
        if py <= EPS {
            return None;
        }
        Some(
            (0..self.n_instances())
                .map(|i| self.mat.get(i, j) / py)
                .collect(),
        )
    }
}

/// Nonnegative distortions d(y_j | x_i); entries may be `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionMatrix {
    mat: Mat,
}

impl DistortionMatrix {
    pub fn new(mat: Mat) -> Result<Self> {
        if let Some((i, j, v)) = mat.check_entries(|v| v >= 0.0 && !v.is_nan()) {
            return Err(Error::InvalidDistribution(format!(
                "distortion ({i},{j}) = {v} negative or NaN"
            )));
        }
        Ok(DistortionMatrix { mat })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        DistortionMatrix::new(Mat::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn n_instances(&self) -> usize {
        self.mat.rows()
    }

    pub fn n_labels(&self) -> usize {
        self.mat.cols()
    }
}

/// Semantic Bayes prediction (the truth function plus the prior).
///
/// Returns the posterior P(x | theta) = T(theta|x) P(x) / T(theta) together
/// with the logical probability T(theta) = sum_i T(theta|x_i) P(x_i). The
/// posterior is invariant under positive scaling of `truth_column`.
pub fn semantic_bayes(source: &Source, truth_column: &[f64]) -> Result<(Vec<f64>, f64)> {
    if truth_column.len() != source.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth column has {} entries, source has {}",
            truth_column.len(),
            source.len()
        )));
    }
    if truth_column.iter().any(|&t| t < 0.0 || t.is_nan()) {
        return Err(Error::InvalidDistribution(
            "truth values must be nonnegative".into(),
        ));
    }
    let logical_prob: f64 = source
        .probs()
        .iter()
        .zip(truth_column)
        .map(|(&p, &t)| p * t)
        .sum();
    if logical_prob <= EPS {
        return Err(Error::AllZeroOverlap);
    }
    let posterior = source
        .probs()
        .iter()
        .zip(truth_column)
        .map(|(&p, &t)| p * t / logical_prob)
        .collect();
    Ok((posterior, logical_prob))
}

/// Recover the truth function from a likelihood: the prior-to-posterior ratio
/// scaled so its maximum is exactly one.
pub fn truth_from_likelihood(source: &Source, likelihood: &[f64]) -> Result<Vec<f64>> {
    if likelihood.len() != source.len() {
        return Err(Error::DimensionMismatch(format!(
            "likelihood has {} entries, source has {}",
            likelihood.len(),
            source.len()
        )));
    }
    let mut ratios = vec![0.0; source.len()];
    for (i, (&l, &p)) in likelihood.iter().zip(source.probs()).enumerate() {
        if l > EPS {
            if p <= EPS {
                return Err(Error::DomainMismatch);
            }
            ratios[i] = l / p;
        }
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::AllZeroOverlap);
    }
    for r in ratios.iter_mut() {
        *r /= max;
    }
    Ok(ratios)
}

/// Elementwise d = -log T in the given base; T = 0 maps to `+inf`.
pub fn truth_to_distortion(sem: &SemanticChannel, base: LogBase) -> DistortionMatrix {
    let mat = sem.matrix().map(|t| -base.log(t));
    DistortionMatrix { mat }
}

/// Elementwise T = exp(-d) in the given base; d = `+inf` maps to T = 0.
pub fn distortion_to_truth(d: &DistortionMatrix, base: LogBase) -> Result<SemanticChannel> {
    let mat = d.matrix().map(|v| base.exp(-v));
    SemanticChannel::new(mat)
}

/// Gaussian truth function exp(-(v - center)^2 / (2 sigma^2)) on grid values.
pub fn gaussian_truth(support_values: &[f64], center: f64, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(support_values
        .iter()
        .map(|&v| (-((v - center) * (v - center)) / (2.0 * sigma * sigma)).exp())
        .collect())
}

/// Crisp indicator truth function: 1 on `members`, 0 elsewhere.
pub fn crisp_truth(n: usize, members: &[usize]) -> Vec<f64> {
    let mut t = vec![0.0; n];
    for &i in members {
        t[i] = 1.0;
    }
    t
}
