//! Logical Bayes' Inference: learning optimized truth functions from sample
//! distributions, the equal-prior multi-label variant, and the semantic
//! classifier.
//!
//! Parametric fits use exhaustive grid search so results are deterministic
//! and oracle-checkable. Grid candidates score independently, which makes the
//! scan a natural data-parallel loop; `par_` variants are available with the
//! `parallel` feature and reduce with a fixed tie rule (highest score, then
//! lowest candidate index), so both paths return identical winners.

use serde::{Deserialize, Serialize};

use crate::base::{log2_ratio, EPS};
use crate::error::{Error, Result};
use crate::measures::semantic_kl_info;
use crate::prob::{SemanticChannel, ShannonChannel, Source};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Direct truth-function learning: T*(theta_j|x) = P(y_j|x) / max_x P(y_j|x).
///
/// Each output column has maximum exactly one, and the semantic Bayes
/// posterior of column j reproduces P(x|y_j) wherever the source has mass.
pub fn lbi_direct(source: &Source, channel: &ShannonChannel) -> Result<SemanticChannel> {
    if channel.n_instances() != source.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} rows, source has {} points",
            channel.n_instances(),
            source.len()
        )));
    }
    let mut cols = Vec::with_capacity(channel.n_labels());
    for j in 0..channel.n_labels() {
        let col = channel.column(j);
        let max = col.iter().cloned().fold(0.0, f64::max);
        if max <= EPS {
            return Err(Error::EmptyLabel(j));
        }
        cols.push(col.into_iter().map(|p| p / max).collect());
    }
    SemanticChannel::from_columns(cols)
}

/// Parametric truth-function families available to the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TruthParams {
    /// exp(-(v - center)^2 / (2 sigma^2)).
    Gaussian { center: f64, sigma: f64 },
    /// Dam-cross-section membership: 0 before `left_foot`, rising to 1 at
    /// `left_shoulder`, flat to `right_shoulder`, falling to 0 at `right_foot`.
    Trapezoid {
        left_foot: f64,
        left_shoulder: f64,
        right_shoulder: f64,
        right_foot: f64,
    },
}

impl TruthParams {
    /// Evaluate the membership function on the support grid.
    pub fn render(&self, support_values: &[f64]) -> Result<Vec<f64>> {
        match *self {
            TruthParams::Gaussian { center, sigma } => {
                crate::prob::gaussian_truth(support_values, center, sigma)
            }
            TruthParams::Trapezoid {
                left_foot: a,
                left_shoulder: b,
                right_shoulder: c,
                right_foot: d,
            } => {
                if !(a <= b && b <= c && c <= d) {
                    return Err(Error::BadConfig(format!(
                        "trapezoid breakpoints must be ordered: {a}, {b}, {c}, {d}"
                    )));
                }
                Ok(support_values
                    .iter()
                    .map(|&x| {
                        if x < a {
                            0.0
                        } else if x < b {
                            (x - a) / (b - a)
                        } else if x <= c {
                            1.0
                        } else if x < d {
                            (d - x) / (d - c)
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
        }
    }
}

/// An exhaustive, ordered list of candidate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub candidates: Vec<TruthParams>,
}

impl ParamGrid {
    /// Cross product of centers and sigmas.
    pub fn gaussian(centers: &[f64], sigmas: &[f64]) -> Self {
        let candidates = centers
            .iter()
            .flat_map(|&center| {
                sigmas
                    .iter()
                    .map(move |&sigma| TruthParams::Gaussian { center, sigma })
            })
            .collect();
        ParamGrid { candidates }
    }

    /// Default Gaussian grid for a support: centers at the grid values,
    /// sigmas geometric between one grid step and the full range.
    pub fn gaussian_for_support(support_values: &[f64], n_sigmas: usize) -> Self {
        let lo = support_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = support_values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let range = (hi - lo).max(1e-9);
        let step = range / (support_values.len().max(2) as f64 - 1.0);
        let n = n_sigmas.max(2);
        let ratio = (range / step).powf(1.0 / (n as f64 - 1.0));
        let sigmas: Vec<f64> = (0..n).map(|k| step * ratio.powi(k as i32)).collect();
        ParamGrid::gaussian(support_values, &sigmas)
    }

    /// Every ordered quadruple of the given breakpoints.
    pub fn trapezoid(breaks: &[f64]) -> Self {
        let mut sorted = breaks.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let mut candidates = Vec::new();
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    for d in c..n {
                        candidates.push(TruthParams::Trapezoid {
                            left_foot: sorted[a],
                            left_shoulder: sorted[b],
                            right_shoulder: sorted[c],
                            right_foot: sorted[d],
                        });
                    }
                }
            }
        }
        ParamGrid { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

fn score_candidate(
    params: &TruthParams,
    cond: &[f64],
    source: &Source,
    support_values: &[f64],
) -> Result<f64> {
    let column = params.render(support_values)?;
    match semantic_kl_info(cond, source, &column) {
        Ok(score) => Ok(score),
        // No overlap with the source: the candidate is simply out of range.
        Err(Error::AllZeroOverlap) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

fn better(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    // Higher score wins; ties go to the lower index.
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Logical Bayes' Inference by grid search: maximize the semantic KL
/// information of `cond` over the candidate truth functions.
pub fn lbi_parametric(
    cond: &[f64],
    source: &Source,
    support_values: &[f64],
    grid: &ParamGrid,
) -> Result<(TruthParams, f64)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (idx, params) in grid.candidates.iter().enumerate() {
        let score = score_candidate(params, cond, source, support_values)?;
        best = better(best, (idx, score));
    }
    Ok((grid.candidates[best.0], best.1))
}

/// Parallel grid scan; identical result to [`lbi_parametric`].
#[cfg(feature = "parallel")]
pub fn par_lbi_parametric(
    cond: &[f64],
    source: &Source,
    support_values: &[f64],
    grid: &ParamGrid,
) -> Result<(TruthParams, f64)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let scored: Result<Vec<(usize, f64)>> = grid
        .candidates
        .par_iter()
        .enumerate()
        .map(|(idx, params)| score_candidate(params, cond, source, support_values).map(|s| (idx, s)))
        .collect();
    let best = scored?
        .into_iter()
        .fold((usize::MAX, f64::NEG_INFINITY), better);
    Ok((grid.candidates[best.0], best.1))
}

/// Multi-label learning from one channel column when the prior is unknown:
/// assume the instances equally probable and optimize the membership
/// function. Equivalent to [`lbi_parametric`] with a uniform source; the
/// returned score omits the constant log|U| offset.
pub fn multilabel_equal_prior(
    channel_column: &[f64],
    support_values: &[f64],
    grid: &ParamGrid,
) -> Result<(TruthParams, f64)> {
    let total: f64 = channel_column.iter().sum();
    if total <= EPS {
        return Err(Error::EmptyLabel(0));
    }
    let cond: Vec<f64> = channel_column.iter().map(|&p| p / total).collect();
    let uniform = Source::uniform(channel_column.len());
    lbi_parametric(&cond, &uniform, support_values, grid)
}

/// Classification criterion for [`classify_max_info`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyCriterion {
    /// argmax_j log[T(theta_j|x) / T(theta_j)].
    #[default]
    MaxInformation,
    /// argmax_j T(theta_j|x), i.e. least semantic distortion.
    MinDistortion,
}

/// Pick the best label for one instance given its row of truth values and
/// the labels' logical probabilities. Ties break to the lowest index.
pub fn classify_max_info(
    truth_row: &[f64],
    logical_probs: &[f64],
    criterion: ClassifyCriterion,
) -> Result<usize> {
    if truth_row.len() != logical_probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} truth values vs {} logical probabilities",
            truth_row.len(),
            logical_probs.len()
        )));
    }
    if truth_row.is_empty() {
        return Err(Error::DimensionMismatch("no labels".into()));
    }
    if let Some(&lp) = logical_probs.iter().find(|&&lp| !(lp > 0.0)) {
        return Err(Error::NonPositiveLogicalProb(lp));
    }
    if truth_row.iter().all(|&t| t <= EPS) {
        return Err(Error::NoPositiveTruth);
    }
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (j, (&t, &lp)) in truth_row.iter().zip(logical_probs).enumerate() {
        let score = match criterion {
            ClassifyCriterion::MaxInformation => log2_ratio(t, lp),
            ClassifyCriterion::MinDistortion => t,
        };
        best = better(best, (j, score));
    }
    Ok(best.0)
}
