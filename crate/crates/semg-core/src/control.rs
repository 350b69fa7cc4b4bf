//! Goal-oriented (purposeful) information and constraint control.
//!
//! A control target is a fuzzy range over outcomes, written as a truth
//! column. Goal-oriented information scores a controlled result distribution
//! P(x|a_j) against the target, with the logical probability taken under the
//! uncontrolled baseline. [`solve_control`] balances purposiveness against
//! control complexity by running the same MID iteration as the R(G) solver
//! with actions in place of labels: larger s buys more goal information at a
//! lower information efficiency G/R.

use serde::{Deserialize, Serialize};

use crate::base::{wlog2_ratio, EPS, LN_2};
use crate::error::{Error, Result};
use crate::prob::{LabelDistribution, SemanticChannel, ShannonChannel, Source};
use crate::rate::{MidEngine, SolveOptions};

/// A constraint-control task: the uncontrolled baseline, one fuzzy target per
/// action, and the constraint strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlProblem {
    pub baseline: Source,
    pub targets: SemanticChannel,
    /// Constraint strength; s = 1 maximizes the information efficiency.
    pub s: f64,
    /// Starting action distribution (uniform when `None`).
    pub init_action_dist: Option<LabelDistribution>,
}

/// Converged control solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlSolution {
    pub action_dist: LabelDistribution,
    /// P(a_j | x_i), instances by actions.
    pub action_channel: ShannonChannel,
    /// P(x | a_j) per action via Bayes inversion of the converged channel;
    /// zeros for actions with no probability.
    pub result_dists: Vec<Vec<f64>>,
    /// The tilted target posteriors P(x | theta_j, s): P(x) m_ij^s normalized
    /// over instances. These are the idealized controlled distributions the
    /// actions aim for; they coincide with `result_dists` at the matched
    /// point and with the semantic Bayes posterior at s = 1.
    pub target_posteriors: Vec<Vec<f64>>,
    /// Control complexity I(X;A), bits.
    pub rate: f64,
    /// Purposeful information I(X;A/theta), bits.
    pub goal_info: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Goal-oriented information of one controlled result:
/// sum_i P(x_i|a_j) log[T(theta_j|x_i)/T(theta_j)], with T(theta_j) computed
/// against the baseline. Result mass on zero-truth outcomes gives `-inf`.
pub fn goal_info(result: &[f64], baseline: &Source, target_column: &[f64]) -> Result<f64> {
    if result.len() != baseline.len() || target_column.len() != baseline.len() {
        return Err(Error::DimensionMismatch(format!(
            "goal_info: result {}, target {}, baseline {}",
            result.len(),
            target_column.len(),
            baseline.len()
        )));
    }
    let logical: f64 = baseline
        .probs()
        .iter()
        .zip(target_column)
        .map(|(&p, &t)| p * t)
        .sum();
    if logical <= EPS {
        return Err(Error::AllZeroOverlap);
    }
    Ok(result
        .iter()
        .zip(target_column)
        .map(|(&w, &t)| wlog2_ratio(w, t, logical))
        .sum())
}

/// Purposeful information of a whole solution:
/// sum_j P(a_j) * goal_info_j.
pub fn multi_goal_info(
    solution: &ControlSolution,
    baseline: &Source,
    targets: &SemanticChannel,
) -> Result<f64> {
    let mut total = 0.0;
    for (j, &pa) in solution.action_dist.probs().iter().enumerate() {
        if pa <= EPS {
            continue;
        }
        total += pa * goal_info(&solution.result_dists[j], baseline, &targets.truth_column(j))?;
    }
    Ok(total)
}

/// Solve the control problem by MID iteration over P(a|x) and P(a).
pub fn solve_control(problem: &ControlProblem, opts: &SolveOptions) -> Result<ControlSolution> {
    let baseline = &problem.baseline;
    let engine = MidEngine::rate_fidelity(baseline, &problem.targets)?;
    let m = problem.targets.n_labels();
    let state = if problem.s == 0.0 {
        let (j, _) = engine.constant_label_solution()?;
        engine.one_hot_state(j)
    } else {
        let w0 = match &problem.init_action_dist {
            Some(d) => {
                if d.len() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "initial action distribution has {} entries, {} targets",
                        d.len(),
                        m
                    )));
                }
                d.probs().to_vec()
            }
            None => vec![1.0 / m as f64; m],
        };
        engine.solve(problem.s, &w0, opts, None)?
    };

    let g = engine.constraint_value(&state.q) / LN_2;
    let rate = engine.mi_nats(&state.q, &state.w) / LN_2;
    let action_channel = ShannonChannel::new(state.q.clone())?;
    let action_dist = {
        let mut probs = state.w.clone();
        crate::base::normalize(&mut probs);
        LabelDistribution::from_probs(probs)?
    };
    // Eq (34): P(x|a_j) = P(a_j|x) P(x) / P(a_j).
    let n = baseline.len();
    let result_dists = (0..m)
        .map(|j| {
            let pa = action_dist.probs()[j];
            if pa <= EPS {
                return vec![0.0; n];
            }
            let mut dist: Vec<f64> = (0..n)
                .map(|i| baseline.probs()[i] * action_channel.prob(i, j))
                .collect();
            crate::base::normalize(&mut dist);
            dist
        })
        .collect();
    // Eq (34), second form: P(x|theta_j, s) = P(x) m_ij^s / sum_k P(x_k) m_kj^s,
    // evaluated in the log domain.
    let kernel = engine.kernel();
    let target_posteriors = (0..m)
        .map(|j| {
            let logits: Vec<f64> = (0..n)
                .map(|i| {
                    let px = baseline.probs()[i];
                    if px <= EPS {
                        f64::NEG_INFINITY
                    } else {
                        px.ln() + problem.s * kernel.get(i, j)
                    }
                })
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return vec![0.0; n];
            }
            let mut dist: Vec<f64> = logits.into_iter().map(|l| (l - max).exp()).collect();
            crate::base::normalize(&mut dist);
            dist
        })
        .collect();
    Ok(ControlSolution {
        action_dist,
        action_channel,
        result_dists,
        target_posteriors,
        rate,
        goal_info: g,
        iterations: state.iterations,
        converged: state.converged,
    })
}

/// Reinforcement-learning reward of action a_k: the goal-information
/// increment between the previous and the next outcome distributions.
/// Rewards telescope over a trajectory.
pub fn rl_reward(
    prev: &[f64],
    next: &[f64],
    baseline: &Source,
    target_column: &[f64],
) -> Result<f64> {
    Ok(goal_info(next, baseline, target_column)? - goal_info(prev, baseline, target_column)?)
}

/// Replace each result distribution with a moment-matched Gaussian on the
/// grid and report the projected goal information (the paper's normal
/// projection of Figure 11). Returns the projected distributions and their
/// multi-goal information.
pub fn gaussian_projected_goal_info(
    solution: &ControlSolution,
    baseline: &Source,
    targets: &SemanticChannel,
    support_values: &[f64],
) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = baseline.len();
    if support_values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} support values, baseline has {n} points",
            support_values.len()
        )));
    }
    let mut projected = Vec::with_capacity(solution.result_dists.len());
    let mut total = 0.0;
    for (j, dist) in solution.result_dists.iter().enumerate() {
        let pa = solution.action_dist.probs()[j];
        if pa <= EPS {
            projected.push(vec![0.0; n]);
            continue;
        }
        let mean: f64 = support_values.iter().zip(dist).map(|(v, w)| v * w).sum();
        let var: f64 = support_values
            .iter()
            .zip(dist)
            .map(|(v, w)| w * (v - mean) * (v - mean))
            .sum();
        let sigma = var.sqrt().max(1e-9);
        let mut gauss: Vec<f64> = support_values
            .iter()
            .map(|&v| (-((v - mean) * (v - mean)) / (2.0 * sigma * sigma)).exp())
            .collect();
        crate::base::normalize(&mut gauss);
        total += pa * goal_info(&gauss, baseline, &targets.truth_column(j))?;
        projected.push(gauss);
    }
    Ok((projected, total))
}
