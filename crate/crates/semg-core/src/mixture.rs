//! Mixture models on a fixed discrete grid: the EM and EnM fitting loops with
//! full convergence diagnostics, and the Semantic Variational Bayes solver
//! for latent-variable marginals.
//!
//! The EnM outer iteration is: E-step, then n repetitions of (M1, E) so the
//! label marginal settles, then the component update. With `n_inner = 1` it
//! is exactly EM. Each outer iteration records the quantities that drive the
//! convergence argument: R, G, R'', KL(P || P_theta), KL(P_Y+1 || P_Y), Q,
//! and F' = H(Y) + Q. The identity
//!
//! ```text
//! KL(P || P_theta) = R'' - G = (R - G) + KL(P_Y+1 || P_Y)
//! ```
//!
//! holds exactly at every iteration; R - G decreasing is what converges the
//! model, while Q and F' are recorded only (both can move either way).

use serde::{Deserialize, Serialize};

use crate::base::{entropy_bits, kl_bits, log2_ratio, EPS};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::prob::{semantic_bayes, LabelDistribution, ShannonChannel, Source};
use crate::rate::{MidEngine, SolveOptions};

/// One mixture component: either an explicit table over the grid or a
/// Gaussian rendered (and normalized) onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Component {
    Gaussian { mean: f64, sigma: f64 },
    Table { probs: Vec<f64> },
}

impl Component {
    /// The component's likelihood vector P(x|theta_j) on the grid.
    pub fn density(&self, grid: &[f64]) -> Result<Vec<f64>> {
        match self {
            Component::Gaussian { mean, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::NonPositiveSigma(*sigma));
                }
                let mut dens: Vec<f64> = grid
                    .iter()
                    .map(|&v| (-((v - mean) * (v - mean)) / (2.0 * sigma * sigma)).exp())
                    .collect();
                let total: f64 = dens.iter().sum();
                if total <= 0.0 {
                    return Err(Error::BadConfig(format!(
                        "gaussian (mean {mean}, sigma {sigma}) underflows on the grid"
                    )));
                }
                for d in dens.iter_mut() {
                    *d /= total;
                }
                Ok(dens)
            }
            Component::Table { probs } => {
                if probs.len() != grid.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "table component has {} entries, grid has {}",
                        probs.len(),
                        grid.len()
                    )));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidDistribution(format!(
                        "table component sums to {sum}"
                    )));
                }
                Ok(probs.clone())
            }
        }
    }
}

/// Mixture weights plus components over a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    pub weights: Vec<f64>,
    pub components: Vec<Component>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<Component>) -> Result<Self> {
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights vs {} components",
                weights.len(),
                components.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights sum to {sum}"
            )));
        }
        Ok(MixtureModel {
            weights,
            components,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Component densities as grid-by-component columns.
    pub fn densities(&self, grid: &[f64]) -> Result<Mat> {
        let cols: Result<Vec<Vec<f64>>> =
            self.components.iter().map(|c| c.density(grid)).collect();
        let cols = cols?;
        Ok(Mat::from_fn(grid.len(), cols.len(), |i, j| cols[j][i]))
    }

    /// The mixture density P_theta(x) on the grid.
    pub fn mixture_density(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let dens = self.densities(grid)?;
        Ok((0..grid.len())
            .map(|i| {
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| w * dens.get(i, j))
                    .sum()
            })
            .collect())
    }
}

/// E-step responsibilities P(y_j|x_i) = P(y_j) P(x_i|theta_j) / P_theta(x_i).
///
/// Grid points with zero data mass and zero mixture density fall back to the
/// prior weights so rows stay stochastic.
pub fn em_e_step(grid_source: &Source, model: &MixtureModel) -> Result<ShannonChannel> {
    let needs_grid = model
        .components
        .iter()
        .any(|c| matches!(c, Component::Gaussian { .. }));
    let grid = if needs_grid {
        grid_source.numeric_values()?
    } else {
        // Table-only models never consult the grid values.
        (0..grid_source.len()).map(|i| i as f64).collect()
    };
    let dens = model.densities(&grid)?;
    let m = model.n_components();
    let mut rows = Vec::with_capacity(grid_source.len());
    for (i, &px) in grid_source.probs().iter().enumerate() {
        let ptheta: f64 = (0..m).map(|j| model.weights[j] * dens.get(i, j)).sum();
        // Tiny positive densities are fine for the Bayes ratio; only an
        // exact zero under data mass is fatal.
        if ptheta <= 0.0 {
            if px > EPS {
                return Err(Error::ZeroMixtureDensity(i));
            }
            rows.push(model.weights.clone());
            continue;
        }
        rows.push(
            (0..m)
                .map(|j| model.weights[j] * dens.get(i, j) / ptheta)
                .collect(),
        );
    }
    ShannonChannel::from_rows(rows)
}

/// M1-step: the updated label marginal (same contract as the MID marginal step).
pub fn em_m1_step(
    grid_source: &Source,
    responsibilities: &ShannonChannel,
) -> Result<LabelDistribution> {
    responsibilities.output_marginal(grid_source)
}

/// M2-step: component update P(x|theta_j+1) = P(x) P(y_j|x) / P+1(y_j).
///
/// `templates` fixes each component's parameterization: table components take
/// the formula verbatim; Gaussian components match the mean and standard
/// deviation of that distribution.
pub fn em_m2_step(
    grid_source: &Source,
    responsibilities: &ShannonChannel,
    new_weights: &[f64],
    templates: &[Component],
) -> Result<Vec<Component>> {
    let m = templates.len();
    if responsibilities.n_labels() != m || new_weights.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} responsibilities columns, {} weights, {} templates",
            responsibilities.n_labels(),
            new_weights.len(),
            m
        )));
    }
    let needs_grid = templates
        .iter()
        .any(|t| matches!(t, Component::Gaussian { .. }));
    let grid = if needs_grid {
        grid_source.numeric_values()?
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(m);
    for (j, template) in templates.iter().enumerate() {
        if new_weights[j] <= EPS {
            return Err(Error::EmptyComponent(j));
        }
        let mut target: Vec<f64> = grid_source
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &px)| px * responsibilities.prob(i, j) / new_weights[j])
            .collect();
        crate::base::normalize(&mut target);
        match template {
            Component::Table { .. } => out.push(Component::Table { probs: target }),
            Component::Gaussian { .. } => {
                let mean: f64 = grid.iter().zip(&target).map(|(v, w)| v * w).sum();
                let var: f64 = grid
                    .iter()
                    .zip(&target)
                    .map(|(v, w)| w * (v - mean) * (v - mean))
                    .sum();
                let spacing = grid_spacing(&grid);
                out.push(Component::Gaussian {
                    mean,
                    sigma: var.sqrt().max(0.5 * spacing),
                });
            }
        }
    }
    Ok(out)
}

fn grid_spacing(grid: &[f64]) -> f64 {
    grid.windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
}

/// One row of the EnM convergence trace; all quantities in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Shannon MI of the E-step joint against the updated marginal.
    pub r: f64,
    /// Semantic MI of the E-step joint.
    pub g: f64,
    /// R'' = sum P(x,y) log[P(x|theta)/P_theta(x)].
    pub r_pp: f64,
    /// KL(P || P_theta).
    pub kl_data: f64,
    /// KL(P_Y+1 || P_Y).
    pub kl_labels: f64,
    /// Q = -H(X, Y_theta), the expected complete-data log likelihood.
    pub q: f64,
    /// F' = H(Y) + Q, the negative variational free energy.
    pub f_prime: f64,
}

/// The per-outer-iteration diagnostics of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

fn trace_record(
    iter: usize,
    source: &Source,
    weights: &[f64],
    dens: &Mat,
) -> Result<TraceRecord> {
    let n = source.len();
    let m = weights.len();
    let mut ptheta = vec![0.0; n];
    for i in 0..n {
        ptheta[i] = (0..m).map(|j| weights[j] * dens.get(i, j)).sum();
    }
    // Responsibilities and the updated marginal.
    let mut resp = Mat::zeros(n, m);
    let mut w_next = vec![0.0; m];
    for (i, &px) in source.probs().iter().enumerate() {
        if ptheta[i] <= 0.0 {
            if px > EPS {
                return Err(Error::ZeroMixtureDensity(i));
            }
            continue;
        }
        for j in 0..m {
            let r = weights[j] * dens.get(i, j) / ptheta[i];
            resp.set(i, j, r);
            w_next[j] += px * r;
        }
    }
    // Raw logs on exactly-positive quantities: the Eq-80 identity must
    // survive extreme (but positive) density ratios in the tails.
    let mut r = 0.0;
    let mut g = 0.0;
    let mut r_pp = 0.0;
    let mut q = 0.0;
    for (i, &px) in source.probs().iter().enumerate() {
        if px <= 0.0 {
            continue;
        }
        for j in 0..m {
            let w = px * resp.get(i, j);
            if w <= 0.0 {
                continue;
            }
            let dij = dens.get(i, j);
            r += w * (resp.get(i, j) / w_next[j]).log2();
            g += w * (dij / px).log2();
            r_pp += w * (dij / ptheta[i]).log2();
            q += w * (weights[j] * dij).log2();
        }
    }
    let kl_data: f64 = source
        .probs()
        .iter()
        .zip(&ptheta)
        .map(|(&p, &pt)| if p <= 0.0 { 0.0 } else { p * (p / pt).log2() })
        .sum();
    let kl_labels = kl_bits(&w_next, weights);
    let f_prime = entropy_bits(weights) + q;
    Ok(TraceRecord {
        iter,
        r,
        g,
        r_pp,
        kl_data,
        kl_labels,
        q,
        f_prime,
    })
}

/// Fit a mixture with the EnM algorithm.
///
/// `n_inner = 1` is plain EM; larger values repeat the (E, M1) pair so
/// P(y) settles before each component update. Stops when
/// KL(P || P_theta) < tol or after `max_outer` iterations (then
/// `trace.converged` is false and the best model so far is still returned).
pub fn enm_fit(
    data_source: &Source,
    init: &MixtureModel,
    n_inner: usize,
    tol: f64,
    max_outer: usize,
) -> Result<(MixtureModel, ConvergenceTrace)> {
    if n_inner == 0 {
        return Err(Error::BadConfig("n_inner must be >= 1".into()));
    }
    if !(tol > 0.0) || max_outer == 0 {
        return Err(Error::BadConfig("need tol > 0 and max_outer >= 1".into()));
    }
    let needs_grid = init
        .components
        .iter()
        .any(|c| matches!(c, Component::Gaussian { .. }));
    let grid = if needs_grid {
        data_source.numeric_values()?
    } else {
        (0..data_source.len()).map(|i| i as f64).collect()
    };

    let mut model = init.clone();
    let mut records = Vec::new();
    let mut converged = false;
    for iter in 0..max_outer {
        let dens = model.densities(&grid)?;
        let record = trace_record(iter, data_source, &model.weights, &dens)?;
        records.push(record);
        if record.kl_data < tol {
            converged = true;
            break;
        }
        // n-step: settle the marginal under the current components.
        let mut resp = em_e_step(data_source, &model)?;
        for _ in 1..n_inner {
            let w = em_m1_step(data_source, &resp)?;
            model.weights = w.probs().to_vec();
            resp = em_e_step(data_source, &model)?;
        }
        let w_next = em_m1_step(data_source, &resp)?;
        let components = em_m2_step(
            data_source,
            &resp,
            w_next.probs(),
            &model.components,
        )?;
        model = MixtureModel::new(w_next.probs().to_vec(), components)?;
    }
    Ok((
        model,
        ConvergenceTrace {
            records,
            converged,
        },
    ))
}

/// Constraint set for [`svb_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SvbConstraints {
    /// Likelihood vectors P(x|theta_j) on the grid.
    Likelihoods(Vec<Vec<f64>>),
    /// Truth columns T(theta_j|x); each is converted through the semantic
    /// Bayes formula, so normalized copies of the likelihoods give identical
    /// results.
    TruthColumns(Vec<Vec<f64>>),
}

impl SvbConstraints {
    fn len(&self) -> usize {
        match self {
            SvbConstraints::Likelihoods(v) | SvbConstraints::TruthColumns(v) => v.len(),
        }
    }
}

/// Result of a Semantic Variational Bayes solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvbResult {
    pub label_dist: LabelDistribution,
    pub channel: ShannonChannel,
    /// F = H(X|Y_theta) + KL(P_Y+1 || P_Y) at the converged point, bits.
    pub free_energy: f64,
    /// Total variation between sum_j P(y_j) P(x|theta_j) and P(x).
    pub mixture_tv: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve the latent-variable marginal P(y) for fixed constraints by the MID
/// iteration with strength `s`.
///
/// At s = 1 with likelihood constraints this is exactly the (E, M1) loop of
/// EM with frozen components, so when P(x) really is a mixture of the given
/// likelihoods the converged P(y) reproduces the generating weights.
pub fn svb_solve(
    grid_source: &Source,
    constraints: &SvbConstraints,
    s: f64,
    opts: &SolveOptions,
) -> Result<SvbResult> {
    let n = grid_source.len();
    let m = constraints.len();
    if m == 0 {
        return Err(Error::BadConfig("no constraints".into()));
    }
    // Canonical per-label likelihoods P(x|theta_j) for the diagnostics.
    let likelihoods: Vec<Vec<f64>> = match constraints {
        SvbConstraints::Likelihoods(liks) => {
            for (j, l) in liks.iter().enumerate() {
                if l.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "constraint {j} has {} entries, grid has {n}",
                        l.len()
                    )));
                }
                let sum: f64 = l.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidDistribution(format!(
                        "likelihood constraint {j} sums to {sum}"
                    )));
                }
            }
            liks.clone()
        }
        SvbConstraints::TruthColumns(cols) => cols
            .iter()
            .map(|col| semantic_bayes(grid_source, col).map(|(post, _)| post))
            .collect::<Result<_>>()?,
    };
    // Kernel ln m_ij with m_ij = P(x_i|theta_j)/P(x_i); per-instance scale
    // factors cancel in the channel step, so this matches the P_theta form.
    let kernel = Mat::from_fn(n, m, |i, j| {
        let px = grid_source.probs()[i];
        let l = likelihoods[j][i];
        if px <= 0.0 {
            0.0
        } else if l <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (l / px).ln()
        }
    });
    let engine = MidEngine::from_kernel(grid_source, kernel);
    let w0 = vec![1.0 / m as f64; m];
    let state = engine.solve(s, &w0, opts, None)?;

    let channel = ShannonChannel::new(state.q.clone())?;
    let label_dist = {
        let mut probs = state.w.clone();
        crate::base::normalize(&mut probs);
        LabelDistribution::from_probs(probs)?
    };

    // F = H(X|Y_theta) + KL(P_Y+1 || P_Y); the KL term is ~0 at convergence.
    let mut h_post = 0.0;
    for (i, &px) in grid_source.probs().iter().enumerate() {
        if px <= EPS {
            continue;
        }
        for j in 0..m {
            let w = px * state.q.get(i, j);
            if w > EPS {
                h_post -= w * log2_ratio(likelihoods[j][i], 1.0);
            }
        }
    }
    let w_next = engine.marginal(&state.q);
    let free_energy = h_post + kl_bits(&w_next, &state.w);

    let mixture_tv = 0.5
        * grid_source
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &px)| {
                let mix: f64 = (0..m)
                    .map(|j| label_dist.probs()[j] * likelihoods[j][i])
                    .sum();
                (mix - px).abs()
            })
            .sum::<f64>();

    Ok(SvbResult {
        label_dist,
        channel,
        free_energy,
        mixture_tv,
        iterations: state.iterations,
        converged: state.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_0_127() -> Vec<f64> {
        (0..128).map(|v| v as f64).collect()
    }

    fn mixture_data(grid: &[f64], model: &MixtureModel) -> Source {
        let p = model.mixture_density(grid).unwrap();
        Source::from_values(grid, p).unwrap()
    }

    fn two_gaussian_truth() -> MixtureModel {
        MixtureModel::new(
            vec![0.3, 0.7],
            vec![
                Component::Gaussian {
                    mean: 30.0,
                    sigma: 10.0,
                },
                Component::Gaussian {
                    mean: 70.0,
                    sigma: 10.0,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn e_step_single_component_is_all_ones() {
        let grid = grid_0_127();
        let model = MixtureModel::new(
            vec![1.0],
            vec![Component::Gaussian {
                mean: 50.0,
                sigma: 12.0,
            }],
        )
        .unwrap();
        let data = mixture_data(&grid, &model);
        let resp = em_e_step(&data, &model).unwrap();
        for i in 0..grid.len() {
            assert_eq!(resp.prob(i, 0), 1.0);
        }
    }

    #[test]
    fn e_step_symmetric_components_give_symmetric_responsibilities() {
        let grid: Vec<f64> = (0..64).map(|v| v as f64).collect();
        let model = MixtureModel::new(
            vec![0.5, 0.5],
            vec![
                Component::Gaussian {
                    mean: 20.0,
                    sigma: 6.0,
                },
                Component::Gaussian {
                    mean: 43.0,
                    sigma: 6.0,
                },
            ],
        )
        .unwrap();
        let data = mixture_data(&grid, &model);
        let resp = em_e_step(&data, &model).unwrap();
        for i in 0..grid.len() {
            let mirror = 63 - i;
            assert!((resp.prob(i, 0) - resp.prob(mirror, 1)).abs() < 1e-9);
        }
    }

    #[test]
    fn e_step_matches_direct_bayes_oracle() {
        let grid: Vec<f64> = (0..32).map(|v| v as f64).collect();
        let model = MixtureModel::new(
            vec![0.4, 0.6],
            vec![
                Component::Gaussian {
                    mean: 8.0,
                    sigma: 3.0,
                },
                Component::Gaussian {
                    mean: 22.0,
                    sigma: 5.0,
                },
            ],
        )
        .unwrap();
        let data = mixture_data(&grid, &model);
        let resp = em_e_step(&data, &model).unwrap();
        let dens = model.densities(&grid).unwrap();
        for i in 0..grid.len() {
            let num0 = 0.4 * dens.get(i, 0);
            let num1 = 0.6 * dens.get(i, 1);
            assert!((resp.prob(i, 0) - num0 / (num0 + num1)).abs() < 1e-12);
        }
    }

    #[test]
    fn m2_fixed_point_at_true_parameters() {
        let grid = grid_0_127();
        let model = two_gaussian_truth();
        let data = mixture_data(&grid, &model);
        let resp = em_e_step(&data, &model).unwrap();
        let w = em_m1_step(&data, &resp).unwrap();
        for (a, b) in w.probs().iter().zip(&model.weights) {
            assert!((a - b).abs() < 1e-9);
        }
        let comps = em_m2_step(&data, &resp, w.probs(), &model.components).unwrap();
        for (new, old) in comps.iter().zip(&model.components) {
            match (new, old) {
                (
                    Component::Gaussian { mean: m1, sigma: s1 },
                    Component::Gaussian { mean: m2, sigma: s2 },
                ) => {
                    // Fixed point up to grid quantization of the moments.
                    assert!((m1 - m2).abs() < 0.1, "{m1} vs {m2}");
                    assert!((s1 - s2).abs() < 0.1, "{s1} vs {s2}");
                }
                _ => panic!("expected gaussians"),
            }
        }
    }

    #[test]
    fn m2_nonparametric_matches_formula() {
        let grid: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let model = MixtureModel::new(
            vec![0.5, 0.5],
            vec![
                Component::Gaussian {
                    mean: 4.0,
                    sigma: 2.0,
                },
                Component::Gaussian {
                    mean: 11.0,
                    sigma: 2.0,
                },
            ],
        )
        .unwrap();
        let data = mixture_data(&grid, &model);
        let resp = em_e_step(&data, &model).unwrap();
        let w = em_m1_step(&data, &resp).unwrap();
        let tables = vec![
            Component::Table {
                probs: vec![1.0 / 16.0; 16],
            };
            2
        ];
        let comps = em_m2_step(&data, &resp, w.probs(), &tables).unwrap();
        for (j, comp) in comps.iter().enumerate() {
            let Component::Table { probs } = comp else {
                panic!("expected table")
            };
            for (i, &p) in probs.iter().enumerate() {
                let expected = data.probs()[i] * resp.prob(i, j) / w.probs()[j];
                assert!((p - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enm_true_init_converges_immediately() {
        let grid = grid_0_127();
        let model = two_gaussian_truth();
        let data = mixture_data(&grid, &model);
        let (_, trace) = enm_fit(&data, &model, 3, 1e-6, 50).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.records.len(), 1);
        assert!(trace.records[0].kl_data < 1e-9);
    }

    #[test]
    fn enm_recovers_swapped_weights() {
        // True mixing proportion 0.3 : 0.7 with a deliberately wrong init.
        let grid = grid_0_127();
        let truth = two_gaussian_truth();
        let data = mixture_data(&grid, &truth);
        let init = MixtureModel::new(
            vec![0.7, 0.3],
            vec![
                Component::Gaussian {
                    mean: 40.0,
                    sigma: 15.0,
                },
                Component::Gaussian {
                    mean: 60.0,
                    sigma: 15.0,
                },
            ],
        )
        .unwrap();
        let (fitted, trace) = enm_fit(&data, &init, 3, 1e-4, 500).unwrap();
        assert!(trace.converged, "did not converge: {:?}", trace.records.last());
        assert!((fitted.weights[0] - 0.3).abs() < 0.02);
        assert!((fitted.weights[1] - 0.7).abs() < 0.02);
        // Eq (80) identity at every iteration.
        for rec in &trace.records {
            assert!(
                (rec.kl_data - (rec.r_pp - rec.g)).abs() < 1e-7,
                "iter {}",
                rec.iter
            );
            assert!(
                (rec.kl_data - ((rec.r - rec.g) + rec.kl_labels)).abs() < 1e-7,
                "iter {}",
                rec.iter
            );
        }
        // The information difference drives convergence.
        for pair in trace.records.windows(2) {
            assert!(pair[1].r - pair[1].g <= pair[0].r - pair[0].g + 1e-9);
        }
    }

    #[test]
    fn em_is_enm_with_single_inner_step() {
        // Grid wide enough that tail truncation stays below the tolerance.
        let grid: Vec<f64> = (0..96).map(|v| v as f64).collect();
        let truth = MixtureModel::new(
            vec![0.4, 0.6],
            vec![
                Component::Gaussian {
                    mean: 30.0,
                    sigma: 7.0,
                },
                Component::Gaussian {
                    mean: 60.0,
                    sigma: 7.0,
                },
            ],
        )
        .unwrap();
        let data = mixture_data(&grid, &truth);
        let init = MixtureModel::new(
            vec![0.5, 0.5],
            vec![
                Component::Gaussian {
                    mean: 38.0,
                    sigma: 9.0,
                },
                Component::Gaussian {
                    mean: 55.0,
                    sigma: 9.0,
                },
            ],
        )
        .unwrap();
        let (em_fit, em_trace) = enm_fit(&data, &init, 1, 1e-4, 2000).unwrap();
        let (enm_fit_, enm_trace) = enm_fit(&data, &init, 3, 1e-4, 2000).unwrap();
        assert!(em_trace.converged && enm_trace.converged);
        for (a, b) in em_fit.weights.iter().zip(&enm_fit_.weights) {
            assert!((a - b).abs() < 5e-3);
        }
    }

    #[test]
    fn svb_recovers_mixture_weights() {
        let grid: Vec<f64> = (0..64).map(|v| v as f64).collect();
        let comps = [
            Component::Gaussian {
                mean: 10.0,
                sigma: 4.0,
            },
            Component::Gaussian {
                mean: 32.0,
                sigma: 5.0,
            },
            Component::Gaussian {
                mean: 52.0,
                sigma: 4.0,
            },
        ];
        let weights = [0.2, 0.5, 0.3];
        let liks: Vec<Vec<f64>> = comps.iter().map(|c| c.density(&grid).unwrap()).collect();
        let p: Vec<f64> = (0..64)
            .map(|i| (0..3).map(|j| weights[j] * liks[j][i]).sum())
            .collect();
        let data = Source::from_values(&grid, p).unwrap();
        let result = svb_solve(
            &data,
            &SvbConstraints::Likelihoods(liks),
            1.0,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(result.converged);
        let tv: f64 = result
            .label_dist
            .probs()
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv < 1e-3, "tv = {tv}");
        assert!(result.mixture_tv < 1e-3);
    }

    #[test]
    fn svb_single_constraint_is_deterministic() {
        let grid: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let c = Component::Gaussian {
            mean: 8.0,
            sigma: 3.0,
        };
        let lik = c.density(&grid).unwrap();
        let data = Source::from_values(&grid, lik.clone()).unwrap();
        let result = svb_solve(
            &data,
            &SvbConstraints::Likelihoods(vec![lik]),
            1.0,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(result.label_dist.probs(), &[1.0]);
    }

    #[test]
    fn svb_truth_columns_match_likelihood_form() {
        let grid: Vec<f64> = (0..32).map(|v| v as f64).collect();
        let comps = [
            Component::Gaussian {
                mean: 8.0,
                sigma: 3.0,
            },
            Component::Gaussian {
                mean: 24.0,
                sigma: 4.0,
            },
        ];
        let weights = [0.35, 0.65];
        let liks: Vec<Vec<f64>> = comps.iter().map(|c| c.density(&grid).unwrap()).collect();
        let p: Vec<f64> = (0..32)
            .map(|i| (0..2).map(|j| weights[j] * liks[j][i]).sum())
            .collect();
        let data = Source::from_values(&grid, p).unwrap();
        // Truth columns proportional to the likelihood-to-prior ratio.
        let cols: Vec<Vec<f64>> = liks
            .iter()
            .map(|l| crate::prob::truth_from_likelihood(&data, l).unwrap())
            .collect();
        let a = svb_solve(
            &data,
            &SvbConstraints::Likelihoods(liks),
            1.0,
            &SolveOptions::default(),
        )
        .unwrap();
        let b = svb_solve(
            &data,
            &SvbConstraints::TruthColumns(cols),
            1.0,
            &SolveOptions::default(),
        )
        .unwrap();
        for (x, y) in a.label_dist.probs().iter().zip(b.label_dist.probs()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let model = two_gaussian_truth();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.contains("\"type\":\"gaussian\""));
        let back: MixtureModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
    }
}
