//! The MID (Minimum Information Difference) alternating-minimization engine
//! and the solvers built on it: the rate-fidelity function R(G), the
//! semantic-distortion variants R(D)/R(Theta), semantic channel capacity, and
//! the gray-level compression experiment.
//!
//! The engine alternates a channel step
//!
//! ```text
//! P(y_j|x_i) = P(y_j) m_ij^s / Z_i,   Z_i = sum_k P(y_k) m_ik^s
//! ```
//!
//! with the marginal step P(y_j) <- sum_i P(x_i) P(y_j|x_i), where
//! m_ij = T(theta_j|x_i) / T(theta_j) for R(G) and m_ij = exp(-d_ij) for the
//! distortion variants. Everything runs in the natural-log domain with
//! max-subtracted softmax rows, so large s and zero truth values are safe.
//! The per-channel-step objective I(X;Y) - s * A is jointly convex, so the
//! alternation decreases it monotonically and converges for every s.

use serde::{Deserialize, Serialize};

use crate::base::{EPS, LN_2};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::measures::shannon_mi_of_channel;
use crate::prob::{DistortionMatrix, LabelDistribution, SemanticChannel, ShannonChannel, Source};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Iteration controls for every MID-based solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when max_j |P(y_j) - P_prev(y_j)| drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 2000,
        }
    }
}

/// One converged point of the R(G) curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RGPoint {
    /// Lagrange slope dR/dG.
    pub s: f64,
    /// Shannon MI of the converged channel, bits.
    pub rate: f64,
    /// Semantic MI of the converged channel, bits.
    pub semantic_mi: f64,
    pub channel: ShannonChannel,
    pub label_dist: LabelDistribution,
    pub iterations: usize,
    pub converged: bool,
}

/// One converged point of a rate-distortion curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RDPoint {
    pub s: f64,
    /// Shannon MI of the converged channel, bits.
    pub rate: f64,
    /// Average distortion. For truth-function constraints this is the fuzzy
    /// entropy in bits; for an explicit [`DistortionMatrix`] it is in the
    /// matrix's own units.
    pub avg_distortion: f64,
    pub channel: ShannonChannel,
    pub label_dist: LabelDistribution,
    pub iterations: usize,
    pub converged: bool,
}

/// The R(G) curve over an s grid, with the inputs that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RGCurve {
    pub points: Vec<RGPoint>,
    pub source: Source,
    pub semantic_channel: SemanticChannel,
}

/// Per-iteration (R, G) record, used for convergence traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub rate: f64,
    pub semantic_mi: f64,
}

/// Constraint for [`solve_rd_semantic`].
#[derive(Debug, Clone)]
pub enum RdConstraint {
    /// Truth functions; the channel step uses T^s and the reported distortion
    /// is the fuzzy entropy -log2 T averaged over the joint, in bits.
    Truth(SemanticChannel),
    /// Explicit distortions; the channel step uses exp(-s d) directly and the
    /// reported distortion keeps the matrix's units.
    Distortion(DistortionMatrix),
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// The log-domain kernel K_ij driving a MID iteration: channel-step logits
/// are ln w_j + s K_ij and the constrained quantity is A = sum P Q K.
pub(crate) struct MidEngine<'a> {
    source: &'a Source,
    kernel: Mat,
}

pub(crate) struct MidState {
    /// Converged channel rows Q(y|x).
    pub q: Mat,
    /// Converged label distribution (the marginal of `q`).
    pub w: Vec<f64>,
    /// Row normalizers ln Z_i for the final channel step.
    pub lnz: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl<'a> MidEngine<'a> {
    /// Kernel ln m_ij = ln T(theta_j|x_i) - ln T(theta_j) for R(G)-style
    /// solves. Labels whose logical probability vanishes under the source are
    /// unusable and get a -inf column.
    pub fn rate_fidelity(source: &'a Source, sem: &SemanticChannel) -> Result<Self> {
        let logical = sem.logical_probs(source)?;
        let kernel = Mat::from_fn(sem.n_instances(), sem.n_labels(), |i, j| {
            let t = sem.truth(i, j);
            if logical[j] <= EPS || t <= EPS {
                f64::NEG_INFINITY
            } else {
                (t / logical[j]).ln()
            }
        });
        Ok(MidEngine { source, kernel })
    }

    /// Kernel ln T_ij for truth-constrained distortion solves.
    pub fn distortion_truth(source: &'a Source, sem: &SemanticChannel) -> Result<Self> {
        if sem.n_instances() != source.len() {
            return Err(Error::DimensionMismatch(format!(
                "semantic channel has {} rows, source has {} points",
                sem.n_instances(),
                source.len()
            )));
        }
        let kernel = sem
            .matrix()
            .map(|t| if t <= EPS { f64::NEG_INFINITY } else { t.ln() });
        Ok(MidEngine { source, kernel })
    }

    /// Kernel -d_ij for explicit distortions.
    pub fn distortion_matrix(source: &'a Source, d: &DistortionMatrix) -> Result<Self> {
        if d.n_instances() != source.len() {
            return Err(Error::DimensionMismatch(format!(
                "distortion matrix has {} rows, source has {} points",
                d.n_instances(),
                source.len()
            )));
        }
        Ok(MidEngine {
            source,
            kernel: d.matrix().map(|v| -v),
        })
    }

    /// Kernel built directly from canonical log ratios (SVB likelihoods).
    pub fn from_kernel(source: &'a Source, kernel: Mat) -> Self {
        MidEngine { source, kernel }
    }

    pub fn n_labels(&self) -> usize {
        self.kernel.cols()
    }

    pub fn kernel(&self) -> &Mat {
        &self.kernel
    }

    /// One channel step: rows Q(y|x) from the current label weights.
    /// Returns the stochastic rows and the ln Z_i normalizers.
    pub fn channel_step(&self, w: &[f64], s: f64) -> Result<(Mat, Vec<f64>)> {
        let n = self.source.len();
        let m = self.kernel.cols();
        let lnw: Vec<f64> = w
            .iter()
            .map(|&p| if p <= 0.0 { f64::NEG_INFINITY } else { p.ln() })
            .collect();
        let mut q = Mat::zeros(n, m);
        let mut lnz = vec![0.0; n];
        for i in 0..n {
            let row = q.row_mut(i);
            let mut max = f64::NEG_INFINITY;
            for j in 0..m {
                let k = self.kernel.get(i, j);
                // m^0 = 1 by convention, even where m = 0.
                let term = if s == 0.0 { 0.0 } else { s * k };
                let logit = lnw[j] + term;
                row[j] = logit;
                if logit > max {
                    max = logit;
                }
            }
            if max == f64::NEG_INFINITY {
                if self.source.probs()[i] > EPS {
                    return Err(Error::DegenerateRow(i));
                }
                // Zero-mass instances carry no weight anywhere; any
                // stochastic row keeps the channel valid.
                let uniform = 1.0 / m as f64;
                for l in row.iter_mut() {
                    *l = uniform;
                }
                lnz[i] = 0.0;
                continue;
            }
            if max == f64::INFINITY {
                // Negative s with zero truth: all mass on the infinite logits.
                let hits = row.iter().filter(|&&l| l == f64::INFINITY).count();
                for l in row.iter_mut() {
                    *l = if *l == f64::INFINITY {
                        1.0 / hits as f64
                    } else {
                        0.0
                    };
                }
                lnz[i] = f64::INFINITY;
                continue;
            }
            let mut z = 0.0;
            for l in row.iter_mut() {
                *l = (*l - max).exp();
                z += *l;
            }
            for l in row.iter_mut() {
                *l /= z;
            }
            lnz[i] = max + z.ln();
        }
        Ok((q, lnz))
    }

    /// Marginal of the joint P(x) Q(y|x).
    pub fn marginal(&self, q: &Mat) -> Vec<f64> {
        let mut w = vec![0.0; q.cols()];
        for (i, &px) in self.source.probs().iter().enumerate() {
            for (j, wj) in w.iter_mut().enumerate() {
                *wj += px * q.get(i, j);
            }
        }
        w
    }

    /// Constrained quantity A = sum_ij P(x_i) Q_ij K_ij, in kernel units.
    pub fn constraint_value(&self, q: &Mat) -> f64 {
        let mut a = 0.0;
        for (i, &px) in self.source.probs().iter().enumerate() {
            if px <= EPS {
                continue;
            }
            for j in 0..q.cols() {
                let qij = q.get(i, j);
                if qij > 0.0 {
                    a += px * qij * self.kernel.get(i, j);
                }
            }
        }
        a
    }

    /// Shannon MI of the joint P(x) Q(y|x), in nats.
    pub fn mi_nats(&self, q: &Mat, w: &[f64]) -> f64 {
        let mut mi = 0.0;
        for (i, &px) in self.source.probs().iter().enumerate() {
            if px <= EPS {
                continue;
            }
            for j in 0..q.cols() {
                let qij = q.get(i, j);
                if qij > EPS && w[j] > EPS {
                    mi += px * qij * (qij / w[j]).ln();
                }
            }
        }
        mi
    }

    /// Run the alternation from `w0` until the label distribution settles.
    /// `trace`, when given, receives one definitional (R, A) record per
    /// iteration.
    pub fn solve(
        &self,
        s: f64,
        w0: &[f64],
        opts: &SolveOptions,
        mut trace: Option<&mut Vec<(usize, f64, f64)>>,
    ) -> Result<MidState> {
        if !(opts.tol > 0.0) || opts.max_iter == 0 {
            return Err(Error::BadConfig(
                "solver needs tol > 0 and max_iter >= 1".into(),
            ));
        }
        let mut w = w0.to_vec();
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=opts.max_iter {
            iterations = it;
            let (q, _) = self.channel_step(&w, s)?;
            let next = self.marginal(&q);
            if let Some(t) = trace.as_deref_mut() {
                let a = self.constraint_value(&q);
                t.push((it, self.mi_nats(&q, &next) / LN_2, a));
            }
            let delta = w
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            w = next;
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        let (q, lnz) = self.channel_step(&w, s)?;
        let w = self.marginal(&q);
        Ok(MidState {
            q,
            w,
            lnz,
            iterations,
            converged,
        })
    }

    /// Degenerate s = 0 solution: all mass on the label with the best
    /// source-averaged kernel (ties to the lowest index).
    pub fn constant_label_solution(&self) -> Result<(usize, f64)> {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in 0..self.kernel.cols() {
            let avg: f64 = self
                .source
                .probs()
                .iter()
                .enumerate()
                .map(|(i, &px)| {
                    if px <= EPS {
                        0.0
                    } else {
                        px * self.kernel.get(i, j)
                    }
                })
                .sum();
            if avg > best.1 {
                best = (j, avg);
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::DegenerateRow(0));
        }
        Ok(best)
    }

    pub(crate) fn one_hot_state(&self, j: usize) -> MidState {
        let n = self.source.len();
        let m = self.kernel.cols();
        let q = Mat::from_fn(n, m, |_, jj| if jj == j { 1.0 } else { 0.0 });
        let mut w = vec![0.0; m];
        w[j] = 1.0;
        MidState {
            q,
            w,
            lnz: vec![0.0; n],
            iterations: 0,
            converged: true,
        }
    }
}

fn to_label_dist(w: &[f64]) -> Result<LabelDistribution> {
    let mut probs = w.to_vec();
    crate::base::normalize(&mut probs);
    LabelDistribution::from_probs(probs)
}

// ---------------------------------------------------------------------------
// R(G)
// ---------------------------------------------------------------------------

/// One MID channel step (Eq. P(y_j|x_i) = P(y_j) m_ij^s / Z_i) as a pure
/// function. At s = 0 every row equals the label distribution.
pub fn mid_channel_step(
    source: &Source,
    label_dist: &LabelDistribution,
    sem: &SemanticChannel,
    s: f64,
) -> Result<ShannonChannel> {
    let engine = MidEngine::rate_fidelity(source, sem)?;
    if label_dist.len() != engine.n_labels() {
        return Err(Error::DimensionMismatch(format!(
            "label distribution has {} entries, semantic channel has {} labels",
            label_dist.len(),
            engine.n_labels()
        )));
    }
    let (q, _) = engine.channel_step(label_dist.probs(), s)?;
    ShannonChannel::new(q)
}

/// The marginal step P(y_j) <- sum_i P(x_i) P(y_j|x_i).
pub fn mid_marginal_step(source: &Source, channel: &ShannonChannel) -> Result<LabelDistribution> {
    channel.output_marginal(source)
}

fn rg_point_from_state(
    engine: &MidEngine<'_>,
    source: &Source,
    s: f64,
    state: MidState,
) -> Result<RGPoint> {
    let g_nats = engine.constraint_value(&state.q);
    let channel = ShannonChannel::new(state.q)?;
    let rate = if g_nats.is_finite() && state.lnz.iter().all(|z| z.is_finite()) {
        let zbar: f64 = source
            .probs()
            .iter()
            .zip(&state.lnz)
            .map(|(&p, &z)| p * z)
            .sum();
        (s * g_nats - zbar) / LN_2
    } else {
        shannon_mi_of_channel(source, &channel)?
    };
    Ok(RGPoint {
        s,
        rate,
        semantic_mi: g_nats / LN_2,
        channel,
        label_dist: to_label_dist(&state.w)?,
        iterations: state.iterations,
        converged: state.converged,
    })
}

/// Solve one R(G) point at slope `s`, starting from `init` (uniform labels
/// when `None`). A point that hits `max_iter` is still returned, with
/// `converged = false`.
pub fn solve_rg_point(
    source: &Source,
    sem: &SemanticChannel,
    s: f64,
    init: Option<&LabelDistribution>,
    opts: &SolveOptions,
) -> Result<RGPoint> {
    let engine = MidEngine::rate_fidelity(source, sem)?;
    let state = if s == 0.0 {
        let (j, _) = engine.constant_label_solution()?;
        engine.one_hot_state(j)
    } else {
        let w0 = match init {
            Some(d) => d.probs().to_vec(),
            None => vec![1.0 / engine.n_labels() as f64; engine.n_labels()],
        };
        engine.solve(s, &w0, opts, None)?
    };
    rg_point_from_state(&engine, source, s, state)
}

/// Like [`solve_rg_point`] but records a per-iteration (R, G) trace.
pub fn solve_rg_point_traced(
    source: &Source,
    sem: &SemanticChannel,
    s: f64,
    init: Option<&LabelDistribution>,
    opts: &SolveOptions,
) -> Result<(RGPoint, Vec<TracePoint>)> {
    let engine = MidEngine::rate_fidelity(source, sem)?;
    if s == 0.0 {
        let (j, _) = engine.constant_label_solution()?;
        let state = engine.one_hot_state(j);
        let point = rg_point_from_state(&engine, source, s, state)?;
        return Ok((point, Vec::new()));
    }
    let w0 = match init {
        Some(d) => d.probs().to_vec(),
        None => vec![1.0 / engine.n_labels() as f64; engine.n_labels()],
    };
    let mut raw = Vec::new();
    let state = engine.solve(s, &w0, opts, Some(&mut raw))?;
    let trace = raw
        .into_iter()
        .map(|(iter, rate, a)| TracePoint {
            iter,
            rate,
            semantic_mi: a / LN_2,
        })
        .collect();
    let point = rg_point_from_state(&engine, source, s, state)?;
    Ok((point, trace))
}

/// Mixing weight pulling warm starts back toward uniform so labels that died
/// at one s can reappear at the next.
const WARM_START_MIX: f64 = 1e-3;

/// Solve the whole curve over a sorted s grid, warm-starting each point from
/// the previous converged label distribution.
pub fn solve_rg_curve(
    source: &Source,
    sem: &SemanticChannel,
    s_grid: &[f64],
    opts: &SolveOptions,
) -> Result<RGCurve> {
    if s_grid.is_empty() {
        return Err(Error::BadConfig("empty s grid".into()));
    }
    if s_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::BadConfig("s grid must be sorted ascending".into()));
    }
    let mut points = Vec::with_capacity(s_grid.len());
    let mut warm: Option<LabelDistribution> = None;
    for &s in s_grid {
        let init = warm.as_ref().map(|d| {
            let n = d.len() as f64;
            let probs = d
                .probs()
                .iter()
                .map(|&p| (1.0 - WARM_START_MIX) * p + WARM_START_MIX / n)
                .collect();
            LabelDistribution::from_probs(probs).expect("mixed warm start is valid")
        });
        let point = solve_rg_point(source, sem, s, init.as_ref(), opts)?;
        if s != 0.0 {
            warm = Some(point.label_dist.clone());
        }
        points.push(point);
    }
    Ok(RGCurve {
        points,
        source: source.clone(),
        semantic_channel: sem.clone(),
    })
}

/// Solve independent R(G) points (uniform inits, no warm start), sequentially.
pub fn solve_rg_points(
    source: &Source,
    sem: &SemanticChannel,
    s_grid: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<RGPoint>> {
    s_grid
        .iter()
        .map(|&s| solve_rg_point(source, sem, s, None, opts))
        .collect()
}

/// Parallel version of [`solve_rg_points`]; identical output order and values.
#[cfg(feature = "parallel")]
pub fn par_solve_rg_points(
    source: &Source,
    sem: &SemanticChannel,
    s_grid: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<RGPoint>> {
    s_grid
        .par_iter()
        .map(|&s| solve_rg_point(source, sem, s, None, opts))
        .collect()
}

// ---------------------------------------------------------------------------
// R(D) / R(Theta)
// ---------------------------------------------------------------------------

/// Solve one rate-distortion point under the minimum semantic distortion
/// criterion: P(y_j|x_i) proportional to P(y_j) T^s = P(y_j) exp(-s d).
pub fn solve_rd_semantic(
    source: &Source,
    constraint: &RdConstraint,
    s: f64,
    init: Option<&LabelDistribution>,
    opts: &SolveOptions,
) -> Result<RDPoint> {
    let engine = match constraint {
        RdConstraint::Truth(sem) => MidEngine::distortion_truth(source, sem)?,
        RdConstraint::Distortion(d) => MidEngine::distortion_matrix(source, d)?,
    };
    let state = if s == 0.0 {
        let (j, _) = engine.constant_label_solution()?;
        engine.one_hot_state(j)
    } else {
        let w0 = match init {
            Some(d) => d.probs().to_vec(),
            None => vec![1.0 / engine.n_labels() as f64; engine.n_labels()],
        };
        engine.solve(s, &w0, opts, None)?
    };
    // A = sum P Q K is the negative distortion in kernel units.
    let a = engine.constraint_value(&state.q);
    let avg_distortion = match constraint {
        RdConstraint::Truth(_) => -a / LN_2, // report bits
        RdConstraint::Distortion(_) => -a,
    };
    let channel = ShannonChannel::new(state.q)?;
    let rate = if s == 0.0 {
        0.0
    } else if a.is_finite() && state.lnz.iter().all(|z| z.is_finite()) {
        let zbar: f64 = source
            .probs()
            .iter()
            .zip(&state.lnz)
            .map(|(&p, &z)| p * z)
            .sum();
        (s * a - zbar) / LN_2
    } else {
        shannon_mi_of_channel(source, &channel)?
    };
    Ok(RDPoint {
        s,
        rate,
        avg_distortion,
        channel,
        label_dist: to_label_dist(&state.w)?,
        iterations: state.iterations,
        converged: state.converged,
    })
}

/// Bisect on s until the converged average distortion matches `target_d`.
/// Distortion decreases in s, so plain bisection on [0, s_max] suffices.
pub fn solve_rd_at_distortion(
    source: &Source,
    constraint: &RdConstraint,
    target_d: f64,
    s_max: f64,
    opts: &SolveOptions,
) -> Result<RDPoint> {
    if !(target_d >= 0.0) {
        return Err(Error::BadConfig("target distortion must be >= 0".into()));
    }
    let mut lo = 0.0;
    let mut hi = s_max.max(1.0);
    let mut best = solve_rd_semantic(source, constraint, hi, None, opts)?;
    if best.avg_distortion > target_d {
        return Ok(best); // target unreachable below s_max; return the tightest
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let point = solve_rd_semantic(source, constraint, mid, None, opts)?;
        if point.avg_distortion > target_d {
            lo = mid;
        } else {
            hi = mid;
            best = point;
        }
        if (hi - lo) < 1e-10 {
            break;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Semantic channel capacity
// ---------------------------------------------------------------------------

/// Search controls for [`semantic_channel_capacity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitySearch {
    /// Finite stand-in for s -> infinity.
    pub s_infinity: f64,
    /// Initial coordinate-ascent step on the source simplex.
    pub initial_step: f64,
    /// Maximum full sweeps of coordinate ascent.
    pub max_sweeps: usize,
    /// Stop once the step has shrunk below this.
    pub min_step: f64,
    pub solve: SolveOptions,
}

impl Default for CapacitySearch {
    fn default() -> Self {
        CapacitySearch {
            s_infinity: 200.0,
            initial_step: 0.25,
            max_sweeps: 200,
            min_step: 1e-6,
            solve: SolveOptions::default(),
        }
    }
}

/// Result of the capacity search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityResult {
    /// The best source found.
    pub source: Source,
    /// Semantic MI at that source with the s -> infinity channel, bits.
    pub capacity: f64,
    /// Set when one instance peaks several truth functions; the capacity is
    /// then strictly below log n.
    pub duplicate_peak: bool,
    /// Number of G evaluations performed.
    pub evaluations: usize,
}

/// Snap near-deterministic rows to exact one-hot vectors.
fn snap_one_hot(q: &mut Mat) {
    for i in 0..q.rows() {
        let row = q.row_mut(i);
        let (jmax, &vmax) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("non-empty row");
        if vmax > 1.0 - 1e-9 {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if j == jmax { 1.0 } else { 0.0 };
            }
        }
    }
}

/// Semantic MI under the s -> infinity (classification) channel for a
/// candidate source, bits. Rows get one-hot snapping before evaluation.
pub fn capacity_objective(
    sem: &SemanticChannel,
    probs: &[f64],
    search: &CapacitySearch,
) -> Result<f64> {
    let source = Source::from_probs(probs.to_vec())?;
    let engine = MidEngine::rate_fidelity(&source, sem)?;
    let w0 = vec![1.0 / sem.n_labels() as f64; sem.n_labels()];
    let mut state = engine.solve(search.s_infinity, &w0, &search.solve, None)?;
    snap_one_hot(&mut state.q);
    Ok(engine.constraint_value(&state.q) / LN_2)
}

fn coordinate_ascent(
    sem: &SemanticChannel,
    mut probs: Vec<f64>,
    search: &CapacitySearch,
    evaluations: &mut usize,
) -> Result<(Vec<f64>, f64)> {
    let n = probs.len();
    let mut eval = |probs: &[f64]| -> Result<f64> {
        *evaluations += 1;
        capacity_objective(sem, probs, search)
    };
    let mut best = eval(&probs)?;
    let mut step = search.initial_step;
    for _ in 0..search.max_sweeps {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                let delta = step * dir;
                if delta < 0.0 && probs[i] <= 0.0 {
                    continue;
                }
                let mut cand = probs.clone();
                cand[i] = (cand[i] + delta).max(0.0);
                let total: f64 = cand.iter().sum();
                if total <= 0.0 {
                    continue;
                }
                for c in cand.iter_mut() {
                    *c /= total;
                }
                let g = eval(&cand)?;
                if g > best + 1e-12 {
                    best = g;
                    probs = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < search.min_step {
                break;
            }
        }
    }
    Ok((probs, best))
}

/// Semantic channel capacity. The construction places mass 1/n under each
/// truth function's peak, then refines the source by deterministic coordinate
/// ascent on G at s -> infinity. The large-s objective is not concave in the
/// source, so the ascent also runs from a distinctiveness init (each label's
/// least ambiguous instance) and from the uniform source, keeping the best.
pub fn semantic_channel_capacity(
    sem: &SemanticChannel,
    search: &CapacitySearch,
) -> Result<CapacityResult> {
    let n = sem.n_instances();
    let m = sem.n_labels();
    // Peak instances, ties to the lowest index.
    let mut peaks = Vec::with_capacity(m);
    for j in 0..m {
        let col = sem.truth_column(j);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max <= EPS {
            return Err(Error::EmptyLabel(j));
        }
        let peak = col.iter().position(|&t| t == max).expect("max exists");
        peaks.push(peak);
    }
    let mut seen = std::collections::HashSet::new();
    let duplicate_peak = peaks.iter().any(|p| !seen.insert(*p));

    let mut peak_init = vec![0.0; n];
    for &p in &peaks {
        peak_init[p] += 1.0 / m as f64;
    }

    // Distinctiveness peaks: the instance where the label's truth value
    // stands out most against the other labels.
    let mut distinct_init = vec![0.0; n];
    for j in 0..m {
        let col = sem.truth_column(j);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &t) in col.iter().enumerate() {
            let rival = (0..m)
                .filter(|&k| k != j)
                .map(|k| sem.truth(i, k))
                .fold(0.0, f64::max);
            let margin = t - rival;
            if margin > best.1 {
                best = (i, margin);
            }
        }
        distinct_init[best.0] += 1.0 / m as f64;
    }

    let uniform_init = vec![1.0 / n as f64; n];

    let mut evaluations = 0;
    let mut winner: Option<(Vec<f64>, f64)> = None;
    for init in [peak_init, distinct_init, uniform_init] {
        let (probs, g) = coordinate_ascent(sem, init, search, &mut evaluations)?;
        if winner.as_ref().map_or(true, |(_, b)| g > *b) {
            winner = Some((probs, g));
        }
    }
    let (probs, best) = winner.expect("at least one init");

    Ok(CapacityResult {
        source: Source::from_probs(probs)?,
        capacity: best,
        duplicate_peak,
        evaluations,
    })
}

// ---------------------------------------------------------------------------
// Gray-level compression experiment
// ---------------------------------------------------------------------------

/// Truth-function family for the gray-level demo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrayTruthConfig {
    /// Gaussian ranges whose width grows with the gray level:
    /// sigma(c) = sigma0 * (1 + beta * c / levels). Visual discrimination
    /// falls as the level rises.
    Gaussian { sigma0: f64, beta: f64 },
    /// Contiguous crisp bands (levels must divide evenly by labels).
    Crisp,
}

impl GrayTruthConfig {
    pub fn default_gaussian(levels: usize) -> Self {
        GrayTruthConfig::Gaussian {
            sigma0: levels as f64 / 32.0,
            beta: 2.0,
        }
    }
}

/// Output of [`gray_compression_demo`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrayDemoReport {
    pub levels: usize,
    pub n_labels: usize,
    pub truth_config: GrayTruthConfig,
    pub s: f64,
    pub point: RGPoint,
    pub trace: Vec<TracePoint>,
    /// G at s -> infinity (s = 200): the attainable semantic MI ceiling.
    pub g_max: f64,
}

/// Build the gray-level semantic channel used by the demo.
pub fn gray_semantic_channel(
    levels: usize,
    n_labels: usize,
    config: &GrayTruthConfig,
) -> Result<SemanticChannel> {
    if n_labels < 2 || levels < n_labels {
        return Err(Error::BadConfig(format!(
            "need levels >= n_labels >= 2, got {levels} and {n_labels}"
        )));
    }
    let values: Vec<f64> = (0..levels).map(|v| v as f64).collect();
    let cols: Result<Vec<Vec<f64>>> = match *config {
        GrayTruthConfig::Gaussian { sigma0, beta } => {
            // Gaussian bumps with sigma growing in the gray level, normalized
            // into a partition of unity and rescaled to peak at 1. The
            // partition structure is what lets the s = 1 channel reach
            // R = G; per-column rescaling leaves the solve unchanged because
            // m_ij = T_ij / T(theta_j) is column-scale invariant.
            let bumps: Result<Vec<Vec<f64>>> = (0..n_labels)
                .map(|j| {
                    let center = j as f64 * (levels as f64 - 1.0) / (n_labels as f64 - 1.0);
                    let sigma = sigma0 * (1.0 + beta * center / levels as f64);
                    crate::prob::gaussian_truth(&values, center, sigma)
                })
                .collect();
            let bumps = bumps?;
            let sums: Vec<f64> = (0..levels)
                .map(|i| bumps.iter().map(|b| b[i]).sum())
                .collect();
            Ok((0..n_labels)
                .map(|j| {
                    let col: Vec<f64> =
                        (0..levels).map(|i| bumps[j][i] / sums[i]).collect();
                    let max = col.iter().cloned().fold(0.0, f64::max);
                    col.into_iter().map(|t| t / max).collect()
                })
                .collect())
        }
        GrayTruthConfig::Crisp => {
            let band = levels as f64 / n_labels as f64;
            Ok((0..n_labels)
                .map(|j| {
                    let lo = (j as f64 * band).round() as usize;
                    let hi = (((j + 1) as f64) * band).round() as usize;
                    (0..levels)
                        .map(|v| if v >= lo && v < hi { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect())
        }
    };
    SemanticChannel::from_columns(cols?)
}

/// Compress `levels` gray levels into `n_labels` fuzzy ranges: run the MID
/// iteration at slope `s` over a uniform source and report the convergence
/// trace plus the large-s semantic-MI ceiling.
pub fn gray_compression_demo(
    levels: usize,
    n_labels: usize,
    config: &GrayTruthConfig,
    s: f64,
    opts: &SolveOptions,
) -> Result<GrayDemoReport> {
    let sem = gray_semantic_channel(levels, n_labels, config)?;
    let source = Source::uniform(levels);
    let (point, trace) = solve_rg_point_traced(&source, &sem, s, None, opts)?;
    let ceiling = solve_rg_point(&source, &sem, 200.0, None, opts)?;
    Ok(GrayDemoReport {
        levels,
        n_labels,
        truth_config: *config,
        s,
        point,
        trace,
        g_max: ceiling.semantic_mi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::entropy_bits;
    use crate::measures::semantic_mi_report;
    use crate::prob::{crisp_truth, gaussian_truth, truth_to_distortion};
    use crate::base::LogBase;

    fn binary_gaussian_fixture() -> (Source, SemanticChannel) {
        let source = Source::from_probs(vec![0.6, 0.4]).unwrap();
        let values = [-1.0, 1.0];
        let sem = SemanticChannel::from_columns(vec![
            gaussian_truth(&values, -1.0, 1.2).unwrap(),
            gaussian_truth(&values, 1.0, 0.8).unwrap(),
        ])
        .unwrap();
        (source, sem)
    }

    #[test]
    fn channel_step_at_zero_slope_copies_label_dist() {
        let (source, sem) = binary_gaussian_fixture();
        let labels = LabelDistribution::from_probs(vec![0.3, 0.7]).unwrap();
        let ch = mid_channel_step(&source, &labels, &sem, 0.0).unwrap();
        for i in 0..2 {
            assert!((ch.prob(i, 0) - 0.3).abs() < 1e-12);
            assert!((ch.prob(i, 1) - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_step_rows_are_stochastic() {
        let (source, sem) = binary_gaussian_fixture();
        let labels = LabelDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        for s in [0.5, 1.0, 5.0, 200.0, -1.0] {
            let ch = mid_channel_step(&source, &labels, &sem, s).unwrap();
            for i in 0..2 {
                let sum: f64 = ch.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "s = {s}");
            }
        }
    }

    #[test]
    fn matched_channel_is_a_fixed_point_at_s1() {
        let src = Source::from_probs(vec![0.5, 0.3, 0.2]).unwrap();
        let ch = ShannonChannel::from_rows(vec![
            vec![0.8, 0.2],
            vec![0.4, 0.6],
            vec![0.1, 0.9],
        ])
        .unwrap();
        let sem = crate::learn::lbi_direct(&src, &ch).unwrap();
        let w = ch.output_marginal(&src).unwrap();
        let step = mid_channel_step(&src, &w, &sem, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((step.prob(i, j) - ch.prob(i, j)).abs() < 1e-12);
            }
        }
        // And the solver stays there, with R = G.
        let point = solve_rg_point(&src, &sem, 1.0, Some(&w), &SolveOptions::default()).unwrap();
        assert!(point.converged);
        assert!((point.rate - point.semantic_mi).abs() < 1e-9);
    }

    #[test]
    fn large_s_rows_become_one_hot() {
        let (source, sem) = binary_gaussian_fixture();
        let point =
            solve_rg_point(&source, &sem, 200.0, None, &SolveOptions::default()).unwrap();
        for i in 0..2 {
            let max = point.channel.row(i).iter().cloned().fold(0.0, f64::max);
            assert!(max > 1.0 - 1e-6);
        }
    }

    #[test]
    fn tautology_semantic_channel_gives_zero_curve() {
        let source = Source::uniform(3);
        let sem = SemanticChannel::from_columns(vec![vec![1.0; 3], vec![1.0; 3]]).unwrap();
        for s in [0.5, 1.0, 4.0] {
            let p = solve_rg_point(&source, &sem, s, None, &SolveOptions::default()).unwrap();
            assert!(p.semantic_mi.abs() < 1e-12, "s = {s}");
            assert!(p.rate.abs() < 1e-9, "s = {s}");
        }
    }

    #[test]
    fn parametric_values_match_definitions() {
        let (source, sem) = binary_gaussian_fixture();
        for s in [0.5, 1.0, 2.0] {
            let p = solve_rg_point(&source, &sem, s, None, &SolveOptions::default()).unwrap();
            assert!(p.converged);
            let r_def = shannon_mi_of_channel(&source, &p.channel).unwrap();
            let g_def = semantic_mi_report(&source, &p.channel, &sem)
                .unwrap()
                .semantic_mi;
            assert!((p.rate - r_def).abs() < 1e-6, "s = {s}");
            assert!((p.semantic_mi - g_def).abs() < 1e-6, "s = {s}");
            assert!(p.rate - p.semantic_mi >= -1e-9);
        }
    }

    #[test]
    fn curve_single_point_grid_matches_point_solver() {
        let (source, sem) = binary_gaussian_fixture();
        let curve = solve_rg_curve(&source, &sem, &[1.0], &SolveOptions::default()).unwrap();
        assert_eq!(curve.points.len(), 1);
        let p = solve_rg_point(&source, &sem, 1.0, None, &SolveOptions::default()).unwrap();
        assert!((curve.points[0].rate - p.rate).abs() < 1e-9);
        assert!((curve.points[0].semantic_mi - p.semantic_mi).abs() < 1e-9);
    }

    #[test]
    fn rd_s_zero_picks_best_constant_label() {
        let source = Source::from_probs(vec![0.7, 0.3]).unwrap();
        let d = DistortionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = solve_rd_semantic(
            &source,
            &RdConstraint::Distortion(d),
            0.0,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(p.rate, 0.0);
        // Best constant label is y1 (avg distortion 0.3 vs 0.7).
        assert!((p.avg_distortion - 0.3).abs() < 1e-12);
        assert_eq!(p.label_dist.probs()[0], 1.0);
    }

    #[test]
    fn rd_hamming_matches_closed_form() {
        // Uniform binary source with Hamming distortion: R(D) = 1 - H2(D),
        // and s = ln((1-D)/D) lands exactly at distortion D.
        let source = Source::uniform(2);
        let d = DistortionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for target in [0.05f64, 0.1, 0.2] {
            let s = ((1.0 - target) / target).ln();
            let p = solve_rd_semantic(
                &source,
                &RdConstraint::Distortion(d.clone()),
                s,
                None,
                &SolveOptions::default(),
            )
            .unwrap();
            let h2 = -(target * target.log2() + (1.0 - target) * (1.0 - target).log2());
            assert!((p.avg_distortion - target).abs() < 1e-6);
            assert!((p.rate - (1.0 - h2)).abs() < 1e-4, "D = {target}");
        }
    }

    #[test]
    fn rd_crisp_partition_rate_equals_semantic_entropy() {
        // Disjoint crisp sets at D = 0: the minimum rate is H(Y_theta).
        let source = Source::from_probs(vec![0.1, 0.2, 0.3, 0.15, 0.15, 0.1]).unwrap();
        let sem = SemanticChannel::from_columns(vec![
            crisp_truth(6, &[0, 1]),
            crisp_truth(6, &[2, 3]),
            crisp_truth(6, &[4, 5]),
        ])
        .unwrap();
        let p = solve_rd_semantic(
            &source,
            &RdConstraint::Truth(sem.clone()),
            1.0,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(p.avg_distortion.abs() < 1e-9);
        let logical = sem.logical_probs(&source).unwrap();
        let h_y_theta: f64 = p
            .label_dist
            .probs()
            .iter()
            .zip(&logical)
            .map(|(&py, &t)| if py > 0.0 { -py * t.log2() } else { 0.0 })
            .sum();
        assert!((p.rate - h_y_theta).abs() < 1e-6);
    }

    #[test]
    fn rd_truth_and_distortion_constraints_agree() {
        let source = Source::from_probs(vec![0.5, 0.3, 0.2]).unwrap();
        let sem = SemanticChannel::from_columns(vec![
            vec![1.0, 0.5, 0.1],
            vec![0.2, 1.0, 0.7],
        ])
        .unwrap();
        // Natural-log distortions reproduce the truth-constrained channel.
        let d_nats = truth_to_distortion(&sem, LogBase::Nats);
        let a = solve_rd_semantic(
            &source,
            &RdConstraint::Truth(sem.clone()),
            1.5,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        let b = solve_rd_semantic(
            &source,
            &RdConstraint::Distortion(d_nats),
            1.5,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((a.rate - b.rate).abs() < 1e-9);
        for i in 0..3 {
            for j in 0..2 {
                assert!((a.channel.prob(i, j) - b.channel.prob(i, j)).abs() < 1e-9);
            }
        }
        // Units differ: bits vs nats.
        assert!((a.avg_distortion * LN_2 - b.avg_distortion).abs() < 1e-9);
    }

    #[test]
    fn rd_bisection_hits_target_distortion() {
        let source = Source::uniform(2);
        let d = DistortionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = solve_rd_at_distortion(
            &source,
            &RdConstraint::Distortion(d),
            0.1,
            50.0,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((p.avg_distortion - 0.1).abs() < 1e-6);
    }

    #[test]
    fn capacity_disjoint_crisp_is_log_n() {
        let sem = SemanticChannel::from_columns(vec![
            crisp_truth(8, &[0, 1]),
            crisp_truth(8, &[2, 3]),
            crisp_truth(8, &[4, 5]),
            crisp_truth(8, &[6, 7]),
        ])
        .unwrap();
        let result = semantic_channel_capacity(&sem, &CapacitySearch::default()).unwrap();
        assert!(!result.duplicate_peak);
        assert!((result.capacity - 2.0).abs() < 1e-6);
    }

    #[test]
    fn capacity_identical_truth_functions_is_tiny() {
        let col = vec![1.0, 0.6, 0.2, 0.05];
        let sem = SemanticChannel::from_columns(vec![col.clone(), col]).unwrap();
        let result = semantic_channel_capacity(&sem, &CapacitySearch::default()).unwrap();
        assert!(result.duplicate_peak);
        assert!(result.capacity < 1.0);
    }

    #[test]
    fn gray_demo_crisp_identity_is_lossless() {
        let opts = SolveOptions::default();
        let report =
            gray_compression_demo(8, 8, &GrayTruthConfig::Crisp, 1.0, &opts).unwrap();
        let h = entropy_bits(&vec![1.0 / 8.0; 8]);
        assert!((report.point.rate - h).abs() < 1e-6);
        assert!((report.point.semantic_mi - h).abs() < 1e-6);
    }

    #[test]
    fn gray_demo_gaussian_converges_with_r_near_g() {
        let opts = SolveOptions::default();
        let config = GrayTruthConfig::default_gaussian(64);
        let report = gray_compression_demo(64, 8, &config, 1.0, &opts).unwrap();
        assert!(report.point.converged);
        let gap = (report.point.rate - report.point.semantic_mi).abs() / report.point.rate;
        assert!(gap < 1e-3, "relative gap {gap}");
        assert!(report.g_max >= report.point.semantic_mi - 1e-9);
        assert!(!report.trace.is_empty());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_points_match_sequential() {
        let (source, sem) = binary_gaussian_fixture();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let opts = SolveOptions::default();
        let seq = solve_rg_points(&source, &sem, &grid, &opts).unwrap();
        let par = par_solve_rg_points(&source, &sem, &grid, &opts).unwrap();
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a.rate, b.rate);
            assert_eq!(a.semantic_mi, b.semantic_mi);
        }
    }
}
