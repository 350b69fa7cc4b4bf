//! Subcommand definitions and handlers.
//!
//! Every handler returns the result envelope plus a flag marking
//! converged-with-warnings outcomes; `run_main` maps that to the exit code
//! contract: 0 on success, 2 when results exist but something did not
//! converge, 1 on input errors.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use semg_core::base::LogBase;
use semg_core::confirm::{
    causal_confirmation, causal_probability, channel_confirmation, prediction_confirmation,
    ContingencyTable,
};
use semg_core::control::{solve_control, ControlProblem};
use semg_core::learn::{classify_max_info, lbi_direct, ClassifyCriterion, ParamGrid, TruthParams};
use semg_core::maxmi::{classify_iterate, IterateStatus};
use semg_core::mixture::{enm_fit, svb_solve, SvbConstraints};
use semg_core::portfolio::{
    arrow_value, growth_entropy, information_value, investment_capacity, kelly_optimal,
    risk_measures, BetSpec,
};
use semg_core::prob::{SemanticChannel, Source};
use semg_core::rate::{
    gray_compression_demo, semantic_channel_capacity, solve_rd_at_distortion, solve_rd_semantic,
    solve_rg_curve, CapacitySearch, GrayTruthConfig, RdConstraint, SolveOptions,
};

use crate::envelope::{float_array, ResultEnvelope};
use crate::formats;
use crate::reproduce;

#[derive(Debug, Parser)]
#[command(
    name = "semg",
    version,
    about = "Semantic information toolkit: truth-function channels, rate-fidelity solvers, latent-variable fits, control, confirmation, and growth-entropy portfolios",
    after_help = "Set SEMG_LOG_BASE=e for natural-log output units (default 2 = bits)."
)]
pub struct Cli {
    /// Threads for parallel grid evaluation (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the R(G) rate-fidelity curve over an s grid.
    RgCurve(RgCurveArgs),
    /// Solve a rate-distortion point under semantic or explicit distortion.
    RdSolve(RdSolveArgs),
    /// Semantic channel capacity of a truth-function matrix.
    Capacity(CapacityArgs),
    /// Gray-level compression experiment (fuzzy ranges over gray levels).
    CompressGray(CompressGrayArgs),
    /// Learn truth functions from a sample channel (direct or parametric).
    Lbi(LbiArgs),
    /// Classify each instance by maximum semantic information.
    Classify(ClassifyArgs),
    /// Semi-supervised maximum-MI classification of observations.
    MaxmiClassify(MaxmiArgs),
    /// Fit a mixture model with the EnM algorithm.
    MixtureEnm(MixtureEnmArgs),
    /// Solve latent-variable weights by Semantic Variational Bayes.
    Svb(SvbArgs),
    /// Goal-oriented constraint control over fuzzy targets.
    Control(ControlArgs),
    /// Confirmation degrees of a 2x2 contingency table.
    Confirm(ConfirmArgs),
    /// Generalized Kelly ratio and investment capacity of a bet.
    Kelly(KellyArgs),
    /// Capital growth entropy of a portfolio at given ratios.
    Growth(GrowthArgs),
    /// Information value of a probability forecast.
    InfoValue(InfoValueArgs),
    /// Re-run a built-in experiment and emit its plot-ready files.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct RgCurveArgs {
    /// Source CSV (x,p).
    #[arg(long)]
    pub source: PathBuf,
    /// Semantic channel CSV (truth functions as columns).
    #[arg(long)]
    pub sem: PathBuf,
    /// s grid: "start:end:step" or a comma list.
    #[arg(long)]
    pub s_grid: String,
    /// Curve CSV output (s,R,G,iterations,converged).
    #[arg(long)]
    pub out: PathBuf,
    /// Also dump the converged channel and marginal per point as JSON.
    #[arg(long)]
    pub dump_channels: Option<PathBuf>,
    /// Solve each point independently (uniform inits) instead of warm-starting.
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RdSolveArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// Truth-function constraint CSV (exclusive with --dist).
    #[arg(long)]
    pub sem: Option<PathBuf>,
    /// Explicit distortion matrix CSV (exclusive with --sem).
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Slope parameter (exclusive with --target-d).
    #[arg(long)]
    pub s: Option<f64>,
    /// Bisect on s until the average distortion hits this value.
    #[arg(long)]
    pub target_d: Option<f64>,
    /// Upper bisection bound for --target-d.
    #[arg(long, default_value_t = 100.0)]
    pub s_max: f64,
    /// Result JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Include the converged channel matrix in the JSON.
    #[arg(long)]
    pub dump_channels: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[arg(long)]
    pub sem: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Finite stand-in for s -> infinity.
    #[arg(long, default_value_t = 200.0)]
    pub s_infinity: f64,
}

#[derive(Debug, Args)]
pub struct CompressGrayArgs {
    #[arg(long, default_value_t = 256)]
    pub levels: usize,
    #[arg(long, default_value_t = 8)]
    pub labels: usize,
    /// Base width of the fuzzy ranges (default: levels / 32).
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Width growth with the gray level.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Use crisp contiguous bands instead of fuzzy ranges.
    #[arg(long)]
    pub crisp: bool,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration (R, G) trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LbiArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// Sample channel CSV P(y|x).
    #[arg(long)]
    pub channel: PathBuf,
    /// Learned semantic channel CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Parametric family: fit by grid search instead of the direct formula.
    #[arg(long, value_parser = ["gaussian", "trapezoid"])]
    pub family: Option<String>,
    /// JSON sidecar with the fitted parameters per label.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    /// Sigma grid size for the gaussian family.
    #[arg(long, default_value_t = 16)]
    pub n_sigmas: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub sem: PathBuf,
    /// Pick by raw truth value (least distortion) instead of information.
    #[arg(long)]
    pub min_distortion: bool,
    /// Label assignment CSV output (x,label).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaxmiArgs {
    /// Observation model JSON.
    #[arg(long)]
    pub obs: PathBuf,
    /// Initial partition CSV (z,label).
    #[arg(long)]
    pub init_partition: PathBuf,
    /// Number of labels (default: 1 + max label in the init partition).
    #[arg(long)]
    pub n_labels: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Shannon-MI trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct MixtureEnmArgs {
    /// Data distribution CSV (x,p) on a numeric grid.
    #[arg(long)]
    pub data: PathBuf,
    /// Initial mixture model JSON.
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub n_inner: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_outer: usize,
    /// Convergence trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Fitted model JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvbArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Likelihood constraints: mixture-model JSON (weights ignored).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Truth-function constraints: semantic channel CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct ControlArgs {
    /// Baseline distribution CSV (x,p).
    #[arg(long)]
    pub baseline: PathBuf,
    /// Target truth functions CSV (one column per action).
    #[arg(long)]
    pub targets: PathBuf,
    /// Constraint strengths, comma-separated.
    #[arg(long, default_value = "1")]
    pub s: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct ConfirmArgs {
    /// Contingency counts "a,b,c,d".
    #[arg(long)]
    pub table: String,
    /// Measures to report, comma-separated from b1,c1,pd,cc.
    #[arg(long, default_value = "b1,c1,pd,cc")]
    pub measures: String,
}

#[derive(Debug, Args)]
pub struct KellyArgs {
    /// Probability of winning.
    #[arg(long)]
    pub p: f64,
    /// Loss fraction on the wager.
    #[arg(long)]
    pub r1: f64,
    /// Gain fraction on the wager.
    #[arg(long)]
    pub r2: f64,
    /// Risk-free rate on the rest.
    #[arg(long, default_value_t = 0.0)]
    pub r0: f64,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    /// Portfolio spec JSON (probs, returns, labels).
    #[arg(long)]
    pub spec: PathBuf,
    /// Ratio CSV (asset,q).
    #[arg(long)]
    pub q: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoValueArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Prior outcome distribution CSV (x,p).
    #[arg(long)]
    pub prior: PathBuf,
    /// Forecast distribution CSV.
    #[arg(long)]
    pub pred: PathBuf,
    /// Realized distribution CSV.
    #[arg(long)]
    pub realized: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// One of fig6, fig8, fig9, fig11, fig12, fig16, fig17.
    pub figure: String,
    /// Output directory (default repro-<figure>).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Entry point shared by the binary and the tests: parse, dispatch, print,
/// map to the exit-code contract.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(outcome) => {
            print!("{}", outcome.envelope.render());
            if outcome.not_converged {
                2
            } else {
                0
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

pub struct Outcome {
    pub envelope: ResultEnvelope,
    pub not_converged: bool,
}

impl Outcome {
    pub(crate) fn ok(envelope: ResultEnvelope) -> Self {
        Outcome {
            envelope,
            not_converged: false,
        }
    }
}

pub fn log_base_from_env() -> Result<LogBase> {
    match std::env::var("SEMG_LOG_BASE") {
        Ok(v) => LogBase::parse(&v)
            .ok_or_else(|| anyhow!("SEMG_LOG_BASE must be 2 or e, got {v:?}")),
        Err(_) => Ok(LogBase::Bits),
    }
}

pub fn dispatch(cli: Cli) -> Result<Outcome> {
    let base = log_base_from_env()?;
    configure_jobs(cli.jobs);
    match cli.command {
        Command::RgCurve(args) => rg_curve(args, base),
        Command::RdSolve(args) => rd_solve(args, base),
        Command::Capacity(args) => capacity(args, base),
        Command::CompressGray(args) => compress_gray(args, base),
        Command::Lbi(args) => lbi(args, base),
        Command::Classify(args) => classify(args, base),
        Command::MaxmiClassify(args) => maxmi_classify(args, base),
        Command::MixtureEnm(args) => mixture_enm(args, base),
        Command::Svb(args) => svb(args, base),
        Command::Control(args) => control(args, base),
        Command::Confirm(args) => confirm(args, base),
        Command::Kelly(args) => kelly(args, base),
        Command::Growth(args) => growth(args, base),
        Command::InfoValue(args) => info_value(args, base),
        Command::Reproduce(args) => reproduce::run(args, base),
    }
}

#[cfg(feature = "parallel")]
fn configure_jobs(jobs: usize) {
    if jobs > 0 {
        // A second configuration attempt in one process is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_jobs(_jobs: usize) {}

/// "start:end:step" or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid = if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().context("bad grid start")?;
        let end: f64 = parts[1].trim().parse().context("bad grid end")?;
        let step: f64 = parts[2].trim().parse().context("bad grid step")?;
        if !(step > 0.0) || end < start {
            bail!("grid needs step > 0 and end >= start");
        }
        let n = ((end - start) / step).round() as usize;
        (0..=n).map(|k| start + k as f64 * step).collect()
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad grid value {s:?}"))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() {
        bail!("empty grid");
    }
    Ok(grid)
}

fn check_alignment(source: &Source, row_ids: &[String], what: &str) -> Result<()> {
    if source.ids() != row_ids {
        bail!("{what}: instance ids do not match the source (expected {:?})", source.ids());
    }
    Ok(())
}

fn solve_opts(tol: f64, max_iter: usize) -> SolveOptions {
    SolveOptions { tol, max_iter }
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

fn rg_curve(args: RgCurveArgs, base: LogBase) -> Result<Outcome> {
    let source = formats::read_source_csv(&args.source)?;
    let (row_ids, _labels, sem) = formats::read_semantic_channel_csv(&args.sem)?;
    check_alignment(&source, &row_ids, "semantic channel")?;
    let s_grid = parse_grid(&args.s_grid)?;
    let opts = solve_opts(args.tol, args.max_iter);
    let scale = base.factor_from_bits();

    let points = if args.no_warm_start {
        #[cfg(feature = "parallel")]
        {
            semg_core::rate::par_solve_rg_points(&source, &sem, &s_grid, &opts)?
        }
        #[cfg(not(feature = "parallel"))]
        {
            semg_core::rate::solve_rg_points(&source, &sem, &s_grid, &opts)?
        }
    } else {
        let mut sorted = s_grid.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        solve_rg_curve(&source, &sem, &sorted, &opts)?.points
    };

    formats::write_rg_curve_csv(&args.out, &points, scale)?;

    let mut env = ResultEnvelope::new("rg-curve", base);
    env.config_str("source", args.source.display());
    env.config_str("sem", args.sem.display());
    env.config_str("s_grid", &args.s_grid);
    env.config_f64("tol", args.tol);
    env.config_u64("max_iter", args.max_iter as u64);
    env.config_str("warm_start", !args.no_warm_start);
    env.output(&args.out);

    let mut not_converged = false;
    for p in &points {
        if !p.converged {
            not_converged = true;
            env.warn(format!("s = {}: not converged after {} iterations", p.s, p.iterations));
        }
    }
    env.metric_u64("points", points.len() as u64);
    if let Some(p) = points.iter().find(|p| p.s == 1.0) {
        env.metric_f64("r_at_s1", p.rate * scale);
        env.metric_f64("g_at_s1", p.semantic_mi * scale);
        env.metric_f64("abs_gap_at_s1", (p.rate - p.semantic_mi).abs() * scale);
    }
    if let Some(p) = points.last() {
        env.metric_f64("g_last", p.semantic_mi * scale);
    }

    if let Some(dump) = &args.dump_channels {
        let payload: Vec<serde_json::Value> = points
            .iter()
            .map(|p| {
                serde_json::json!({
                    "s": p.s,
                    "label_dist": p.label_dist.probs(),
                    "channel": (0..p.channel.n_instances())
                        .map(|i| p.channel.row(i).to_vec())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        formats::write_json(dump, &payload)?;
        env.output(dump);
    }

    Ok(Outcome {
        envelope: env,
        not_converged,
    })
}

fn rd_solve(args: RdSolveArgs, base: LogBase) -> Result<Outcome> {
    let source = formats::read_source_csv(&args.source)?;
    let constraint = match (&args.sem, &args.dist) {
        (Some(sem_path), None) => {
            let (row_ids, _, sem) = formats::read_semantic_channel_csv(sem_path)?;
            check_alignment(&source, &row_ids, "semantic channel")?;
            RdConstraint::Truth(sem)
        }
        (None, Some(dist_path)) => {
            let m = formats::read_matrix_csv(dist_path)?;
            check_alignment(&source, &m.row_ids, "distortion matrix")?;
            RdConstraint::Distortion(semg_core::prob::DistortionMatrix::new(m.mat)?)
        }
        _ => bail!("pass exactly one of --sem or --dist"),
    };
    let opts = solve_opts(args.tol, args.max_iter);
    let point = match (args.s, args.target_d) {
        (Some(s), None) => solve_rd_semantic(&source, &constraint, s, None, &opts)?,
        (None, Some(d)) => solve_rd_at_distortion(&source, &constraint, d, args.s_max, &opts)?,
        _ => bail!("pass exactly one of --s or --target-d"),
    };
    let scale = base.factor_from_bits();
    // Distortion units follow the constraint: truth-function distortion is a
    // log quantity and converts with the base; an explicit matrix keeps its
    // own units.
    let d_scale = match constraint {
        RdConstraint::Truth(_) => scale,
        RdConstraint::Distortion(_) => 1.0,
    };

    let mut payload = serde_json::json!({
        "s": point.s,
        "rate": point.rate * scale,
        "avg_distortion": point.avg_distortion * d_scale,
        "label_dist": point.label_dist.probs(),
        "iterations": point.iterations,
        "converged": point.converged,
    });
    if args.dump_channels {
        payload["channel"] = serde_json::json!(
            (0..point.channel.n_instances())
                .map(|i| point.channel.row(i).to_vec())
                .collect::<Vec<_>>()
        );
    }
    formats::write_json(&args.out, &payload)?;

    let mut env = ResultEnvelope::new("rd-solve", base);
    env.config_str("source", args.source.display());
    if let Some(p) = &args.sem {
        env.config_str("sem", p.display());
    }
    if let Some(p) = &args.dist {
        env.config_str("dist", p.display());
    }
    env.config_f64("tol", args.tol);
    env.config_u64("max_iter", args.max_iter as u64);
    env.output(&args.out);
    env.metric_f64("s", point.s);
    env.metric_f64("rate", point.rate * scale);
    env.metric_f64("avg_distortion", point.avg_distortion * d_scale);
    env.metric_bool("converged", point.converged);
    if !point.converged {
        env.warn("solver hit max_iter before the label distribution settled");
    }
    Ok(Outcome {
        not_converged: !point.converged,
        envelope: env,
    })
}

fn capacity(args: CapacityArgs, base: LogBase) -> Result<Outcome> {
    let (row_ids, _labels, sem) = formats::read_semantic_channel_csv(&args.sem)?;
    let search = CapacitySearch {
        s_infinity: args.s_infinity,
        ..CapacitySearch::default()
    };
    let result = semantic_channel_capacity(&sem, &search)?;
    let scale = base.factor_from_bits();
    let payload = serde_json::json!({
        "capacity": result.capacity * scale,
        "source": row_ids
            .iter()
            .zip(result.source.probs())
            .map(|(id, &p)| serde_json::json!({"x": id, "p": p}))
            .collect::<Vec<_>>(),
        "duplicate_peak": result.duplicate_peak,
        "evaluations": result.evaluations,
    });
    formats::write_json(&args.out, &payload)?;

    let mut env = ResultEnvelope::new("capacity", base);
    env.config_str("sem", args.sem.display());
    env.config_f64("s_infinity", args.s_infinity);
    env.output(&args.out);
    env.metric_f64("capacity", result.capacity * scale);
    env.metric_bool("duplicate_peak", result.duplicate_peak);
    env.metric_u64("evaluations", result.evaluations as u64);
    if result.duplicate_peak {
        env.warn("one instance peaks several truth functions; capacity is strictly below log n");
    }
    Ok(Outcome::ok(env))
}

fn compress_gray(args: CompressGrayArgs, base: LogBase) -> Result<Outcome> {
    let config = if args.crisp {
        GrayTruthConfig::Crisp
    } else {
        GrayTruthConfig::Gaussian {
            sigma0: args.sigma0.unwrap_or(args.levels as f64 / 32.0),
            beta: args.beta,
        }
    };
    let report = gray_compression_demo(
        args.levels,
        args.labels,
        &config,
        args.s,
        &SolveOptions::default(),
    )?;
    let scale = base.factor_from_bits();
    let rel_gap = (report.point.rate - report.point.semantic_mi).abs() / report.point.rate;

    let payload = serde_json::json!({
        "levels": report.levels,
        "n_labels": report.n_labels,
        "truth_config": report.truth_config,
        "s": report.s,
        "rate": report.point.rate * scale,
        "semantic_mi": report.point.semantic_mi * scale,
        "relative_gap": rel_gap,
        "g_max": report.g_max * scale,
        "iterations": report.point.iterations,
        "converged": report.point.converged,
    });
    formats::write_json(&args.out, &payload)?;

    let mut env = ResultEnvelope::new("compress-gray", base);
    env.config_u64("levels", args.levels as u64);
    env.config_u64("labels", args.labels as u64);
    env.config_f64("s", args.s);
    env.config_str("crisp", args.crisp);
    env.output(&args.out);
    env.metric_f64("rate", report.point.rate * scale);
    env.metric_f64("semantic_mi", report.point.semantic_mi * scale);
    env.metric_f64("relative_gap", rel_gap);
    env.metric_f64("g_max", report.g_max * scale);
    env.metric_bool("converged", report.point.converged);
    if let Some(trace) = &args.trace {
        formats::write_iteration_trace_csv(trace, &report.trace, scale)?;
        env.output(trace);
    }
    Ok(Outcome {
        not_converged: !report.point.converged,
        envelope: env,
    })
}

fn lbi(args: LbiArgs, base: LogBase) -> Result<Outcome> {
    let source = formats::read_source_csv(&args.source)?;
    let (row_ids, col_ids, channel) = formats::read_shannon_channel_csv(&args.channel)?;
    check_alignment(&source, &row_ids, "channel")?;
    let mut env = ResultEnvelope::new("lbi", base);
    env.config_str("source", args.source.display());
    env.config_str("channel", args.channel.display());

    match args.family.as_deref() {
        None => {
            let sem = lbi_direct(&source, &channel)?;
            formats::write_matrix_csv(&args.out, &row_ids, &col_ids, sem.matrix())?;
            env.config_str("family", "direct");
        }
        Some(fam) => {
            let values = source.numeric_values().context(
                "parametric fitting needs numeric instance ids for the support grid",
            )?;
            let grid = match fam {
                "gaussian" => ParamGrid::gaussian_for_support(&values, args.n_sigmas),
                "trapezoid" => ParamGrid::trapezoid(&values),
                other => bail!("unknown family {other:?}"),
            };
            env.config_str("family", fam);
            env.config_u64("grid_size", grid.len() as u64);
            let joint = semg_core::prob::JointDistribution::from_source_channel(&source, &channel)?;
            let mut fitted_cols = Vec::new();
            let mut fitted_params: Vec<(String, TruthParams, f64)> = Vec::new();
            for j in 0..channel.n_labels() {
                let cond = joint
                    .x_given_y(j)
                    .ok_or_else(|| anyhow!("label {} has zero probability", col_ids[j]))?;
                let (params, score) = fit_truth_grid(&cond, &source, &values, &grid)?;
                fitted_cols.push(params.render(&values)?);
                fitted_params.push((col_ids[j].clone(), params, score));
            }
            let sem = SemanticChannel::from_columns(fitted_cols)?;
            formats::write_matrix_csv(&args.out, &row_ids, &col_ids, sem.matrix())?;
            if let Some(params_path) = &args.params_out {
                let payload: Vec<serde_json::Value> = fitted_params
                    .iter()
                    .map(|(label, params, score)| {
                        serde_json::json!({
                            "label": label,
                            "params": params,
                            "score": score * base.factor_from_bits(),
                        })
                    })
                    .collect();
                formats::write_json(params_path, &payload)?;
                env.output(params_path);
            }
        }
    }
    env.output(&args.out);
    env.metric_u64("labels", col_ids.len() as u64);
    Ok(Outcome::ok(env))
}

#[cfg(feature = "parallel")]
fn fit_truth_grid(
    cond: &[f64],
    source: &Source,
    values: &[f64],
    grid: &ParamGrid,
) -> Result<(TruthParams, f64)> {
    Ok(semg_core::learn::par_lbi_parametric(cond, source, values, grid)?)
}

#[cfg(not(feature = "parallel"))]
fn fit_truth_grid(
    cond: &[f64],
    source: &Source,
    values: &[f64],
    grid: &ParamGrid,
) -> Result<(TruthParams, f64)> {
    Ok(semg_core::learn::lbi_parametric(cond, source, values, grid)?)
}

fn classify(args: ClassifyArgs, base: LogBase) -> Result<Outcome> {
    let source = formats::read_source_csv(&args.source)?;
    let (row_ids, col_ids, sem) = formats::read_semantic_channel_csv(&args.sem)?;
    check_alignment(&source, &row_ids, "semantic channel")?;
    let logical = sem.logical_probs(&source)?;
    let criterion = if args.min_distortion {
        ClassifyCriterion::MinDistortion
    } else {
        ClassifyCriterion::MaxInformation
    };
    let mut out = String::from("x,label\n");
    for (i, id) in row_ids.iter().enumerate() {
        let row: Vec<f64> = (0..sem.n_labels()).map(|j| sem.truth(i, j)).collect();
        let j = classify_max_info(&row, &logical, criterion)?;
        out.push_str(&format!("{id},{}\n", col_ids[j]));
    }
    std::fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;

    let mut env = ResultEnvelope::new("classify", base);
    env.config_str("source", args.source.display());
    env.config_str("sem", args.sem.display());
    env.config_str(
        "criterion",
        if args.min_distortion {
            "min_distortion"
        } else {
            "max_information"
        },
    );
    env.output(&args.out);
    env.metric_u64("instances", row_ids.len() as u64);
    Ok(Outcome::ok(env))
}

fn maxmi_classify(args: MaxmiArgs, base: LogBase) -> Result<Outcome> {
    let obs = formats::read_observation_model_json(&args.obs)?;
    let probe = formats::read_id_value_csv(&args.init_partition)?;
    let n_labels = args.n_labels.unwrap_or_else(|| {
        probe
            .1
            .iter()
            .map(|&v| v as usize)
            .max()
            .map(|m| m + 1)
            .unwrap_or(1)
    });
    let init = formats::read_partition_csv(&args.init_partition, obs.z_ids(), n_labels)?;
    let outcome = classify_iterate(&obs, &init, args.max_iter)?;
    let scale = base.factor_from_bits();

    formats::write_partition_csv(&args.out, obs.z_ids(), &outcome.partition)?;
    let mut env = ResultEnvelope::new("maxmi-classify", base);
    env.config_str("obs", args.obs.display());
    env.config_str("init_partition", args.init_partition.display());
    env.config_u64("n_labels", n_labels as u64);
    env.config_u64("max_iter", args.max_iter as u64);
    env.output(&args.out);
    if let Some(trace) = &args.trace {
        formats::write_mi_trace_csv(trace, &outcome.mi_trace, scale)?;
        env.output(trace);
    }
    env.metric_u64("rounds", outcome.rounds as u64);
    env.metric_f64(
        "final_mi",
        outcome.mi_trace.last().copied().unwrap_or(0.0) * scale,
    );
    let status = match outcome.status {
        IterateStatus::FixedPoint => "fixed_point",
        IterateStatus::CycleDetected => "cycle_detected",
        IterateStatus::MaxIterations => "max_iterations",
    };
    env.metric_value("status", serde_json::Value::String(status.into()));
    let not_converged = outcome.status != IterateStatus::FixedPoint;
    if not_converged {
        env.warn(format!("iteration ended without a fixed point: {status}"));
    }
    Ok(Outcome {
        envelope: env,
        not_converged,
    })
}

fn mixture_enm(args: MixtureEnmArgs, base: LogBase) -> Result<Outcome> {
    let data = formats::read_source_csv(&args.data)?;
    let init = formats::read_mixture_model_json(&args.init)?;
    let (model, trace) = enm_fit(&data, &init, args.n_inner, args.tol, args.max_outer)?;
    let scale = base.factor_from_bits();

    let mut env = ResultEnvelope::new("mixture-enm", base);
    env.config_str("data", args.data.display());
    env.config_str("init", args.init.display());
    env.config_u64("n_inner", args.n_inner as u64);
    env.config_f64("tol", args.tol);
    env.config_u64("max_outer", args.max_outer as u64);
    if let Some(trace_path) = &args.trace {
        formats::write_enm_trace_csv(trace_path, &trace, scale)?;
        env.output(trace_path);
    }
    if let Some(out) = &args.out {
        formats::write_json(out, &model)?;
        env.output(out);
    }
    let last = trace.records.last().expect("at least one record");
    env.metric_bool("converged", trace.converged);
    env.metric_u64("outer_iterations", trace.records.len() as u64);
    env.metric_f64("kl_data", last.kl_data * scale);
    env.metric_value("weights", float_array(&model.weights));
    if !trace.converged {
        env.warn("EnM hit max_outer before KL(P || P_theta) fell below tol");
    }
    Ok(Outcome {
        not_converged: !trace.converged,
        envelope: env,
    })
}

fn svb(args: SvbArgs, base: LogBase) -> Result<Outcome> {
    let data = formats::read_source_csv(&args.data)?;
    let constraints = match (&args.constraints, &args.truth) {
        (Some(model_path), None) => {
            let model = formats::read_mixture_model_json(model_path)?;
            let grid = data.numeric_values()?;
            let liks: Result<Vec<Vec<f64>>> = model
                .components
                .iter()
                .map(|c| Ok(c.density(&grid)?))
                .collect();
            SvbConstraints::Likelihoods(liks?)
        }
        (None, Some(truth_path)) => {
            let (row_ids, _, sem) = formats::read_semantic_channel_csv(truth_path)?;
            check_alignment(&data, &row_ids, "truth constraints")?;
            SvbConstraints::TruthColumns(
                (0..sem.n_labels()).map(|j| sem.truth_column(j)).collect(),
            )
        }
        _ => bail!("pass exactly one of --constraints or --truth"),
    };
    let result = svb_solve(
        &data,
        &constraints,
        args.s,
        &solve_opts(args.tol, args.max_iter),
    )?;
    let scale = base.factor_from_bits();
    let payload = serde_json::json!({
        "label_dist": result.label_dist.probs(),
        "free_energy": result.free_energy * scale,
        "mixture_tv": result.mixture_tv,
        "iterations": result.iterations,
        "converged": result.converged,
    });
    formats::write_json(&args.out, &payload)?;

    let mut env = ResultEnvelope::new("svb", base);
    env.config_str("data", args.data.display());
    env.config_f64("s", args.s);
    env.output(&args.out);
    env.metric_value("label_dist", float_array(result.label_dist.probs()));
    env.metric_f64("free_energy", result.free_energy * scale);
    env.metric_f64("mixture_tv", result.mixture_tv);
    env.metric_bool("converged", result.converged);
    if !result.converged {
        env.warn("SVB hit max_iter before the label distribution settled");
    }
    Ok(Outcome {
        not_converged: !result.converged,
        envelope: env,
    })
}

fn control(args: ControlArgs, base: LogBase) -> Result<Outcome> {
    let baseline = formats::read_source_csv(&args.baseline)?;
    let (row_ids, col_ids, targets) = formats::read_semantic_channel_csv(&args.targets)?;
    check_alignment(&baseline, &row_ids, "targets")?;
    let s_values = parse_grid(&args.s)?;
    let opts = solve_opts(args.tol, args.max_iter);
    let scale = base.factor_from_bits();
    let support_values = baseline.numeric_values().ok();

    let mut runs = Vec::new();
    let mut not_converged = false;
    let mut env = ResultEnvelope::new("control", base);
    for &s in &s_values {
        let solution = solve_control(
            &ControlProblem {
                baseline: baseline.clone(),
                targets: targets.clone(),
                s,
                init_action_dist: None,
            },
            &opts,
        )?;
        if !solution.converged {
            not_converged = true;
            env.warn(format!("s = {s}: control solve did not converge"));
        }
        let projection = support_values.as_ref().and_then(|values| {
            semg_core::control::gaussian_projected_goal_info(
                &solution, &baseline, &targets, values,
            )
            .ok()
        });
        let efficiency = if solution.rate > 0.0 {
            solution.goal_info / solution.rate
        } else {
            f64::NAN
        };
        env.metric_f64(&format!("g_at_s{s}"), solution.goal_info * scale);
        env.metric_f64(&format!("r_at_s{s}"), solution.rate * scale);
        runs.push(serde_json::json!({
            "s": s,
            "rate": solution.rate * scale,
            "goal_info": solution.goal_info * scale,
            "efficiency": efficiency,
            "action_dist": col_ids
                .iter()
                .zip(solution.action_dist.probs())
                .map(|(id, &p)| serde_json::json!({"action": id, "p": p}))
                .collect::<Vec<_>>(),
            "result_dists": solution.result_dists,
            "target_posteriors": solution.target_posteriors,
            "gaussian_projection_goal_info": projection.as_ref().map(|(_, g)| g * scale),
            "converged": solution.converged,
        }));
    }
    formats::write_json(&args.out, &runs)?;
    env.config_str("baseline", args.baseline.display());
    env.config_str("targets", args.targets.display());
    env.config_str("s", &args.s);
    env.output(&args.out);
    Ok(Outcome {
        envelope: env,
        not_converged,
    })
}

fn confirm(args: ConfirmArgs, base: LogBase) -> Result<Outcome> {
    let counts: Vec<u64> = args
        .table
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .with_context(|| format!("bad count {s:?}"))
        })
        .collect::<Result<Vec<u64>>>()?;
    let [a, b, c, d] = counts[..] else {
        bail!("--table needs exactly four counts a,b,c,d");
    };
    let table = ContingencyTable::new(a, b, c, d)?;
    let mut env = ResultEnvelope::new("confirm", base);
    env.config_str("table", &args.table);
    for measure in args.measures.split(',') {
        match measure.trim() {
            "b1" => env.metric_f64("b1", channel_confirmation(&table)?),
            "c1" => env.metric_f64("c1", prediction_confirmation(&table)?),
            "pd" => env.metric_f64("pd", causal_probability(&table)?),
            "cc" => env.metric_f64("cc", causal_confirmation(&table)?),
            other => bail!("unknown measure {other:?} (use b1, c1, pd, cc)"),
        }
    }
    Ok(Outcome::ok(env))
}

fn kelly(args: KellyArgs, base: LogBase) -> Result<Outcome> {
    let bet = BetSpec::new(args.p, args.r1, args.r2, args.r0)?;
    let result = kelly_optimal(&bet);
    let capacity = investment_capacity(&bet);
    let scale = base.factor_from_bits();
    let mut env = ResultEnvelope::new("kelly", base);
    env.config_f64("p", args.p);
    env.config_f64("r1", args.r1);
    env.config_f64("r2", args.r2);
    env.config_f64("r0", args.r0);
    env.metric_f64("q_star", result.ratio);
    env.metric_f64("q_unclipped", result.unclipped);
    env.metric_bool("no_edge", result.no_edge);
    env.metric_f64("expected_income", bet.expected_income());
    env.metric_f64("capacity", capacity.exact * scale);
    env.metric_f64("capacity_coin_formula", capacity.coin_formula * scale);
    env.metric_f64("capacity_approximation", capacity.approximation * scale);
    if result.no_edge {
        env.warn("no positive edge: optimal wager is zero");
    }
    Ok(Outcome::ok(env))
}

fn growth(args: GrowthArgs, base: LogBase) -> Result<Outcome> {
    let spec = formats::read_portfolio_spec_json(&args.spec)?;
    let ratios = formats::read_ratios_csv(&args.q, spec.labels())?;
    let h = growth_entropy(&spec, &ratios)?;
    let totals = spec.total_returns(&ratios)?;
    let risk = risk_measures(spec.probs(), &totals)?;
    let scale = base.factor_from_bits();
    let mut env = ResultEnvelope::new("growth", base);
    env.config_str("spec", args.spec.display());
    env.config_str("q", args.q.display());
    env.metric_f64("growth_entropy", h * scale);
    env.metric_f64("arithmetic_return", risk.arithmetic);
    env.metric_f64("geometric_return", risk.geometric);
    env.metric_f64("risk", risk.risk);
    env.metric_f64("sin_alpha", risk.sin_alpha);
    Ok(Outcome::ok(env))
}

fn info_value(args: InfoValueArgs, base: LogBase) -> Result<Outcome> {
    let spec = formats::read_portfolio_spec_json(&args.spec)?;
    let (_, prior) = formats::read_id_value_csv(&args.prior)?;
    let (_, pred) = formats::read_id_value_csv(&args.pred)?;
    let (_, realized) = formats::read_id_value_csv(&args.realized)?;
    let report = information_value(&prior, &pred, &realized, spec.returns())?;
    let scale = base.factor_from_bits();
    let mut env = ResultEnvelope::new("info-value", base);
    env.config_str("spec", args.spec.display());
    env.config_str("prior", args.prior.display());
    env.config_str("pred", args.pred.display());
    env.config_str("realized", args.realized.display());
    env.metric_f64("value", report.value * scale);
    env.metric_value("prior_ratios", float_array(&report.prior_ratios));
    env.metric_value("forecast_ratios", float_array(&report.forecast_ratios));
    env.metric_f64("arrow_value", arrow_value(&prior) * scale);
    Ok(Outcome::ok(env))
}
