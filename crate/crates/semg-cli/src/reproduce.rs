//! Built-in desk-scale experiments behind `semg reproduce <figure>`.
//!
//! Each runner regenerates one of the library's reference experiments and
//! writes plot-ready CSVs plus a metrics envelope. Everything is
//! deterministic: two runs with the same arguments produce byte-identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use semg_core::base::LogBase;
use semg_core::control::{gaussian_projected_goal_info, solve_control, ControlProblem};
use semg_core::maxmi::{classify_iterate, IterateStatus, ObservationModel, Partition};
use semg_core::mixture::{enm_fit, Component, MixtureModel};
use semg_core::prob::{gaussian_truth, SemanticChannel, ShannonChannel, Source};
use semg_core::rate::{
    gray_compression_demo, solve_rg_curve, solve_rg_point, GrayTruthConfig, SolveOptions,
};

use crate::commands::{Outcome, ReproduceArgs};
use crate::envelope::ResultEnvelope;
use crate::formats::{self, fmt_float};

pub fn run(args: ReproduceArgs, base: LogBase) -> Result<Outcome> {
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("repro-{}", args.figure)));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut env = ResultEnvelope::new("reproduce", base);
    env.config_str("figure", &args.figure);
    env.config_str("out_dir", out_dir.display());
    match args.figure.as_str() {
        "fig6" => fig6(&out_dir, base, &mut env)?,
        "fig8" => fig8(&out_dir, base, &mut env)?,
        "fig9" => fig9(&out_dir, base, &mut env)?,
        "fig11" => fig11(&out_dir, base, &mut env)?,
        "fig12" => fig12(&out_dir, base, &mut env)?,
        "fig16" => fig16(&out_dir, base, &mut env)?,
        "fig17" => fig17(&out_dir, base, &mut env)?,
        other => bail!("unknown figure {other:?} (use fig6, fig8, fig9, fig11, fig12, fig16, fig17)"),
    }
    Ok(Outcome::ok(env))
}

// ---------------------------------------------------------------------------
// Fixtures (also used by the acceptance suite).
// ---------------------------------------------------------------------------

/// Binary-communication fixture: two instances, two Gaussian truth functions.
pub fn binary_communication_fixture() -> (Source, SemanticChannel) {
    let source = Source::from_probs(vec![0.55, 0.45]).unwrap();
    let values = [-1.0, 1.0];
    let sem = SemanticChannel::from_columns(vec![
        gaussian_truth(&values, -1.0, 1.1).unwrap(),
        gaussian_truth(&values, 1.0, 0.9).unwrap(),
    ])
    .unwrap();
    (source, sem)
}

/// Two complementary fuzzy pastures over an 80-point line.
pub fn two_pasture_fixture() -> (ControlProblem, Vec<f64>) {
    let n = 80;
    let values: Vec<f64> = (0..n).map(|v| v as f64).collect();
    let mut probs: Vec<f64> = values
        .iter()
        .map(|&v| (-((v - 36.0) * (v - 36.0)) / (2.0 * 260.0)).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    let baseline = Source::from_values(&values, probs).unwrap();
    let t1: Vec<f64> = values
        .iter()
        .map(|&v| 1.0 / (1.0 + (-(v - 40.0) / 5.0).exp()))
        .collect();
    let t0: Vec<f64> = t1.iter().map(|t| 1.0 - t).collect();
    let targets = SemanticChannel::from_columns(vec![t0, t1]).unwrap();
    (
        ControlProblem {
            baseline,
            targets,
            s: 1.0,
            init_action_dist: None,
        },
        values,
    )
}

/// Two well-separated Gaussian classes observed through a binned statistic.
pub fn two_gaussian_observation_fixture(n_bins: usize) -> ObservationModel {
    let zvals: Vec<f64> = (0..n_bins)
        .map(|k| -4.0 + 8.0 * (k as f64 + 0.5) / n_bins as f64)
        .collect();
    let rows: Vec<Vec<f64>> = [-2.0f64, 2.0]
        .iter()
        .map(|&c| {
            let mut row = gaussian_truth(&zvals, c, 1.0).unwrap();
            let total: f64 = row.iter().sum();
            for x in row.iter_mut() {
                *x /= total;
            }
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

/// The two-Gaussian mixture reconstruction: true weights 0.3 : 0.7 on a
/// 0..127 grid, components (30, 10) and (70, 10), wrong init.
pub fn mixture_fig17_fixture() -> (Source, MixtureModel, MixtureModel) {
    let grid: Vec<f64> = (0..128).map(|v| v as f64).collect();
    let truth = MixtureModel::new(
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
    .unwrap();
    let p = truth.mixture_density(&grid).unwrap();
    let data = Source::from_values(&grid, p).unwrap();
    let init = MixtureModel::new(
        vec![0.7, 0.3],
        vec![
            Component::Gaussian {
                mean: 40.0,
                sigma: 14.0,
            },
            Component::Gaussian {
                mean: 60.0,
                sigma: 14.0,
            },
        ],
    )
    .unwrap();
    (data, truth, init)
}

/// Narrow-init counterexample: true sigma 15, init sigma 5.
pub fn mixture_counterexample_fixture() -> (Source, MixtureModel) {
    let grid: Vec<f64> = (0..128).map(|v| v as f64).collect();
    let truth = MixtureModel::new(
        vec![0.5, 0.5],
        vec![
            Component::Gaussian {
                mean: 40.0,
                sigma: 15.0,
            },
            Component::Gaussian {
                mean: 85.0,
                sigma: 15.0,
            },
        ],
    )
    .unwrap();
    let p = truth.mixture_density(&grid).unwrap();
    let data = Source::from_values(&grid, p).unwrap();
    let init = MixtureModel::new(
        vec![0.5, 0.5],
        vec![
            Component::Gaussian {
                mean: 40.0,
                sigma: 5.0,
            },
            Component::Gaussian {
                mean: 85.0,
                sigma: 5.0,
            },
        ],
    )
    .unwrap();
    (data, init)
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

fn fig6(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let (source, sem) = binary_communication_fixture();
    let scale = base.factor_from_bits();
    let opts = SolveOptions::default();
    let s_grid: Vec<f64> = (-8..=16).map(|k| 0.25 * k as f64).collect();
    let curve = solve_rg_curve(&source, &sem, &s_grid, &opts)?;
    let path = out_dir.join("curve.csv");
    formats::write_rg_curve_csv(&path, &curve.points, scale)?;
    env.output(&path);

    let matched = curve
        .points
        .iter()
        .find(|p| p.s == 1.0)
        .expect("grid contains s = 1");
    env.metric_f64("r_at_s1", matched.rate * scale);
    env.metric_f64("g_at_s1", matched.semantic_mi * scale);
    env.metric_f64(
        "abs_gap_at_s1",
        (matched.rate - matched.semantic_mi).abs() * scale,
    );

    let extreme = solve_rg_point(&source, &sem, 200.0, None, &opts)?;
    let min_row_max = (0..2)
        .map(|i| extreme.channel.row(i).iter().cloned().fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    env.metric_f64("min_row_max_at_s200", min_row_max);
    env.metric_f64("g_max", extreme.semantic_mi * scale);
    Ok(())
}

fn fig8(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let config = GrayTruthConfig::default_gaussian(256);
    let report = gray_compression_demo(256, 8, &config, 1.0, &SolveOptions::default())?;

    let trace_path = out_dir.join("trace.csv");
    formats::write_iteration_trace_csv(&trace_path, &report.trace, scale)?;
    env.output(&trace_path);

    let level_ids: Vec<String> = (0..256).map(|v| v.to_string()).collect();
    let label_ids: Vec<String> = (1..=8).map(|j| format!("y{j}")).collect();
    let truth_path = out_dir.join("truth_functions.csv");
    let sem = semg_core::rate::gray_semantic_channel(256, 8, &config)?;
    formats::write_matrix_csv(&truth_path, &level_ids, &label_ids, sem.matrix())?;
    env.output(&truth_path);

    let channel_path = out_dir.join("channel.csv");
    formats::write_matrix_csv(
        &channel_path,
        &level_ids,
        &label_ids,
        report.point.channel.matrix(),
    )?;
    env.output(&channel_path);

    env.metric_f64("rate", report.point.rate * scale);
    env.metric_f64("semantic_mi", report.point.semantic_mi * scale);
    env.metric_f64(
        "relative_gap",
        (report.point.rate - report.point.semantic_mi).abs() / report.point.rate,
    );
    env.metric_u64("iterations", report.point.iterations as u64);
    Ok(())
}

fn fig9(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let opts = SolveOptions::default();

    // (a) Discrimination: default sigma0 vs a 4x sharper one, G ceiling at
    // 256 levels plus plottable curves at 64 levels.
    for (tag, sigma0_256, sigma0_64) in [("default", 8.0, 2.0), ("quarter", 2.0, 0.5)] {
        let demo = gray_compression_demo(
            256,
            8,
            &GrayTruthConfig::Gaussian {
                sigma0: sigma0_256,
                beta: 2.0,
            },
            1.0,
            &opts,
        )?;
        env.metric_f64(&format!("g_max_sigma_{tag}"), demo.g_max * scale);

        let sem = semg_core::rate::gray_semantic_channel(
            64,
            8,
            &GrayTruthConfig::Gaussian {
                sigma0: sigma0_64,
                beta: 2.0,
            },
        )?;
        let source = Source::uniform(64);
        let s_grid: Vec<f64> = (1..=16).map(|k| 0.25 * k as f64).collect();
        let curve = solve_rg_curve(&source, &sem, &s_grid, &opts)?;
        let path = out_dir.join(format!("curve_sigma_{tag}.csv"));
        formats::write_rg_curve_csv(&path, &curve.points, scale)?;
        env.output(&path);
    }

    // (b) Quantization level: fixed absolute discrimination (range / 64),
    // fewer levels waste the semantic ceiling.
    let mut rows = String::from("levels,g_max\n");
    for levels in [16usize, 64, 256] {
        let demo = gray_compression_demo(
            levels,
            8,
            &GrayTruthConfig::Gaussian {
                sigma0: levels as f64 / 64.0,
                beta: 2.0,
            },
            1.0,
            &opts,
        )?;
        rows.push_str(&format!("{levels},{}\n", fmt_float(demo.g_max * scale)));
        env.metric_f64(&format!("g_max_levels_{levels}"), demo.g_max * scale);
    }
    let path = out_dir.join("quantization.csv");
    fs::write(&path, rows)?;
    env.output(&path);
    Ok(())
}

fn control_columns(
    values: &[f64],
    problem: &ControlProblem,
    solution: &semg_core::control::ControlSolution,
    projected: &[Vec<f64>],
) -> String {
    let mut out = String::from("x,baseline,t0,t1,p_x_a0,p_x_a1,proj0,proj1\n");
    for (i, &v) in values.iter().enumerate() {
        out.push_str(&format!(
            "{v},{},{},{},{},{},{},{}\n",
            fmt_float(problem.baseline.probs()[i]),
            fmt_float(problem.targets.truth(i, 0)),
            fmt_float(problem.targets.truth(i, 1)),
            fmt_float(solution.result_dists[0][i]),
            fmt_float(solution.result_dists[1][i]),
            fmt_float(projected[0][i]),
            fmt_float(projected[1][i]),
        ));
    }
    out
}

fn fig11(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let (fixture, values) = two_pasture_fixture();
    let opts = SolveOptions::default();
    for s in [1.0, 5.0] {
        let problem = ControlProblem { s, ..fixture.clone() };
        let solution = solve_control(&problem, &opts)?;
        let (projected, g_proj) = gaussian_projected_goal_info(
            &solution,
            &problem.baseline,
            &problem.targets,
            &values,
        )?;
        let path = out_dir.join(format!("distributions_s{s}.csv"));
        fs::write(&path, control_columns(&values, &problem, &solution, &projected))?;
        env.output(&path);
        env.metric_f64(&format!("g_at_s{s}"), solution.goal_info * scale);
        env.metric_f64(&format!("r_at_s{s}"), solution.rate * scale);
        env.metric_f64(&format!("efficiency_at_s{s}"), solution.goal_info / solution.rate);
        env.metric_f64(&format!("g_projected_at_s{s}"), g_proj * scale);
    }
    Ok(())
}

fn fig12(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let (fixture, _) = two_pasture_fixture();
    let opts = SolveOptions::default();
    let mut rows = String::from("s,R,G,efficiency\n");
    let mut g5 = 0.0;
    let mut g40 = 0.0;
    for s in [1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 12.0, 20.0, 30.0, 40.0] {
        let problem = ControlProblem { s, ..fixture.clone() };
        let solution = solve_control(&problem, &opts)?;
        rows.push_str(&format!(
            "{s},{},{},{}\n",
            fmt_float(solution.rate * scale),
            fmt_float(solution.goal_info * scale),
            fmt_float(solution.goal_info / solution.rate)
        ));
        if s == 5.0 {
            g5 = solution.goal_info;
        }
        if s == 40.0 {
            g40 = solution.goal_info;
        }
    }
    let path = out_dir.join("tradeoff.csv");
    fs::write(&path, rows)?;
    env.output(&path);
    env.metric_f64("g_at_s5", g5 * scale);
    env.metric_f64("g_at_s40", g40 * scale);
    env.metric_f64("late_gain_ratio", (g40 - g5) / g5);
    Ok(())
}

fn fig16(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let obs = two_gaussian_observation_fixture(40);
    // A very bad initial partition: nearly everything in one class.
    let init = Partition::threshold(40, 3, 2)?;
    let outcome = classify_iterate(&obs, &init, 50)?;

    let init_path = out_dir.join("partition_init.csv");
    formats::write_partition_csv(&init_path, obs.z_ids(), &init)?;
    env.output(&init_path);
    let final_path = out_dir.join("partition_final.csv");
    formats::write_partition_csv(&final_path, obs.z_ids(), &outcome.partition)?;
    env.output(&final_path);
    let trace_path = out_dir.join("mi.csv");
    formats::write_mi_trace_csv(&trace_path, &outcome.mi_trace, scale)?;
    env.output(&trace_path);

    env.metric_u64("rounds", outcome.rounds as u64);
    env.metric_f64(
        "final_mi",
        outcome.mi_trace.last().copied().unwrap_or(0.0) * scale,
    );
    env.metric_f64("initial_mi", outcome.mi_trace.first().copied().unwrap_or(0.0) * scale);
    env.metric_bool("fixed_point", outcome.status == IterateStatus::FixedPoint);
    Ok(())
}

fn fig17(out_dir: &Path, base: LogBase, env: &mut ResultEnvelope) -> Result<()> {
    let scale = base.factor_from_bits();
    let (data, _, init) = mixture_fig17_fixture();
    let (model, trace) = enm_fit(&data, &init, 3, 1e-4, 500)?;
    let trace_path = out_dir.join("trace.csv");
    formats::write_enm_trace_csv(&trace_path, &trace, scale)?;
    env.output(&trace_path);
    let model_path = out_dir.join("model.json");
    formats::write_json(&model_path, &model)?;
    env.output(&model_path);

    let last = trace.records.last().expect("non-empty trace");
    env.metric_bool("converged", trace.converged);
    env.metric_f64("kl_final", last.kl_data * scale);
    env.metric_f64("weight_0", model.weights[0]);
    env.metric_f64("weight_1", model.weights[1]);
    let rg_monotone = trace
        .records
        .windows(2)
        .all(|w| w[1].r - w[1].g <= w[0].r - w[0].g + 1e-9);
    env.metric_bool("r_minus_g_nonincreasing", rg_monotone);

    // The narrow-init counterexample: F rises across the computed iterations
    // while R - G still falls.
    let (cdata, cinit) = mixture_counterexample_fixture();
    let (_, ctrace) = enm_fit(&cdata, &cinit, 3, 5e-4, 500)?;
    let counter_path = out_dir.join("counterexample_trace.csv");
    formats::write_enm_trace_csv(&counter_path, &ctrace, scale)?;
    env.output(&counter_path);
    let h_x = semg_core::base::entropy_bits(cdata.probs());
    let f: Vec<f64> = ctrace.records.iter().map(|r| h_x - r.g).collect();
    let f_rises = f[1..].windows(2).all(|w| w[1] >= w[0] - 1e-9);
    env.metric_bool("counterexample_f_rises", f_rises);
    env.metric_bool("counterexample_converged", ctrace.converged);
    Ok(())
}
