//! Curve-level behavior of the R(G) and R(D) solvers, plus the capacity
//! search against an exhaustive simplex-grid oracle.

use semg_core::measures::{semantic_mi_report, shannon_mi_of_channel};
use semg_core::prob::{gaussian_truth, SemanticChannel, Source};
use semg_core::rate::{
    capacity_objective, gray_compression_demo, semantic_channel_capacity, solve_rg_curve,
    solve_rg_point, CapacitySearch, GrayTruthConfig, SolveOptions,
};

fn binary_fixture() -> (Source, SemanticChannel) {
    let source = Source::from_probs(vec![0.55, 0.45]).unwrap();
    let values = [-1.0, 1.0];
    let sem = SemanticChannel::from_columns(vec![
        gaussian_truth(&values, -1.0, 1.1).unwrap(),
        gaussian_truth(&values, 1.0, 0.9).unwrap(),
    ])
    .unwrap();
    (source, sem)
}

#[test]
fn rg_curve_is_bowl_shaped_on_the_right_branch() {
    let (source, sem) = binary_fixture();
    let s_grid: Vec<f64> = (1..=20).map(|k| 0.2 * k as f64).collect();
    let curve = solve_rg_curve(&source, &sem, &s_grid, &SolveOptions::default()).unwrap();

    for p in &curve.points {
        assert!(p.converged, "s = {} did not converge", p.s);
        assert!(p.rate - p.semantic_mi >= -1e-9);
        if p.rate > 1e-12 {
            assert!(p.semantic_mi / p.rate <= 1.0 + 1e-9);
        }
        // Parametric values match the definitional ones on the converged
        // channel.
        let r_def = shannon_mi_of_channel(&source, &p.channel).unwrap();
        let g_def = semantic_mi_report(&source, &p.channel, &sem)
            .unwrap()
            .semantic_mi;
        assert!((p.rate - r_def).abs() < 1e-6);
        assert!((p.semantic_mi - g_def).abs() < 1e-6);
    }

    // G nondecreasing in s on the positive branch.
    for pair in curve.points.windows(2) {
        assert!(pair[1].semantic_mi >= pair[0].semantic_mi - 1e-9);
        assert!(pair[1].rate >= pair[0].rate - 1e-9);
    }

    // Discrete convexity of R as a function of G: slopes nondecreasing.
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.semantic_mi, p.rate))
        .collect();
    let mut last_slope = f64::NEG_INFINITY;
    for pair in pts.windows(2) {
        let dg = pair[1].0 - pair[0].0;
        if dg > 1e-9 {
            let slope = (pair[1].1 - pair[0].1) / dg;
            assert!(slope >= last_slope - 1e-7, "slope regressed: {slope} after {last_slope}");
            last_slope = slope;
        }
    }

    // s = 1 is the matched point with unit efficiency.
    let matched = curve
        .points
        .iter()
        .min_by(|a, b| (a.s - 1.0).abs().partial_cmp(&(b.s - 1.0).abs()).unwrap())
        .unwrap();
    assert!((matched.s - 1.0).abs() < 1e-12);
    assert!((matched.rate - matched.semantic_mi).abs() < 1e-6);
}

#[test]
fn rg_left_branch_runs_with_negative_slopes() {
    let (source, sem) = binary_fixture();
    let s_grid = [-2.0, -1.0, -0.5];
    let curve = solve_rg_curve(&source, &sem, &s_grid, &SolveOptions::default()).unwrap();
    for p in &curve.points {
        assert!(p.converged);
        // The lying branch: semantic information at or below zero while the
        // rate stays a valid MI.
        assert!(p.semantic_mi <= 1e-9, "s = {}", p.s);
        assert!(p.rate >= -1e-9);
    }
}

#[test]
fn one_hot_limit_at_large_s() {
    let (source, sem) = binary_fixture();
    let p = solve_rg_point(&source, &sem, 200.0, None, &SolveOptions::default()).unwrap();
    for i in 0..2 {
        let max = p.channel.row(i).iter().cloned().fold(0.0, f64::max);
        assert!(max > 1.0 - 1e-6);
    }
}

/// Exhaustive simplex-grid oracle for the capacity of a semantic channel:
/// evaluate the large-s semantic MI at every composition of `grain` mass
/// units over the alphabet and take the maximum.
fn capacity_oracle(sem: &SemanticChannel, grain: usize, search: &CapacitySearch) -> f64 {
    let n = sem.n_instances();
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; n];
    fn recurse(
        sem: &SemanticChannel,
        counts: &mut Vec<usize>,
        idx: usize,
        left: usize,
        grain: usize,
        search: &CapacitySearch,
        best: &mut f64,
    ) {
        if idx == counts.len() - 1 {
            counts[idx] = left;
            let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / grain as f64).collect();
            if let Ok(g) = capacity_objective(sem, &probs, search) {
                if g > *best {
                    *best = g;
                }
            }
            return;
        }
        for take in 0..=left {
            counts[idx] = take;
            recurse(sem, counts, idx + 1, left - take, grain, search, best);
        }
    }
    recurse(sem, &mut counts, 0, grain, grain, search, &mut best);
    best
}

#[test]
fn capacity_search_matches_simplex_grid_oracle() {
    // Two overlapping Gaussian truth functions on a 6-point alphabet.
    let values: Vec<f64> = (0..6).map(|v| v as f64).collect();
    let sem = SemanticChannel::from_columns(vec![
        gaussian_truth(&values, 1.0, 1.3).unwrap(),
        gaussian_truth(&values, 4.0, 1.3).unwrap(),
    ])
    .unwrap();
    let search = CapacitySearch::default();
    let result = semantic_channel_capacity(&sem, &search).unwrap();
    assert!(result.capacity < 1.0); // overlapping: strictly below log 2
    let oracle = capacity_oracle(&sem, 24, &search);
    assert!(
        (result.capacity - oracle).abs() < 1e-3,
        "search {} vs oracle {oracle}",
        result.capacity
    );
    // The refined search can only do better than the grid.
    assert!(result.capacity >= oracle - 1e-3);
}

#[test]
fn higher_discrimination_raises_the_semantic_ceiling() {
    let opts = SolveOptions::default();
    let coarse = gray_compression_demo(
        64,
        8,
        &GrayTruthConfig::Gaussian {
            sigma0: 2.0,
            beta: 2.0,
        },
        1.0,
        &opts,
    )
    .unwrap();
    let fine = gray_compression_demo(
        64,
        8,
        &GrayTruthConfig::Gaussian {
            sigma0: 0.5,
            beta: 2.0,
        },
        1.0,
        &opts,
    )
    .unwrap();
    assert!(
        fine.g_max > coarse.g_max,
        "sigma/4 should raise G_max: {} vs {}",
        fine.g_max,
        coarse.g_max
    );
}

#[test]
fn warm_start_and_cold_start_land_on_the_same_curve() {
    let (source, sem) = binary_fixture();
    let s_grid = [0.5, 1.0, 2.0, 4.0];
    let warm = solve_rg_curve(&source, &sem, &s_grid, &SolveOptions::default()).unwrap();
    let cold = semg_core::rate::solve_rg_points(&source, &sem, &s_grid, &SolveOptions::default())
        .unwrap();
    for (a, b) in warm.points.iter().zip(&cold) {
        assert!((a.rate - b.rate).abs() < 1e-6);
        assert!((a.semantic_mi - b.semantic_mi).abs() < 1e-6);
    }
}
