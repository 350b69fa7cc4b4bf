//! File codecs: CSV for sources, matrices, curves, traces, and partitions;
//! JSON for mixture models, observation models, and portfolio specs.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so every f64
//! round-trips bit-exactly and output files are byte-stable.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use semg_core::mat::Mat;
use semg_core::mixture::MixtureModel;
use semg_core::prob::{SemanticChannel, ShannonChannel, Source};

/// 17-significant-digit rendering; infinities serialize as inf/-inf.
pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str, what: &str, line: usize) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .with_context(|| format!("{what}: bad number {s:?} at line {line}")),
    }
}

// ---------------------------------------------------------------------------
// Source / probability vectors: two columns `x,p` with a header.
// ---------------------------------------------------------------------------

pub fn write_source_csv(path: &Path, source: &Source) -> Result<()> {
    let mut out = String::from("x,p\n");
    for (id, &p) in source.ids().iter().zip(source.probs()) {
        out.push_str(&format!("{id},{}\n", fmt_float(p)));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_source_csv(path: &Path) -> Result<Source> {
    let (ids, probs) = read_id_value_csv(path)?;
    Source::new(ids, probs).with_context(|| format!("{}: invalid source", path.display()))
}

/// Any `x,p`-shaped file as raw (ids, values) without distribution checks.
pub fn read_id_value_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .with_context(|| format!("{}: empty file", path.display()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != 2 {
        bail!(
            "{}: expected a 2-column header like `x,p`, found {header:?}",
            path.display()
        );
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 {
            bail!(
                "{}: line {}: expected 2 fields, found {}",
                path.display(),
                n + 1,
                parts.len()
            );
        }
        ids.push(parts[0].trim().to_string());
        values.push(parse_float(parts[1], &path.display().to_string(), n + 1)?);
    }
    Ok((ids, values))
}

// ---------------------------------------------------------------------------
// Matrices: header row of label ids, one row per instance id.
// ---------------------------------------------------------------------------

pub fn write_matrix_csv(
    path: &Path,
    row_ids: &[String],
    col_ids: &[String],
    mat: &Mat,
) -> Result<()> {
    let mut out = String::from("x");
    for id in col_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in row_ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..mat.cols() {
            out.push(',');
            out.push_str(&fmt_float(mat.get(i, j)));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub struct MatrixCsv {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub mat: Mat,
}

pub fn read_matrix_csv(path: &Path) -> Result<MatrixCsv> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .with_context(|| format!("{}: empty file", path.display()))?;
    let col_ids: Vec<String> = header
        .split(',')
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    if col_ids.is_empty() {
        bail!("{}: header has no label columns", path.display());
    }
    let mut row_ids = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != col_ids.len() + 1 {
            bail!(
                "{}: line {}: expected {} fields, found {}",
                path.display(),
                n + 1,
                col_ids.len() + 1,
                parts.len()
            );
        }
        row_ids.push(parts[0].trim().to_string());
        let row: Result<Vec<f64>> = parts[1..]
            .iter()
            .map(|s| parse_float(s, &path.display().to_string(), n + 1))
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(MatrixCsv {
        row_ids,
        col_ids,
        mat: Mat::from_rows(rows)?,
    })
}

pub fn read_semantic_channel_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, SemanticChannel)> {
    let m = read_matrix_csv(path)?;
    let sem = SemanticChannel::new(m.mat)
        .with_context(|| format!("{}: invalid semantic channel", path.display()))?;
    Ok((m.row_ids, m.col_ids, sem))
}

pub fn read_shannon_channel_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, ShannonChannel)> {
    let m = read_matrix_csv(path)?;
    let ch = ShannonChannel::new(m.mat)
        .with_context(|| format!("{}: invalid channel", path.display()))?;
    Ok((m.row_ids, m.col_ids, ch))
}

// ---------------------------------------------------------------------------
// Curve / trace CSVs.
// ---------------------------------------------------------------------------

pub fn write_rg_curve_csv(path: &Path, points: &[semg_core::rate::RGPoint], scale: f64) -> Result<()> {
    let mut out = String::from("s,R,G,iterations,converged\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_float(p.s),
            fmt_float(p.rate * scale),
            fmt_float(p.semantic_mi * scale),
            p.iterations,
            p.converged
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_iteration_trace_csv(
    path: &Path,
    trace: &[semg_core::rate::TracePoint],
    scale: f64,
) -> Result<()> {
    let mut out = String::from("iter,R,G\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            t.iter,
            fmt_float(t.rate * scale),
            fmt_float(t.semantic_mi * scale)
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_enm_trace_csv(
    path: &Path,
    trace: &semg_core::mixture::ConvergenceTrace,
    scale: f64,
) -> Result<()> {
    let mut out = String::from("iter,R,G,Rpp,KL_P_Ptheta,KL_PY,Q,Fprime\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iter,
            fmt_float(r.r * scale),
            fmt_float(r.g * scale),
            fmt_float(r.r_pp * scale),
            fmt_float(r.kl_data * scale),
            fmt_float(r.kl_labels * scale),
            fmt_float(r.q * scale),
            fmt_float(r.f_prime * scale)
        ));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_mi_trace_csv(path: &Path, trace: &[f64], scale: f64) -> Result<()> {
    let mut out = String::from("iter,mi\n");
    for (i, &mi) in trace.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fmt_float(mi * scale)));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// Partitions: `z,label` with a header.
// ---------------------------------------------------------------------------

pub fn write_partition_csv(
    path: &Path,
    z_ids: &[String],
    partition: &semg_core::maxmi::Partition,
) -> Result<()> {
    let mut out = String::from("z,label\n");
    for (id, &j) in z_ids.iter().zip(&partition.assignment) {
        out.push_str(&format!("{id},{j}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_partition_csv(
    path: &Path,
    z_ids: &[String],
    n_labels: usize,
) -> Result<semg_core::maxmi::Partition> {
    let (ids, values) = read_id_value_csv(path)?;
    if ids != z_ids {
        bail!(
            "{}: partition observation ids do not match the model",
            path.display()
        );
    }
    let assignment: Result<Vec<usize>> = values
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            if v.fract() != 0.0 || v < 0.0 {
                bail!("{}: line {}: label {v} is not an index", path.display(), n + 2);
            }
            Ok(v as usize)
        })
        .collect();
    Ok(semg_core::maxmi::Partition::new(assignment?, n_labels)?)
}

// ---------------------------------------------------------------------------
// JSON payloads.
// ---------------------------------------------------------------------------

pub fn read_mixture_model_json(path: &Path) -> Result<MixtureModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: MixtureModel = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid mixture model JSON", path.display()))?;
    MixtureModel::new(raw.weights, raw.components)
        .with_context(|| format!("{}: inconsistent mixture model", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Observation model JSON for maxmi-classify: the source over x, the
/// observation alphabet, and the forward matrix P(z|x) (rows follow
/// x_support, columns follow z_support).
#[derive(Debug, Serialize, Deserialize)]
pub struct ObservationModelJson {
    pub x_support: Vec<String>,
    pub source: Vec<f64>,
    pub z_support: Vec<String>,
    pub z_given_x: Vec<Vec<f64>>,
}

pub fn read_observation_model_json(path: &Path) -> Result<semg_core::maxmi::ObservationModel> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: ObservationModelJson = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid observation model JSON", path.display()))?;
    let source = Source::new(raw.x_support, raw.source)?;
    let channel = ShannonChannel::from_rows(raw.z_given_x)?;
    Ok(semg_core::maxmi::ObservationModel::from_forward(
        source,
        raw.z_support,
        channel,
    )?)
}

/// Portfolio spec JSON: outcome probabilities, the return matrix (rows =
/// outcomes, columns = assets; column 0 is the risk-free asset), and asset
/// labels.
#[derive(Debug, Serialize, Deserialize)]
pub struct PortfolioSpecJson {
    pub probs: Vec<f64>,
    pub returns: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

pub fn read_portfolio_spec_json(path: &Path) -> Result<semg_core::portfolio::PortfolioSpec> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: PortfolioSpecJson = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid portfolio spec JSON", path.display()))?;
    Ok(semg_core::portfolio::PortfolioSpec::new(
        raw.probs,
        Mat::from_rows(raw.returns)?,
        raw.labels,
    )?)
}

/// Ratio vectors: `asset,q` with a header, one row per asset in spec order.
pub fn read_ratios_csv(path: &Path, labels: &[String]) -> Result<Vec<f64>> {
    let (ids, values) = read_id_value_csv(path)?;
    if ids != labels {
        bail!(
            "{}: asset names do not match the spec (expected {:?})",
            path.display(),
            labels
        );
    }
    Ok(values)
}

pub fn write_ratios_csv(path: &Path, labels: &[String], ratios: &[f64]) -> Result<()> {
    let mut out = String::from("asset,q\n");
    for (id, &q) in labels.iter().zip(ratios) {
        out.push_str(&format!("{id},{}\n", fmt_float(q)));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
