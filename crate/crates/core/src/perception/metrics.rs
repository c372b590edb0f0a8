//! Offline corner-error metrics and the evaluation dataset format.
//!
//! A dataset is comma-separated text with one sample per row: 8 ground-truth
//! coordinates, 8 predicted coordinates and 4 visibility flags (`0`/`1`).
//! Blank lines and lines starting with `#` are skipped, and the first row
//! may be a header.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{project_corners, CameraModel, FeatureVec, GateSpec, Pose, ProjectionMode};

pub const DATASET_HEADER: &str = "tu1,tv1,tu2,tv2,tu3,tv3,tu4,tv4,\
pu1,pv1,pu2,pv2,pu3,pv3,pu4,pv4,vis1,vis2,vis3,vis4";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSample {
    pub truth: FeatureVec,
    pub prediction: FeatureVec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RmseReport {
    pub overall: f64,
    /// Per-corner RMSE over both coordinates; `None` if never visible.
    pub per_corner: [Option<f64>; 4],
    pub samples: usize,
    pub coordinates: usize,
}

fn check_lengths(predictions: &[FeatureVec], truths: &[FeatureVec]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// RMSE in pixels over every coordinate whose ground-truth corner is visible.
pub fn rmse_eval(predictions: &[FeatureVec], truths: &[FeatureVec]) -> Result<f64> {
    Ok(rmse_breakdown(predictions, truths)?.overall)
}

pub fn rmse_breakdown(predictions: &[FeatureVec], truths: &[FeatureVec]) -> Result<RmseReport> {
    check_lengths(predictions, truths)?;
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for (p, t) in predictions.iter().zip(truths) {
        for i in t.visible_indices() {
            let (pu, pv) = p.corner(i);
            let (tu, tv) = t.corner(i);
            sums[i] += (pu - tu).powi(2) + (pv - tv).powi(2);
            counts[i] += 2;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let per_corner =
        std::array::from_fn(|i| (counts[i] > 0).then(|| (sums[i] / counts[i] as f64).sqrt()));
    Ok(RmseReport {
        overall: (sums.iter().sum::<f64>() / total as f64).sqrt(),
        per_corner,
        samples: truths.len(),
        coordinates: total,
    })
}

/// Constant predictor returning the per-coordinate mean of `truths`.
pub fn dummy_mean_predictions(truths: &[FeatureVec]) -> Vec<FeatureVec> {
    let mut sums = [0.0; 8];
    let mut counts = [0usize; 8];
    for t in truths {
        for i in t.visible_indices() {
            for k in [2 * i, 2 * i + 1] {
                sums[k] += t.coords[k];
                counts[k] += 1;
            }
        }
    }
    let mean = std::array::from_fn(|k| {
        if counts[k] > 0 {
            sums[k] / counts[k] as f64
        } else {
            0.0
        }
    });
    truths
        .iter()
        .map(|t| FeatureVec::new(mean, t.visible))
        .collect()
}

/// Random clamped views of a unit gate, drawn around the approach cone.
pub fn synthetic_truths<R: Rng + ?Sized>(
    n: usize,
    cam: &CameraModel,
    rng: &mut R,
) -> Vec<FeatureVec> {
    let gate = GateSpec::new(Pose::at(0.0, 0.0, 1.0, 0.0));
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let distance = rng.random_range(0.7..4.0);
        let lateral = rng.random_range(-1.5..1.5);
        let height = rng.random_range(0.5..1.5);
        let yaw = rng.random_range(-0.8..0.8);
        let drone = Pose::at(-distance, lateral, height, yaw);
        let fv = project_corners(&drone, &gate, 0.0, cam, ProjectionMode::Clamped);
        if fv.n_visible() > 0 {
            out.push(fv);
        }
    }
    out
}

fn parse_flag(token: &str) -> Option<bool> {
    match token {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

fn parse_row(line: &str) -> std::result::Result<EvalSample, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 20 {
        return Err(format!("expected 20 fields, found {}", fields.len()));
    }
    let mut values = [0.0; 16];
    for (k, field) in fields[..16].iter().enumerate() {
        let x: f64 = field
            .parse()
            .map_err(|_| format!("field {}: `{field}` is not a number", k + 1))?;
        if !x.is_finite() {
            return Err(format!("field {}: `{field}` is not finite", k + 1));
        }
        values[k] = x;
    }
    let mut visible = [false; 4];
    for (i, field) in fields[16..].iter().enumerate() {
        visible[i] = parse_flag(field)
            .ok_or_else(|| format!("field {}: `{field}` is not a 0/1 flag", 17 + i))?;
    }
    let truth = FeatureVec::new(values[..8].try_into().unwrap(), visible);
    let prediction = FeatureVec::new(values[8..].try_into().unwrap(), visible);
    Ok(EvalSample { truth, prediction })
}

fn looks_like_header(line: &str) -> bool {
    line.split(',')
        .next()
        .is_some_and(|f| f.trim().parse::<f64>().is_err())
}

/// Parses a dataset file; errors carry the 1-based line number.
pub fn read_dataset(path: &Path) -> Result<Vec<EvalSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_row && looks_like_header(line) {
            seen_row = true;
            continue;
        }
        seen_row = true;
        let sample = parse_row(line).map_err(|message| Error::Dataset {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_dataset(path: &Path, samples: &[EvalSample]) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 160);
    out.push_str(DATASET_HEADER);
    out.push('\n');
    for s in samples {
        for x in s.truth.coords.iter().chain(&s.prediction.coords) {
            write!(out, "{x},").unwrap();
        }
        let flags: Vec<&str> = s
            .truth
            .visible
            .iter()
            .map(|&v| if v { "1" } else { "0" })
            .collect();
        out.push_str(&flags.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
