//! Library side of the command-line tool: runs scenarios from config files
//! and writes trajectory CSV, metrics JSON and text summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, ScenarioFile};
use crate::error::{Error, Result};
use crate::geometry::CORNER_NAMES;
use crate::perception::{parse_layers, read_dataset, receptive_field, rmse_breakdown, RmseReport};
use crate::scenario::{
    moving_gate_experiment, orientation_scenarios, run_scenario, summarize_orientation, RunMetrics,
    Scenario, ScenarioRun,
};

/// Overrides applied on top of a scenario file.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration: Option<f64>,
}

impl Overrides {
    fn apply(&self, file: &ScenarioFile) -> Result<ScenarioFile> {
        let mut file = file.clone();
        if let Some(seed) = self.seed {
            file.scenario.seed = seed;
        }
        if let Some(duration) = self.duration {
            file.scenario.duration = duration;
        }
        file.validate()?;
        Ok(file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub trajectory_csv: PathBuf,
    pub metrics_json: PathBuf,
    pub summary_txt: PathBuf,
    /// Wall-clock runtime, s.
    pub runtime: f64,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Runs the file's scenario once (with its moving-gate law, if any).
pub fn execute(file: &ScenarioFile) -> Result<ScenarioRun> {
    match &file.experiment {
        Some(Experiment::MovingGate { motion }) => moving_gate_experiment(&file.scenario, motion),
        _ => run_scenario(&file.scenario),
    }
}

fn summary_text(sc: &Scenario, run: &ScenarioRun, runtime: f64) -> String {
    let m = &run.metrics;
    let mut s = String::new();
    writeln!(s, "scenario      {}", sc.name).unwrap();
    writeln!(s, "seed          {}", sc.seed).unwrap();
    writeln!(s, "perception    {:?}", sc.perception.kind).unwrap();
    writeln!(
        s,
        "result        {}",
        if m.success { "success" } else { "failure" }
    )
    .unwrap();
    if let Some(crash) = &run.crash {
        writeln!(s, "crash         {crash:?}").unwrap();
    }
    writeln!(s, "gates passed  {}", m.gates_passed).unwrap();
    writeln!(s, "distance      {:.2} m", m.distance).unwrap();
    writeln!(s, "peak speed    {:.3} m/s", m.peak_speed).unwrap();
    writeln!(s, "elapsed       {:.2} s", m.elapsed).unwrap();
    let times: Vec<String> = m
        .traversal_times
        .iter()
        .map(|t| format!("{t:.2}"))
        .collect();
    writeln!(s, "traversals    [{}]", times.join(", ")).unwrap();
    writeln!(s, "runtime       {runtime:.3} s").unwrap();
    s
}

/// Executes one run and writes `trajectory.csv`, `metrics.json` and
/// `summary.txt` into `out_dir`.
pub fn cmd_run(
    file: &ScenarioFile,
    overrides: Overrides,
    out_dir: &Path,
) -> Result<(RunReport, ScenarioRun)> {
    let file = overrides.apply(file)?;
    let start = Instant::now();
    let run = execute(&file)?;
    let runtime = start.elapsed().as_secs_f64();

    create_dir(out_dir)?;
    let trajectory_csv = out_dir.join("trajectory.csv");
    let metrics_json = out_dir.join("metrics.json");
    let summary_txt = out_dir.join("summary.txt");
    run.log.write_csv(&trajectory_csv)?;
    write_text(&metrics_json, &to_json(&run.metrics))?;
    write_text(&summary_txt, &summary_text(&file.scenario, &run, runtime))?;

    let report = RunReport {
        scenario: file.scenario.name.clone(),
        seed: file.scenario.seed,
        metrics: run.metrics.clone(),
        trajectory_csv,
        metrics_json,
        summary_txt,
        runtime,
    };
    Ok((report, run))
}

/// One condition of a batch, aggregated over its repeats.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchRow {
    pub condition: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub avg_gates: f64,
    pub best_gates: u32,
    pub avg_distance: f64,
    pub best_distance: f64,
    /// Time to the first traversal (orientation) or run time, over successful runs.
    pub avg_time: Option<f64>,
    pub best_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub seed: u64,
    pub repeats: usize,
    pub rows: Vec<BatchRow>,
}

impl BatchSummary {
    /// Column-aligned text table.
    pub fn to_table(&self) -> String {
        let header = [
            "condition",
            "runs",
            "success",
            "avg_gates",
            "best_gates",
            "avg_dist",
            "best_dist",
            "avg_time",
            "best_time",
        ];
        let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let cells: Vec<[String; 9]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.condition.clone(),
                    r.runs.to_string(),
                    format!(
                        "{}/{} ({:.0}%)",
                        r.successes,
                        r.runs,
                        100.0 * r.success_rate
                    ),
                    format!("{:.2}", r.avg_gates),
                    r.best_gates.to_string(),
                    format!("{:.2}", r.avg_distance),
                    format!("{:.2}", r.best_distance),
                    opt(r.avg_time),
                    opt(r.best_time),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..9)
            .map(|c| {
                cells
                    .iter()
                    .map(|row| row[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap()
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = widths[c])
                    } else {
                        format!("{s:>w$}", w = widths[c])
                    }
                })
                .collect();
            writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
        };
        line(&mut out, &header);
        for row in &cells {
            let refs: Vec<&str> = row.iter().map(String::as_str).collect();
            line(&mut out, &refs);
        }
        out
    }
}

fn aggregate(condition: String, metrics: &[RunMetrics], times: Vec<Option<f64>>) -> BatchRow {
    let runs = metrics.len();
    let ok: Vec<f64> = times.into_iter().flatten().collect();
    let successes = ok.len();
    BatchRow {
        condition,
        runs,
        successes,
        success_rate: successes as f64 / runs as f64,
        avg_gates: metrics.iter().map(|m| m.gates_passed as f64).sum::<f64>() / runs as f64,
        best_gates: metrics.iter().map(|m| m.gates_passed).max().unwrap_or(0),
        avg_distance: metrics.iter().map(|m| m.distance).sum::<f64>() / runs as f64,
        best_distance: metrics.iter().map(|m| m.distance).fold(0.0, f64::max),
        avg_time: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / successes as f64),
        best_time: ok.iter().copied().reduce(f64::min),
    }
}

/// Repeats the file's scenario (or its orientation sweep) `repeats` times
/// with seeds `seed + i`, in parallel. Writes each run to
/// `runs/<condition>_<index>.{csv,json}` and the table to `batch.json` and
/// `batch.txt`.
pub fn cmd_batch(
    file: &ScenarioFile,
    repeats: usize,
    overrides: Overrides,
    out_dir: &Path,
) -> Result<BatchSummary> {
    if repeats == 0 {
        return Err(Error::config("batch: repeats must be >= 1"));
    }
    let file = overrides.apply(file)?;
    let base = &file.scenario;

    let (conditions, jobs): (Vec<String>, Vec<ScenarioFile>) = match &file.experiment {
        Some(Experiment::Orientation {
            orientations_deg,
            distance,
        }) => {
            let scenarios = orientation_scenarios(base, orientations_deg, repeats, *distance)?;
            let conditions = orientations_deg
                .iter()
                .map(|d| format!("{d:+}deg"))
                .collect();
            let jobs = scenarios
                .into_iter()
                .map(|sc| ScenarioFile {
                    scenario: sc,
                    experiment: None,
                    ..file.clone()
                })
                .collect();
            (conditions, jobs)
        }
        _ => {
            let jobs = (0..repeats as u64)
                .map(|i| {
                    let mut f = file.clone();
                    f.scenario.seed = base.seed.wrapping_add(i);
                    f
                })
                .collect();
            (vec![base.name.clone()], jobs)
        }
    };

    let runs: Vec<ScenarioRun> = jobs.par_iter().map(execute).collect::<Result<_>>()?;

    let runs_dir = out_dir.join("runs");
    create_dir(&runs_dir)?;
    for (idx, run) in runs.iter().enumerate() {
        let stem = format!("{}_{idx:03}", conditions[idx / repeats]);
        run.log.write_csv(&runs_dir.join(format!("{stem}.csv")))?;
        write_text(
            &runs_dir.join(format!("{stem}.json")),
            &to_json(&run.metrics),
        )?;
    }

    let metrics: Vec<RunMetrics> = runs.into_iter().map(|r| r.metrics).collect();
    let rows = match &file.experiment {
        Some(Experiment::Orientation {
            orientations_deg,
            distance,
        }) => {
            let table = summarize_orientation(orientations_deg, repeats, *distance, &metrics);
            table
                .rows
                .iter()
                .zip(&conditions)
                .map(|(row, cond)| {
                    let times = row
                        .metrics
                        .iter()
                        .map(|m| (!m.crashed && m.gates_passed >= 1).then(|| m.traversal_times[0]))
                        .collect();
                    aggregate(cond.clone(), &row.metrics, times)
                })
                .collect()
        }
        _ => {
            let times = metrics
                .iter()
                .map(|m| m.success.then_some(m.elapsed))
                .collect();
            vec![aggregate(conditions[0].clone(), &metrics, times)]
        }
    };

    let summary = BatchSummary {
        scenario: base.name.clone(),
        seed: base.seed,
        repeats,
        rows,
    };
    write_text(&out_dir.join("batch.json"), &to_json(&summary))?;
    write_text(&out_dir.join("batch.txt"), &summary.to_table())?;
    Ok(summary)
}

/// Offline RMSE of a prediction dataset file.
pub fn cmd_eval_rmse(dataset: &Path) -> Result<RmseReport> {
    let samples = read_dataset(dataset)?;
    let truths: Vec<_> = samples.iter().map(|s| s.truth).collect();
    let predictions: Vec<_> = samples.iter().map(|s| s.prediction).collect();
    rmse_breakdown(&predictions, &truths)
}

pub fn format_rmse(report: &RmseReport) -> String {
    let mut s = String::new();
    writeln!(s, "samples      {}", report.samples).unwrap();
    writeln!(s, "coordinates  {}", report.coordinates).unwrap();
    writeln!(s, "rmse_px      {:.4}", report.overall).unwrap();
    for (name, value) in CORNER_NAMES.iter().zip(report.per_corner) {
        match value {
            Some(v) => writeln!(s, "rmse_{name}_px  {v:.4}").unwrap(),
            None => writeln!(s, "rmse_{name}_px  -").unwrap(),
        }
    }
    s
}

/// Receptive field of a `"k,s k,s ..."` layer list.
pub fn cmd_rf(spec: &str) -> Result<usize> {
    Ok(receptive_field(&parse_layers(spec)?))
}
