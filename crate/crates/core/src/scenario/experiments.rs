use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use super::engine::{run_scenario, ScenarioRun};
use super::{RunMetrics, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{rotate_yaw, MotionLaw, Pose};

/// Start pose `distance` metres from the first gate at `bearing_deg` off its
/// approach axis, facing the gate center, at the base start altitude.
pub fn orientation_start(base: &Scenario, bearing_deg: f64, distance: f64) -> Pose {
    let gate = &base.gates[0];
    let bearing = bearing_deg.to_radians();
    let toward_gate = rotate_yaw(&gate.normal(), bearing);
    let center = gate.center_at(0.0);
    let offset = toward_gate * distance;
    Pose::new(
        Vector3::new(
            center.x - offset.x,
            center.y - offset.y,
            base.start_pose.position.z,
        ),
        gate.pose.yaw + bearing,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationRow {
    pub orientation_deg: f64,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean / minimum time to the first traversal over successful runs, s.
    pub avg_time: Option<f64>,
    pub best_time: Option<f64>,
    pub metrics: Vec<RunMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientationTable {
    pub distance: f64,
    pub rows: Vec<OrientationRow>,
}

/// Approach the first gate from each relative bearing, `repeats` times with
/// seeds `base.seed + r`. A run succeeds if it passes the gate without
/// crashing; each run stops at its first traversal.
pub fn orientation_experiment(
    base: &Scenario,
    orientations_deg: &[f64],
    repeats: usize,
    distance: f64,
) -> Result<OrientationTable> {
    let scenarios = orientation_scenarios(base, orientations_deg, repeats, distance)?;
    let results: Vec<RunMetrics> = scenarios
        .par_iter()
        .map(|sc| run_scenario(sc).map(|run| run.metrics))
        .collect::<Result<_>>()?;
    Ok(summarize_orientation(
        orientations_deg,
        repeats,
        distance,
        &results,
    ))
}

/// The individual runs of an orientation experiment, orientation-major.
pub fn orientation_scenarios(
    base: &Scenario,
    orientations_deg: &[f64],
    repeats: usize,
    distance: f64,
) -> Result<Vec<Scenario>> {
    if repeats == 0 {
        return Err(Error::config(
            "orientation experiment: repeats must be >= 1",
        ));
    }
    if !(distance > 0.0) {
        return Err(Error::config(
            "orientation experiment: distance must be > 0",
        ));
    }
    base.validate()?;
    let mut out = Vec::with_capacity(orientations_deg.len() * repeats);
    for &deg in orientations_deg {
        for r in 0..repeats as u64 {
            let mut sc = base.clone();
            sc.name = format!("{}_{deg:+}deg", base.name);
            sc.start_pose = orientation_start(base, deg, distance);
            sc.seed = base.seed.wrapping_add(r);
            sc.stop_after_gates = Some(1);
            out.push(sc);
        }
    }
    Ok(out)
}

/// Builds the success/time table from orientation-major run metrics.
pub fn summarize_orientation(
    orientations_deg: &[f64],
    repeats: usize,
    distance: f64,
    results: &[RunMetrics],
) -> OrientationTable {
    let rows = orientations_deg
        .iter()
        .enumerate()
        .map(|(o, &deg)| {
            let metrics = results[o * repeats..(o + 1) * repeats].to_vec();
            let times: Vec<f64> = metrics
                .iter()
                .filter(|m| traversed(m))
                .map(|m| m.traversal_times[0])
                .collect();
            let successes = times.len();
            OrientationRow {
                orientation_deg: deg,
                runs: repeats,
                successes,
                success_rate: successes as f64 / repeats as f64,
                avg_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / successes as f64),
                best_time: times.iter().copied().reduce(f64::min),
                metrics,
            }
        })
        .collect();
    OrientationTable { distance, rows }
}

fn traversed(m: &RunMetrics) -> bool {
    !m.crashed && m.gates_passed >= 1
}

/// Runs `base` with `motion` attached to every gate.
pub fn moving_gate_experiment(base: &Scenario, motion: &MotionLaw) -> Result<ScenarioRun> {
    motion.validate()?;
    let mut sc = base.clone();
    for gate in &mut sc.gates {
        gate.motion = Some(*motion);
    }
    run_scenario(&sc)
}
