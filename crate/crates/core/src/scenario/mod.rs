//! World assembly, the closed-loop run, and the flight experiments.

mod engine;
mod experiments;
mod log;

pub use engine::{run_scenario, Crash, ScenarioRun};
pub use experiments::{
    moving_gate_experiment, orientation_experiment, orientation_scenarios, orientation_start,
    summarize_orientation, OrientationRow, OrientationTable,
};
pub use log::{TrajectoryLog, TrajectoryRow, TRAJECTORY_HEADER};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, GateSpec, Pose, ProjectionMode};
use crate::perception::PerceptionConfig;
use crate::servoing::IbvsConfig;
use crate::vehicle::{NavConfig, VehicleConfig};

/// Axis-aligned flight volume; leaving it counts as a crash.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomBounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl RoomBounds {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Simulated time, s.
    pub duration: f64,
    pub start_pose: Pose,
    /// Visited round-robin in list order.
    pub gates: Vec<GateSpec>,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub projection: ProjectionMode,
    #[serde(default)]
    pub perception: PerceptionConfig,
    #[serde(default)]
    pub ibvs: IbvsConfig,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    #[serde(default)]
    pub nav: NavConfig,
    /// End the run early once this many gates have been passed.
    #[serde(default)]
    pub stop_after_gates: Option<u32>,
    #[serde(default)]
    pub room: Option<RoomBounds>,
}

impl Scenario {
    /// Defaults everywhere, drone on the ground at `start_pose`.
    pub fn new(
        name: impl Into<String>,
        start_pose: Pose,
        gates: Vec<GateSpec>,
        duration: f64,
    ) -> Self {
        Scenario {
            name: name.into(),
            seed: 0,
            duration,
            start_pose,
            gates,
            camera: CameraModel::default(),
            projection: ProjectionMode::default(),
            perception: PerceptionConfig::default(),
            ibvs: IbvsConfig::default(),
            vehicle: VehicleConfig::default(),
            nav: NavConfig::default(),
            stop_after_gates: None,
            room: None,
        }
    }

    /// Single 1 m gate at 1 m height facing +x, drone on the ground
    /// `distance` metres in front of it.
    pub fn frontal(distance: f64, duration: f64) -> Self {
        let gate = GateSpec::new(Pose::at(0.0, 0.0, 1.0, 0.0));
        Scenario::new(
            "frontal",
            Pose::at(-distance, 0.0, 0.0, 0.0),
            vec![gate],
            duration,
        )
    }

    /// Two gates `separation` metres apart facing each other, drone on the
    /// ground midway, heading for the first one.
    pub fn two_gate_circuit(separation: f64, duration: f64) -> Self {
        let a = GateSpec::new(Pose::at(separation, 0.0, 1.0, std::f64::consts::PI));
        let b = GateSpec::new(Pose::at(0.0, 0.0, 1.0, 0.0));
        Scenario::new(
            "two_gate_circuit",
            Pose::at(separation / 2.0, 0.0, 0.0, 0.0),
            vec![a, b],
            duration,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates.is_empty() {
            return Err(Error::config(
                "scenario: gates must contain at least 1 gate",
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("scenario: duration must be > 0"));
        }
        self.start_pose.validate("start_pose")?;
        for gate in &self.gates {
            gate.validate()?;
        }
        self.camera.validate()?;
        self.perception.validate()?;
        self.ibvs.validate()?;
        self.vehicle.validate()?;
        self.nav.validate(&self.ibvs)?;
        if self.stop_after_gates == Some(0) {
            return Err(Error::config("scenario: stop_after_gates must be >= 1"));
        }
        if let Some(room) = &self.room {
            if !room.contains(&self.start_pose.position) {
                return Err(Error::config("scenario: start_pose lies outside the room"));
            }
        }
        Ok(())
    }
}

/// Summary of one closed-loop run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub gates_passed: u32,
    /// Length of the logged trajectory polyline, m.
    pub distance: f64,
    pub peak_speed: f64,
    pub crashed: bool,
    pub success: bool,
    pub elapsed: f64,
    /// Simulated time of each counted traversal, s.
    pub traversal_times: Vec<f64>,
}
