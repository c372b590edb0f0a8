use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::vehicle::PhaseKind;

pub const TRAJECTORY_HEADER: &str =
    "t,x,y,z,yaw,vx,vy,vz,yaw_rate,phase,err_px,n_visible,target_gate";

/// Drone state at the start of a control period, and what the controller saw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub v_world: Vector3<f64>,
    pub yaw_rate: f64,
    pub phase: PhaseKind,
    pub err_px: f64,
    pub n_visible: usize,
    pub target_gate: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    /// Polyline length through the logged positions.
    pub fn distance(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .sum()
    }

    /// CSV text. Floats use Rust's shortest round-trip formatting, which is
    /// locale independent; infinite errors print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * (self.rows.len() + 1));
        out.push_str(TRAJECTORY_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.position.x,
                r.position.y,
                r.position.z,
                r.yaw,
                r.v_world.x,
                r.v_world.y,
                r.v_world.z,
                r.yaw_rate,
                r.phase.name(),
                r.err_px,
                r.n_visible,
                r.target_gate
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
