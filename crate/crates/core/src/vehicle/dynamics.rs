use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, rotate_yaw, Pose};
use crate::servoing::VelocityCommand;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub pose: Pose,
    pub v_world: Vector3<f64>,
    pub yaw_rate: f64,
    pub t: f64,
}

impl DroneState {
    /// At rest at `pose`, time zero.
    pub fn at_rest(pose: Pose) -> Self {
        DroneState {
            pose,
            v_world: Vector3::zeros(),
            yaw_rate: 0.0,
            t: 0.0,
        }
    }

    pub fn altitude(&self) -> f64 {
        self.pose.position.z
    }

    pub fn speed(&self) -> f64 {
        self.v_world.norm()
    }
}

/// Velocity-tracking lags and loop rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    /// Linear velocity time constant, s.
    pub tau_v: f64,
    /// Yaw-rate time constant, s.
    pub tau_w: f64,
    /// Upper bound on the integration step, s.
    pub physics_dt: f64,
    /// Controller rate, Hz.
    pub control_rate: f64,
    /// Radius used for gate clearance, m.
    pub drone_radius: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            tau_v: 0.15,
            tau_w: 0.1,
            physics_dt: 0.01,
            control_rate: 30.0,
            drone_radius: 0.06,
        }
    }
}

impl VehicleConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("tau_v", self.tau_v),
            ("tau_w", self.tau_w),
            ("physics_dt", self.physics_dt),
            ("control_rate", self.control_rate),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("vehicle: {name} must be > 0")));
            }
        }
        if self.physics_dt > self.control_period() {
            return Err(Error::config(
                "vehicle: physics_dt must not exceed 1 / control_rate",
            ));
        }
        if !(self.drone_radius >= 0.0) {
            return Err(Error::config("vehicle: drone_radius must be >= 0"));
        }
        Ok(())
    }

    pub fn control_period(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Integration steps per control period, so that each is <= `physics_dt`.
    pub fn substeps(&self) -> usize {
        let ratio = self.control_period() / self.physics_dt;
        // Absorb rounding noise such as 0.03 / 0.01 = 3.0000000000000004.
        (ratio - 1e-9).ceil().max(1.0) as usize
    }

    pub fn substep_dt(&self) -> f64 {
        self.control_period() / self.substeps() as f64
    }
}

/// Advances the drone by `dt` under a held body-frame command.
///
/// Velocities relax exponentially toward the command (rotated to world by
/// the current yaw); position and yaw then integrate the new velocities.
/// The altitude is floored at the ground plane.
pub fn step_dynamics(
    s: &DroneState,
    cmd: &VelocityCommand,
    cfg: &VehicleConfig,
    dt: f64,
) -> DroneState {
    let target = rotate_yaw(&cmd.v_body, s.pose.yaw);
    let kv = (-dt / cfg.tau_v).exp();
    let kw = (-dt / cfg.tau_w).exp();
    let mut v_world = target + (s.v_world - target) * kv;
    let yaw_rate = cmd.yaw_rate + (s.yaw_rate - cmd.yaw_rate) * kw;
    let mut position = s.pose.position + v_world * dt;
    if position.z < 0.0 {
        position.z = 0.0;
        v_world.z = v_world.z.max(0.0);
    }
    DroneState {
        pose: Pose {
            position,
            yaw: normalize_angle(s.pose.yaw + yaw_rate * dt),
        },
        v_world,
        yaw_rate,
        t: s.t + dt,
    }
}
