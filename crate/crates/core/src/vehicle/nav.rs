//! Gate-navigation state machine.
//!
//! Take off to a fixed altitude, servo on the target gate until the pixel
//! error falls under the threshold, then fly an open-loop forward leg and a
//! half turn before servoing on the next gate. When the detector loses the
//! gate the drone spins in place until enough corners come back.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dynamics::{DroneState, VehicleConfig};
use crate::error::{Error, Result};
use crate::geometry::FeatureVec;
use crate::servoing::{IbvsConfig, IbvsOutput, VelocityCommand};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub takeoff_altitude: f64,
    pub climb_speed: f64,
    pub forward_distance: f64,
    pub forward_speed: f64,
    pub turn_angle: f64,
    pub turn_rate: f64,
    /// Stop (enter `Done`) after this many gates have been committed to.
    pub gate_budget: Option<u32>,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            takeoff_altitude: 1.0,
            climb_speed: 0.5,
            forward_distance: 1.0,
            forward_speed: 0.8,
            turn_angle: PI,
            turn_rate: 1.5,
            gate_budget: None,
        }
    }
}

impl NavConfig {
    pub fn validate(&self, ibvs: &IbvsConfig) -> Result<()> {
        for (name, value) in [
            ("takeoff_altitude", self.takeoff_altitude),
            ("climb_speed", self.climb_speed),
            ("forward_speed", self.forward_speed),
            ("turn_rate", self.turn_rate),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("nav: {name} must be > 0")));
            }
        }
        if !(self.forward_distance >= 0.0 && self.turn_angle >= 0.0) {
            return Err(Error::config(
                "nav: forward_distance and turn_angle must be >= 0",
            ));
        }
        if self.climb_speed > ibvs.max_linear_speed || self.forward_speed > ibvs.max_linear_speed {
            return Err(Error::config(
                "nav: open-loop speeds must not exceed ibvs.max_linear_speed",
            ));
        }
        if self.turn_rate > ibvs.max_yaw_rate {
            return Err(Error::config(
                "nav: turn_rate must not exceed ibvs.max_yaw_rate",
            ));
        }
        Ok(())
    }
}

/// Everything `nav_update` needs, gathered from the scenario configs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavParams {
    pub nav: NavConfig,
    pub error_threshold_px: f64,
    pub min_visible_corners: usize,
    pub search_rate: f64,
    pub control_period: f64,
}

impl NavParams {
    pub fn new(nav: &NavConfig, ibvs: &IbvsConfig, vehicle: &VehicleConfig) -> Self {
        NavParams {
            nav: *nav,
            error_threshold_px: ibvs.error_threshold_px,
            min_visible_corners: ibvs.min_visible_corners,
            search_rate: ibvs.search_rate,
            control_period: vehicle.control_period(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase")]
pub enum NavPhase {
    Takeoff,
    GateNavigation,
    /// Open-loop leg; progress is dead-reckoned from the emitted commands.
    ForwardAndTurn {
        traveled: f64,
        turned: f64,
    },
    Search,
    Done,
}

/// Phase without its progress data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Takeoff,
    GateNavigation,
    ForwardAndTurn,
    Search,
    Done,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::Takeoff => "takeoff",
            PhaseKind::GateNavigation => "gate_navigation",
            PhaseKind::ForwardAndTurn => "forward_and_turn",
            PhaseKind::Search => "search",
            PhaseKind::Done => "done",
        }
    }
}

impl NavPhase {
    pub fn kind(&self) -> PhaseKind {
        match self {
            NavPhase::Takeoff => PhaseKind::Takeoff,
            NavPhase::GateNavigation => PhaseKind::GateNavigation,
            NavPhase::ForwardAndTurn { .. } => PhaseKind::ForwardAndTurn,
            NavPhase::Search => PhaseKind::Search,
            NavPhase::Done => PhaseKind::Done,
        }
    }
}

/// Staying in a phase is always legal.
pub fn is_legal_transition(from: PhaseKind, to: PhaseKind) -> bool {
    use PhaseKind::*;
    from == to
        || matches!(
            (from, to),
            (Takeoff, GateNavigation)
                | (GateNavigation, ForwardAndTurn)
                | (GateNavigation, Search)
                | (Search, GateNavigation)
                | (ForwardAndTurn, GateNavigation)
                | (ForwardAndTurn, Done)
        )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub phase: NavPhase,
    /// Gate the controller is currently servoing on.
    pub target_gate: usize,
    pub gate_count: usize,
    /// Threshold hits so far (each one commits to passing a gate).
    pub gates_committed: u32,
}

impl NavState {
    pub fn new(gate_count: usize) -> Self {
        NavState {
            phase: NavPhase::Takeoff,
            target_gate: 0,
            gate_count: gate_count.max(1),
            gates_committed: 0,
        }
    }

    /// Gate being flown through: during the open-loop leg the target index
    /// has already advanced past it.
    pub fn passing_gate(&self) -> usize {
        match self.phase {
            NavPhase::ForwardAndTurn { .. } | NavPhase::Done if self.gates_committed > 0 => {
                (self.target_gate + self.gate_count - 1) % self.gate_count
            }
            _ => self.target_gate,
        }
    }
}

/// One control tick of the state machine.
pub fn nav_update(
    nav: &NavState,
    s: &DroneState,
    perceived: &FeatureVec,
    ibvs: &IbvsOutput,
    p: &NavParams,
) -> (NavState, VelocityCommand) {
    let mut next = *nav;
    let cmd = match nav.phase {
        NavPhase::Takeoff => {
            if s.altitude() >= p.nav.takeoff_altitude {
                next.phase = NavPhase::GateNavigation;
                ibvs.command
            } else {
                VelocityCommand::new(0.0, 0.0, p.nav.climb_speed, 0.0)
            }
        }
        NavPhase::GateNavigation => {
            if ibvs.is_search() {
                next.phase = NavPhase::Search;
                VelocityCommand::search(p.search_rate)
            } else if ibvs.error_px <= p.error_threshold_px {
                next.target_gate = (nav.target_gate + 1) % nav.gate_count;
                next.gates_committed = nav.gates_committed + 1;
                forward_and_turn(&mut next, 0.0, 0.0, ibvs, p)
            } else {
                ibvs.command
            }
        }
        NavPhase::Search => {
            if perceived.n_visible() >= p.min_visible_corners && !ibvs.is_search() {
                next.phase = NavPhase::GateNavigation;
                ibvs.command
            } else {
                VelocityCommand::search(p.search_rate)
            }
        }
        NavPhase::ForwardAndTurn { traveled, turned } => {
            forward_and_turn(&mut next, traveled, turned, ibvs, p)
        }
        NavPhase::Done => VelocityCommand::zero(),
    };
    (next, cmd)
}

fn forward_and_turn(
    next: &mut NavState,
    traveled: f64,
    turned: f64,
    ibvs: &IbvsOutput,
    p: &NavParams,
) -> VelocityCommand {
    let dt = p.control_period;
    if traveled < p.nav.forward_distance {
        next.phase = NavPhase::ForwardAndTurn {
            traveled: traveled + p.nav.forward_speed * dt,
            turned,
        };
        VelocityCommand::new(p.nav.forward_speed, 0.0, 0.0, 0.0)
    } else if turned < p.nav.turn_angle {
        next.phase = NavPhase::ForwardAndTurn {
            traveled,
            turned: turned + p.nav.turn_rate * dt,
        };
        VelocityCommand::new(0.0, 0.0, 0.0, p.nav.turn_rate)
    } else if p.nav.gate_budget.is_some_and(|b| next.gates_committed >= b) {
        next.phase = NavPhase::Done;
        VelocityCommand::zero()
    } else {
        next.phase = NavPhase::GateNavigation;
        ibvs.command
    }
}
