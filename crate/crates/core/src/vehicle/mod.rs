//! Kinematic drone and the gate-navigation state machine.

mod dynamics;
mod nav;

pub use dynamics::{step_dynamics, DroneState, VehicleConfig};
pub use nav::{
    is_legal_transition, nav_update, NavConfig, NavParams, NavPhase, NavState, PhaseKind,
};
