//! Closed-loop simulation of monocular gate navigation for nano-drones.
//!
//! The pipeline is: pinhole projection of the target gate's corners
//! ([`geometry`]), a pluggable corner detector ([`perception`]), an
//! image-based visual servoing controller ([`servoing`]), a kinematic drone
//! with a gate-traversal state machine ([`vehicle`]), and the experiment
//! runners ([`scenario`], [`report`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod geometry;
pub mod perception;
pub mod report;
pub mod scenario;
pub mod servoing;
pub mod vehicle;

pub use error::{Error, Result};
