use std::collections::VecDeque;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::log::{TrajectoryLog, TrajectoryRow};
use super::{RunMetrics, Scenario};
use crate::error::Result;
use crate::geometry::{project_corners, traversal_check, FeatureVec, TraversalEvent};
use crate::perception::{perceive, SimRng};
use crate::servoing::{desired_features, ibvs_step};
use crate::vehicle::{nav_update, step_dynamics, DroneState, NavParams, NavState, PhaseKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Crash {
    GateFrame { gate: usize, t: f64 },
    Ground { t: f64 },
    Room { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub metrics: RunMetrics,
    pub log: TrajectoryLog,
    pub crash: Option<Crash>,
}

/// Runs project -> perceive -> servo -> state machine -> dynamics until the
/// duration elapses, the drone crashes, or `stop_after_gates` is reached.
///
/// Control runs at `vehicle.control_rate` with the command held over
/// `vehicle.substeps()` integration steps. Gate events are checked on every
/// integration step against every gate; only traversals of the gate the
/// state machine is flying through are counted.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioRun> {
    sc.validate()?;
    let cam = &sc.camera;
    let period = sc.vehicle.control_period();
    let substeps = sc.vehicle.substeps();
    let h = sc.vehicle.substep_dt();
    let params = NavParams::new(&sc.nav, &sc.ibvs, &sc.vehicle);
    let desired: Vec<FeatureVec> = sc
        .gates
        .iter()
        .map(|g| desired_features(g.side, sc.ibvs.desired_distance, cam))
        .collect();

    let mut rng = SimRng::seed_from_u64(sc.seed);
    let mut state = DroneState::at_rest(sc.start_pose);
    let mut nav = NavState::new(sc.gates.len());
    let mut pipeline: VecDeque<FeatureVec> =
        std::iter::repeat_n(FeatureVec::none(cam), sc.perception.latency_steps).collect();

    let mut log = TrajectoryLog::default();
    let mut peak_speed: f64 = 0.0;
    let mut traversal_times = Vec::new();
    let mut crash = None;
    let mut stopped = false;
    let (mut last_err, mut last_visible) = (f64::INFINITY, 0);

    let mut tick: u64 = 0;
    loop {
        let t = tick as f64 * period;
        if t >= sc.duration {
            break;
        }
        let target = nav.target_gate;
        let truth = project_corners(&state.pose, &sc.gates[target], t, cam, sc.projection);
        pipeline.push_back(perceive(&truth, &sc.perception, cam, &mut rng));
        let measured = pipeline
            .pop_front()
            .expect("pipeline is never empty after push");
        let servo = ibvs_step(&measured, &desired[target], &sc.ibvs, cam);
        let (next_nav, cmd) = nav_update(&nav, &state, &measured, &servo, &params);
        debug_assert!(crate::vehicle::is_legal_transition(
            nav.phase.kind(),
            next_nav.phase.kind()
        ));
        nav = next_nav;
        last_err = servo.error_px;
        last_visible = measured.n_visible();
        log.rows.push(row(
            t,
            &state,
            nav.phase.kind(),
            last_err,
            last_visible,
            target,
        ));

        for i in 0..substeps {
            let ts = t + (i + 1) as f64 * h;
            let prev = state.pose.position;
            state = step_dynamics(&state, &cmd, &sc.vehicle, h);
            state.t = ts;
            peak_speed = peak_speed.max(state.speed());
            crash = detect_events(sc, &nav, &prev, &state, ts, &mut traversal_times);
            if crash.is_some() {
                break;
            }
        }
        if crash.is_some() {
            break;
        }
        tick += 1;
        if sc
            .stop_after_gates
            .is_some_and(|n| traversal_times.len() >= n as usize)
        {
            stopped = true;
            break;
        }
    }

    let t_end = if crash.is_some() {
        state.t
    } else {
        tick as f64 * period
    };
    state.t = t_end;
    log.rows.push(row(
        t_end,
        &state,
        nav.phase.kind(),
        last_err,
        last_visible,
        nav.target_gate,
    ));
    if stopped {
        log::debug!(
            "{}: stopped after {} gates at t={t_end}",
            sc.name,
            traversal_times.len()
        );
    }
    if let Some(c) = &crash {
        log::info!("{}: crashed: {c:?}", sc.name);
    }

    let crashed = crash.is_some();
    let metrics = RunMetrics {
        gates_passed: traversal_times.len() as u32,
        distance: log.distance(),
        peak_speed,
        crashed,
        success: !crashed,
        elapsed: t_end,
        traversal_times,
    };
    Ok(ScenarioRun {
        metrics,
        log,
        crash,
    })
}

fn row(
    t: f64,
    s: &DroneState,
    phase: PhaseKind,
    err_px: f64,
    n_visible: usize,
    target_gate: usize,
) -> TrajectoryRow {
    TrajectoryRow {
        t,
        position: s.pose.position,
        yaw: s.pose.yaw,
        v_world: s.v_world,
        yaw_rate: s.yaw_rate,
        phase,
        err_px,
        n_visible,
        target_gate,
    }
}

fn detect_events(
    sc: &Scenario,
    nav: &NavState,
    prev: &nalgebra::Vector3<f64>,
    state: &DroneState,
    ts: f64,
    traversal_times: &mut Vec<f64>,
) -> Option<crate::scenario::Crash> {
    let pos = &state.pose.position;
    if prev != pos {
        for (gi, gate) in sc.gates.iter().enumerate() {
            match traversal_check(prev, pos, gate, ts, sc.vehicle.drone_radius) {
                TraversalEvent::Traversed if gi == nav.passing_gate() => {
                    log::debug!("{}: passed gate {gi} at t={ts:.3}", sc.name);
                    traversal_times.push(ts);
                }
                TraversalEvent::Collided => return Some(Crash::GateFrame { gate: gi, t: ts }),
                _ => {}
            }
        }
    }
    if nav.phase.kind() != PhaseKind::Takeoff && state.altitude() <= 0.0 {
        return Some(Crash::Ground { t: ts });
    }
    if sc.room.is_some_and(|r| !r.contains(pos)) {
        return Some(Crash::Room { t: ts });
    }
    None
}
