#![allow(clippy::needless_range_loop)]

use gateservo::geometry::{
    corners_in_camera, project_corners, rotate_yaw, traversal_check, CameraModel, GateSpec, Pose,
    ProjectionMode,
};
use gateservo::servoing::{desired_features, ibvs_step, IbvsConfig, VelocityCommand};
use gateservo::vehicle::{step_dynamics, DroneState, VehicleConfig};
use nalgebra::Vector3;
use proptest::prelude::*;

/// Multiples of 1/64 within a few metres: sums and differences stay exact.
fn dyadic(range: i32) -> impl Strategy<Value = f64> {
    (-range * 64..=range * 64).prop_map(|k| k as f64 / 64.0)
}

fn dyadic_vec(range: i32) -> impl Strategy<Value = Vector3<f64>> {
    (dyadic(range), dyadic(range), dyadic(range)).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn scene() -> impl Strategy<Value = (Pose, GateSpec)> {
    (dyadic_vec(3), -3.0f64..3.0, dyadic_vec(3), -3.0f64..3.0)
        .prop_map(|(p, yaw, g, gyaw)| (Pose::new(p, yaw), GateSpec::new(Pose::new(g, gyaw))))
}

fn shifted(pose: &Pose, t: &Vector3<f64>) -> Pose {
    Pose::new(pose.position + t, pose.yaw)
}

fn rotated(pose: &Pose, yaw: f64, t: &Vector3<f64>) -> Pose {
    Pose::new(rotate_yaw(&pose.position, yaw) + t, pose.yaw + yaw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn translation_leaves_projection_bit_identical((drone, gate) in scene(), t in dyadic_vec(50)) {
        let cam = CameraModel::default();
        for mode in [ProjectionMode::Extrapolated, ProjectionMode::Clamped] {
            let a = project_corners(&drone, &gate, 0.0, &cam, mode);
            let moved_gate = GateSpec { pose: shifted(&gate.pose, &t), ..gate };
            let b = project_corners(&shifted(&drone, &t), &moved_gate, 0.0, &cam, mode);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn translation_leaves_command_bit_identical((drone, gate) in scene(), t in dyadic_vec(50)) {
        let cam = CameraModel::default();
        let cfg = IbvsConfig::default();
        let desired = desired_features(1.0, cfg.desired_distance, &cam);
        let a = project_corners(&drone, &gate, 0.0, &cam, ProjectionMode::Extrapolated);
        let moved_gate = GateSpec { pose: shifted(&gate.pose, &t), ..gate };
        let b = project_corners(&shifted(&drone, &t), &moved_gate, 0.0, &cam, ProjectionMode::Extrapolated);
        prop_assert_eq!(ibvs_step(&a, &desired, &cfg, &cam), ibvs_step(&b, &desired, &cfg, &cam));
    }

    #[test]
    fn rotation_leaves_projection_unchanged_to_rounding(
        (drone, gate) in scene(),
        yaw in -3.0f64..3.0,
        t in dyadic_vec(5),
    ) {
        let cam = CameraModel::default();
        let a = project_corners(&drone, &gate, 0.0, &cam, ProjectionMode::Extrapolated);
        let moved_gate = GateSpec { pose: rotated(&gate.pose, yaw, &t), ..gate };
        let b = project_corners(&rotated(&drone, yaw, &t), &moved_gate, 0.0, &cam, ProjectionMode::Extrapolated);
        let pa = corners_in_camera(&drone, &gate, 0.0);
        for i in 0..4 {
            // Visibility can only differ for corners right at the depth cutoff.
            if (pa[i].z - cam.min_depth).abs() > 1e-9 {
                prop_assert_eq!(a.visible[i], b.visible[i]);
            }
            if a.visible[i] && b.visible[i] {
                let scale = 1.0 + cam.fx / pa[i].z;
                let (ua, va) = a.corner(i);
                let (ub, vb) = b.corner(i);
                prop_assert!((ua - ub).abs() <= 1e-9 * scale * (1.0 + ua.abs()));
                prop_assert!((va - vb).abs() <= 1e-9 * scale * (1.0 + va.abs()));
            }
        }
    }

    #[test]
    fn back_projection_recovers_corners((drone, gate) in scene()) {
        let cam = CameraModel::default();
        let fv = project_corners(&drone, &gate, 0.0, &cam, ProjectionMode::Clamped);
        let pc = corners_in_camera(&drone, &gate, 0.0);
        for i in fv.visible_indices() {
            let (u, v) = fv.corner(i);
            let back = cam.back_project(u, v, pc[i].z);
            prop_assert!((back - pc[i]).norm() < 1e-9, "corner {} off by {}", i, (back - pc[i]).norm());
        }
    }

    #[test]
    fn reversed_segment_reports_the_same_event(
        a in (-1.0f64..1.0, -1.0f64..1.0, 0.0f64..2.0),
        b in (-1.0f64..1.0, -1.0f64..1.0, 0.0f64..2.0),
        yaw in -3.0f64..3.0,
    ) {
        let gate = GateSpec::new(Pose::at(0.0, 0.0, 1.0, yaw));
        let p = Vector3::new(a.0, a.1, a.2);
        let q = Vector3::new(b.0, b.1, b.2);
        prop_assert_eq!(
            traversal_check(&p, &q, &gate, 0.0, 0.06),
            traversal_check(&q, &p, &gate, 0.0, 0.06)
        );
    }

    #[test]
    fn dynamics_are_deterministic_and_bounded(
        v0 in (-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5),
        cmd in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -1.5f64..1.5),
        steps in 1usize..200,
    ) {
        let cfg = VehicleConfig::default();
        let command = VelocityCommand::new(cmd.0, cmd.1, cmd.2, cmd.3);
        let mut s = DroneState::at_rest(Pose::at(0.0, 0.0, 5.0, 0.3));
        s.v_world = Vector3::new(v0.0, v0.1, v0.2);
        let bound = s.v_world.norm().max(command.v_body.norm()) + 1e-9;
        let mut twin = s;
        for _ in 0..steps {
            s = step_dynamics(&s, &command, &cfg, cfg.substep_dt());
            twin = step_dynamics(&twin, &command, &cfg, cfg.substep_dt());
            prop_assert_eq!(s, twin);
            prop_assert!(s.speed() <= bound, "speed {} > {}", s.speed(), bound);
        }
    }
}

#[test]
fn frontal_corner_ordering() {
    let cam = CameraModel::default();
    for (drone, gate) in [
        (
            Pose::at(-2.0, 0.0, 1.0, 0.0),
            GateSpec::new(Pose::at(0.0, 0.0, 1.0, 0.0)),
        ),
        // Same gate seen from behind.
        (
            Pose::at(2.0, 0.0, 1.0, std::f64::consts::PI),
            GateSpec::new(Pose::at(0.0, 0.0, 1.0, 0.0)),
        ),
    ] {
        let fv = project_corners(&drone, &gate, 0.0, &cam, ProjectionMode::Clamped);
        assert_eq!(fv.n_visible(), 4);
        assert!(fv.corner(0).0 < fv.corner(1).0);
        assert!(fv.corner(0).1 < fv.corner(3).1);
    }
}
