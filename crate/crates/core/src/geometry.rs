//! Frames, pinhole projection of gate corners and gate-plane crossing tests.
//!
//! World frame is z-up. The body frame is forward-left-up, attached at the
//! drone position and rotated by the drone yaw. The camera is body-fixed with
//! no mounting offset: camera z is body x, camera x is body -y and camera y
//! is body -z.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORNER_NAMES: [&str; 4] = ["TL", "TR", "BR", "BL"];

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Rotates a vector about the world up axis.
pub fn rotate_yaw(v: &Vector3<f64>, yaw: f64) -> Vector3<f64> {
    let (s, c) = yaw.sin_cos();
    Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Position and heading of a drone or gate in the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vector3<f64>, yaw: f64) -> Self {
        Pose {
            position,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn at(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Pose::new(Vector3::new(x, y, z), yaw)
    }

    /// Unit heading vector in the horizontal plane.
    pub fn heading(&self) -> Vector3<f64> {
        Vector3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !self.position.iter().all(|c| c.is_finite()) || !self.yaw.is_finite() {
            return Err(Error::config(format!("{what}: pose must be finite")));
        }
        Ok(())
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::at(0.0, 0.0, 0.0, 0.0)
    }
}

/// Pinhole intrinsics of the forward-looking camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Points at or closer than this depth are treated as not visible.
    pub min_depth: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            fx: 80.0,
            fy: 80.0,
            cx: 80.0,
            cy: 80.0,
            width: 160,
            height: 160,
            min_depth: 0.05,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::config("camera: fx and fy must be > 0"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("camera: width and height must be > 0"));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::config(
                "camera: principal point must lie inside the image",
            ));
        }
        if !(self.min_depth >= 0.0) {
            return Err(Error::config("camera: min_depth must be >= 0"));
        }
        Ok(())
    }

    /// Pixel coordinates of a camera-frame point. Caller checks the depth.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.cx + self.fx * p.x / p.z, self.cy + self.fy * p.y / p.z)
    }

    /// Camera-frame point at `depth` along the ray through pixel (u, v).
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let (x, y) = self.normalize(u, v);
        Vector3::new(x * depth, y * depth, depth)
    }

    /// Normalized image coordinates of a pixel.
    pub fn normalize(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    pub fn max_u(&self) -> f64 {
        (self.width - 1) as f64
    }

    pub fn max_v(&self) -> f64 {
        (self.height - 1) as f64
    }
}

/// How corners outside the image rectangle are reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    /// Keep the mathematical projection even outside the image.
    #[default]
    Extrapolated,
    /// Clamp to the image rectangle; out-of-image corners are not visible.
    Clamped,
}

/// Sinusoidal gate displacement `axis * amplitude * sin(2 pi t / period + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionLaw {
    pub axis: Vector3<f64>,
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

impl MotionLaw {
    pub fn displacement(&self, t: f64) -> Vector3<f64> {
        self.axis * (self.amplitude * (TAU * t / self.period + self.phase).sin())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(Error::config("motion: period must be > 0"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::config("motion: amplitude must be >= 0"));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("motion: axis must have unit norm"));
        }
        if !self.phase.is_finite() {
            return Err(Error::config("motion: phase must be finite"));
        }
        Ok(())
    }
}

/// Square gate. The pose sits at the center of the opening and its heading is
/// the gate normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub pose: Pose,
    /// Inner side length of the opening.
    #[serde(default = "default_gate_side")]
    pub side: f64,
    /// Width of the physical frame around the opening.
    #[serde(default = "default_frame_band")]
    pub frame_band: f64,
    #[serde(default)]
    pub motion: Option<MotionLaw>,
}

fn default_gate_side() -> f64 {
    1.0
}

fn default_frame_band() -> f64 {
    0.05
}

impl GateSpec {
    pub fn new(pose: Pose) -> Self {
        GateSpec {
            pose,
            side: default_gate_side(),
            frame_band: default_frame_band(),
            motion: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pose.validate("gate")?;
        if !(self.side > 0.0) {
            return Err(Error::config("gate: side must be > 0"));
        }
        if !(self.frame_band >= 0.0) {
            return Err(Error::config("gate: frame_band must be >= 0"));
        }
        if let Some(m) = &self.motion {
            m.validate()?;
        }
        Ok(())
    }

    /// Gate center at time `t`.
    pub fn center_at(&self, t: f64) -> Vector3<f64> {
        match &self.motion {
            Some(m) => self.pose.position + m.displacement(t),
            None => self.pose.position,
        }
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.pose.heading()
    }

    /// In-plane horizontal axis (gate-frame left).
    pub fn lateral(&self) -> Vector3<f64> {
        Vector3::new(-self.pose.yaw.sin(), self.pose.yaw.cos(), 0.0)
    }

    /// World corners at time `t`, ordered TL, TR, BR, BL as seen from `viewer`.
    pub fn corners_world(&self, t: f64, viewer: &Vector3<f64>) -> [Vector3<f64>; 4] {
        let center = self.center_at(t);
        self.corner_offsets(&(viewer - center)).map(|o| center + o)
    }

    /// Corner offsets from the gate center for a viewer at `to_viewer`
    /// relative to that center.
    fn corner_offsets(&self, to_viewer: &Vector3<f64>) -> [Vector3<f64>; 4] {
        let n = self.normal();
        // Looking along +n from the back side, along -n from the front side.
        let look = if to_viewer.dot(&n) > 0.0 { -n } else { n };
        let up = Vector3::z();
        let left = up.cross(&look);
        let h = self.side / 2.0;
        [
            left * h + up * h,
            -left * h + up * h,
            -left * h - up * h,
            left * h - up * h,
        ]
    }
}

/// Pixel coordinates of the four gate corners, (u1, v1, ..., u4, v4) in
/// TL, TR, BR, BL order, plus per-corner visibility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVec {
    pub coords: [f64; 8],
    pub visible: [bool; 4],
}

impl FeatureVec {
    pub fn new(coords: [f64; 8], visible: [bool; 4]) -> Self {
        FeatureVec { coords, visible }
    }

    pub fn all_visible(coords: [f64; 8]) -> Self {
        FeatureVec::new(coords, [true; 4])
    }

    /// No corner detected; coordinates parked at the principal point.
    pub fn none(cam: &CameraModel) -> Self {
        let mut coords = [0.0; 8];
        for c in coords.chunks_exact_mut(2) {
            c[0] = cam.cx;
            c[1] = cam.cy;
        }
        FeatureVec::new(coords, [false; 4])
    }

    pub fn corner(&self, i: usize) -> (f64, f64) {
        (self.coords[2 * i], self.coords[2 * i + 1])
    }

    pub fn set_corner(&mut self, i: usize, u: f64, v: f64) {
        self.coords[2 * i] = u;
        self.coords[2 * i + 1] = v;
    }

    pub fn n_visible(&self) -> usize {
        self.visible.iter().filter(|&&v| v).count()
    }

    pub fn visible_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..4).filter(move |&i| self.visible[i])
    }
}

/// Expresses a world point in the camera frame of a drone at `drone`.
pub fn world_to_camera(drone: &Pose, point: &Vector3<f64>) -> Vector3<f64> {
    offset_to_camera(drone.yaw, &(point - drone.position))
}

/// Camera-frame coordinates of a world-frame offset from the drone.
fn offset_to_camera(yaw: f64, offset: &Vector3<f64>) -> Vector3<f64> {
    let body = rotate_yaw(offset, -yaw);
    Vector3::new(-body.y, -body.z, body.x)
}

/// Inverse of [`world_to_camera`].
pub fn camera_to_world(drone: &Pose, p_cam: &Vector3<f64>) -> Vector3<f64> {
    let body = Vector3::new(p_cam.z, -p_cam.x, -p_cam.y);
    rotate_yaw(&body, drone.yaw) + drone.position
}

/// Camera-frame corner positions, in feature order, of `gate` at time `t`.
pub fn corners_in_camera(drone: &Pose, gate: &GateSpec, t: f64) -> [Vector3<f64>; 4] {
    // Drone-to-center first, so the result depends on the two positions only
    // through their difference.
    let to_center = gate.center_at(t) - drone.position;
    gate.corner_offsets(&-to_center)
        .map(|o| offset_to_camera(drone.yaw, &(to_center + o)))
}

/// Ground-truth pinhole projection of the gate corners.
pub fn project_corners(
    drone: &Pose,
    gate: &GateSpec,
    t: f64,
    cam: &CameraModel,
    mode: ProjectionMode,
) -> FeatureVec {
    let mut fv = FeatureVec::none(cam);
    for (i, pc) in corners_in_camera(drone, gate, t).iter().enumerate() {
        if !(pc.z > cam.min_depth) {
            continue;
        }
        let (u, v) = cam.project(pc);
        match mode {
            ProjectionMode::Extrapolated => {
                fv.set_corner(i, u, v);
                fv.visible[i] = true;
            }
            ProjectionMode::Clamped => {
                let inside = (0.0..=cam.max_u()).contains(&u) && (0.0..=cam.max_v()).contains(&v);
                fv.set_corner(i, u.clamp(0.0, cam.max_u()), v.clamp(0.0, cam.max_v()));
                fv.visible[i] = inside;
            }
        }
    }
    fv
}

/// Outcome of a drone path segment against a gate plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalEvent {
    None,
    Traversed,
    Collided,
}

/// Signed distance of `p` from the gate plane along the gate normal at time `t`.
pub fn gate_side(gate: &GateSpec, p: &Vector3<f64>, t: f64) -> f64 {
    (p - gate.center_at(t)).dot(&gate.normal())
}

/// Classifies the segment `prev -> new` against `gate` at time `t`.
///
/// A crossing inside the opening shrunk by `drone_radius` is a traversal; a
/// crossing inside the opening grown by the frame band (but not a traversal)
/// is a collision.
pub fn traversal_check(
    prev: &Vector3<f64>,
    new: &Vector3<f64>,
    gate: &GateSpec,
    t: f64,
    drone_radius: f64,
) -> TraversalEvent {
    let center = gate.center_at(t);
    let n = gate.normal();
    let s_prev = (prev - center).dot(&n);
    let s_new = (new - center).dot(&n);
    // Canonical order (negative side first) so both directions compute the
    // same crossing point.
    let ((a, sa), (b, sb)) = if s_prev < s_new {
        ((prev, s_prev), (new, s_new))
    } else {
        ((new, s_new), (prev, s_prev))
    };
    if !(sa < 0.0 && sb >= 0.0) {
        return TraversalEvent::None;
    }
    let frac = sa / (sa - sb);
    let hit = a + (b - a) * frac;
    let rel = hit - center;
    let lateral = rel.dot(&gate.lateral()).abs();
    let vertical = rel.z.abs();
    let half = gate.side / 2.0;
    let inner = half - drone_radius;
    let outer = half + gate.frame_band;
    if lateral <= inner && vertical <= inner {
        TraversalEvent::Traversed
    } else if lateral <= outer && vertical <= outer {
        TraversalEvent::Collided
    } else {
        TraversalEvent::None
    }
}
