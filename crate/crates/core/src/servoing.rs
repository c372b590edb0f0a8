//! Image-based visual servoing on the four gate corners.
//!
//! The controller works in normalized image coordinates with a constant
//! assumed depth. Only the camera twist components a quadrotor can follow
//! directly are kept: the three linear velocities and the rotation about the
//! camera y axis (body yaw). Pixel RMS error is reported for thresholding.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, FeatureVec};

/// Relative singular-value cutoff of the pseudo-inverse.
pub const PINV_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IbvsConfig {
    /// Convergence gain, 1/s.
    pub lambda: f64,
    /// Constant feature depth used in the interaction matrix, m.
    pub depth_assumed: f64,
    /// Distance from the gate at which the desired features are taken, m.
    pub desired_distance: f64,
    pub error_threshold_px: f64,
    pub max_linear_speed: f64,
    pub max_yaw_rate: f64,
    pub min_visible_corners: usize,
    /// Yaw rate of the spin-in-place search, rad/s.
    pub search_rate: f64,
}

impl Default for IbvsConfig {
    fn default() -> Self {
        IbvsConfig {
            lambda: 0.5,
            depth_assumed: 0.5,
            desired_distance: 0.5,
            error_threshold_px: 8.0,
            max_linear_speed: 2.0,
            max_yaw_rate: 1.5,
            min_visible_corners: 2,
            search_rate: 0.5,
        }
    }
}

impl IbvsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("depth_assumed", self.depth_assumed),
            ("desired_distance", self.desired_distance),
            ("error_threshold_px", self.error_threshold_px),
            ("max_linear_speed", self.max_linear_speed),
            ("max_yaw_rate", self.max_yaw_rate),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("ibvs: {name} must be > 0")));
            }
        }
        if !(1..=4).contains(&self.min_visible_corners) {
            return Err(Error::config("ibvs: min_visible_corners must be in [1, 4]"));
        }
        if !(self.search_rate.abs() <= self.max_yaw_rate) {
            return Err(Error::config(
                "ibvs: |search_rate| must not exceed max_yaw_rate",
            ));
        }
        Ok(())
    }
}

/// Body-frame velocity command: (forward, left, up) in m/s plus yaw rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v_body: Vector3<f64>,
    pub yaw_rate: f64,
}

impl VelocityCommand {
    pub fn new(forward: f64, left: f64, up: f64, yaw_rate: f64) -> Self {
        VelocityCommand {
            v_body: Vector3::new(forward, left, up),
            yaw_rate,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Spin in place.
    pub fn search(rate: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, rate)
    }

    /// Maps a camera twist (vx, vy, vz, wy) to the body frame.
    pub fn from_camera_twist(twist: &[f64; 4]) -> Self {
        Self::new(twist[2], -twist[0], -twist[1], -twist[3])
    }

    pub fn to_camera_twist(&self) -> [f64; 4] {
        [
            -self.v_body.y,
            -self.v_body.z,
            self.v_body.x,
            -self.yaw_rate,
        ]
    }

    /// Scales the linear part down to `max_linear` by norm and clips the yaw rate.
    pub fn clamped(&self, max_linear: f64, max_yaw_rate: f64) -> Self {
        let speed = self.v_body.norm();
        let v_body = if speed > max_linear {
            self.v_body * (max_linear / speed)
        } else {
            self.v_body
        };
        VelocityCommand {
            v_body,
            yaw_rate: self.yaw_rate.clamp(-max_yaw_rate, max_yaw_rate),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v_body.iter().all(|x| x.is_finite()) && self.yaw_rate.is_finite()
    }
}

/// Stacked point-feature rows for the corners in `corners`, columns
/// (vx, vy, vz, wy) of the camera twist.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMatrix {
    pub matrix: DMatrix<f64>,
    pub corners: Vec<usize>,
}

/// The two rows of one normalized point `(x, y)` at depth `depth`.
pub fn point_rows(x: f64, y: f64, depth: f64) -> [[f64; 4]; 2] {
    let inv = 1.0 / depth;
    [
        [-inv, 0.0, x * inv, -(1.0 + x * x)],
        [0.0, -inv, y * inv, -x * y],
    ]
}

pub fn interaction_matrix(
    fv: &FeatureVec,
    cam: &CameraModel,
    depth: f64,
    min_visible: usize,
) -> Result<InteractionMatrix> {
    let corners: Vec<usize> = fv.visible_indices().collect();
    if corners.len() < min_visible.max(1) {
        return Err(Error::InsufficientFeatures {
            visible: corners.len(),
            required: min_visible.max(1),
        });
    }
    let mut matrix = DMatrix::zeros(2 * corners.len(), 4);
    for (r, &i) in corners.iter().enumerate() {
        let (u, v) = fv.corner(i);
        let (x, y) = cam.normalize(u, v);
        for (k, row) in point_rows(x, y, depth).iter().enumerate() {
            for (c, &value) in row.iter().enumerate() {
                matrix[(2 * r + k, c)] = value;
            }
        }
    }
    Ok(InteractionMatrix { matrix, corners })
}

/// Moore-Penrose pseudo-inverse via SVD, dropping singular values below
/// `PINV_TOLERANCE * sigma_max`.
///
/// The decomposition comes from faer: nalgebra's SVD returns inconsistent
/// factors for some matrices with exactly zero singular values.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let Ok(svd) = a.thin_svd() else {
        return DMatrix::zeros(cols, rows);
    };
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let sigma_max = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let cutoff = PINV_TOLERANCE * sigma_max;
    let mut result = DMatrix::zeros(cols, rows);
    for k in 0..s.nrows() {
        let sk = s[k];
        if sk > cutoff && sk > 0.0 {
            // Rank-one update v_k u_k^T / s_k.
            for i in 0..cols {
                for j in 0..rows {
                    result[(i, j)] += v[(i, k)] * u[(j, k)] / sk;
                }
            }
        }
    }
    result
}

/// Corners of a centered, frontal gate of side `side` seen from `distance`.
pub fn desired_features(side: f64, distance: f64, cam: &CameraModel) -> FeatureVec {
    let du = cam.fx * (side / 2.0) / distance;
    let dv = cam.fy * (side / 2.0) / distance;
    FeatureVec::all_visible([
        cam.cx - du,
        cam.cy - dv,
        cam.cx + du,
        cam.cy - dv,
        cam.cx + du,
        cam.cy + dv,
        cam.cx - du,
        cam.cy + dv,
    ])
}

/// Output of one controller evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbvsOutput {
    pub command: VelocityCommand,
    /// Command before speed clamping.
    pub unclamped: VelocityCommand,
    /// RMS pixel error over the corners used; infinite when searching.
    pub error_px: f64,
    pub corners_used: usize,
}

impl IbvsOutput {
    pub fn is_search(&self) -> bool {
        self.error_px.is_infinite()
    }
}

/// One control-law evaluation `v = lambda * L^+ (p* - p)` on the visible corners.
pub fn ibvs_step(
    measured: &FeatureVec,
    desired: &FeatureVec,
    cfg: &IbvsConfig,
    cam: &CameraModel,
) -> IbvsOutput {
    let l = match interaction_matrix(measured, cam, cfg.depth_assumed, cfg.min_visible_corners) {
        Ok(l) => l,
        Err(_) => {
            let search = VelocityCommand::search(cfg.search_rate);
            return IbvsOutput {
                command: search,
                unclamped: search,
                error_px: f64::INFINITY,
                corners_used: measured.n_visible(),
            };
        }
    };
    let n = l.corners.len();
    let mut err = DVector::zeros(2 * n);
    let mut sq_px = 0.0;
    for (r, &i) in l.corners.iter().enumerate() {
        let (u, v) = measured.corner(i);
        let (ud, vd) = desired.corner(i);
        err[2 * r] = (ud - u) / cam.fx;
        err[2 * r + 1] = (vd - v) / cam.fy;
        sq_px += (ud - u).powi(2) + (vd - v).powi(2);
    }
    let twist = pseudo_inverse(&l.matrix) * err * cfg.lambda;
    let unclamped = VelocityCommand::from_camera_twist(&[twist[0], twist[1], twist[2], twist[3]]);
    IbvsOutput {
        command: unclamped.clamped(cfg.max_linear_speed, cfg.max_yaw_rate),
        unclamped,
        error_px: (sq_px / (2 * n) as f64).sqrt(),
        corners_used: n,
    }
}
