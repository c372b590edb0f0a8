//! Stand-ins for the onboard gate-corner detectors.
//!
//! A detector turns the ground-truth [`FeatureVec`] into a measured one. The
//! `oracle` detector is exact, `gaussian_noise` adds i.i.d. pixel noise sized
//! after the regression CNN's offline error, and `featuremap` pushes the
//! corners through a noisy heatmap and argmax like the fully convolutional
//! model does.

mod featuremap;
mod metrics;
mod receptive_field;

pub use featuremap::{
    decode_featuremaps, encode_featuremaps, DecodeRescale, FeatureMapCodec, FeatureMapSet,
};
pub use metrics::{
    dummy_mean_predictions, read_dataset, rmse_breakdown, rmse_eval, synthetic_truths,
    write_dataset, EvalSample, RmseReport, DATASET_HEADER,
};
pub use receptive_field::{cumulative_stride, parse_layers, receptive_field, ConvLayerSpec};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, FeatureVec};

/// Random state threaded through every stochastic call.
pub type SimRng = ChaCha8Rng;

/// Per-coordinate noise of the int8 regression CNN profile, in pixels.
pub const CNN_SIGMA_PX: f64 = 1.45;
/// Per-coordinate noise of the int8 fully convolutional profile, in pixels.
pub const FCNN_SIGMA_PX: f64 = 6.31;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionKind {
    #[default]
    Oracle,
    GaussianNoise,
    Featuremap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub kind: PerceptionKind,
    /// Per-coordinate noise std for `gaussian_noise`.
    pub sigma_px: f64,
    pub map_size: usize,
    /// Label Gaussian width for `featuremap`, in bins.
    pub sigma_bins: f64,
    /// Additive noise std on heatmap values for `featuremap`.
    pub map_noise: f64,
    pub decode: DecodeRescale,
    /// Measurement delay, in control periods.
    pub latency_steps: usize,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            kind: PerceptionKind::Oracle,
            sigma_px: CNN_SIGMA_PX,
            map_size: 20,
            sigma_bins: 1.0,
            map_noise: 0.05,
            decode: DecodeRescale::BinCenter,
            latency_steps: 1,
        }
    }
}

impl PerceptionConfig {
    pub fn oracle() -> Self {
        PerceptionConfig::default()
    }

    pub fn gaussian(sigma_px: f64) -> Self {
        PerceptionConfig {
            kind: PerceptionKind::GaussianNoise,
            sigma_px,
            ..PerceptionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_px >= 0.0 && self.sigma_px.is_finite()) {
            return Err(Error::config("perception: sigma_px must be >= 0"));
        }
        if self.map_size < 2 {
            return Err(Error::config("perception: map_size must be >= 2"));
        }
        if !(self.sigma_bins > 0.0) {
            return Err(Error::config("perception: sigma_bins must be > 0"));
        }
        if !(self.map_noise >= 0.0 && self.map_noise.is_finite()) {
            return Err(Error::config("perception: map_noise must be >= 0"));
        }
        Ok(())
    }

    pub fn codec(&self, cam: &CameraModel) -> FeatureMapCodec {
        FeatureMapCodec {
            rescale: self.decode,
            ..FeatureMapCodec::new(self.map_size, cam.width, cam.height, self.sigma_bins)
        }
    }
}

/// Runs the configured detector on the ground truth.
///
/// Visibility flags always pass through from `truth`; invisible corners are
/// returned untouched and consume no randomness.
pub fn perceive<R: Rng + ?Sized>(
    truth: &FeatureVec,
    cfg: &PerceptionConfig,
    cam: &CameraModel,
    rng: &mut R,
) -> FeatureVec {
    match cfg.kind {
        PerceptionKind::Oracle => *truth,
        PerceptionKind::GaussianNoise => {
            if cfg.sigma_px == 0.0 {
                return *truth;
            }
            let noise = Normal::new(0.0, cfg.sigma_px).expect("sigma validated");
            let mut out = *truth;
            for i in 0..4 {
                if truth.visible[i] {
                    out.coords[2 * i] += noise.sample(rng);
                    out.coords[2 * i + 1] += noise.sample(rng);
                }
            }
            out
        }
        PerceptionKind::Featuremap => {
            if truth.n_visible() == 0 {
                return *truth;
            }
            let codec = cfg.codec(cam);
            let mut maps = codec.encode(truth);
            if cfg.map_noise > 0.0 {
                let noise = Normal::new(0.0, cfg.map_noise).expect("map_noise validated");
                for (i, map) in maps.maps.iter_mut().enumerate() {
                    if !truth.visible[i] {
                        continue;
                    }
                    for x in map.iter_mut() {
                        *x = (*x + noise.sample(rng)).clamp(0.0, 1.0);
                    }
                }
            }
            let decoded = codec.decode(&maps);
            let mut out = *truth;
            for i in truth.visible_indices() {
                let (u, v) = decoded.corner(i);
                out.set_corner(i, u, v);
            }
            out
        }
    }
}
