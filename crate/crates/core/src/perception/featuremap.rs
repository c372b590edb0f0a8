//! Corner heatmaps: Gaussian label encoding and argmax decoding.

use serde::{Deserialize, Serialize};

use crate::geometry::FeatureVec;

/// How a winning bin index is mapped back to pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeRescale {
    /// Bin center, `bin_width * i + bin_width / 2`.
    #[default]
    BinCenter,
    /// Stretch bin indices onto the pixel endpoints, `i * (size - 1) / (n - 1)`.
    Endpoint,
}

/// One `map_size x map_size` grid per corner, indexed `[i * map_size + j]`
/// where `i` is the horizontal (u) bin and `j` the vertical (v) bin.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMapSet {
    pub map_size: usize,
    pub maps: [Vec<f64>; 4],
}

impl FeatureMapSet {
    pub fn get(&self, corner: usize, i: usize, j: usize) -> f64 {
        self.maps[corner][i * self.map_size + j]
    }

    /// Row-major argmax; the first maximum wins ties.
    pub fn argmax(&self, corner: usize) -> (usize, usize) {
        let map = &self.maps[corner];
        let mut best = 0;
        for (k, &value) in map.iter().enumerate() {
            if value > map[best] {
                best = k;
            }
        }
        (best / self.map_size, best % self.map_size)
    }
}

/// Encoder/decoder pair between pixel corners and heatmaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureMapCodec {
    pub map_size: usize,
    pub width: u32,
    pub height: u32,
    pub sigma_bins: f64,
    pub rescale: DecodeRescale,
}

impl FeatureMapCodec {
    pub fn new(map_size: usize, width: u32, height: u32, sigma_bins: f64) -> Self {
        FeatureMapCodec {
            map_size,
            width,
            height,
            sigma_bins,
            rescale: DecodeRescale::BinCenter,
        }
    }

    fn bin_width(&self) -> (f64, f64) {
        let n = self.map_size as f64;
        (self.width as f64 / n, self.height as f64 / n)
    }

    /// Encodes every corner; coordinates are first clamped into the image.
    pub fn encode(&self, fv: &FeatureVec) -> FeatureMapSet {
        let n = self.map_size;
        let (bw_u, bw_v) = self.bin_width();
        let two_var = 2.0 * self.sigma_bins * self.sigma_bins;
        let maps = std::array::from_fn(|corner| {
            let (u, v) = fv.corner(corner);
            let u = u.clamp(0.0, (self.width - 1) as f64);
            let v = v.clamp(0.0, (self.height - 1) as f64);
            // Corner position in bin-index units (bin centers sit on integers).
            let mu = u / bw_u - 0.5;
            let mv = v / bw_v - 0.5;
            let mut map = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let d2 = (i as f64 - mu).powi(2) + (j as f64 - mv).powi(2);
                    map.push((-d2 / two_var).exp());
                }
            }
            map
        });
        FeatureMapSet { map_size: n, maps }
    }

    /// Argmax decode; all corners come back marked visible.
    pub fn decode(&self, fm: &FeatureMapSet) -> FeatureVec {
        let mut fv = FeatureVec::all_visible([0.0; 8]);
        for corner in 0..4 {
            let (i, j) = fm.argmax(corner);
            let (u, v) = self.bin_to_pixel(i, j);
            fv.set_corner(corner, u, v);
        }
        fv
    }

    pub fn bin_to_pixel(&self, i: usize, j: usize) -> (f64, f64) {
        match self.rescale {
            DecodeRescale::BinCenter => {
                let (bw_u, bw_v) = self.bin_width();
                (bw_u * i as f64 + bw_u / 2.0, bw_v * j as f64 + bw_v / 2.0)
            }
            DecodeRescale::Endpoint => {
                let last = (self.map_size - 1) as f64;
                (
                    i as f64 * (self.width - 1) as f64 / last,
                    j as f64 * (self.height - 1) as f64 / last,
                )
            }
        }
    }
}

/// Gaussian heatmap encoding of `fv` on a 160x160 image.
pub fn encode_featuremaps(fv: &FeatureVec, map_size: usize, sigma_bins: f64) -> FeatureMapSet {
    FeatureMapCodec::new(map_size, 160, 160, sigma_bins).encode(fv)
}

/// Bin-center argmax decoding of `fm` on a 160x160 image.
pub fn decode_featuremaps(fm: &FeatureMapSet) -> FeatureVec {
    FeatureMapCodec::new(fm.map_size, 160, 160, 1.0).decode(fm)
}
