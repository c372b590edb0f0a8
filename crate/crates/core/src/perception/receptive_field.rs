//! Receptive field of a stack of convolution / pooling layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sliding-window layer: square kernel and stride, in input pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub kernel: usize,
    pub stride: usize,
}

impl ConvLayerSpec {
    pub fn new(kernel: usize, stride: usize) -> Result<Self> {
        if kernel == 0 || stride == 0 {
            return Err(Error::config("layer kernel and stride must be >= 1"));
        }
        Ok(ConvLayerSpec { kernel, stride })
    }
}

/// Side of the input region seen by one output unit.
///
/// Applies `r += (k - 1) * j; j *= s` from `r = j = 1`. An empty stack has
/// a receptive field of 1.
pub fn receptive_field(layers: &[ConvLayerSpec]) -> usize {
    fold(layers).0
}

/// Product of all strides, i.e. the output-to-input pixel jump.
pub fn cumulative_stride(layers: &[ConvLayerSpec]) -> usize {
    fold(layers).1
}

fn fold(layers: &[ConvLayerSpec]) -> (usize, usize) {
    layers.iter().fold((1, 1), |(rf, jump), l| {
        (rf + (l.kernel - 1) * jump, jump * l.stride)
    })
}

/// Parses whitespace-separated `kernel,stride` pairs, e.g. `"3,1 2,2 3,1"`.
pub fn parse_layers(spec: &str) -> Result<Vec<ConvLayerSpec>> {
    let layers = spec
        .split_whitespace()
        .map(|token| {
            let err = |message: &str| Error::LayerSpec {
                token: token.to_string(),
                message: message.to_string(),
            };
            let (k, s) = token
                .split_once(',')
                .ok_or_else(|| err("expected kernel,stride"))?;
            let kernel = k
                .trim()
                .parse()
                .map_err(|_| err("kernel is not a positive integer"))?;
            let stride = s
                .trim()
                .parse()
                .map_err(|_| err("stride is not a positive integer"))?;
            ConvLayerSpec::new(kernel, stride).map_err(|_| err("kernel and stride must be >= 1"))
        })
        .collect::<Result<Vec<_>>>()?;
    if layers.is_empty() {
        return Err(Error::LayerSpec {
            token: spec.to_string(),
            message: "no layers given".into(),
        });
    }
    Ok(layers)
}
