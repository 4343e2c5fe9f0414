use serde::{Deserialize, Serialize};

use super::NnError;

/// Input raster shape, height x width x channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

/// Square convolution with valid padding, followed by ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: usize,
    pub stride: usize,
    pub filters: usize,
}

/// Fully connected layer. Hidden layers use ReLU then inverted dropout with
/// probability `dropout`; the last layer is linear and takes no dropout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcSpec {
    pub units: usize,
    pub dropout: f32,
}

/// Network architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input: InputShape,
    pub conv: Vec<ConvSpec>,
    pub fc: Vec<FcSpec>,
}

/// Resolved geometry of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerShape {
    Conv {
        in_h: usize,
        in_w: usize,
        in_c: usize,
        kernel: usize,
        stride: usize,
        out_h: usize,
        out_w: usize,
        out_c: usize,
    },
    Fc {
        inputs: usize,
        outputs: usize,
        relu: bool,
    },
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        match *self {
            LayerShape::Conv {
                in_c, kernel, out_c, ..
            } => out_c * kernel * kernel * in_c,
            LayerShape::Fc {
                inputs, outputs, ..
            } => outputs * inputs,
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerShape::Conv { out_c, .. } => out_c,
            LayerShape::Fc { outputs, .. } => outputs,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            LayerShape::Conv {
                in_h, in_w, in_c, ..
            } => in_h * in_w * in_c,
            LayerShape::Fc { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerShape::Conv {
                out_h, out_w, out_c, ..
            } => out_h * out_w * out_c,
            LayerShape::Fc { outputs, .. } => outputs,
        }
    }

    /// Glorot fans: receptive field times input and output channels.
    pub fn fans(&self) -> (usize, usize) {
        match *self {
            LayerShape::Conv {
                in_c, kernel, out_c, ..
            } => (kernel * kernel * in_c, kernel * kernel * out_c),
            LayerShape::Fc {
                inputs, outputs, ..
            } => (inputs, outputs),
        }
    }
}

/// Output size of a valid convolution, `floor((n - k) / s) + 1`.
pub fn conv_output_dim(n: usize, kernel: usize, stride: usize) -> Result<usize, NnError> {
    if kernel == 0 || stride == 0 {
        return Err(NnError::Spec("kernel and stride must be >= 1".into()));
    }
    if kernel > n {
        return Err(NnError::Spec(format!("kernel {kernel} larger than input {n}")));
    }
    Ok((n - kernel) / stride + 1)
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            input: InputShape {
                height: 64,
                width: 64,
                channels: 3,
            },
            conv: vec![
                ConvSpec { kernel: 11, stride: 5, filters: 8 },
                ConvSpec { kernel: 5, stride: 2, filters: 16 },
                ConvSpec { kernel: 3, stride: 2, filters: 24 },
            ],
            fc: vec![
                FcSpec { units: 64, dropout: 0.25 },
                FcSpec { units: 32, dropout: 0.25 },
                FcSpec { units: 1, dropout: 0.0 },
            ],
        }
    }
}

impl NetSpec {
    /// Layer geometry in evaluation order; fails if the spec is unusable.
    pub fn layers(&self) -> Result<Vec<LayerShape>, NnError> {
        let InputShape {
            height,
            width,
            channels,
        } = self.input;
        if height == 0 || width == 0 || channels == 0 {
            return Err(NnError::Spec("input dimensions must be >= 1".into()));
        }
        let mut out = Vec::with_capacity(self.conv.len() + self.fc.len());
        let (mut h, mut w, mut c) = (height, width, channels);
        for conv in &self.conv {
            if conv.filters == 0 {
                return Err(NnError::Spec("conv layer with zero filters".into()));
            }
            let out_h = conv_output_dim(h, conv.kernel, conv.stride)?;
            let out_w = conv_output_dim(w, conv.kernel, conv.stride)?;
            out.push(LayerShape::Conv {
                in_h: h,
                in_w: w,
                in_c: c,
                kernel: conv.kernel,
                stride: conv.stride,
                out_h,
                out_w,
                out_c: conv.filters,
            });
            (h, w, c) = (out_h, out_w, conv.filters);
        }
        let Some(last) = self.fc.last() else {
            return Err(NnError::Spec("at least one fc layer is required".into()));
        };
        if last.units != 1 {
            return Err(NnError::Spec(format!("output layer has {} units, expected 1", last.units)));
        }
        if last.dropout != 0.0 {
            return Err(NnError::Spec("output layer cannot take dropout".into()));
        }
        let mut inputs = h * w * c;
        for (i, fc) in self.fc.iter().enumerate() {
            if fc.units == 0 {
                return Err(NnError::Spec("fc layer with zero units".into()));
            }
            if !(0.0..1.0).contains(&fc.dropout) {
                return Err(NnError::Spec(format!("dropout {} outside [0, 1)", fc.dropout)));
            }
            out.push(LayerShape::Fc {
                inputs,
                outputs: fc.units,
                relu: i + 1 < self.fc.len(),
            });
            inputs = fc.units;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.layers().map(|_| ())
    }

    pub fn input_len(&self) -> usize {
        self.input.height * self.input.width * self.input.channels
    }

    /// Dropout probability of layer `index` (0 for conv and output layers).
    pub fn dropout(&self, index: usize) -> f32 {
        index
            .checked_sub(self.conv.len())
            .map_or(0.0, |i| self.fc[i].dropout)
    }
}

/// Trainable parameter count: weights plus biases over all layers.
pub fn param_count(spec: &NetSpec) -> Result<usize, NnError> {
    Ok(spec
        .layers()?
        .iter()
        .map(|l| l.weight_len() + l.bias_len())
        .sum())
}
