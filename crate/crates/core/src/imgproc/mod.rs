//! Image transforms: the six training augmentations with their steering-label
//! corrections, and the two-step resize + normalize preprocessing.

mod augment;
mod geometric;
mod image;
mod perspective;
mod photometric;

pub use self::augment::{augment_sample, AugmentationProbabilities};
pub use self::geometric::{
    crop_resize, flip_horizontal, max_axis_aligned_crop, pan, resize, tilt,
};
pub use self::image::{GrayU8, ImageF32, ImageU8};
pub use self::perspective::{perspective_correction, PerspectiveShiftConfig, Side};
pub use self::photometric::{
    adjust_brightness, apply_shadows, draw_shadow_quads, shadow_quads, SHADOW_DARKNESS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default camera frame size.
pub const FRAME_WIDTH: usize = 320;
pub const FRAME_HEIGHT: usize = 160;

/// Default network input size.
pub const INPUT_WIDTH: usize = 64;
pub const INPUT_HEIGHT: usize = 64;

#[derive(Debug, Error)]
pub enum ImgError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("side-camera frames cannot be flipped (viewpoints would interchange)")]
    SideFrameFlip,
    #[error("image codec: {0}")]
    Codec(String),
}

/// Which onboard camera produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraSlot {
    Center,
    Left,
    Right,
}

impl CameraSlot {
    pub fn is_side(self) -> bool {
        !matches!(self, CameraSlot::Center)
    }
}

/// Deployment and training preprocessing: bilinear resize, then map each
/// intensity `v` to `v / 255 - 0.5`.
pub fn preprocess(img: &ImageU8, out_w: usize, out_h: usize) -> ImageF32 {
    normalize_center(&resize(img, out_w, out_h))
}

/// `v -> v / 255 - 0.5` per value; output lies in `[-0.5, 0.5]`.
pub fn normalize_center(img: &ImageU8) -> ImageF32 {
    let data = img
        .data()
        .iter()
        .map(|&v| v as f32 / 255.0 - 0.5)
        .collect();
    ImageF32::from_raw(img.width(), img.height(), 3, data).expect("length preserved")
}
