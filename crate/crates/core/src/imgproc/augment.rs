use serde::{Deserialize, Serialize};

use super::{
    adjust_brightness, apply_shadows, flip_horizontal, pan, tilt, CameraSlot, ImageU8, ImgError,
    PerspectiveShiftConfig, Side,
};
use crate::dataset::{DatasetError, DrivingSample, FrameSource};
use crate::rng::Rng;

/// Probability of applying each augmentation to a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationProbabilities {
    pub perspective: f64,
    pub shadows: f64,
    pub brightness: f64,
    pub flip: f64,
    pub pan: f64,
    pub tilt: f64,
}

impl AugmentationProbabilities {
    pub const SIMPLISTIC: Self = Self {
        perspective: 0.50,
        shadows: 0.30,
        brightness: 0.40,
        flip: 0.50,
        pan: 0.10,
        tilt: 0.05,
    };

    /// Flip disabled: mirroring a frame would move the vehicle into the
    /// opposite lane.
    pub const RIGOROUS: Self = Self {
        perspective: 0.50,
        shadows: 0.30,
        brightness: 0.40,
        flip: 0.00,
        pan: 0.10,
        tilt: 0.05,
    };

    /// Perspective shifts disabled: only the center camera is recorded.
    pub const COLLISION: Self = Self {
        perspective: 0.00,
        shadows: 0.30,
        brightness: 0.40,
        flip: 0.50,
        pan: 0.10,
        tilt: 0.05,
    };

    pub const NONE: Self = Self {
        perspective: 0.0,
        shadows: 0.0,
        brightness: 0.0,
        flip: 0.0,
        pan: 0.0,
        tilt: 0.0,
    };

    pub fn validate(&self) -> Result<(), ImgError> {
        let all = [
            ("perspective", self.perspective),
            ("shadows", self.shadows),
            ("brightness", self.brightness),
            ("flip", self.flip),
            ("pan", self.pan),
            ("tilt", self.tilt),
        ];
        for (name, p) in all {
            if !(0.0..=1.0).contains(&p) {
                return Err(ImgError::OutOfRange(format!("{name} probability {p}")));
            }
        }
        Ok(())
    }
}

/// Run the augmentation chain on one demonstration sample.
///
/// Order: perspective shift (left or right with equal odds), shadows,
/// brightness, flip (center frames only), pan, tilt. Each stage is gated by
/// its own `U(0,1)` draw against its probability.
pub fn augment_sample(
    sample: &DrivingSample,
    probs: &AugmentationProbabilities,
    cfg: &PerspectiveShiftConfig,
    frames: &dyn FrameSource,
    rng: &mut Rng,
) -> Result<(ImageU8, f32), DatasetError> {
    let mut steering = sample.steering;
    let mut slot = CameraSlot::Center;

    let shift = rng.gate(probs.perspective);
    let pick_left = rng.unit() < 0.5;
    let mut img = if shift {
        let (side, frame_ref, cam) = if pick_left {
            (Side::Left, sample.left.as_deref(), CameraSlot::Left)
        } else {
            (Side::Right, sample.right.as_deref(), CameraSlot::Right)
        };
        let frame_ref = frame_ref.ok_or(DatasetError::MissingFrame {
            timestamp: sample.timestamp,
            slot: cam,
        })?;
        steering = cfg.correct_normalized(steering, side)?;
        slot = cam;
        (*frames.load(frame_ref)?).clone()
    } else {
        (*frames.load(&sample.center)?).clone()
    };

    if rng.gate(probs.shadows) {
        img = apply_shadows(&img, rng);
    }
    if rng.gate(probs.brightness) {
        let beta = rng.uniform(-100.0, 100.0).round() as i32;
        img = adjust_brightness(&img, beta);
    }
    // A shifted frame is a synthetic side view and is never mirrored.
    if rng.gate(probs.flip) && slot == CameraSlot::Center {
        let (f, s) = flip_horizontal(&img, steering, slot)?;
        img = f;
        steering = s;
    }
    if rng.gate(probs.pan) {
        let tx = rng.uniform(-0.05, 0.05);
        let ty = rng.uniform(-0.05, 0.05);
        img = pan(&img, tx, ty);
    }
    if rng.gate(probs.tilt) {
        img = tilt(&img, rng.uniform(-1.0, 1.0));
    }
    Ok((img, steering.clamp(-1.0, 1.0)))
}
