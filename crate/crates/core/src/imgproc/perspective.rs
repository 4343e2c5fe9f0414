use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::ImgError;

/// Which side camera stands in for the center camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Geometry of the three-camera perspective shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveShiftConfig {
    /// Distance ahead at which the recovered trajectory rejoins the path.
    pub recovery_distance_m: f64,
    /// Lateral distance between the center camera and either side camera.
    pub inter_camera_distance_m: f64,
    /// Physical steering angle corresponding to a normalized label of 1.
    pub max_steering_rad: f64,
}

impl Default for PerspectiveShiftConfig {
    fn default() -> Self {
        Self {
            recovery_distance_m: 10.0,
            inter_camera_distance_m: 0.95,
            max_steering_rad: 25f64.to_radians(),
        }
    }
}

impl PerspectiveShiftConfig {
    pub fn validate(&self) -> Result<(), ImgError> {
        if !(self.recovery_distance_m > 0.0) || !(self.inter_camera_distance_m > 0.0) {
            return Err(ImgError::OutOfRange(
                "recovery and inter-camera distances must be positive".into(),
            ));
        }
        if !(self.max_steering_rad > 0.0 && self.max_steering_rad < FRAC_PI_2) {
            return Err(ImgError::OutOfRange("max steering must be in (0, pi/2)".into()));
        }
        Ok(())
    }

    /// Ratio of inter-camera distance to recovery distance.
    pub fn gamma(&self) -> f64 {
        self.inter_camera_distance_m / self.recovery_distance_m
    }

    /// Correct a normalized steering label for a side-camera frame, clamping
    /// the result back into `[-1, 1]`.
    pub fn correct_normalized(&self, steering: f32, side: Side) -> Result<f32, ImgError> {
        let theta = steering as f64 * self.max_steering_rad;
        let corrected = perspective_correction(theta, self.gamma(), side)?;
        Ok(((corrected / self.max_steering_rad) as f32).clamp(-1.0, 1.0))
    }
}

/// Steering correction for a side-camera frame.
///
/// A left-camera frame gets `theta + delta`, a right-camera frame
/// `theta - phi`, with
///
/// ```text
/// delta = atan(gamma / (1 + tan^2 theta + gamma tan theta))
/// phi   = atan(gamma / (1 + tan^2 theta - gamma tan theta))
/// ```
///
/// Positive steering turns right.
pub fn perspective_correction(theta: f64, gamma: f64, side: Side) -> Result<f64, ImgError> {
    if !theta.is_finite() {
        return Err(ImgError::NonFinite("theta"));
    }
    if !gamma.is_finite() {
        return Err(ImgError::NonFinite("gamma"));
    }
    if gamma < 0.0 {
        return Err(ImgError::OutOfRange(format!("gamma {gamma} < 0")));
    }
    if theta.abs() >= FRAC_PI_2 {
        return Err(ImgError::OutOfRange(format!("|theta| {theta} >= pi/2")));
    }
    let t = theta.tan();
    Ok(match side {
        Side::Left => theta + (gamma / (1.0 + t * t + gamma * t)).atan(),
        Side::Right => theta - (gamma / (1.0 + t * t - gamma * t)).atan(),
    })
}
