//! Coupled longitudinal control: throttle and brake from predicted steering
//! and current speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("invalid control config: {0}")]
    Config(String),
    #[error("non-finite control input: {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Speed limit `v_l`, km/h.
    pub speed_limit_kmh: f64,
    /// Steering limit `delta`, in the same unit as the steering input.
    pub steering_limit: f64,
    /// Aggressiveness `tau` in `[0, 1]`.
    pub tau: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            speed_limit_kmh: crate::presets::DEPLOY_SPEED_LIMIT_KMH,
            steering_limit: 1.0,
            tau: 1.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.speed_limit_kmh > 0.0) || !self.speed_limit_kmh.is_finite() {
            return Err(ControlError::Config(format!("speed limit {} must be > 0", self.speed_limit_kmh)));
        }
        if !(self.steering_limit > 0.0) || !self.steering_limit.is_finite() {
            return Err(ControlError::Config(format!("steering limit {} must be > 0", self.steering_limit)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(ControlError::Config(format!("tau {} outside [0, 1]", self.tau)));
        }
        Ok(())
    }
}

/// `xi = tau * ((v_l - v_a) / v_l - |theta| / delta)`, with `|theta|` capped
/// at `delta` and the result clamped to `[-1, 1]`.
pub fn coupled_control(theta: f64, speed_kmh: f64, cfg: &ControlConfig) -> Result<f64, ControlError> {
    cfg.validate()?;
    if !theta.is_finite() {
        return Err(ControlError::NonFinite("steering"));
    }
    if !speed_kmh.is_finite() {
        return Err(ControlError::NonFinite("speed"));
    }
    let v_l = cfg.speed_limit_kmh;
    let steer = theta.abs().min(cfg.steering_limit) / cfg.steering_limit;
    let xi = cfg.tau * ((v_l - speed_kmh) / v_l - steer);
    Ok(xi.clamp(-1.0, 1.0))
}

/// `(throttle, brake) = (max(xi, 0), max(-xi, 0))`.
pub fn split_command(xi: f64) -> (f64, f64) {
    (xi.max(0.0), (-xi).max(0.0))
}
