//! Demonstration data: manifests, segregation, zero-steering balancing and
//! the augmented training batch stream.

mod balance;
mod frames;
mod manifest;
mod stream;

pub use balance::{
    balance_zero_steer, split, steering_histogram, train_steps, validation_steps, zero_steer_count,
    BalanceConfig, STRATA,
};
pub use frames::{DiskFrames, FrameSource, MemoryFrames};
pub use manifest::{load_manifest, save_manifest, MANIFEST_HEADER};
pub(crate) use manifest::save_meta;
pub use stream::{validation_batches, Batch, BatchSource, BatchStream, RepeatBatches, TrainStreamConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgproc::{CameraSlot, ImgError};
use crate::presets::Behavior;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("manifest is missing column '{0}'")]
    MissingColumn(String),
    #[error("manifest: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sample at t={timestamp}s has no {slot:?} frame")]
    MissingFrame { timestamp: f64, slot: CameraSlot },
    #[error("frame '{frame}': {reason}")]
    Frame { frame: String, reason: String },
    #[error("image: {0}")]
    Image(#[from] ImgError),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// One timestamped demonstration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingSample {
    /// Seconds since the start of collection.
    pub timestamp: f64,
    /// Frame references, relative to the manifest directory.
    pub center: String,
    pub left: Option<String>,
    pub right: Option<String>,
    /// Normalized steering in `[-1, 1]`, positive to the right.
    pub steering: f32,
    pub throttle: f32,
    pub brake: f32,
    /// km/h.
    pub speed: f32,
}

impl DrivingSample {
    pub fn validate(&self) -> Result<(), String> {
        if self.center.is_empty() {
            return Err("center frame reference is empty".into());
        }
        if !(-1.0..=1.0).contains(&self.steering) {
            return Err(format!("steering {} outside [-1, 1]", self.steering));
        }
        if !(0.0..=1.0).contains(&self.throttle) {
            return Err(format!("throttle {} outside [0, 1]", self.throttle));
        }
        if !(0.0..=1.0).contains(&self.brake) {
            return Err(format!("brake {} outside [0, 1]", self.brake));
        }
        if !(self.speed >= 0.0) {
            return Err(format!("speed {} is negative", self.speed));
        }
        if !self.timestamp.is_finite() {
            return Err("timestamp is not finite".into());
        }
        Ok(())
    }
}

/// An ordered collection of demonstration samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<DrivingSample>,
    pub behavior: Option<Behavior>,
}

impl Dataset {
    pub fn new(samples: Vec<DrivingSample>, behavior: Option<Behavior>) -> Self {
        Self { samples, behavior }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn with_samples(&self, samples: Vec<DrivingSample>) -> Self {
        Self {
            samples,
            behavior: self.behavior,
        }
    }
}
