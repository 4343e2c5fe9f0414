//! Per-behavior hyperparameter presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::imgproc::AugmentationProbabilities;

/// The three cloned driving behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Simplistic,
    Rigorous,
    Collision,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Simplistic, Behavior::Rigorous, Behavior::Collision];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Simplistic => "simplistic",
            Behavior::Rigorous => "rigorous",
            Behavior::Collision => "collision",
        }
    }

    pub fn preset(self) -> Preset {
        match self {
            Behavior::Simplistic => Preset {
                deletion_rate: 0.7,
                augmentation: AugmentationProbabilities::SIMPLISTIC,
                epochs: 5,
                collection_laps: 10,
                bidirectional: true,
                cameras: 3,
            },
            Behavior::Rigorous => Preset {
                deletion_rate: 0.8,
                augmentation: AugmentationProbabilities::RIGOROUS,
                epochs: 10,
                collection_laps: 20,
                bidirectional: false,
                cameras: 3,
            },
            Behavior::Collision => Preset {
                deletion_rate: 0.8,
                augmentation: AugmentationProbabilities::COLLISION,
                epochs: 5,
                collection_laps: 20,
                bidirectional: false,
                cameras: 1,
            },
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simplistic" => Ok(Behavior::Simplistic),
            "rigorous" => Ok(Behavior::Rigorous),
            "collision" | "collision-avoidance" => Ok(Behavior::Collision),
            other => Err(format!("unknown behavior '{other}'")),
        }
    }
}

/// Values shared by every stage for one behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    /// Zero-steering deletion rate.
    pub deletion_rate: f64,
    pub augmentation: AugmentationProbabilities,
    pub epochs: usize,
    pub collection_laps: usize,
    /// Alternate lap direction during collection.
    pub bidirectional: bool,
    pub cameras: usize,
}

/// Training constants common to all behaviors.
pub const LEARNING_RATE: f32 = 1e-3;
pub const BATCH_SIZE: usize = 256;
pub const AUGMENTATION_LOOPS: usize = 64;
pub const SPLIT_RATIO: f64 = 0.8;
pub const COLLECTION_RATE_HZ: f64 = 1.5;
pub const TRAINING_SPEED_LIMIT_KMH: f64 = 30.0;
pub const DEPLOY_SPEED_LIMIT_KMH: f64 = 25.0;
