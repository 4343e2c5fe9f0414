//! Split, stream and train in one call, with per-behavior defaults.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{split, validation_batches, BalanceConfig, BatchStream, Dataset, FrameSource, TrainStreamConfig};
use crate::imgproc::{AugmentationProbabilities, PerspectiveShiftConfig};
use crate::nnet::{train, EpochStats, Model, NetSpec, NnError, TrainConfig};
use crate::presets::{Behavior, AUGMENTATION_LOOPS, BATCH_SIZE, LEARNING_RATE, SPLIT_RATIO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spec: NetSpec,
    pub split_ratio: f64,
    pub batch_size: usize,
    pub augmentation_loops: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub deletion_rate: f64,
    pub probabilities: AugmentationProbabilities,
    pub perspective: PerspectiveShiftConfig,
    pub seed: u64,
}

impl PipelineConfig {
    /// Preset values for `b`.
    pub fn for_behavior(b: Behavior) -> Self {
        let p = b.preset();
        Self {
            spec: NetSpec::default(),
            split_ratio: SPLIT_RATIO,
            batch_size: BATCH_SIZE,
            augmentation_loops: AUGMENTATION_LOOPS,
            epochs: p.epochs,
            learning_rate: LEARNING_RATE,
            deletion_rate: p.deletion_rate,
            probabilities: p.augmentation,
            perspective: PerspectiveShiftConfig::default(),
            seed: 0,
        }
    }

    pub fn stream(&self) -> TrainStreamConfig {
        TrainStreamConfig {
            batch_size: self.batch_size,
            augmentation_loops: self.augmentation_loops,
            probabilities: self.probabilities,
            balance: BalanceConfig::with_rate(self.deletion_rate),
            perspective: self.perspective,
            input_width: self.spec.input.width,
            input_height: self.spec.input.height,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub history: Vec<EpochStats>,
    pub train_samples: usize,
    pub validation_samples: usize,
    /// Wall-clock training time.
    pub seconds: f64,
}

/// Stratified split, augmented stream over the training part, and training
/// with validation on the held-out part.
pub fn train_pipeline(ds: &Dataset, frames: &dyn FrameSource, cfg: &PipelineConfig) -> Result<TrainedModel, NnError> {
    let clock = Instant::now();
    let (train_ds, val_ds) = split(ds, cfg.split_ratio, cfg.seed)?;
    let mut stream = BatchStream::new(&train_ds, frames, cfg.stream())?;
    let val = validation_batches(&val_ds, frames, cfg.batch_size, cfg.spec.input.width, cfg.spec.input.height)?;
    let tc = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
    };
    let out = train(&cfg.spec, &mut stream, &val, &tc)?;
    Ok(TrainedModel {
        model: Model::new(cfg.spec.clone(), out.params)?,
        history: out.history,
        train_samples: train_ds.len(),
        validation_samples: val_ds.len(),
        seconds: clock.elapsed().as_secs_f64(),
    })
}
