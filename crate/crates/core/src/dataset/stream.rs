use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balance::{train_steps, validation_steps, BalanceConfig};
use super::{Dataset, DatasetError, FrameSource};
use crate::imgproc::{
    augment_sample, preprocess, AugmentationProbabilities, PerspectiveShiftConfig, INPUT_HEIGHT,
    INPUT_WIDTH,
};
use crate::nnet::Tensor;
use crate::presets::{AUGMENTATION_LOOPS, BATCH_SIZE};
use crate::rng::Rng;

const PASS_STREAM: u64 = 0xA55;
const AUG_STREAM: u64 = 0xA06;

/// Settings of the augmented training stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStreamConfig {
    pub batch_size: usize,
    /// Augmentation loops per epoch (each sample is seen about this often).
    pub augmentation_loops: usize,
    pub probabilities: AugmentationProbabilities,
    pub balance: BalanceConfig,
    pub perspective: PerspectiveShiftConfig,
    pub input_width: usize,
    pub input_height: usize,
    pub seed: u64,
}

impl Default for TrainStreamConfig {
    fn default() -> Self {
        Self {
            batch_size: BATCH_SIZE,
            augmentation_loops: AUGMENTATION_LOOPS,
            probabilities: AugmentationProbabilities::NONE,
            balance: BalanceConfig::default(),
            perspective: PerspectiveShiftConfig::default(),
            input_width: INPUT_WIDTH,
            input_height: INPUT_HEIGHT,
            seed: 0,
        }
    }
}

/// Preprocessed inputs `[m, h, w, 3]` with their steering labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Tensor,
    pub labels: Vec<f32>,
}

/// Endless supply of training batches with a fixed epoch length.
pub trait BatchSource {
    fn steps_per_epoch(&self) -> usize;
    fn next_batch(&mut self) -> Result<Batch, DatasetError>;
}

/// Augmented training batches.
///
/// Samples are consumed pass by pass. Each pass deletes a fresh random subset
/// of zero-steer samples and reshuffles what remains. The `j`-th sample
/// emitted overall is augmented with its own generator, so output does not
/// depend on how many threads run the augmentation.
pub struct BatchStream<'a> {
    ds: &'a Dataset,
    frames: &'a dyn FrameSource,
    cfg: TrainStreamConfig,
    steps: usize,
    pass: u64,
    order: Vec<usize>,
    cursor: usize,
    emitted: u64,
}

impl<'a> BatchStream<'a> {
    pub fn new(ds: &'a Dataset, frames: &'a dyn FrameSource, cfg: TrainStreamConfig) -> Result<Self, DatasetError> {
        if ds.is_empty() {
            return Err(DatasetError::Invalid("training set is empty".into()));
        }
        if cfg.batch_size == 0 || cfg.augmentation_loops == 0 {
            return Err(DatasetError::Invalid("batch size and augmentation loops must be >= 1".into()));
        }
        cfg.balance.validate()?;
        cfg.probabilities.validate()?;
        cfg.perspective.validate()?;
        Ok(Self {
            ds,
            frames,
            steps: train_steps(ds.len(), cfg.batch_size, cfg.augmentation_loops),
            cfg,
            pass: 0,
            order: Vec::new(),
            cursor: 0,
            emitted: 0,
        })
    }

    fn next_pass(&mut self) -> Result<(), DatasetError> {
        let mut rng = Rng::derive(self.cfg.seed, &[PASS_STREAM, self.pass]);
        self.pass += 1;
        let zero = self.cfg.balance.zero_epsilon;
        let zeros: Vec<usize> = (0..self.ds.len())
            .filter(|&i| self.ds.samples[i].steering.abs() <= zero)
            .collect();
        let mut keep = vec![true; self.ds.len()];
        for k in rng.sample_indices(zeros.len(), self.cfg.balance.deletions(zeros.len())) {
            keep[zeros[k]] = false;
        }
        self.order = (0..self.ds.len()).filter(|&i| keep[i]).collect();
        if self.order.is_empty() {
            return Err(DatasetError::Invalid("balancing removed every sample".into()));
        }
        rng.shuffle(&mut self.order);
        self.cursor = 0;
        Ok(())
    }
}

impl BatchSource for BatchStream<'_> {
    fn steps_per_epoch(&self) -> usize {
        self.steps
    }

    fn next_batch(&mut self) -> Result<Batch, DatasetError> {
        let mut picks = Vec::with_capacity(self.cfg.batch_size);
        while picks.len() < self.cfg.batch_size {
            if self.cursor >= self.order.len() {
                self.next_pass()?;
            }
            picks.push((self.order[self.cursor], self.emitted));
            self.cursor += 1;
            self.emitted += 1;
        }
        let cfg = &self.cfg;
        let items: Vec<(Vec<f32>, f32)> = picks
            .par_iter()
            .map(|&(i, j)| {
                let mut rng = Rng::derive(cfg.seed, &[AUG_STREAM, j]);
                let (img, steering) =
                    augment_sample(&self.ds.samples[i], &cfg.probabilities, &cfg.perspective, self.frames, &mut rng)?;
                Ok((preprocess(&img, cfg.input_width, cfg.input_height).into_raw(), steering))
            })
            .collect::<Result<_, DatasetError>>()?;
        assemble(items, cfg.input_width, cfg.input_height)
    }
}

fn assemble(items: Vec<(Vec<f32>, f32)>, w: usize, h: usize) -> Result<Batch, DatasetError> {
    let m = items.len();
    let mut data = Vec::with_capacity(m * w * h * 3);
    let mut labels = Vec::with_capacity(m);
    for (x, y) in items {
        data.extend_from_slice(&x);
        labels.push(y);
    }
    let inputs = Tensor::new(vec![m, h, w, 3], data).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    Ok(Batch { inputs, labels })
}

/// Un-augmented center-frame batches covering `ds` once, in order; the last
/// batch may be short. Yields `validation_steps(n, m)` batches.
pub fn validation_batches(
    ds: &Dataset,
    frames: &dyn FrameSource,
    batch_size: usize,
    input_width: usize,
    input_height: usize,
) -> Result<Vec<Batch>, DatasetError> {
    if ds.is_empty() || batch_size == 0 {
        return Ok(Vec::new());
    }
    let batches: Vec<Batch> = ds
        .samples
        .chunks(batch_size)
        .map(|chunk| {
            let items = chunk
                .par_iter()
                .map(|s| {
                    let img = frames.load(&s.center)?;
                    Ok((preprocess(&img, input_width, input_height).into_raw(), s.steering))
                })
                .collect::<Result<Vec<_>, DatasetError>>()?;
            assemble(items, input_width, input_height)
        })
        .collect::<Result<_, _>>()?;
    debug_assert_eq!(batches.len(), validation_steps(ds.len(), batch_size));
    Ok(batches)
}

/// Cycles through a fixed list of batches.
#[derive(Debug, Clone)]
pub struct RepeatBatches {
    batches: Vec<Batch>,
    steps: usize,
    next: usize,
}

impl RepeatBatches {
    pub fn new(batches: Vec<Batch>, steps_per_epoch: usize) -> Self {
        assert!(!batches.is_empty(), "RepeatBatches needs at least one batch");
        Self {
            batches,
            steps: steps_per_epoch,
            next: 0,
        }
    }
}

impl BatchSource for RepeatBatches {
    fn steps_per_epoch(&self) -> usize {
        self.steps
    }

    fn next_batch(&mut self) -> Result<Batch, DatasetError> {
        let b = self.batches[self.next].clone();
        self.next = (self.next + 1) % self.batches.len();
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DrivingSample, MemoryFrames};
    use crate::imgproc::ImageU8;

    fn fixture(n: usize) -> (Dataset, MemoryFrames) {
        let mut frames = MemoryFrames::default();
        let mut samples = Vec::new();
        for i in 0..n {
            let shade = (i * 40 % 256) as u8;
            for slot in ["c", "l", "r"] {
                frames.insert(format!("{slot}{i}.png"), ImageU8::filled(32, 16, [shade, 100, 200]));
            }
            samples.push(DrivingSample {
                timestamp: i as f64,
                center: format!("c{i}.png"),
                left: Some(format!("l{i}.png")),
                right: Some(format!("r{i}.png")),
                steering: if i % 2 == 0 { 0.0 } else { i as f32 / (2.0 * n as f32) },
                throttle: 0.5,
                brake: 0.0,
                speed: 20.0,
            });
        }
        (Dataset::new(samples, None), frames)
    }

    #[test]
    fn pass_through_reproduces_originals() {
        let (ds, frames) = fixture(5);
        let cfg = TrainStreamConfig {
            batch_size: 1,
            augmentation_loops: 1,
            input_width: 8,
            input_height: 8,
            ..TrainStreamConfig::default()
        };
        let mut stream = BatchStream::new(&ds, &frames, cfg).unwrap();
        assert_eq!(stream.steps_per_epoch(), 5);
        let mut seen: Vec<f64> = Vec::new();
        for _ in 0..5 {
            let b = stream.next_batch().unwrap();
            let idx = ds.samples.iter().position(|s| s.steering == b.labels[0] && {
                let img = frames.load(&s.center).unwrap();
                preprocess(&img, 8, 8).data() == b.inputs.item(0)
            });
            seen.push(ds.samples[idx.expect("batch matches a sample")].timestamp);
        }
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn seeded_stream_is_deterministic() {
        let (ds, frames) = fixture(12);
        let cfg = TrainStreamConfig {
            batch_size: 5,
            probabilities: AugmentationProbabilities::SIMPLISTIC,
            balance: BalanceConfig::with_rate(0.5),
            input_width: 8,
            input_height: 8,
            seed: 11,
            ..TrainStreamConfig::default()
        };
        let run = || {
            let mut s = BatchStream::new(&ds, &frames, cfg).unwrap();
            (0..6).map(|_| s.next_batch().unwrap()).collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.iter().flat_map(|b| &b.labels).all(|l| (-1.0..=1.0).contains(l)));
    }

    #[test]
    fn balancing_applies_per_pass() {
        let (ds, frames) = fixture(10);
        let cfg = TrainStreamConfig {
            batch_size: 1,
            augmentation_loops: 1,
            balance: BalanceConfig::with_rate(1.0),
            input_width: 4,
            input_height: 4,
            ..TrainStreamConfig::default()
        };
        let mut s = BatchStream::new(&ds, &frames, cfg).unwrap();
        for _ in 0..20 {
            assert_ne!(s.next_batch().unwrap().labels[0], 0.0);
        }
    }

    #[test]
    fn simplistic_epoch_length() {
        let (mut ds, frames) = fixture(1);
        ds.samples = vec![ds.samples[0].clone(); 9680];
        let s = BatchStream::new(&ds, &frames, TrainStreamConfig::default()).unwrap();
        assert_eq!(s.steps_per_epoch(), 2420);
    }

    #[test]
    fn missing_frame_names_sample() {
        let (mut ds, frames) = fixture(2);
        ds.samples[1].center = "gone.png".into();
        let cfg = TrainStreamConfig {
            batch_size: 2,
            input_width: 4,
            input_height: 4,
            ..TrainStreamConfig::default()
        };
        let err = BatchStream::new(&ds, &frames, cfg).unwrap().next_batch().unwrap_err();
        assert!(err.to_string().contains("gone.png"), "{err}");
    }

    #[test]
    fn validation_batches_cover_once() {
        let (ds, frames) = fixture(7);
        let v = validation_batches(&ds, &frames, 3, 4, 4).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[2].labels.len(), 1);
        let labels: Vec<f32> = v.iter().flat_map(|b| b.labels.clone()).collect();
        assert_eq!(labels, ds.samples.iter().map(|s| s.steering).collect::<Vec<_>>());
    }
}
