use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::forward::{backward, forward, mse_grad, mse_loss, Mode};
use super::params::NetParams;
use super::spec::NetSpec;
use super::NnError;
use crate::dataset::{Batch, BatchSource};
use crate::presets::{BATCH_SIZE, LEARNING_RATE};
use crate::rng::Rng;

const DROPOUT_STREAM: u64 = 0xD20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds weight initialisation and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: LEARNING_RATE,
            epochs: 5,
            batch_size: BATCH_SIZE,
            seed: 0,
        }
    }
}

/// Loss and timing for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training-batch loss (train mode, dropout active).
    pub train_loss: f32,
    /// Sample-weighted validation loss in eval mode; `None` without validation data.
    pub val_loss: Option<f32>,
    pub steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetParams,
    pub history: Vec<EpochStats>,
}

/// Mean loss over `batches` in eval mode, weighted by batch size.
pub fn evaluate(spec: &NetSpec, params: &NetParams, batches: &[Batch]) -> Result<f32, NnError> {
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let mut rng = Rng::seed_from(0);
    for b in batches {
        let (pred, _) = forward(spec, params, &b.inputs, Mode::Eval, &mut rng)?;
        sum += mse_loss(&pred, &b.labels)? as f64 * pred.len() as f64;
        count += pred.len();
    }
    if count == 0 {
        return Err(NnError::EmptyBatch);
    }
    Ok((sum / count as f64) as f32)
}

/// Train from Glorot initialisation; see [`train_from`].
pub fn train(
    spec: &NetSpec,
    stream: &mut dyn BatchSource,
    validation: &[Batch],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    let params = NetParams::init(spec, cfg.seed)?;
    train_from(spec, params, stream, validation, cfg)
}

/// Run `cfg.epochs` epochs of `stream.steps_per_epoch()` Adam steps on MSE.
/// Validation loss is computed after each epoch. A non-finite loss or
/// gradient aborts with the epoch and step where it appeared.
pub fn train_from(
    spec: &NetSpec,
    mut params: NetParams,
    stream: &mut dyn BatchSource,
    validation: &[Batch],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NnError> {
    params.check_shape(spec)?;
    if cfg.batch_size == 0 || !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(NnError::Spec("batch size must be >= 1 and learning rate finite and >= 0".into()));
    }
    let mut adam = Adam::new(&params, cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut global_step = 0u64;
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let steps = stream.steps_per_epoch();
        let mut loss_sum = 0.0f64;
        for step in 1..=steps {
            let batch = stream.next_batch()?;
            let mut rng = Rng::derive(cfg.seed, &[DROPOUT_STREAM, global_step]);
            global_step += 1;
            let (pred, cache) = forward(spec, &params, &batch.inputs, Mode::Train, &mut rng)?;
            let loss = mse_loss(&pred, &batch.labels)?;
            if !loss.is_finite() {
                return Err(NnError::NonFinite(format!("loss {loss} at epoch {epoch}, step {step}")));
            }
            let grads = backward(spec, &params, &cache, &mse_grad(&pred, &batch.labels)?)?;
            adam.step(&mut params, &grads).map_err(|e| match e {
                NnError::NonFinite(what) => NnError::NonFinite(format!("{what} at epoch {epoch}, step {step}")),
                other => other,
            })?;
            if !params.all_finite() {
                return Err(NnError::NonFinite(format!("parameters after update at epoch {epoch}, step {step}")));
            }
            loss_sum += loss as f64;
        }
        let val_loss = if validation.is_empty() {
            None
        } else {
            let v = evaluate(spec, &params, validation)?;
            if !v.is_finite() {
                return Err(NnError::NonFinite(format!("validation loss {v} at epoch {epoch}")));
            }
            Some(v)
        };
        let stats = EpochStats {
            epoch,
            train_loss: if steps == 0 { 0.0 } else { (loss_sum / steps as f64) as f32 },
            val_loss,
            steps,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {}/{}: train loss {:.5}, val loss {}, {:.1}s",
            epoch,
            cfg.epochs,
            stats.train_loss,
            val_loss.map_or("-".to_string(), |v| format!("{v:.5}")),
            stats.seconds
        );
        history.push(stats);
    }
    Ok(TrainOutcome { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RepeatBatches;
    use crate::nnet::spec::{ConvSpec, FcSpec, InputShape};
    use crate::nnet::tensor::Tensor;

    fn small_spec() -> NetSpec {
        NetSpec {
            input: InputShape { height: 8, width: 8, channels: 3 },
            conv: vec![ConvSpec { kernel: 3, stride: 2, filters: 4 }],
            fc: vec![FcSpec { units: 8, dropout: 0.0 }, FcSpec { units: 1, dropout: 0.0 }],
        }
    }

    fn batch(seed: u64, label: f32) -> Batch {
        let mut rng = Rng::seed_from(seed);
        Batch {
            inputs: Tensor::new(vec![1, 8, 8, 3], (0..192).map(|_| rng.uniform(-0.5, 0.5) as f32).collect()).unwrap(),
            labels: vec![label],
        }
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let spec = small_spec();
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, batch_size: 1, seed: 1 };
        let b = batch(1, 0.4);
        let mut stream = RepeatBatches::new(vec![b.clone()], 5);
        let out = train(&spec, &mut stream, &[b], &cfg).unwrap();
        assert_eq!(out.params, NetParams::init(&spec, 1).unwrap());
        let losses: Vec<f32> = out.history.iter().map(|h| h.val_loss.unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn overfits_single_sample() {
        let spec = small_spec();
        let cfg = TrainConfig { learning_rate: 1e-3, epochs: 1, batch_size: 1, seed: 2 };
        let b = batch(3, 0.5);
        let mut stream = RepeatBatches::new(vec![b.clone()], 200);
        let out = train(&spec, &mut stream, &[], &cfg).unwrap();
        let loss = evaluate(&spec, &out.params, &[b]).unwrap();
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn deterministic_weights() {
        let spec = NetSpec { fc: vec![FcSpec { units: 8, dropout: 0.25 }, FcSpec { units: 1, dropout: 0.0 }], ..small_spec() };
        let cfg = TrainConfig { learning_rate: 1e-3, epochs: 2, batch_size: 1, seed: 4 };
        let run = || {
            let mut s = RepeatBatches::new(vec![batch(5, 0.1), batch(6, -0.2)], 10);
            train(&spec, &mut s, &[], &cfg).unwrap().params.checksum()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_label_aborts_with_location() {
        let spec = small_spec();
        let cfg = TrainConfig { learning_rate: 1e-3, epochs: 1, batch_size: 1, seed: 0 };
        let mut stream = RepeatBatches::new(vec![batch(1, f32::NAN)], 3);
        match train(&spec, &mut stream, &[], &cfg) {
            Err(NnError::NonFinite(msg)) => assert!(msg.contains("epoch 1, step 1"), "{msg}"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn diverging_weights_abort() {
        let spec = small_spec();
        let cfg = TrainConfig { learning_rate: 1e38, epochs: 2, batch_size: 1, seed: 0 };
        let b = batch(2, 0.5);
        let mut stream = RepeatBatches::new(vec![b.clone()], 4);
        assert!(matches!(train(&spec, &mut stream, std::slice::from_ref(&b), &cfg), Err(NnError::NonFinite(_))));
        let inf = TrainConfig { learning_rate: f32::INFINITY, ..cfg };
        let mut stream = RepeatBatches::new(vec![b], 4);
        assert!(matches!(train(&spec, &mut stream, &[], &inf), Err(NnError::Spec(_))));
    }
}
