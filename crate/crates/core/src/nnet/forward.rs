use rayon::prelude::*;

use super::ops::{conv_backward, conv_forward, fc_backward, fc_forward};
use super::params::NetParams;
use super::spec::{LayerShape, NetSpec};
use super::tensor::Tensor;
use super::NnError;
use crate::rng::Rng;

/// Samples per gradient accumulation chunk. Chunks are summed in index
/// order, so gradients do not depend on the number of worker threads.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-sample activations kept for backward and activation maps.
#[derive(Debug, Clone)]
pub struct Cache {
    pub input: Tensor,
    /// `[sample][layer]`: output of each layer after activation and dropout.
    pub activations: Vec<Vec<Vec<f32>>>,
    /// `[sample][layer]`: dropout multipliers (`0` or `1 / (1 - p)`).
    pub masks: Vec<Vec<Option<Vec<f32>>>>,
}

fn is_relu(shape: &LayerShape) -> bool {
    match shape {
        LayerShape::Conv { .. } => true,
        LayerShape::Fc { relu, .. } => *relu,
    }
}

pub(crate) fn forward_sample(
    shapes: &[LayerShape],
    params: &NetParams,
    x: &[f32],
    masks: &[Option<Vec<f32>>],
) -> Vec<Vec<f32>> {
    let mut acts: Vec<Vec<f32>> = Vec::with_capacity(shapes.len());
    for (l, shape) in shapes.iter().enumerate() {
        let input = if l == 0 { x } else { &acts[l - 1] };
        let p = &params.layers[l];
        let mut out = vec![0.0; shape.output_len()];
        match shape {
            LayerShape::Conv { .. } => conv_forward(shape, input, &p.weights, &p.bias, true, &mut out),
            LayerShape::Fc { relu, .. } => fc_forward(input, &p.weights, &p.bias, *relu, &mut out),
        }
        if let Some(mask) = &masks[l] {
            for (o, m) in out.iter_mut().zip(mask) {
                *o *= m;
            }
        }
        acts.push(out);
    }
    acts
}

fn check_batch(spec: &NetSpec, batch: &Tensor) -> Result<(), NnError> {
    let i = spec.input;
    if batch.shape() != [batch.batch(), i.height, i.width, i.channels] || batch.batch() == 0 {
        return Err(NnError::Shape(format!(
            "batch shape {:?} does not match input [n, {}, {}, {}]",
            batch.shape(),
            i.height,
            i.width,
            i.channels
        )));
    }
    Ok(())
}

/// Forward a batch. Train mode draws inverted-dropout masks from `rng`;
/// eval mode leaves `rng` untouched.
pub fn forward(
    spec: &NetSpec,
    params: &NetParams,
    batch: &Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Vec<f32>, Cache), NnError> {
    let shapes = spec.layers()?;
    params.check_shape(spec)?;
    check_batch(spec, batch)?;
    let n = batch.batch();

    let masks: Vec<Vec<Option<Vec<f32>>>> = (0..n)
        .map(|_| {
            shapes
                .iter()
                .enumerate()
                .map(|(l, shape)| {
                    let p = spec.dropout(l);
                    (mode == Mode::Train && p > 0.0).then(|| {
                        let keep = 1.0 / (1.0 - p);
                        (0..shape.output_len())
                            .map(|_| if rng.unit() < p as f64 { 0.0 } else { keep })
                            .collect()
                    })
                })
                .collect()
        })
        .collect();

    let activations: Vec<Vec<Vec<f32>>> = (0..n)
        .into_par_iter()
        .map(|i| forward_sample(&shapes, params, batch.item(i), &masks[i]))
        .collect();
    let preds = activations.iter().map(|a| a[a.len() - 1][0]).collect();
    Ok((
        preds,
        Cache {
            input: batch.clone(),
            activations,
            masks,
        },
    ))
}

fn backward_sample(
    shapes: &[LayerShape],
    params: &NetParams,
    x: &[f32],
    acts: &[Vec<f32>],
    masks: &[Option<Vec<f32>>],
    dpred: f32,
    grads: &mut NetParams,
) {
    let mut delta = vec![dpred];
    for l in (0..shapes.len()).rev() {
        let out = &acts[l];
        if let Some(mask) = &masks[l] {
            for (d, m) in delta.iter_mut().zip(mask) {
                *d *= m;
            }
        }
        if is_relu(&shapes[l]) {
            for (d, &o) in delta.iter_mut().zip(out) {
                if o <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        let input = if l == 0 { x } else { &acts[l - 1] };
        let mut dx = (l > 0).then(|| vec![0.0; input.len()]);
        let w = &params.layers[l].weights;
        let g = &mut grads.layers[l];
        match shapes[l] {
            LayerShape::Conv { .. } => {
                conv_backward(&shapes[l], input, w, &delta, &mut g.weights, &mut g.bias, dx.as_deref_mut())
            }
            LayerShape::Fc { .. } => fc_backward(input, w, &delta, &mut g.weights, &mut g.bias, dx.as_deref_mut()),
        }
        match dx {
            Some(d) => delta = d,
            None => break,
        }
    }
}

/// Gradients of the loss with respect to every parameter, given the loss
/// gradient with respect to each prediction.
pub fn backward(spec: &NetSpec, params: &NetParams, cache: &Cache, dpred: &[f32]) -> Result<NetParams, NnError> {
    let shapes = spec.layers()?;
    params.check_shape(spec)?;
    let n = cache.activations.len();
    if dpred.len() != n {
        return Err(NnError::Shape(format!("{} loss gradients for {n} samples", dpred.len())));
    }
    let indices: Vec<usize> = (0..n).collect();
    let partials: Vec<NetParams> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = params.zeros_like();
            for &i in chunk {
                backward_sample(
                    &shapes,
                    params,
                    cache.input.item(i),
                    &cache.activations[i],
                    &cache.masks[i],
                    dpred[i],
                    &mut g,
                );
            }
            g
        })
        .collect();
    let mut total = params.zeros_like();
    for p in &partials {
        total.add_assign(p);
    }
    Ok(total)
}

fn check_pair(pred: &[f32], truth: &[f32]) -> Result<(), NnError> {
    if pred.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if pred.len() != truth.len() {
        return Err(NnError::Shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// `(1/n) sum (y - y_hat)^2`, accumulated in `f64`.
pub fn mse_loss(pred: &[f32], truth: &[f32]) -> Result<f32, NnError> {
    check_pair(pred, truth)?;
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p as f64 - t as f64).powi(2))
        .sum();
    Ok((sum / pred.len() as f64) as f32)
}

/// Derivative of [`mse_loss`] with respect to each prediction, `2 (y_hat - y) / n`.
pub fn mse_grad(pred: &[f32], truth: &[f32]) -> Result<Vec<f32>, NnError> {
    check_pair(pred, truth)?;
    let scale = 2.0 / pred.len() as f32;
    Ok(pred.iter().zip(truth).map(|(&p, &t)| scale * (p - t)).collect())
}
