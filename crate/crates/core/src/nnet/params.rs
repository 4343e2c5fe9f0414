use sha2::{Digest, Sha256};

use super::spec::NetSpec;
use super::NnError;
use crate::rng::Rng;

const INIT_STREAM: u64 = 0x1417;

/// Weights and biases of one layer. Conv weights are laid out
/// `[out_c][ky][kx][in_c]`, fc weights `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// All trainable parameters of a network, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub layers: Vec<LayerParams>,
}

/// `count` draws from `U(-L, L)`, `L = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform_init(fan_in: usize, fan_out: usize, count: usize, rng: &mut Rng) -> Vec<f32> {
    assert!(fan_in >= 1 && fan_out >= 1, "fans must be >= 1");
    let limit = glorot_limit(fan_in, fan_out);
    (0..count)
        .map(|_| rng.uniform(-limit, limit) as f32)
        .collect()
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl NetParams {
    /// Glorot-uniform weights and zero biases. Each layer draws from its own
    /// sub-stream of `seed`.
    pub fn init(spec: &NetSpec, seed: u64) -> Result<Self, NnError> {
        let layers = spec
            .layers()?
            .iter()
            .enumerate()
            .map(|(i, shape)| {
                let (fan_in, fan_out) = shape.fans();
                let mut rng = Rng::derive(seed, &[INIT_STREAM, i as u64]);
                LayerParams {
                    weights: glorot_uniform_init(fan_in, fan_out, shape.weight_len(), &mut rng),
                    bias: vec![0.0; shape.bias_len()],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// All-zero parameters shaped for `spec`.
    pub fn zeros(spec: &NetSpec) -> Result<Self, NnError> {
        Ok(Self {
            layers: spec
                .layers()?
                .iter()
                .map(|s| LayerParams {
                    weights: vec![0.0; s.weight_len()],
                    bias: vec![0.0; s.bias_len()],
                })
                .collect(),
        })
    }

    /// Same structure with every value set to zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn check_shape(&self, spec: &NetSpec) -> Result<(), NnError> {
        let shapes = spec.layers()?;
        let ok = shapes.len() == self.layers.len()
            && shapes
                .iter()
                .zip(&self.layers)
                .all(|(s, l)| s.weight_len() == l.weights.len() && s.bias_len() == l.bias.len());
        if ok {
            Ok(())
        } else {
            Err(NnError::Shape("parameters do not match the network spec".into()))
        }
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every value, layer by layer, weights before bias.
    pub fn values(&self) -> impl Iterator<Item = f32> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f32> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(f32::is_finite)
    }

    /// `self += other`, element by element.
    pub fn add_assign(&mut self, other: &NetParams) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    /// SHA-256 over the little-endian bytes of every value, as hex.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in self.values() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        assert!((glorot_limit(363, 968) - 0.067_14).abs() < 1e-5);
        assert_eq!(glorot_limit(3, 3), 1.0);
    }

    #[test]
    fn draws_stay_in_bounds() {
        let mut rng = Rng::seed_from(5);
        let w = glorot_uniform_init(363, 968, 20_000, &mut rng);
        let l = glorot_limit(363, 968) as f32;
        assert!(w.iter().all(|v| v.abs() <= l));
        // Roughly symmetric and spread over the interval.
        let mean = w.iter().sum::<f32>() / w.len() as f32;
        assert!(mean.abs() < 0.01 * l * 10.0);
        assert!(w.iter().cloned().fold(0.0f32, f32::max) > 0.95 * l);
    }

    #[test]
    fn init_matches_spec_and_is_seeded() {
        let spec = NetSpec::default();
        let a = NetParams::init(&spec, 1).unwrap();
        a.check_shape(&spec).unwrap();
        assert_eq!(a.len(), 13321);
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a, NetParams::init(&spec, 1).unwrap());
        assert_ne!(a.checksum(), NetParams::init(&spec, 2).unwrap().checksum());
    }
}
