use super::params::NetParams;
use super::NnError;

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    /// Completed steps.
    pub t: u64,
    pub m: NetParams,
    pub v: NetParams,
}

impl Adam {
    pub fn new(params: &NetParams, learning_rate: f32) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    /// One update. A non-finite gradient aborts before anything is modified.
    pub fn step(&mut self, params: &mut NetParams, grads: &NetParams) -> Result<(), NnError> {
        if let Some((layer, _)) = grads
            .layers
            .iter()
            .enumerate()
            .find(|(_, l)| !l.weights.iter().chain(&l.bias).all(|g| g.is_finite()))
        {
            return Err(NnError::NonFinite(format!("gradient of layer {layer}")));
        }
        self.t += 1;
        let t = self.t as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - (b1 as f64).powi(t);
        let c2 = 1.0 - (b2 as f64).powi(t);
        let lr = self.learning_rate as f64;
        let eps = self.epsilon as f64;
        let moments = self.m.values_mut().zip(self.v.values_mut());
        for ((p, g), (m, v)) in params.values_mut().zip(grads.values()).zip(moments) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m as f64 / c1;
            let v_hat = *v as f64 / c2;
            *p -= (lr * m_hat / (v_hat.sqrt() + eps)) as f32;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::params::LayerParams;

    fn single(v: f32) -> NetParams {
        NetParams {
            layers: vec![LayerParams {
                weights: vec![v, -v],
                bias: vec![v],
            }],
        }
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = single(1.0);
        let mut adam = Adam::new(&p, 1e-3);
        adam.step(&mut p, &single(0.5)).unwrap();
        let after_first = p.clone();
        let m1 = adam.m.layers[0].weights[0];
        adam.step(&mut p, &single(0.0)).unwrap();
        assert!((adam.m.layers[0].weights[0] - 0.9 * m1).abs() < 1e-9);
        // m stays nonzero so params still move; with lr = 0 they must not.
        let mut q = after_first.clone();
        let mut frozen = Adam::new(&q, 0.0);
        frozen.step(&mut q, &single(0.0)).unwrap();
        assert_eq!(q, after_first);
        let mut r = single(2.0);
        let mut fresh = Adam::new(&r, 1e-3);
        fresh.step(&mut r, &single(0.0)).unwrap();
        assert_eq!(r, single(2.0));
    }

    #[test]
    fn first_step_is_lr_sign() {
        let mut p = single(0.0);
        let mut adam = Adam::new(&p, 1e-3);
        let g = NetParams {
            layers: vec![LayerParams {
                weights: vec![0.3, -7.0],
                bias: vec![1e-3],
            }],
        };
        adam.step(&mut p, &g).unwrap();
        let w = &p.layers[0];
        assert!((w.weights[0] + 1e-3).abs() < 1e-7);
        assert!((w.weights[1] - 1e-3).abs() < 1e-7);
        assert!((w.bias[0] + 1e-3).abs() < 1e-6);
    }

    #[test]
    fn constant_gradient_converges_to_lr() {
        let mut p = single(0.0);
        let mut adam = Adam::new(&p, 1e-3);
        let g = single(0.25);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p.layers[0].weights[0];
            adam.step(&mut p, &g).unwrap();
            last = before - p.layers[0].weights[0];
        }
        assert!((last - 1e-3).abs() < 1e-6, "{last}");
    }

    #[test]
    fn nan_gradient_aborts_untouched() {
        let mut p = single(1.0);
        let mut adam = Adam::new(&p, 1e-3);
        let err = adam.step(&mut p, &single(f32::NAN)).unwrap_err();
        assert!(matches!(err, NnError::NonFinite(_)));
        assert_eq!(p, single(1.0));
        assert_eq!(adam.t, 0);
    }
}
