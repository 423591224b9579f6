//! Adaptive-moment first-order optimizer (Adam with the standard bias
//! correction). The update rule, with moments `m`, `v`, step `t`, and
//! learning rate `lr`:
//!
//! ```text
//! m <- b1*m + (1-b1)*g          b1 = 0.9
//! v <- b2*v + (1-b2)*g^2        b2 = 0.999
//! p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + 1e-8)
//! ```

use crate::error::{Error, Result};
use crate::nn::{MlpGrads, MlpParams};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer state: first/second moment accumulators shaped like the
/// parameters, a step counter, and the learning rate.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub first_moment: MlpGrads<T>,
    pub second_moment: MlpGrads<T>,
    pub step_count: u64,
    pub learning_rate: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &MlpParams<T>, learning_rate: T) -> Self {
        Self {
            first_moment: MlpGrads::zeros_like(params),
            second_moment: MlpGrads::zeros_like(params),
            step_count: 0,
            learning_rate,
        }
    }
}

/// One optimizer step. Increments `step_count` by exactly one and updates
/// the parameters in place. A non-finite gradient entry aborts with the
/// offending flat coordinate index before anything is mutated.
pub fn adam_step<T: Scalar>(
    params: &mut MlpParams<T>,
    grads: &MlpGrads<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    for (i, g) in grads.iter_flat().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFinite {
                context: "gradient",
                index: i,
            });
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let b1 = T::from_f64_lossy(ADAM_BETA1);
    let b2 = T::from_f64_lossy(ADAM_BETA2);
    let eps = T::from_f64_lossy(ADAM_EPS);
    let one = T::one();
    let bc1 = one - b1.powi(t);
    let bc2 = one - b2.powi(t);
    let lr = state.learning_rate;

    let (weights, biases) = params.layers_mut();
    let kinds: [(&mut Vec<Vec<T>>, &[Vec<T>], &mut Vec<Vec<T>>, &mut Vec<Vec<T>>); 2] = [
        (
            weights,
            &grads.weights,
            &mut state.first_moment.weights,
            &mut state.second_moment.weights,
        ),
        (
            biases,
            &grads.biases,
            &mut state.first_moment.biases,
            &mut state.second_moment.biases,
        ),
    ];

    for (param_layers, grad_layers, m_layers, v_layers) in kinds {
        for (((p, g), m), v) in param_layers
            .iter_mut()
            .zip(grad_layers.iter())
            .zip(m_layers.iter_mut())
            .zip(v_layers.iter_mut())
        {
            if p.len() != g.len() {
                return Err(Error::ShapeMismatch {
                    context: "optimizer gradients",
                    expected: p.len(),
                    got: g.len(),
                });
            }
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (one - b1) * g[k];
                v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] = p[k] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    Ok(())
}
