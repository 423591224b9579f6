//! Dense feed-forward network with reverse-mode gradients.
//!
//! Kept deliberately small: dense layers, one hidden nonlinearity fixed
//! network-wide, linear output head. Weights are row-major `(out, in)`.
//! The hot path (`forward_into`, `mse_loss_and_grad`) reuses caller-owned
//! scratch buffers so planning rollouts and training stay allocation-free.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Hidden-layer nonlinearity tag. The output head is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Smooth, saturating; keeps ensemble variance estimates bounded.
    Tanh,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn grad_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
        }
    }
}

/// Parameters of a dense MLP: per-layer weight matrices and bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    /// Layer widths, input first: `[in, h1, ..., out]`.
    dims: Vec<usize>,
    /// Row-major `(out, in)` matrices, one per layer.
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
    activation: Activation,
}

/// Gradients (or optimizer moments) shaped exactly like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(params: &MlpParams<T>) -> Self {
        Self {
            weights: params.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for w in &mut self.weights {
            w.fill(T::zero());
        }
        for b in &mut self.biases {
            b.fill(T::zero());
        }
    }

    /// Flat iteration order: all weight matrices layer by layer, then biases.
    /// Used for numeric error reporting and the optimizer.
    pub fn iter_flat(&self) -> impl Iterator<Item = &T> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
    }
}

/// Reusable buffers for forward/backward passes of one network shape.
#[derive(Debug, Clone)]
pub struct MlpScratch<T> {
    /// Post-activation output of every layer.
    acts: Vec<Vec<T>>,
    delta_a: Vec<T>,
    delta_b: Vec<T>,
}

impl<T: Scalar> MlpScratch<T> {
    pub fn for_params(params: &MlpParams<T>) -> Self {
        let acts = params.dims[1..].iter().map(|&d| vec![T::zero(); d]).collect();
        let widest = params.dims.iter().copied().max().unwrap_or(0);
        Self {
            acts,
            delta_a: vec![T::zero(); widest],
            delta_b: vec![T::zero(); widest],
        }
    }
}

impl<T: Scalar> MlpParams<T> {
    /// All-zero network with the given layer widths.
    pub fn zeros(dims: &[usize], activation: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "network needs >= 2 nonzero layer widths, got {dims:?}"
            )));
        }
        let weights = dims.windows(2).map(|w| vec![T::zero(); w[0] * w[1]]).collect();
        let biases = dims[1..].iter().map(|&d| vec![T::zero(); d]).collect();
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    /// Fan-in-scaled uniform initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases, drawn from a ChaCha stream keyed by `seed`.
    pub fn seeded(dims: &[usize], activation: Activation, init_seed: u64) -> Result<Self> {
        let mut params = Self::zeros(dims, activation)?;
        let mut rng = seed::rng(init_seed, &[]);
        for l in 0..params.weights.len() {
            let fan_in = params.dims[l] as f64;
            let limit = (1.0 / fan_in).sqrt();
            for w in &mut params.weights[l] {
                *w = T::from_f64_lossy(rng.gen_range(-limit..limit));
            }
            for b in &mut params.biases[l] {
                *b = T::from_f64_lossy(rng.gen_range(-limit..limit));
            }
        }
        Ok(params)
    }

    /// Builds a network from explicit layer matrices (used by tests and the
    /// model loader). Validates that consecutive shapes compose.
    pub fn from_layers(
        dims: Vec<usize>,
        weights: Vec<Vec<T>>,
        biases: Vec<Vec<T>>,
        activation: Activation,
    ) -> Result<Self> {
        if dims.len() < 2 || weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::InvalidConfig(format!(
                "layer count mismatch: dims {dims:?}, {} weight matrices, {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..weights.len() {
            if weights[l].len() != dims[l] * dims[l + 1] {
                return Err(Error::ShapeMismatch {
                    context: "weight matrix",
                    expected: dims[l] * dims[l + 1],
                    got: weights[l].len(),
                });
            }
            if biases[l].len() != dims[l + 1] {
                return Err(Error::ShapeMismatch {
                    context: "bias vector",
                    expected: dims[l + 1],
                    got: biases[l].len(),
                });
            }
        }
        let params = Self {
            dims,
            weights,
            biases,
            activation,
        };
        params.check_finite()?;
        Ok(params)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn layer_biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn check_finite(&self) -> Result<()> {
        for (i, v) in self
            .weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .enumerate()
        {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "network parameter",
                    index: i,
                });
            }
        }
        Ok(())
    }

    /// Forward pass. Pure: identical inputs give bit-identical outputs.
    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "mlp input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut scratch = MlpScratch::for_params(self);
        self.forward_into(input, &mut scratch);
        Ok(scratch.acts.last().unwrap().clone())
    }

    /// Allocation-free forward pass into `scratch`; returns the output slice.
    /// Shape mismatches are programmer error here and panic via debug asserts.
    pub fn forward_into<'s>(&self, input: &[T], scratch: &'s mut MlpScratch<T>) -> &'s [T] {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.weights.len();
        for l in 0..layers {
            let in_dim = self.dims[l];
            let out_dim = self.dims[l + 1];
            let w = &self.weights[l];
            let b = &self.biases[l];
            // split_at_mut so the previous activation can be read while
            // writing the current one
            let (prev, rest) = scratch.acts.split_at_mut(l);
            let x: &[T] = if l == 0 { input } else { &prev[l - 1] };
            let out = &mut rest[0];
            for o in 0..out_dim {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = b[o];
                for (wv, xv) in row.iter().zip(x) {
                    acc = acc + *wv * *xv;
                }
                out[o] = if l + 1 < layers {
                    self.activation.apply(acc)
                } else {
                    acc
                };
            }
        }
        scratch.acts.last().unwrap()
    }

    /// Mean squared error over a row-major batch plus its exact reverse-mode
    /// gradient. `inputs` is `batch * in_dim` long, `targets` is
    /// `batch * out_dim`. The loss is averaged over batch and output dims;
    /// `grads` is overwritten.
    pub fn mse_loss_and_grad(
        &self,
        inputs: &[T],
        targets: &[T],
        batch: usize,
        scratch: &mut MlpScratch<T>,
        grads: &mut MlpGrads<T>,
    ) -> Result<T> {
        if batch == 0 {
            return Err(Error::EmptyBatch("mse_loss_and_grad"));
        }
        let in_dim = self.input_dim();
        let out_dim = self.output_dim();
        if inputs.len() != batch * in_dim {
            return Err(Error::ShapeMismatch {
                context: "batch inputs",
                expected: batch * in_dim,
                got: inputs.len(),
            });
        }
        if targets.len() != batch * out_dim {
            return Err(Error::ShapeMismatch {
                context: "batch targets",
                expected: batch * out_dim,
                got: targets.len(),
            });
        }

        grads.fill_zero();
        let layers = self.weights.len();
        let denom = T::from_usize(batch * out_dim).unwrap();
        let two = T::from_f64_lossy(2.0);
        let mut loss = T::zero();

        for s in 0..batch {
            let x = &inputs[s * in_dim..(s + 1) * in_dim];
            let t = &targets[s * out_dim..(s + 1) * out_dim];
            self.forward_into(x, scratch);

            // dL/dy for the output layer, already divided by the batch mean
            {
                let y = scratch.acts.last().unwrap();
                for o in 0..out_dim {
                    let e = y[o] - t[o];
                    loss += e * e;
                    scratch.delta_a[o] = two * e / denom;
                }
            }

            // walk layers backwards, ping-ponging delta between the two buffers
            for l in (0..layers).rev() {
                let in_d = self.dims[l];
                let out_d = self.dims[l + 1];
                let w = &self.weights[l];
                let y_l = &scratch.acts[l];
                let x_l: &[T] = if l == 0 { x } else { &scratch.acts[l - 1] };
                let dw = &mut grads.weights[l];
                let db = &mut grads.biases[l];

                scratch.delta_b[..in_d].fill(T::zero());
                for o in 0..out_d {
                    let dz = if l + 1 == layers {
                        scratch.delta_a[o]
                    } else {
                        scratch.delta_a[o] * self.activation.grad_from_output(y_l[o])
                    };
                    db[o] += dz;
                    let row_off = o * in_d;
                    let w_row = &w[row_off..row_off + in_d];
                    let dw_row = &mut dw[row_off..row_off + in_d];
                    let delta = &mut scratch.delta_b[..in_d];
                    for i in 0..in_d {
                        dw_row[i] = dw_row[i] + dz * x_l[i];
                        delta[i] = delta[i] + w_row[i] * dz;
                    }
                }
                std::mem::swap(&mut scratch.delta_a, &mut scratch.delta_b);
            }
        }

        Ok(loss / denom)
    }

    /// MSE over a batch without gradients (used for train reports).
    pub fn mse_loss(
        &self,
        inputs: &[T],
        targets: &[T],
        batch: usize,
        scratch: &mut MlpScratch<T>,
    ) -> Result<T> {
        if batch == 0 {
            return Err(Error::EmptyBatch("mse_loss"));
        }
        let in_dim = self.input_dim();
        let out_dim = self.output_dim();
        let mut loss = T::zero();
        for s in 0..batch {
            let x = &inputs[s * in_dim..(s + 1) * in_dim];
            let t = &targets[s * out_dim..(s + 1) * out_dim];
            let y = self.forward_into(x, scratch);
            for o in 0..out_dim {
                let e = y[o] - t[o];
                loss += e * e;
            }
        }
        Ok(loss / T::from_usize(batch * out_dim).unwrap())
    }

    /// Mutable access for the optimizer; shapes are fixed at construction.
    pub(crate) fn layers_mut(&mut self) -> (&mut Vec<Vec<T>>, &mut Vec<Vec<T>>) {
        (&mut self.weights, &mut self.biases)
    }

    /// Single-coordinate mutable access, used by finite-difference probes.
    pub fn weight_mut(&mut self, layer: usize, index: usize) -> &mut T {
        &mut self.weights[layer][index]
    }

    /// Single-coordinate mutable access, used by finite-difference probes.
    pub fn bias_mut(&mut self, layer: usize, index: usize) -> &mut T {
        &mut self.biases[layer][index]
    }
}
