//! Probabilistic ensemble dynamics model.
//!
//! `L` independently initialized network particles are trained by
//! maximum-likelihood (squared error) on the transition dataset and served
//! jointly: the prediction mean is the particle average and the epistemic
//! uncertainty is the sample standard deviation across particles.
//!
//! Regression target: particles predict the normalized symlog state
//! difference, `target = norm(symlog(s') - symlog(s))`, with network input
//! `norm([symlog(s), a])`. Prediction inverts the chain per particle
//! (denormalize, add `symlog(s)`, `symexp`), so mean and std come out in
//! raw state units.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TransitionDataset;
use crate::error::{Error, Result};
use crate::nn::{Activation, MlpGrads, MlpParams, MlpScratch};
use crate::optim::{adam_step, AdamState};
use crate::seed::{self, salt};
use crate::transform::{symexp, symlog};

/// Smallest admissible normalizer std; guards constant dimensions.
pub const STD_FLOOR: f64 = 1e-8;

/// Network shape shared by every particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
}

impl Architecture {
    pub fn dims(&self, d_in: usize, d_out: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 2);
        dims.push(d_in);
        dims.extend(std::iter::repeat(self.hidden_width).take(self.hidden_layers));
        dims.push(d_out);
        dims
    }
}

/// Input/target statistics in transform space. Identity until the first fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(d_s: usize, d_a: usize) -> Self {
        Self {
            input_mean: vec![0.0; d_s + d_a],
            input_std: vec![1.0; d_s + d_a],
            target_mean: vec![0.0; d_s],
            target_std: vec![1.0; d_s],
        }
    }

    /// Mean/std over the transformed inputs `[symlog(s), a]` and targets
    /// `symlog(s') - symlog(s)`, with stds floored at [`STD_FLOOR`].
    pub fn fit(data: &TransitionDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyBatch("normalizer fit"));
        }
        let d_s = data.state_dim();
        let d_a = data.action_dim();
        let n = data.len() as f64;

        let mut n_out = Self::identity(d_s, d_a);
        n_out.input_mean.fill(0.0);
        n_out.target_mean.fill(0.0);
        let mut in_sq = vec![0.0; d_s + d_a];
        let mut tg_sq = vec![0.0; d_s];

        for rec in data.records() {
            for i in 0..d_s {
                let v = symlog(rec.state[i]);
                n_out.input_mean[i] += v;
                in_sq[i] += v * v;
                let t = symlog(rec.next_state[i]) - v;
                n_out.target_mean[i] += t;
                tg_sq[i] += t * t;
            }
            for j in 0..d_a {
                let v = rec.action[j];
                n_out.input_mean[d_s + j] += v;
                in_sq[d_s + j] += v * v;
            }
        }
        for i in 0..d_s + d_a {
            n_out.input_mean[i] /= n;
            let var = (in_sq[i] / n - n_out.input_mean[i] * n_out.input_mean[i]).max(0.0);
            n_out.input_std[i] = var.sqrt().max(STD_FLOOR);
        }
        for i in 0..d_s {
            n_out.target_mean[i] /= n;
            let var = (tg_sq[i] / n - n_out.target_mean[i] * n_out.target_mean[i]).max(0.0);
            n_out.target_std[i] = var.sqrt().max(STD_FLOOR);
        }
        Ok(n_out)
    }
}

/// Mean and epistemic std of a one-step prediction, in raw state units.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Anything the planners can roll out: a one-step predictive model with
/// an epistemic uncertainty estimate.
pub trait DynamicsModel: Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn predict(&self, state: &[f64], action: &[f64]) -> Result<Prediction>;
}

/// Training hyperparameters for [`EnsembleModel::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Per-particle cap on optimizer steps within one fit call.
    pub max_gradient_steps: usize,
}

/// Per-particle losses measured on the full dataset before and after
/// training, plus the number of optimizer steps actually taken.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: Vec<f64>,
    pub final_loss: Vec<f64>,
    pub gradient_steps: Vec<usize>,
}

impl TrainReport {
    pub fn mean_final_loss(&self) -> f64 {
        self.final_loss.iter().sum::<f64>() / self.final_loss.len() as f64
    }
}

/// `L` network particles plus normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    particles: Vec<MlpParams<f64>>,
    normalizer: Normalizer,
    /// Aleatoric std of the Gaussian likelihood; kept for the model
    /// document, not used by the squared-error training loss.
    aleatoric_std: f64,
    beta: f64,
    d_s: usize,
    d_a: usize,
    architecture: Architecture,
}

impl EnsembleModel {
    /// Fresh ensemble with `n_particles` independently seeded particles and
    /// an identity normalizer.
    pub fn init(
        d_s: usize,
        d_a: usize,
        architecture: Architecture,
        n_particles: usize,
        beta: f64,
        aleatoric_std: f64,
        init_seed: u64,
    ) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::InvalidConfig(format!(
                "ensemble needs >= 2 particles for a variance estimate, got {n_particles}"
            )));
        }
        if d_s == 0 || d_a == 0 {
            return Err(Error::InvalidConfig("state/action dims must be positive".into()));
        }
        if !(beta >= 0.0) || !(aleatoric_std > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be >= 0 and aleatoric std > 0, got beta={beta}, eps={aleatoric_std}"
            )));
        }
        let dims = architecture.dims(d_s + d_a, d_s);
        let particles = (0..n_particles)
            .map(|l| {
                MlpParams::seeded(
                    &dims,
                    architecture.activation,
                    seed::derive(init_seed, &[salt::PARTICLE_INIT, l as u64]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            particles,
            normalizer: Normalizer::identity(d_s, d_a),
            aleatoric_std,
            beta,
            d_s,
            d_a,
            architecture,
        })
    }

    /// Assembles a model from explicit parts (hand-built tests, loader).
    pub fn from_parts(
        particles: Vec<MlpParams<f64>>,
        normalizer: Normalizer,
        beta: f64,
        aleatoric_std: f64,
        d_s: usize,
        d_a: usize,
        architecture: Architecture,
    ) -> Result<Self> {
        if particles.len() < 2 {
            return Err(Error::InvalidConfig(
                "ensemble needs >= 2 particles".into(),
            ));
        }
        for p in &particles {
            if p.input_dim() != d_s + d_a || p.output_dim() != d_s {
                return Err(Error::ShapeMismatch {
                    context: "particle dims",
                    expected: d_s + d_a,
                    got: p.input_dim(),
                });
            }
            if p.dims() != particles[0].dims() {
                return Err(Error::InvalidConfig(
                    "all particles must share one architecture".into(),
                ));
            }
        }
        if normalizer.input_mean.len() != d_s + d_a || normalizer.target_mean.len() != d_s {
            return Err(Error::ShapeMismatch {
                context: "normalizer dims",
                expected: d_s + d_a,
                got: normalizer.input_mean.len(),
            });
        }
        Ok(Self {
            particles,
            normalizer,
            aleatoric_std,
            beta,
            d_s,
            d_a,
            architecture,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    pub fn particles(&self) -> &[MlpParams<f64>] {
        &self.particles
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn aleatoric_std(&self) -> f64 {
        self.aleatoric_std
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    fn check_io(&self, state: &[f64], action: &[f64]) -> Result<()> {
        if state.len() != self.d_s {
            return Err(Error::ShapeMismatch {
                context: "predict state",
                expected: self.d_s,
                got: state.len(),
            });
        }
        if action.len() != self.d_a {
            return Err(Error::ShapeMismatch {
                context: "predict action",
                expected: self.d_a,
                got: action.len(),
            });
        }
        if let Some(i) = state.iter().chain(action).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "predict input",
                index: i,
            });
        }
        Ok(())
    }

    /// Normalized network input `[symlog(s), a]` written into `out`.
    fn build_input(&self, state: &[f64], action: &[f64], out: &mut [f64]) {
        let n = &self.normalizer;
        for i in 0..self.d_s {
            out[i] = (symlog(state[i]) - n.input_mean[i]) / n.input_std[i];
        }
        for j in 0..self.d_a {
            out[self.d_s + j] = (action[j] - n.input_mean[self.d_s + j]) / n.input_std[self.d_s + j];
        }
    }

    /// Inverts the prediction chain for one particle output.
    fn invert_output(&self, state: &[f64], y: &[f64], out: &mut [f64]) {
        let n = &self.normalizer;
        for i in 0..self.d_s {
            let diff = y[i] * n.target_std[i] + n.target_mean[i];
            out[i] = symexp(symlog(state[i]) + diff);
        }
    }

    /// Single-particle denormalized next-state prediction.
    pub fn predict_particle(&self, index: usize, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if index >= self.particles.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.particles.len(),
            });
        }
        self.check_io(state, action)?;
        let mut input = vec![0.0; self.d_s + self.d_a];
        self.build_input(state, action, &mut input);
        let y = self.particles[index].forward(&input)?;
        let mut out = vec![0.0; self.d_s];
        self.invert_output(state, y.as_slice(), &mut out);
        Ok(out)
    }

    /// Ensemble mean (particle average of denormalized predictions) and
    /// epistemic std (elementwise sample standard deviation, divisor L-1),
    /// both in raw state units.
    pub fn predict(&self, state: &[f64], action: &[f64]) -> Result<Prediction> {
        let mut scratch = EnsembleScratch::for_model(self);
        let mut mean = vec![0.0; self.d_s];
        let mut std = vec![0.0; self.d_s];
        self.predict_with(&mut scratch, state, action, &mut mean, &mut std)?;
        Ok(Prediction { mean, std })
    }

    /// Allocation-free variant of [`predict`](Self::predict) for hot loops.
    pub fn predict_with(
        &self,
        scratch: &mut EnsembleScratch,
        state: &[f64],
        action: &[f64],
        mean: &mut [f64],
        std: &mut [f64],
    ) -> Result<()> {
        self.check_io(state, action)?;
        let l = self.particles.len();
        let d_s = self.d_s;
        self.build_input(state, action, &mut scratch.input);

        for (k, particle) in self.particles.iter().enumerate() {
            let y = particle.forward_into(&scratch.input, &mut scratch.mlp);
            let raw = &mut scratch.raw[k * d_s..(k + 1) * d_s];
            // inline invert_output to reuse the borrowed y
            let n = &self.normalizer;
            for i in 0..d_s {
                let diff = y[i] * n.target_std[i] + n.target_mean[i];
                raw[i] = symexp(symlog(state[i]) + diff);
            }
        }

        // running mean keeps identical particles bit-identical to any single one
        mean.fill(0.0);
        for k in 0..l {
            let raw = &scratch.raw[k * d_s..(k + 1) * d_s];
            let count = (k + 1) as f64;
            for i in 0..d_s {
                mean[i] += (raw[i] - mean[i]) / count;
            }
        }
        std.fill(0.0);
        for k in 0..l {
            let raw = &scratch.raw[k * d_s..(k + 1) * d_s];
            for i in 0..d_s {
                let e = raw[i] - mean[i];
                std[i] += e * e;
            }
        }
        for i in 0..d_s {
            std[i] = (std[i] / (l as f64 - 1.0)).sqrt();
        }
        Ok(())
    }

    /// Refits the normalizer to `data`, rebuilds the regression matrices,
    /// and continues training every particle. Particles train independently
    /// (shared data, independently shuffled order) so they run in parallel;
    /// derived per-particle seeds keep the result schedule-independent.
    pub fn fit(
        &mut self,
        data: &TransitionDataset,
        cfg: &FitConfig,
        fit_seed: u64,
    ) -> Result<TrainReport> {
        if data.is_empty() {
            return Err(Error::EmptyBatch("fit dataset"));
        }
        if data.state_dim() != self.d_s || data.action_dim() != self.d_a {
            return Err(Error::ShapeMismatch {
                context: "fit dataset dims",
                expected: self.d_s,
                got: data.state_dim(),
            });
        }
        if cfg.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }

        self.normalizer = Normalizer::fit(data)?;

        // regression matrices in transformed, normalized space
        let n = data.len();
        let d_in = self.d_s + self.d_a;
        let d_out = self.d_s;
        let mut xs = vec![0.0; n * d_in];
        let mut ys = vec![0.0; n * d_out];
        for (r, rec) in data.records().iter().enumerate() {
            self.build_input(&rec.state, &rec.action, &mut xs[r * d_in..(r + 1) * d_in]);
            let norm = &self.normalizer;
            for i in 0..d_out {
                let t = symlog(rec.next_state[i]) - symlog(rec.state[i]);
                ys[r * d_out + i] = (t - norm.target_mean[i]) / norm.target_std[i];
            }
        }

        let results: Vec<Result<(f64, f64, usize)>> = self
            .particles
            .par_iter_mut()
            .enumerate()
            .map(|(l, particle)| {
                train_particle(particle, &xs, &ys, n, d_in, d_out, cfg, fit_seed, l)
            })
            .collect();

        let mut report = TrainReport {
            initial_loss: Vec::with_capacity(self.particles.len()),
            final_loss: Vec::with_capacity(self.particles.len()),
            gradient_steps: Vec::with_capacity(self.particles.len()),
        };
        for r in results {
            let (initial, fin, steps) = r?;
            report.initial_loss.push(initial);
            report.final_loss.push(fin);
            report.gradient_steps.push(steps);
        }
        Ok(report)
    }
}

impl DynamicsModel for EnsembleModel {
    fn state_dim(&self) -> usize {
        self.d_s
    }

    fn action_dim(&self) -> usize {
        self.d_a
    }

    fn predict(&self, state: &[f64], action: &[f64]) -> Result<Prediction> {
        EnsembleModel::predict(self, state, action)
    }
}

/// Reusable buffers for [`EnsembleModel::predict_with`].
#[derive(Debug, Clone)]
pub struct EnsembleScratch {
    input: Vec<f64>,
    raw: Vec<f64>,
    mlp: MlpScratch<f64>,
}

impl EnsembleScratch {
    pub fn for_model(model: &EnsembleModel) -> Self {
        Self {
            input: vec![0.0; model.d_s + model.d_a],
            raw: vec![0.0; model.particles.len() * model.d_s],
            mlp: MlpScratch::for_params(&model.particles[0]),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train_particle(
    particle: &mut MlpParams<f64>,
    xs: &[f64],
    ys: &[f64],
    n: usize,
    d_in: usize,
    d_out: usize,
    cfg: &FitConfig,
    fit_seed: u64,
    particle_index: usize,
) -> Result<(f64, f64, usize)> {
    let mut scratch = MlpScratch::for_params(particle);
    let mut grads = MlpGrads::zeros_like(particle);
    let initial = particle.mse_loss(xs, ys, n, &mut scratch)?;

    let mut state = AdamState::new(particle, cfg.learning_rate);
    let mut steps = 0usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let batch = cfg.batch_size.min(n);
    let mut bx = vec![0.0; batch * d_in];
    let mut by = vec![0.0; batch * d_out];

    'epochs: for epoch in 0..cfg.epochs {
        if steps >= cfg.max_gradient_steps {
            break;
        }
        let mut rng = seed::rng(
            fit_seed,
            &[salt::SHUFFLE, particle_index as u64, epoch as u64],
        );
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(batch) {
            if steps >= cfg.max_gradient_steps {
                break 'epochs;
            }
            let b = chunk.len();
            for (row, &src) in chunk.iter().enumerate() {
                bx[row * d_in..(row + 1) * d_in]
                    .copy_from_slice(&xs[src * d_in..(src + 1) * d_in]);
                by[row * d_out..(row + 1) * d_out]
                    .copy_from_slice(&ys[src * d_out..(src + 1) * d_out]);
            }
            let loss = particle.mse_loss_and_grad(
                &bx[..b * d_in],
                &by[..b * d_out],
                b,
                &mut scratch,
                &mut grads,
            )?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    particle: particle_index,
                });
            }
            adam_step(particle, &grads, &mut state)?;
            steps += 1;
        }
    }

    let fin = particle.mse_loss(xs, ys, n, &mut scratch)?;
    if !fin.is_finite() {
        return Err(Error::NonFiniteLoss {
            particle: particle_index,
        });
    }
    Ok((initial, fin, steps))
}
