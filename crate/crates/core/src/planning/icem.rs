//! Improved cross-entropy method: iterative sampling with colored noise,
//! elite selection, and elite reuse across iterations.
//!
//! Each round samples `P` candidates as `mean + std (*) colored_noise`,
//! clips them to the bounds, ranks the pool (fresh samples first, then the
//! elites carried over from the previous round), refits mean/std to the
//! top-K, and carries `ceil(xi * K)` elites into the next round. The best
//! candidate ever evaluated is returned.
//!
//! Candidate noise is drawn per `(iteration, candidate, dimension)` from
//! derived seeds, so evaluations are identical regardless of scheduling
//! and unrelated dimensions never perturb each other's streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, salt};

use super::noise::colored_noise;

/// Sampler settings. `action_bounds` holds one `(lo, hi)` pair per
/// per-step dimension of the candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICemConfig {
    /// Fresh candidates per iteration (P).
    pub samples: usize,
    /// Elite-set size (K).
    pub elites: usize,
    pub colored_noise_exponent: f64,
    pub cem_iterations: usize,
    /// Independent rollouts averaged per candidate under trajectory
    /// sampling propagation.
    pub particles_per_candidate: usize,
    /// Fraction xi of the elite set reused in the next iteration's pool.
    pub elite_reuse_fraction: f64,
    /// Initial sampling std as a fraction of the half-range per dimension.
    #[serde(default = "default_init_std_frac")]
    pub init_std_frac: f64,
    pub action_bounds: Vec<(f64, f64)>,
}

fn default_init_std_frac() -> f64 {
    0.5
}

/// Relative floor applied to the refit std: 1% of each dimension's range.
const STD_FLOOR_FRAC: f64 = 0.01;

impl ICemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elites == 0 || self.elites > self.samples {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= elites <= samples, got {}/{}",
                self.elites, self.samples
            )));
        }
        if self.cem_iterations == 0 {
            return Err(Error::InvalidConfig("cem_iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.elite_reuse_fraction) {
            return Err(Error::InvalidConfig(
                "elite_reuse_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=10.0).contains(&self.init_std_frac) {
            return Err(Error::InvalidConfig("init_std_frac must be >= 0".into()));
        }
        for &(lo, hi) in &self.action_bounds {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidConfig(format!(
                    "bounds must be finite with lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcemResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub final_mean: Vec<f64>,
}

/// Maximizes `objective` over flat `horizon * dim` candidates within the
/// per-dimension bounds. The objective receives `(iteration, candidate
/// index, candidate)`; a NaN objective marks the candidate invalid. Errors
/// after the final iteration if nothing valid was ever evaluated.
pub fn icem_optimize<F>(
    objective: F,
    horizon: usize,
    dim: usize,
    config: &ICemConfig,
    warm_start: Option<&[f64]>,
    opt_seed: u64,
) -> Result<IcemResult>
where
    F: Fn(usize, usize, &[f64]) -> f64 + Sync,
{
    config.validate()?;
    if config.action_bounds.len() != dim {
        return Err(Error::ShapeMismatch {
            context: "icem bounds",
            expected: dim,
            got: config.action_bounds.len(),
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    let flat = horizon * dim;
    if let Some(w) = warm_start {
        if w.len() != flat {
            return Err(Error::ShapeMismatch {
                context: "icem warm start",
                expected: flat,
                got: w.len(),
            });
        }
    }

    let mut mean: Vec<f64> = match warm_start {
        Some(w) => w.to_vec(),
        None => (0..flat)
            .map(|j| {
                let (lo, hi) = config.action_bounds[j % dim];
                0.5 * (lo + hi)
            })
            .collect(),
    };
    let mut std: Vec<f64> = (0..flat)
        .map(|j| {
            let (lo, hi) = config.action_bounds[j % dim];
            config.init_std_frac * 0.5 * (hi - lo)
        })
        .collect();

    let n_carried = (config.elite_reuse_fraction * config.elites as f64).ceil() as usize;
    let mut carried: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;

    for iter in 0..config.cem_iterations {
        // sample fresh candidates, one noise sequence per (candidate, dim)
        let candidates: Vec<Vec<f64>> = (0..config.samples)
            .map(|p| {
                let mut cand = vec![0.0; flat];
                for d in 0..dim {
                    let mut rng = seed::rng(
                        opt_seed,
                        &[salt::NOISE, iter as u64, p as u64, d as u64],
                    );
                    let noise =
                        colored_noise(config.colored_noise_exponent, horizon, &mut rng);
                    let (lo, hi) = config.action_bounds[d];
                    for h in 0..horizon {
                        let j = h * dim + d;
                        cand[j] = (mean[j] + std[j] * noise[h]).clamp(lo, hi);
                    }
                }
                cand
            })
            .collect();

        let values: Vec<f64> = candidates
            .par_iter()
            .enumerate()
            .map(|(p, cand)| {
                let v = objective(iter, p, cand);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect();

        // pool: fresh candidates first, then carried elites (stored values)
        let mut pool: Vec<(&[f64], f64)> = candidates
            .iter()
            .map(Vec::as_slice)
            .zip(values.iter().copied())
            .collect();
        for (c, v) in &carried {
            pool.push((c.as_slice(), *v));
        }

        // stable rank by value, descending; ties keep pool order
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| pool[b].1.partial_cmp(&pool[a].1).unwrap());

        let winner = order[0];
        if best.as_ref().map_or(true, |(_, bv)| pool[winner].1 > *bv) {
            best = Some((pool[winner].0.to_vec(), pool[winner].1));
        }

        let elite_idx = &order[..config.elites.min(order.len())];

        // refit mean and per-coordinate std to the elites, with a floor of
        // 1% of the dimension range so sampling never collapses
        for j in 0..flat {
            let m = elite_idx.iter().map(|&i| pool[i].0[j]).sum::<f64>()
                / elite_idx.len() as f64;
            let var = elite_idx
                .iter()
                .map(|&i| {
                    let e = pool[i].0[j] - m;
                    e * e
                })
                .sum::<f64>()
                / elite_idx.len() as f64;
            let (lo, hi) = config.action_bounds[j % dim];
            mean[j] = m;
            std[j] = var.sqrt().max(STD_FLOOR_FRAC * (hi - lo));
        }

        carried = elite_idx
            .iter()
            .take(n_carried)
            .map(|&i| (pool[i].0.to_vec(), pool[i].1))
            .collect();
    }

    match best {
        Some((cand, value)) if value > f64::NEG_INFINITY => Ok(IcemResult {
            best: cand,
            best_value: value,
            final_mean: mean,
        }),
        _ => Err(Error::AllCandidatesInvalid),
    }
}
