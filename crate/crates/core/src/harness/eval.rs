//! Model and controller evaluation: held-out normalized MSE, zero-shot
//! task returns, and the epistemic probe.

use crate::dataset::TransitionDataset;
use crate::ensemble::DynamicsModel;
use crate::envs::{env_reset, env_step, random_action, task_reward, EnvSpec, TaskSpec};
use crate::error::{Error, Result};
use crate::planning::{
    exploration_reward, mpc_step, ICemConfig, MpcController, PlannerSpec, Propagation,
    RewardSource,
};
use crate::seed::{self, salt};

/// Held-out prediction error, normalized per dimension by the std of the
/// held-out next states.
#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    /// Mean over samples and included dimensions of the squared normalized
    /// residual.
    pub normalized_mse: f64,
    /// Per-dimension mean squared normalized residual (0.0 for skipped).
    pub per_dim: Vec<f64>,
    /// Dimensions excluded because their held-out std was (near) zero.
    pub skipped_dims: Vec<usize>,
}

/// Normalized MSE of the model mean against held-out next states.
pub fn evaluate_model_mse(
    model: &dyn DynamicsModel,
    heldout: &TransitionDataset,
) -> Result<MseReport> {
    if heldout.is_empty() {
        return Err(Error::EmptyBatch("held-out dataset"));
    }
    if heldout.state_dim() != model.state_dim() || heldout.action_dim() != model.action_dim() {
        return Err(Error::ShapeMismatch {
            context: "held-out dims",
            expected: model.state_dim(),
            got: heldout.state_dim(),
        });
    }
    let d = heldout.state_dim();
    let n = heldout.len() as f64;

    let mut mean = vec![0.0; d];
    for rec in heldout.records() {
        for i in 0..d {
            mean[i] += rec.next_state[i];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; d];
    for rec in heldout.records() {
        for i in 0..d {
            let e = rec.next_state[i] - mean[i];
            std[i] += e * e;
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
    }

    let skipped_dims: Vec<usize> = (0..d).filter(|&i| std[i] <= 1e-12).collect();
    if skipped_dims.len() == d {
        return Err(Error::InvalidConfig(
            "every held-out dimension has zero variance".into(),
        ));
    }

    let mut per_dim = vec![0.0; d];
    for rec in heldout.records() {
        let pred = model.predict(&rec.state, &rec.action)?;
        for i in 0..d {
            if std[i] > 1e-12 {
                let e = (pred.mean[i] - rec.next_state[i]) / std[i];
                per_dim[i] += e * e;
            }
        }
    }
    let mut total = 0.0;
    for i in 0..d {
        per_dim[i] /= n;
        if std[i] > 1e-12 {
            total += per_dim[i];
        }
    }
    let included = (d - skipped_dims.len()) as f64;
    Ok(MseReport {
        normalized_mse: total / included,
        per_dim,
        skipped_dims,
    })
}

/// Zero-shot evaluation outcome for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEvalResult {
    pub task_id: String,
    pub mean_return: f64,
    /// Population std over episodes (0 for a single episode).
    pub std_return: f64,
    pub episode_returns: Vec<f64>,
    /// Episodes that failed with a planner error, with the message.
    pub failures: Vec<(usize, String)>,
}

/// Runs MPC with the task reward under mean propagation (evaluation always
/// plans on the mean so data quality is the only difference between
/// methods) for `n_episodes` fresh-seeded episodes per task.
pub fn evaluate_zero_shot(
    model: &dyn DynamicsModel,
    env: &EnvSpec,
    tasks: &[TaskSpec],
    horizon: usize,
    icem: &ICemConfig,
    n_episodes: usize,
    eval_seed: u64,
) -> Result<Vec<TaskEvalResult>> {
    env.validate()?;
    let mut results = Vec::with_capacity(tasks.len());
    for (ti, task) in tasks.iter().enumerate() {
        let spec = PlannerSpec {
            propagation: Propagation::Mean,
            reward_source: RewardSource::Task(task.task_id.clone()),
            horizon,
            beta: 0.0,
            noise_seed: 0,
        };
        let resolved = spec.reward_source.resolve(env, tasks)?;

        let mut episode_returns = Vec::with_capacity(n_episodes);
        let mut failures = Vec::new();
        for ep in 0..n_episodes {
            let ep_seed = seed::derive(eval_seed, &[salt::EVAL, ti as u64, ep as u64]);
            match run_task_episode(model, env, task, &spec, &resolved, icem, ep_seed) {
                Ok(ret) => episode_returns.push(ret),
                Err(e) => failures.push((ep, e.to_string())),
            }
        }
        let n = episode_returns.len().max(1) as f64;
        let mean = episode_returns.iter().sum::<f64>() / n;
        let var = episode_returns
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / n;
        results.push(TaskEvalResult {
            task_id: task.task_id.clone(),
            mean_return: if episode_returns.is_empty() { f64::NAN } else { mean },
            std_return: var.sqrt(),
            episode_returns,
            failures,
        });
    }
    Ok(results)
}

fn run_task_episode(
    model: &dyn DynamicsModel,
    env: &EnvSpec,
    task: &TaskSpec,
    spec: &PlannerSpec,
    resolved: &crate::planning::ResolvedReward<'_>,
    icem: &ICemConfig,
    ep_seed: u64,
) -> Result<f64> {
    let mut state = env_reset(env, seed::derive(ep_seed, &[salt::RESET]));
    let mut controller = MpcController::new();
    let mut total = 0.0;
    for t in 0..task.episode_horizon {
        let obs = state.observe(env);
        let (action, _) = mpc_step(
            &mut controller,
            model,
            spec,
            resolved,
            icem,
            &obs,
            seed::derive(ep_seed, &[salt::STEP, t as u64]),
        )?;
        let (next, _) = env_step(env, &state, &action)?;
        let next_obs = next.observe(env);
        total += task_reward(env, task, &next_obs, &action)?;
        state = next;
    }
    Ok(total)
}

/// Mean `||sigma||` over a probe set of `n_pairs` state-action pairs
/// collected by a seeded random-policy rollout. Used to track epistemic
/// contraction across episodes.
pub fn probe_sigma(
    model: &dyn DynamicsModel,
    env: &EnvSpec,
    n_pairs: usize,
    probe_seed: u64,
) -> Result<f64> {
    let pairs = probe_pairs(env, n_pairs, probe_seed)?;
    let mut total = 0.0;
    for (s, a) in &pairs {
        let pred = model.predict(s, a)?;
        total += exploration_reward(&pred.std);
    }
    Ok(total / pairs.len() as f64)
}

/// The probe pairs themselves (fixed by the seed, independent of any model).
pub fn probe_pairs(
    env: &EnvSpec,
    n_pairs: usize,
    probe_seed: u64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if n_pairs == 0 {
        return Err(Error::EmptyBatch("probe set"));
    }
    let mut rng = seed::rng(probe_seed, &[salt::PROBE]);
    let bounds = env.action_bounds();
    let mut state = env_reset(env, 0);
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let obs = state.observe(env);
        let action = random_action(&bounds, &mut rng);
        let (next, _) = env_step(env, &state, &action)?;
        pairs.push((obs, action));
        state = next;
    }
    Ok(pairs)
}
