//! The episodic exploration loop.
//!
//! Per episode: build the method's policy against the current model (the
//! untrained ensemble in episode one), roll it out on the real environment
//! for `T` steps, append the trajectory to the dataset, and refit the
//! ensemble. Everything is a pure function of `(config, seed)` except the
//! recorded wall time.

use std::time::Instant;

use crate::dataset::{Transition, TransitionDataset};
use crate::ensemble::EnsembleModel;
use crate::envs::{env_reset, env_step, random_action};
use crate::error::{Error, Result};
use crate::planning::{
    exploration_reward, mpc_step, MpcController, PlannerSpec, Propagation, RewardSource,
};
use crate::seed::{self, salt};

use super::config::{ExperimentConfig, Method};

/// Per-episode metrics. `wall_ms` is measured, not derived from the seed;
/// every other column reproduces bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    /// Realized `sum_t ||sigma_n(s_t, a_t)||` under the model the episode
    /// was planned with.
    pub exploration_return: f64,
    /// Mean final per-particle training loss after the episode's refit.
    pub train_loss: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentRecord {
    pub rows: Vec<EpisodeRow>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub dataset: TransitionDataset,
    pub model: EnsembleModel,
    pub record: ExperimentRecord,
}

fn wrap(episode: usize, phase: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| Error::Experiment {
        episode,
        phase,
        source: Box::new(e),
    }
}

/// Runs `config.run.episodes` exploration episodes with the given master
/// seed and returns the dataset, the final model, and the record.
pub fn run_experiment(config: &ExperimentConfig, master_seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let env = &config.env;
    let d_s = env.state_dim();
    let d_a = env.action_dim();

    let mut model = EnsembleModel::init(
        d_s,
        d_a,
        config.model.architecture(),
        config.model.ensemble_size,
        config.model.beta,
        config.model.aleatoric_std,
        seed::derive(master_seed, &[salt::PARTICLE_INIT]),
    )?;
    let mut dataset = TransitionDataset::new(d_s, d_a);
    let mut record = ExperimentRecord::default();

    let icem = config.icem.to_config(env.action_bounds());
    let planner_spec = |propagation: Propagation, reward_source: RewardSource| PlannerSpec {
        propagation,
        reward_source,
        horizon: config.planner.horizon,
        beta: config.model.beta,
        noise_seed: config.planner.noise_seed,
    };

    let spec = match &config.run.method {
        Method::Random => None,
        Method::SoftAE => Some(planner_spec(
            Propagation::Optimistic,
            RewardSource::EpistemicUncertainty,
        )),
        Method::MeanAE => Some(planner_spec(
            Propagation::Mean,
            RewardSource::EpistemicUncertainty,
        )),
        Method::PetsAE => Some(planner_spec(
            Propagation::TrajectorySampling,
            RewardSource::EpistemicUncertainty,
        )),
        Method::Hucrl { train_task_id } => Some(planner_spec(
            Propagation::Optimistic,
            RewardSource::Task(train_task_id.clone()),
        )),
    };

    for episode in 1..=config.run.episodes {
        let started = Instant::now();
        let ep_seed = seed::derive(master_seed, &[salt::EPISODE, episode as u64]);

        let mut state = env_reset(env, seed::derive(ep_seed, &[salt::RESET]));
        let mut policy_rng = seed::rng(ep_seed, &[salt::POLICY]);
        let mut controller = MpcController::new();
        let resolved = spec
            .as_ref()
            .map(|s| s.reward_source.resolve(env, &config.tasks))
            .transpose()
            .map_err(wrap(episode, "resolve reward"))?;

        let mut transitions = Vec::with_capacity(config.run.rollout_horizon);
        let mut exploration_return = 0.0;

        for t in 0..config.run.rollout_horizon {
            let obs = state.observe(env);
            let action = match (&spec, &resolved) {
                (Some(s), Some(r)) => {
                    let (a, _diag) = mpc_step(
                        &mut controller,
                        &model,
                        s,
                        r,
                        &icem,
                        &obs,
                        seed::derive(ep_seed, &[salt::STEP, t as u64]),
                    )
                    .map_err(wrap(episode, "planning"))?;
                    a
                }
                _ => random_action(&env.action_bounds(), &mut policy_rng),
            };

            let pred = model
                .predict(&obs, &action)
                .map_err(wrap(episode, "uncertainty probe"))?;
            exploration_return += exploration_reward(&pred.std);

            let (next_state, info) =
                env_step(env, &state, &action).map_err(wrap(episode, "env step"))?;
            let next_obs = next_state.observe(env);
            transitions.push(Transition {
                state: obs,
                action: info.applied_action,
                next_state: next_obs,
            });
            state = next_state;
        }

        dataset
            .append_episode(transitions)
            .map_err(wrap(episode, "dataset append"))?;

        let report = model
            .fit(
                &dataset,
                &config.fit,
                seed::derive(ep_seed, &[salt::SHUFFLE]),
            )
            .map_err(wrap(episode, "model fit"))?;

        record.rows.push(EpisodeRow {
            episode,
            exploration_return,
            train_loss: report.mean_final_loss(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    Ok(RunOutput {
        dataset,
        model,
        record,
    })
}
