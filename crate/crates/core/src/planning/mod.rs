//! Planning: objectives, state propagation, the iCEM optimizer, and the
//! receding-horizon controller.
//!
//! Three propagation schemes turn a one-step predictive model into
//! imagined rollouts:
//!
//! - `Mean`: next state is the ensemble mean.
//! - `TrajectorySampling`: next state is sampled from `N(mean, std^2)`.
//! - `Optimistic`: hallucinated controls `eta in [-1, 1]^d_s` pick the most
//!   favorable dynamics inside the confidence set `mean +/- beta * std`.
//!
//! Process noise is taken as zero inside rollouts (certainty-equivalent
//! planning); stochasticity enters only through trajectory sampling.

pub mod icem;
pub mod mpc;
pub mod noise;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::DynamicsModel;
use crate::envs::{task_reward, EnvSpec, TaskSpec};
use crate::error::{Error, Result};
use crate::seed;

pub use icem::{icem_optimize, ICemConfig, IcemResult};
pub use mpc::{mpc_step, MpcController, MpcDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    Mean,
    TrajectorySampling,
    Optimistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    /// Intrinsic exploration reward: the norm of the epistemic std.
    EpistemicUncertainty,
    /// Extrinsic task reward looked up by task id.
    Task(String),
}

/// How a planner rolls the model forward and what it optimizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSpec {
    pub propagation: Propagation,
    pub reward_source: RewardSource,
    pub horizon: usize,
    /// Confidence-set radius multiplier; only read by `Optimistic`.
    pub beta: f64,
    pub noise_seed: u64,
}

impl PlannerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("planner horizon must be >= 1".into()));
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidConfig("planner beta must be >= 0".into()));
        }
        Ok(())
    }
}

/// Reward source with the task id resolved against the environment.
#[derive(Clone, Copy)]
pub enum ResolvedReward<'a> {
    Uncertainty,
    Task { env: &'a EnvSpec, task: &'a TaskSpec },
    /// Arbitrary state-action reward, evaluated on the post-step state.
    Custom(&'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync)),
}

impl RewardSource {
    pub fn resolve<'a>(
        &self,
        env: &'a EnvSpec,
        tasks: &'a [TaskSpec],
    ) -> Result<ResolvedReward<'a>> {
        match self {
            RewardSource::EpistemicUncertainty => Ok(ResolvedReward::Uncertainty),
            RewardSource::Task(id) => {
                let task = tasks
                    .iter()
                    .find(|t| &t.task_id == id)
                    .ok_or_else(|| Error::UnknownTask(id.clone()))?;
                if !task.matches_env(env) {
                    return Err(Error::TaskEnvMismatch {
                        task: id.clone(),
                        env: env.kind_name().into(),
                    });
                }
                Ok(ResolvedReward::Task { env, task })
            }
        }
    }
}

/// Exploration reward: the Euclidean norm of the epistemic std.
pub fn exploration_reward(sigma: &[f64]) -> f64 {
    sigma.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// A candidate plan: `H x d_a` actions, plus `H x d_s` hallucinated
/// controls in `[-1, 1]` when planning optimistically.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedActionSeq {
    horizon: usize,
    d_a: usize,
    d_s: usize,
    actions: Vec<f64>,
    hallucinated: Option<Vec<f64>>,
}

impl AugmentedActionSeq {
    pub fn new(horizon: usize, d_a: usize, actions: Vec<f64>) -> Self {
        assert_eq!(actions.len(), horizon * d_a);
        Self {
            horizon,
            d_a,
            d_s: 0,
            actions,
            hallucinated: None,
        }
    }

    pub fn with_hallucinated(
        horizon: usize,
        d_a: usize,
        d_s: usize,
        actions: Vec<f64>,
        hallucinated: Vec<f64>,
    ) -> Self {
        assert_eq!(actions.len(), horizon * d_a);
        assert_eq!(hallucinated.len(), horizon * d_s);
        Self {
            horizon,
            d_a,
            d_s,
            actions,
            hallucinated: Some(hallucinated),
        }
    }

    /// Splits a flat iCEM candidate (`H` rows of `d_a` actions followed by
    /// `d_s` hallucinated entries when `halluc_dim > 0`).
    pub fn from_flat(flat: &[f64], horizon: usize, d_a: usize, halluc_dim: usize) -> Self {
        let d = d_a + halluc_dim;
        assert_eq!(flat.len(), horizon * d);
        let mut actions = Vec::with_capacity(horizon * d_a);
        let mut halluc = Vec::with_capacity(horizon * halluc_dim);
        for h in 0..horizon {
            let row = &flat[h * d..(h + 1) * d];
            actions.extend_from_slice(&row[..d_a]);
            halluc.extend_from_slice(&row[d_a..]);
        }
        Self {
            horizon,
            d_a,
            d_s: halluc_dim,
            actions,
            hallucinated: (halluc_dim > 0).then_some(halluc),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn action_row(&self, h: usize) -> &[f64] {
        &self.actions[h * self.d_a..(h + 1) * self.d_a]
    }

    pub fn eta_row(&self, h: usize) -> Option<&[f64]> {
        self.hallucinated
            .as_ref()
            .map(|e| &e[h * self.d_s..(h + 1) * self.d_s])
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }
}

/// One-step state propagation under a scheme. `Optimistic` needs an
/// `eta` row in `[-1, 1]^d_s`; `TrajectorySampling` needs a seeded rng;
/// passing either to the wrong scheme is a usage error.
pub fn propagate(
    model: &dyn DynamicsModel,
    scheme: Propagation,
    beta: f64,
    state: &[f64],
    action: &[f64],
    eta: Option<&[f64]>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<f64>> {
    match scheme {
        Propagation::Mean | Propagation::Optimistic => {
            if rng.is_some() {
                return Err(Error::Usage(format!(
                    "{scheme:?} propagation takes no random source"
                )));
            }
        }
        Propagation::TrajectorySampling => {
            if rng.is_none() {
                return Err(Error::Usage(
                    "trajectory sampling requires an explicit seeded random source".into(),
                ));
            }
        }
    }
    match scheme {
        Propagation::Optimistic => {
            let eta = eta.ok_or_else(|| {
                Error::Usage("optimistic propagation requires an eta row".into())
            })?;
            if eta.len() != model.state_dim() {
                return Err(Error::ShapeMismatch {
                    context: "eta row",
                    expected: model.state_dim(),
                    got: eta.len(),
                });
            }
            if eta.iter().any(|e| !(-1.0..=1.0).contains(e)) {
                return Err(Error::Usage("eta entries must lie in [-1, 1]".into()));
            }
        }
        _ => {
            if eta.is_some() {
                return Err(Error::Usage(format!(
                    "{scheme:?} propagation takes no eta row"
                )));
            }
        }
    }

    let pred = model.predict(state, action)?;
    let mut next = pred.mean;
    match scheme {
        Propagation::Mean => {}
        Propagation::TrajectorySampling => {
            let rng = rng.unwrap();
            for (n, s) in next.iter_mut().zip(&pred.std) {
                let z: f64 = rng.sample(StandardNormal);
                *n += s * z;
            }
        }
        Propagation::Optimistic => {
            let eta = eta.unwrap();
            for ((n, s), e) in next.iter_mut().zip(&pred.std).zip(eta) {
                *n += beta * s * e;
            }
        }
    }
    Ok(next)
}

/// Simulates `spec.horizon` model steps under the candidate and accumulates
/// the reward source. Trajectory sampling averages `ts_rollouts`
/// independent rollouts (incremental mean). A non-finite intermediate state
/// discards the candidate by returning negative infinity.
pub fn rollout_value(
    model: &dyn DynamicsModel,
    spec: &PlannerSpec,
    reward: &ResolvedReward<'_>,
    s0: &[f64],
    candidate: &AugmentedActionSeq,
    ts_rollouts: usize,
    rollout_seed: u64,
) -> f64 {
    debug_assert_eq!(candidate.horizon(), spec.horizon);
    let repeats = match spec.propagation {
        Propagation::TrajectorySampling => ts_rollouts.max(1),
        _ => 1,
    };
    let mut mean_value = 0.0;
    for k in 0..repeats {
        let mut rng = seed::rng(rollout_seed, &[k as u64]);
        let v = single_rollout(model, spec, reward, s0, candidate, &mut rng, None);
        if v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        mean_value += (v - mean_value) / (k + 1) as f64;
    }
    mean_value
}

/// One imagined rollout; optionally records the per-step `||sigma||`.
pub(crate) fn single_rollout(
    model: &dyn DynamicsModel,
    spec: &PlannerSpec,
    reward: &ResolvedReward<'_>,
    s0: &[f64],
    candidate: &AugmentedActionSeq,
    rng: &mut ChaCha8Rng,
    mut sigma_trace: Option<&mut Vec<f64>>,
) -> f64 {
    let mut state = s0.to_vec();
    let mut total = 0.0;
    for h in 0..spec.horizon {
        let action = candidate.action_row(h);
        let pred = match model.predict(&state, action) {
            Ok(p) => p,
            Err(_) => return f64::NEG_INFINITY,
        };
        let sigma_norm = exploration_reward(&pred.std);
        if let Some(trace) = sigma_trace.as_deref_mut() {
            trace.push(sigma_norm);
        }

        let mut next = pred.mean;
        match spec.propagation {
            Propagation::Mean => {}
            Propagation::TrajectorySampling => {
                for (n, s) in next.iter_mut().zip(&pred.std) {
                    let z: f64 = rng.sample(StandardNormal);
                    *n += s * z;
                }
            }
            Propagation::Optimistic => {
                let eta = candidate.eta_row(h).unwrap_or(&[]);
                debug_assert_eq!(eta.len(), next.len());
                for ((n, s), e) in next.iter_mut().zip(&pred.std).zip(eta) {
                    *n += spec.beta * s * e;
                }
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }

        match reward {
            ResolvedReward::Uncertainty => total += sigma_norm,
            ResolvedReward::Task { env, task } => {
                match task_reward(env, task, &next, action) {
                    Ok(r) => total += r,
                    Err(_) => return f64::NEG_INFINITY,
                }
            }
            ResolvedReward::Custom(f) => total += f(&next, action),
        }
        state = next;
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::test_util::{degenerate_model, diverse_model};

    #[test]
    fn exploration_reward_is_euclidean_norm() {
        assert_eq!(exploration_reward(&[0.0, 0.0]), 0.0);
        assert_eq!(exploration_reward(&[3.0, 4.0]), 5.0);
        assert_eq!(exploration_reward(&[1.0, 1.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn optimistic_with_zero_eta_equals_mean() {
        let m = diverse_model(3, 1, 7);
        let s = [0.2, -0.4, 0.1];
        let a = [0.3];
        let mean = propagate(&m, Propagation::Mean, 2.0, &s, &a, None, None).unwrap();
        let opt = propagate(
            &m,
            Propagation::Optimistic,
            2.0,
            &s,
            &a,
            Some(&[0.0, 0.0, 0.0]),
            None,
        )
        .unwrap();
        assert_eq!(mean, opt);
    }

    #[test]
    fn optimistic_with_zero_sigma_equals_mean_for_any_eta() {
        let m = degenerate_model(2, 1, 3);
        let s = [0.1, 0.2];
        let a = [0.0];
        let mean = propagate(&m, Propagation::Mean, 2.0, &s, &a, None, None).unwrap();
        let opt = propagate(
            &m,
            Propagation::Optimistic,
            2.0,
            &s,
            &a,
            Some(&[1.0, -1.0]),
            None,
        )
        .unwrap();
        assert_eq!(mean, opt);
    }

    #[test]
    fn optimistic_formula_substitution() {
        // mu = (0,0), sigma = (1, 0.5), beta = 2, eta = (1,-1) -> (2,-1)
        struct Fixed;
        impl DynamicsModel for Fixed {
            fn state_dim(&self) -> usize {
                2
            }
            fn action_dim(&self) -> usize {
                1
            }
            fn predict(&self, _: &[f64], _: &[f64]) -> crate::Result<crate::ensemble::Prediction> {
                Ok(crate::ensemble::Prediction {
                    mean: vec![0.0, 0.0],
                    std: vec![1.0, 0.5],
                })
            }
        }
        let next = propagate(
            &Fixed,
            Propagation::Optimistic,
            2.0,
            &[0.0, 0.0],
            &[0.0],
            Some(&[1.0, -1.0]),
            None,
        )
        .unwrap();
        assert_eq!(next, vec![2.0, -1.0]);
    }

    #[test]
    fn scheme_argument_mismatches_are_usage_errors() {
        let m = diverse_model(2, 1, 1);
        let s = [0.0, 0.0];
        let a = [0.0];
        let mut rng = seed::rng(0, &[]);
        assert!(matches!(
            propagate(&m, Propagation::Mean, 0.0, &s, &a, None, Some(&mut rng)),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            propagate(&m, Propagation::Mean, 0.0, &s, &a, Some(&[0.0, 0.0]), None),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            propagate(&m, Propagation::TrajectorySampling, 0.0, &s, &a, None, None),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            propagate(&m, Propagation::Optimistic, 2.0, &s, &a, None, None),
            Err(Error::Usage(_))
        ));
        // eta outside [-1,1]
        assert!(matches!(
            propagate(&m, Propagation::Optimistic, 2.0, &s, &a, Some(&[1.5, 0.0]), None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn ts_with_zero_sigma_equals_mean() {
        let m = degenerate_model(2, 1, 11);
        let s = [0.4, -0.3];
        let a = [0.2];
        let mean = propagate(&m, Propagation::Mean, 0.0, &s, &a, None, None).unwrap();
        let mut rng = seed::rng(99, &[]);
        let ts = propagate(
            &m,
            Propagation::TrajectorySampling,
            0.0,
            &s,
            &a,
            None,
            Some(&mut rng),
        )
        .unwrap();
        assert_eq!(mean, ts);
    }

    #[test]
    fn zero_sigma_model_has_zero_uncertainty_value() {
        let m = degenerate_model(2, 1, 5);
        let spec = PlannerSpec {
            propagation: Propagation::Mean,
            reward_source: RewardSource::EpistemicUncertainty,
            horizon: 4,
            beta: 2.0,
            noise_seed: 0,
        };
        let cand = AugmentedActionSeq::new(4, 1, vec![0.1, -0.1, 0.2, 0.0]);
        let v = rollout_value(
            &m,
            &spec,
            &ResolvedReward::Uncertainty,
            &[0.0, 0.0],
            &cand,
            1,
            0,
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn one_step_task_value_matches_hand_evaluation() {
        // Linear one-particle-equivalent model on the cart; H=1 task value
        // must equal the hand-computed reward of mu(s0, a0).
        use crate::envs::{CartParams, EnvSpec, RewardForm, TaskSpec};
        struct Linear;
        impl DynamicsModel for Linear {
            fn state_dim(&self) -> usize {
                4
            }
            fn action_dim(&self) -> usize {
                1
            }
            fn predict(&self, s: &[f64], a: &[f64]) -> crate::Result<crate::ensemble::Prediction> {
                // position += 0.1*velocity; velocity += 0.5*a; queue ignored
                Ok(crate::ensemble::Prediction {
                    mean: vec![s[0] + 0.1 * s[1], s[1] + 0.5 * a[0], 0.0, 0.0],
                    std: vec![0.0; 4],
                })
            }
        }
        let env = EnvSpec::delayed_cart(CartParams::default());
        let task = TaskSpec {
            task_id: "vel".into(),
            reward: RewardForm::VelocityAlong { sign: 1 },
            episode_horizon: 10,
        };
        let spec = PlannerSpec {
            propagation: Propagation::Mean,
            reward_source: RewardSource::Task("vel".into()),
            horizon: 1,
            beta: 0.0,
            noise_seed: 0,
        };
        let cand = AugmentedActionSeq::new(1, 1, vec![0.8]);
        let v = rollout_value(
            &Linear,
            &spec,
            &ResolvedReward::Task {
                env: &env,
                task: &task,
            },
            &[0.0, 0.2, 0.0, 0.0],
            &cand,
            1,
            0,
        );
        // next velocity = 0.2 + 0.5*0.8 = 0.6
        assert!((v - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mean_and_optimistic_zero_eta_rollouts_match_bitwise() {
        let m = diverse_model(2, 1, 21);
        let mk_spec = |prop| PlannerSpec {
            propagation: prop,
            reward_source: RewardSource::EpistemicUncertainty,
            horizon: 5,
            beta: 2.0,
            noise_seed: 0,
        };
        let actions = vec![0.2, -0.1, 0.3, 0.0, 0.1];
        let cand_mean = AugmentedActionSeq::new(5, 1, actions.clone());
        let cand_opt =
            AugmentedActionSeq::with_hallucinated(5, 1, 2, actions, vec![0.0; 10]);
        let s0 = [0.1, -0.2];
        let v_mean = rollout_value(
            &m,
            &mk_spec(Propagation::Mean),
            &ResolvedReward::Uncertainty,
            &s0,
            &cand_mean,
            1,
            7,
        );
        let v_opt = rollout_value(
            &m,
            &mk_spec(Propagation::Optimistic),
            &ResolvedReward::Uncertainty,
            &s0,
            &cand_opt,
            1,
            7,
        );
        assert_eq!(v_mean, v_opt);
    }

    #[test]
    fn non_finite_states_discard_candidate_with_neg_infinity() {
        struct Exploding;
        impl DynamicsModel for Exploding {
            fn state_dim(&self) -> usize {
                1
            }
            fn action_dim(&self) -> usize {
                1
            }
            fn predict(&self, s: &[f64], _: &[f64]) -> crate::Result<crate::ensemble::Prediction> {
                Ok(crate::ensemble::Prediction {
                    mean: vec![s[0] * 1e200],
                    std: vec![0.0],
                })
            }
        }
        let spec = PlannerSpec {
            propagation: Propagation::Mean,
            reward_source: RewardSource::EpistemicUncertainty,
            horizon: 3,
            beta: 0.0,
            noise_seed: 0,
        };
        let cand = AugmentedActionSeq::new(3, 1, vec![0.0; 3]);
        let v = rollout_value(
            &Exploding,
            &spec,
            &ResolvedReward::Uncertainty,
            &[1.0],
            &cand,
            1,
            0,
        );
        assert_eq!(v, f64::NEG_INFINITY);
    }
}
