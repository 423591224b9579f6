//! Held-out evaluation set: rollouts toward uniformly sampled workspace
//! targets under a simple proportional torque heuristic, trimmed on target
//! reach so near-goal regions are not oversampled.

use rand::Rng;

use crate::dataset::{Transition, TransitionDataset};
use crate::envs::{arc_point, env_reset, env_step, EnvKind, EnvSpec, EnvState, REACH_DELTA};
use crate::error::{Error, Result};
use crate::seed::{self, salt};

/// Widest tip polar angle sampled for held-out targets, radians. Inside
/// the statically reachable set for the default arm.
const TARGET_PHI_MAX: f64 = 1.5;

/// Proportional gain relative to the joint stiffness. Large enough that
/// the steady-state droop stays within the reach threshold for near
/// targets.
const KP_STIFFNESS_RATIO: f64 = 20.0;
const KD_DAMPING_RATIO: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutReport {
    pub total_rollouts: usize,
    /// Rollouts trimmed because the tip reached its target.
    pub truncated_rollouts: usize,
}

/// Generates the held-out transition set. Defined for the elastic arm
/// (the protocol relies on reach geometry).
pub fn generate_heldout(
    env: &EnvSpec,
    n_targets: usize,
    steps_per_target: usize,
    heldout_seed: u64,
) -> Result<(TransitionDataset, HeldoutReport)> {
    let arm = match &env.kind {
        EnvKind::ElasticArm(p) => p.clone(),
        _ => {
            return Err(Error::Usage(
                "held-out generation is defined for the elastic arm".into(),
            ))
        }
    };
    env.validate()?;

    let mut dataset = TransitionDataset::new(env.state_dim(), env.action_dim());
    let mut report = HeldoutReport {
        total_rollouts: n_targets,
        truncated_rollouts: 0,
    };
    let mut rng = seed::rng(heldout_seed, &[salt::HELDOUT]);
    let kp = KP_STIFFNESS_RATIO * arm.joint_stiffness;
    let kd = KD_DAMPING_RATIO * arm.joint_damping;

    for _ in 0..n_targets {
        // target on the uniform-curvature arc; the matching joint posture
        // bends every joint by 2*phi/n
        let phi: f64 = rng.gen_range(-TARGET_PHI_MAX..TARGET_PHI_MAX);
        let target = arc_point(arm.max_reach(), phi);
        let desired = vec![2.0 * phi / arm.n_links as f64; arm.n_links];

        let mut state = env_reset(env, 0);
        let mut transitions = Vec::with_capacity(steps_per_target);
        for _ in 0..steps_per_target {
            let action: Vec<f64> = match &state {
                EnvState::Arm { angles, velocities } => (0..arm.n_links)
                    .map(|j| kp * (desired[j] - angles[j]) - kd * velocities[j])
                    .collect(),
                _ => unreachable!(),
            };
            let obs = state.observe(env);
            let (next, info) = env_step(env, &state, &action)?;
            transitions.push(Transition {
                state: obs,
                action: info.applied_action,
                next_state: next.observe(env),
            });
            state = next;
            let tip = info.tip.unwrap();
            let dist = ((tip[0] - target[0]).powi(2) + (tip[1] - target[1]).powi(2)).sqrt();
            if dist <= REACH_DELTA {
                report.truncated_rollouts += 1;
                break;
            }
        }
        dataset.append_episode(transitions)?;
    }
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::ArmParams;

    fn arm_env() -> EnvSpec {
        EnvSpec::elastic_arm(ArmParams::default())
    }

    #[test]
    fn zero_targets_give_empty_dataset() {
        let (ds, report) = generate_heldout(&arm_env(), 0, 40, 1).unwrap();
        assert!(ds.is_empty());
        assert_eq!(report.total_rollouts, 0);
    }

    #[test]
    fn fifty_targets_bounded_size_with_truncation() {
        let (ds, report) = generate_heldout(&arm_env(), 50, 40, 7).unwrap();
        assert!(ds.len() <= 2000, "dataset too large: {}", ds.len());
        assert!(!ds.is_empty());
        assert!(
            report.truncated_rollouts >= 1,
            "expected at least one rollout trimmed on target reach"
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, _) = generate_heldout(&arm_env(), 10, 30, 3).unwrap();
        let (b, _) = generate_heldout(&arm_env(), 10, 30, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cart_env_is_rejected() {
        let env = EnvSpec::delayed_cart(crate::envs::CartParams::default());
        assert!(matches!(
            generate_heldout(&env, 5, 10, 0),
            Err(Error::Usage(_))
        ));
    }
}
