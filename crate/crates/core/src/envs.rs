//! Desk-scale surrogate environments and task rewards.
//!
//! Two systems keep the learning-relevant structure of much heavier
//! simulators: an elastic-chain planar arm (nonlinear tip kinematics,
//! torque control, stiff joints) and a delayed-actuation damped cart
//! (delayed feedback). Both are deterministic, side-effect-free maps
//! `(state, action) -> next_state` given a spec.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elastic-chain planar arm parameters. The arm lives in the x-z plane
/// with no gravity; each joint has a linear spring toward zero angle and
/// viscous damping, driven by a clipped torque input per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmParams {
    pub n_links: usize,
    /// Link length in meters.
    pub link_length: f64,
    /// Joint stiffness, N*m/rad.
    pub joint_stiffness: f64,
    /// Joint damping, N*m*s/rad.
    pub joint_damping: f64,
    /// Point mass at the end of each link, kg.
    pub link_mass: f64,
    /// Symmetric torque bound per joint, N*m.
    pub torque_limit: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            n_links: 6,
            link_length: 0.1,
            joint_stiffness: 0.5,
            joint_damping: 0.1,
            link_mass: 0.2,
            torque_limit: 0.4,
        }
    }
}

impl ArmParams {
    /// Maximum reach: the tip of the fully extended chain.
    pub fn max_reach(&self) -> f64 {
        self.n_links as f64 * self.link_length
    }

    /// Constant per-joint inertia: distal point masses at straight-arm
    /// lever arms, `I_j = m * l^2 * sum_{d=1..n-j} d^2`.
    pub fn joint_inertia(&self, joint: usize) -> f64 {
        let distal = self.n_links - joint;
        let sum_sq: f64 = (1..=distal).map(|d| (d * d) as f64).sum();
        self.link_mass * self.link_length * self.link_length * sum_sq
    }
}

/// Delayed-actuation damped cart: commanded forces take effect after
/// `action_delay_steps` control steps; linear drag opposes the velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub mass: f64,
    pub drag_coeff: f64,
    pub action_delay_steps: usize,
    pub force_limit: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            drag_coeff: 0.5,
            action_delay_steps: 2,
            force_limit: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvKind {
    ElasticArm(ArmParams),
    DelayedCart(CartParams),
}

/// Environment specification: kind-specific physics plus the control period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    #[serde(flatten)]
    pub kind: EnvKind,
    /// Control period in seconds.
    pub dt: f64,
    /// Integrator substeps per control step (arm only; >= 4 for stability).
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    8
}

impl EnvSpec {
    pub fn elastic_arm(params: ArmParams) -> Self {
        Self {
            kind: EnvKind::ElasticArm(params),
            dt: 0.05,
            substeps: default_substeps(),
        }
    }

    pub fn delayed_cart(params: CartParams) -> Self {
        Self {
            kind: EnvKind::DelayedCart(params),
            dt: 0.05,
            substeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        match &self.kind {
            EnvKind::ElasticArm(p) => {
                if p.n_links == 0
                    || !(p.link_length > 0.0)
                    || !(p.joint_stiffness > 0.0)
                    || !(p.joint_damping > 0.0)
                    || !(p.link_mass > 0.0)
                    || !(p.torque_limit > 0.0)
                {
                    return Err(Error::InvalidConfig(
                        "arm physical constants must be positive".into(),
                    ));
                }
                if self.substeps < 4 {
                    return Err(Error::InvalidConfig(
                        "arm integration needs >= 4 substeps".into(),
                    ));
                }
            }
            EnvKind::DelayedCart(p) => {
                if !(p.mass > 0.0) || !(p.drag_coeff >= 0.0) || !(p.force_limit > 0.0) {
                    return Err(Error::InvalidConfig(
                        "cart physical constants must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// State dimension. Arm: `[angles, velocities, tip_x, tip_z]`.
    /// Cart: `[position, velocity, pending force queue]`.
    pub fn state_dim(&self) -> usize {
        match &self.kind {
            EnvKind::ElasticArm(p) => 2 * p.n_links + 2,
            EnvKind::DelayedCart(p) => 2 + p.action_delay_steps,
        }
    }

    pub fn action_dim(&self) -> usize {
        match &self.kind {
            EnvKind::ElasticArm(p) => p.n_links,
            EnvKind::DelayedCart(_) => 1,
        }
    }

    /// Per-dimension `[lo, hi]` action bounds derived from the force/torque
    /// limits.
    pub fn action_bounds(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            EnvKind::ElasticArm(p) => vec![(-p.torque_limit, p.torque_limit); p.n_links],
            EnvKind::DelayedCart(p) => vec![(-p.force_limit, p.force_limit)],
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            EnvKind::ElasticArm(_) => "elastic_arm",
            EnvKind::DelayedCart(_) => "delayed_cart",
        }
    }
}

/// Internal environment state. The observed vector is derived via
/// [`EnvState::observe`]; the arm tip is always recomputed from forward
/// kinematics so it cannot drift out of sync with the angles.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    Arm {
        angles: Vec<f64>,
        velocities: Vec<f64>,
    },
    Cart {
        position: f64,
        velocity: f64,
        pending: VecDeque<f64>,
    },
}

impl EnvState {
    /// Flattened observation vector matching [`EnvSpec::state_dim`].
    pub fn observe(&self, spec: &EnvSpec) -> Vec<f64> {
        match (self, &spec.kind) {
            (EnvState::Arm { angles, velocities }, EnvKind::ElasticArm(p)) => {
                let mut out = Vec::with_capacity(2 * p.n_links + 2);
                out.extend_from_slice(angles);
                out.extend_from_slice(velocities);
                let tip = tip_position(angles, p.link_length);
                out.push(tip[0]);
                out.push(tip[1]);
                out
            }
            (
                EnvState::Cart {
                    position,
                    velocity,
                    pending,
                },
                EnvKind::DelayedCart(_),
            ) => {
                let mut out = Vec::with_capacity(2 + pending.len());
                out.push(*position);
                out.push(*velocity);
                out.extend(pending.iter());
                out
            }
            _ => panic!("state/spec kind mismatch"),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            EnvState::Arm { angles, velocities } => angles
                .iter()
                .chain(velocities.iter())
                .all(|v| v.is_finite()),
            EnvState::Cart {
                position,
                velocity,
                pending,
            } => {
                position.is_finite()
                    && velocity.is_finite()
                    && pending.iter().all(|v| v.is_finite())
            }
        }
    }
}

/// Planar forward kinematics: cumulative joint angles, unit links.
pub fn tip_position(angles: &[f64], link_length: f64) -> [f64; 2] {
    let mut x = 0.0;
    let mut z = 0.0;
    let mut heading = 0.0;
    for &a in angles {
        heading += a;
        x += link_length * heading.cos();
        z += link_length * heading.sin();
    }
    [x, z]
}

/// Kinetic plus elastic energy of the arm under the documented per-joint
/// dynamics; used by the passive-dissipation checks.
pub fn arm_energy(params: &ArmParams, state: &EnvState) -> f64 {
    match state {
        EnvState::Arm { angles, velocities } => {
            let mut e = 0.0;
            for j in 0..params.n_links {
                let inertia = params.joint_inertia(j);
                e += 0.5 * inertia * velocities[j] * velocities[j]
                    + 0.5 * params.joint_stiffness * angles[j] * angles[j];
            }
            e
        }
        _ => panic!("arm_energy on non-arm state"),
    }
}

/// Deterministic reset. The arm starts at rest (all angles zero); the cart
/// starts at the origin with an all-zero force queue. The seed is reserved
/// for an optional initial perturbation which is off by default.
pub fn env_reset(spec: &EnvSpec, _seed: u64) -> EnvState {
    match &spec.kind {
        EnvKind::ElasticArm(p) => EnvState::Arm {
            angles: vec![0.0; p.n_links],
            velocities: vec![0.0; p.n_links],
        },
        EnvKind::DelayedCart(p) => EnvState::Cart {
            position: 0.0,
            velocity: 0.0,
            pending: std::iter::repeat(0.0).take(p.action_delay_steps).collect(),
        },
    }
}

/// Per-step info: the action actually applied (after clipping) and, for the
/// arm, the resulting tip position.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub applied_action: Vec<f64>,
    pub clipped: bool,
    pub tip: Option<[f64; 2]>,
}

/// Advances the system by one control step. Out-of-bounds actions are
/// clipped (with a flag), mirroring how physical torque and pressure limits
/// behave.
pub fn env_step(spec: &EnvSpec, state: &EnvState, action: &[f64]) -> Result<(EnvState, StepInfo)> {
    if action.len() != spec.action_dim() {
        return Err(Error::ShapeMismatch {
            context: "env action",
            expected: spec.action_dim(),
            got: action.len(),
        });
    }
    if !state.is_finite() {
        return Err(Error::NonFinite {
            context: "env state",
            index: 0,
        });
    }
    if let Some(i) = action.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "env action",
            index: i,
        });
    }

    let bounds = spec.action_bounds();
    let mut clipped = false;
    let applied: Vec<f64> = action
        .iter()
        .zip(&bounds)
        .map(|(&a, &(lo, hi))| {
            let c = a.clamp(lo, hi);
            if c != a {
                clipped = true;
            }
            c
        })
        .collect();

    match (&spec.kind, state) {
        (EnvKind::ElasticArm(p), EnvState::Arm { angles, velocities }) => {
            let mut angles = angles.clone();
            let mut velocities = velocities.clone();
            let h = spec.dt / spec.substeps as f64;
            for _ in 0..spec.substeps {
                for j in 0..p.n_links {
                    let inertia = p.joint_inertia(j);
                    let torque = applied[j]
                        - p.joint_stiffness * angles[j]
                        - p.joint_damping * velocities[j];
                    // semi-implicit: velocity first, position with the new velocity
                    velocities[j] += h * torque / inertia;
                    angles[j] += h * velocities[j];
                }
            }
            let tip = tip_position(&angles, p.link_length);
            let next = EnvState::Arm { angles, velocities };
            Ok((
                next,
                StepInfo {
                    applied_action: applied,
                    clipped,
                    tip: Some(tip),
                },
            ))
        }
        (
            EnvKind::DelayedCart(p),
            EnvState::Cart {
                position,
                velocity,
                pending,
            },
        ) => {
            // enqueue the new command, apply the oldest; queue length is
            // invariant (zero delay means the action is immediate)
            let mut pending = pending.clone();
            pending.push_back(applied[0]);
            let force = pending.pop_front().unwrap();
            let accel = (force - p.drag_coeff * velocity) / p.mass;
            let new_velocity = velocity + spec.dt * accel;
            let new_position = position + spec.dt * new_velocity;
            Ok((
                EnvState::Cart {
                    position: new_position,
                    velocity: new_velocity,
                    pending,
                },
                StepInfo {
                    applied_action: applied,
                    clipped,
                    tip: None,
                },
            ))
        }
        _ => Err(Error::Usage("state does not match environment kind".into())),
    }
}

/// Reach threshold: distance at which the shaped reward saturates at 1.
pub const REACH_DELTA: f64 = 5e-3;

/// Default long-tail sharpness for the shaped reach reward, 1/m.
pub const DEFAULT_REACH_KAPPA: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RewardForm {
    /// Shaped long-tail reach reward on the arm tip:
    /// `g(d) = 1` for `d <= delta`, else `1 / (1 + kappa * (d - delta))`.
    ReachShaped {
        target: [f64; 2],
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// Signed x-velocity of the cart.
    VelocityAlong { sign: i8 },
}

fn default_kappa() -> f64 {
    DEFAULT_REACH_KAPPA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    #[serde(flatten)]
    pub reward: RewardForm,
    pub episode_horizon: usize,
}

impl TaskSpec {
    pub fn matches_env(&self, spec: &EnvSpec) -> bool {
        matches!(
            (&self.reward, &spec.kind),
            (RewardForm::ReachShaped { .. }, EnvKind::ElasticArm(_))
                | (RewardForm::VelocityAlong { .. }, EnvKind::DelayedCart(_))
        )
    }
}

/// Task reward on a raw observation vector. The vector may come from the
/// real environment or from model rollouts.
pub fn task_reward(spec: &EnvSpec, task: &TaskSpec, state: &[f64], _action: &[f64]) -> Result<f64> {
    if !task.matches_env(spec) {
        return Err(Error::TaskEnvMismatch {
            task: task.task_id.clone(),
            env: spec.kind_name().into(),
        });
    }
    if state.len() != spec.state_dim() {
        return Err(Error::ShapeMismatch {
            context: "task reward state",
            expected: spec.state_dim(),
            got: state.len(),
        });
    }
    match &task.reward {
        RewardForm::ReachShaped { target, kappa } => {
            let d_s = spec.state_dim();
            let tip = [state[d_s - 2], state[d_s - 1]];
            let d = ((tip[0] - target[0]).powi(2) + (tip[1] - target[1]).powi(2)).sqrt();
            Ok(if d <= REACH_DELTA {
                1.0
            } else {
                1.0 / (1.0 + kappa * (d - REACH_DELTA))
            })
        }
        RewardForm::VelocityAlong { sign } => Ok(f64::from(*sign) * state[1]),
    }
}

/// Uniform per-dimension draw within the action bounds.
pub fn random_action<R: Rng>(bounds: &[(f64, f64)], rng: &mut R) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect()
}

/// A point on the uniform-curvature reachable arc whose chord distance from
/// the rest tip equals `fraction * max_reach`. Used to place the reach
/// targets: "close" needs little deformation, "far" needs a lot.
pub fn reach_target(params: &ArmParams, fraction: f64) -> [f64; 2] {
    let reach = params.max_reach();
    let chord = |phi: f64| -> f64 {
        let p = arc_point(reach, phi);
        ((p[0] - reach).powi(2) + p[1].powi(2)).sqrt()
    };
    // chord(phi) grows monotonically on (0, pi); bisect for the target value
    let want = fraction * reach;
    let (mut lo, mut hi) = (1e-9, std::f64::consts::PI - 1e-6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chord(mid) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    arc_point(reach, 0.5 * (lo + hi))
}

/// Tip position of a uniformly curved chain of total length `reach` whose
/// tip sits at polar angle `phi`: radius `reach * sin(phi) / phi`.
pub fn arc_point(reach: f64, phi: f64) -> [f64; 2] {
    let r = if phi.abs() < 1e-12 {
        reach
    } else {
        reach * phi.sin() / phi
    };
    [r * phi.cos(), r * phi.sin()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn arm_spec() -> EnvSpec {
        EnvSpec::elastic_arm(ArmParams::default())
    }

    fn cart_spec() -> EnvSpec {
        EnvSpec::delayed_cart(CartParams::default())
    }

    #[test]
    fn arm_reset_tip_is_straight_chain() {
        let spec = arm_spec();
        let s = env_reset(&spec, 0);
        let obs = s.observe(&spec);
        let d = spec.state_dim();
        assert_eq!(d, 14);
        assert!((obs[d - 2] - 0.6).abs() < 1e-12);
        assert!(obs[d - 1].abs() < 1e-12);
    }

    #[test]
    fn cart_reset_is_origin() {
        let spec = cart_spec();
        let obs = env_reset(&spec, 3).observe(&spec);
        assert_eq!(obs, vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn reset_is_deterministic() {
        let spec = arm_spec();
        assert_eq!(env_reset(&spec, 5), env_reset(&spec, 5));
    }

    #[test]
    fn arm_zero_torque_at_rest_is_fixed_point() {
        let spec = arm_spec();
        let s = env_reset(&spec, 0);
        let (next, info) = env_step(&spec, &s, &vec![0.0; 6]).unwrap();
        assert_eq!(next, s);
        assert!(!info.clipped);
    }

    #[test]
    fn arm_energy_non_increasing_without_input() {
        let spec = arm_spec();
        let p = match &spec.kind {
            EnvKind::ElasticArm(p) => p.clone(),
            _ => unreachable!(),
        };
        // several deflected starts, covering small and large deflections
        for (k, amp) in [(1usize, 0.2_f64), (2, 0.8), (3, 1.6)] {
            let mut state = EnvState::Arm {
                angles: (0..6).map(|j| amp * ((j + k) as f64 * 0.7).sin()).collect(),
                velocities: (0..6).map(|j| 0.3 * ((j * k) as f64).cos()).collect(),
            };
            let mut energy = arm_energy(&p, &state);
            for _ in 0..100 {
                let (next, _) = env_step(&spec, &state, &vec![0.0; 6]).unwrap();
                let e = arm_energy(&p, &next);
                assert!(
                    e <= energy * (1.0 + 1e-12) + 1e-15,
                    "energy rose: {energy} -> {e}"
                );
                energy = e;
                state = next;
            }
        }
    }

    #[test]
    fn arm_tip_stays_within_reach_disk() {
        let spec = arm_spec();
        let mut rng = seed::rng(17, &[]);
        let bounds = spec.action_bounds();
        let mut s = env_reset(&spec, 0);
        for _ in 0..300 {
            let a = random_action(&bounds, &mut rng);
            let (next, info) = env_step(&spec, &s, &a).unwrap();
            let tip = info.tip.unwrap();
            let r = (tip[0] * tip[0] + tip[1] * tip[1]).sqrt();
            assert!(r <= 0.6 + 1e-9, "tip outside reach disk: {r}");
            s = next;
        }
    }

    #[test]
    fn cart_delay_queue_semantics() {
        let spec = cart_spec();
        let mut s = env_reset(&spec, 0);
        // constant force from reset: velocity must stay exactly 0 for
        // `delay` steps
        for step in 0..5 {
            let (next, _) = env_step(&spec, &s, &[0.7]).unwrap();
            let obs = next.observe(&spec);
            if step < 2 {
                assert_eq!(obs[1], 0.0, "velocity moved before the delay elapsed");
            } else {
                assert!(obs[1] > 0.0);
            }
            s = next;
        }
    }

    #[test]
    fn cart_delay_matches_cross_correlation_peak() {
        use rand::Rng;
        let spec = cart_spec();
        let mut rng = seed::rng(23, &[]);
        let mut s = env_reset(&spec, 0);
        let mut inputs = Vec::new();
        let mut accels = Vec::new();
        let mut prev_v = 0.0;
        for _ in 0..400 {
            let f: f64 = rng.gen_range(-1.0..1.0);
            let (next, _) = env_step(&spec, &s, &[f]).unwrap();
            let obs = next.observe(&spec);
            inputs.push(f);
            accels.push((obs[1] - prev_v) / spec.dt);
            prev_v = obs[1];
            s = next;
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for lag in 0..6 {
            let mut c = 0.0;
            for t in lag..inputs.len() {
                c += inputs[t - lag] * accels[t];
            }
            if c > best.1 {
                best = (lag, c);
            }
        }
        assert_eq!(best.0, 2, "correlation peak must sit at the action delay");
    }

    #[test]
    fn stepping_is_pure() {
        let spec = arm_spec();
        let s = env_reset(&spec, 0);
        let a = vec![0.3, -0.2, 0.1, 0.0, 0.25, -0.3];
        let r1 = env_step(&spec, &s, &a).unwrap();
        let r2 = env_step(&spec, &s, &a).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn out_of_bounds_actions_clip_with_flag() {
        let spec = arm_spec();
        let s = env_reset(&spec, 0);
        let (_, info) = env_step(&spec, &s, &vec![10.0; 6]).unwrap();
        assert!(info.clipped);
        assert!(info.applied_action.iter().all(|&a| a == 0.4));
    }

    #[test]
    fn reach_reward_values() {
        let spec = arm_spec();
        let task = TaskSpec {
            task_id: "reach".into(),
            reward: RewardForm::ReachShaped {
                target: [0.6, 0.0],
                kappa: 20.0,
            },
            episode_horizon: 10,
        };
        // tip exactly on target: d = 0 -> reward 1
        let rest = env_reset(&spec, 0).observe(&spec);
        assert_eq!(task_reward(&spec, &task, &rest, &[]).unwrap(), 1.0);

        // d = delta + 1/kappa -> reward 0.5
        let mut obs = rest;
        obs[12] = 0.6 + REACH_DELTA + 1.0 / 20.0;
        let r = task_reward(&spec, &task, &obs, &[]).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn velocity_reward_is_signed_velocity() {
        let spec = cart_spec();
        let task = TaskSpec {
            task_id: "vel".into(),
            reward: RewardForm::VelocityAlong { sign: 1 },
            episode_horizon: 10,
        };
        let obs = vec![3.0, 0.5, 0.0, 0.0];
        assert_eq!(task_reward(&spec, &task, &obs, &[]).unwrap(), 0.5);
        let neg = TaskSpec {
            task_id: "vel-".into(),
            reward: RewardForm::VelocityAlong { sign: -1 },
            episode_horizon: 10,
        };
        assert_eq!(task_reward(&spec, &neg, &obs, &[]).unwrap(), -0.5);
    }

    #[test]
    fn task_env_mismatch_is_usage_error() {
        let spec = cart_spec();
        let task = TaskSpec {
            task_id: "reach".into(),
            reward: RewardForm::ReachShaped {
                target: [0.1, 0.1],
                kappa: 20.0,
            },
            episode_horizon: 10,
        };
        assert!(matches!(
            task_reward(&spec, &task, &[0.0; 4], &[]),
            Err(Error::TaskEnvMismatch { .. })
        ));
    }

    #[test]
    fn random_action_degenerate_bounds() {
        let mut rng = seed::rng(0, &[]);
        let a = random_action(&[(0.0, 0.0), (-1.0, 1.0)], &mut rng);
        assert_eq!(a[0], 0.0);
        assert!((-1.0..1.0).contains(&a[1]));
    }

    #[test]
    fn random_action_mean_converges() {
        let mut rng = seed::rng(8, &[]);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += random_action(&[(-1.0, 1.0)], &mut rng)[0];
        }
        assert!((sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn random_action_same_seed_same_sequence() {
        let mut a = seed::rng(4, &[]);
        let mut b = seed::rng(4, &[]);
        for _ in 0..10 {
            assert_eq!(
                random_action(&[(-2.0, 2.0); 3], &mut a),
                random_action(&[(-2.0, 2.0); 3], &mut b)
            );
        }
    }

    #[test]
    fn reach_targets_sit_at_requested_chord_distance() {
        let p = ArmParams::default();
        for frac in [0.25, 0.9] {
            let t = reach_target(&p, frac);
            let d = ((t[0] - 0.6).powi(2) + t[1].powi(2)).sqrt();
            assert!(
                (d - frac * 0.6).abs() < 1e-6,
                "frac {frac}: chord {d} target {t:?}"
            );
        }
    }
}
