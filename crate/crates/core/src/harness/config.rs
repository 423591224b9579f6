//! Experiment configuration: one JSON document with sections
//! `{env, tasks, model, fit, planner, icem, run}`.

use serde::{Deserialize, Serialize};

use crate::ensemble::{Architecture, FitConfig};
use crate::envs::{ArmParams, CartParams, EnvSpec, RewardForm, TaskSpec};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::planning::ICemConfig;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Exploration / training method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    SoftAE,
    MeanAE,
    PetsAE,
    Random,
    /// Task-specific optimistic baseline, trained on one downstream task.
    Hucrl { train_task_id: String },
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::SoftAE => write!(f, "softae"),
            Method::MeanAE => write!(f, "mean-ae"),
            Method::PetsAE => write!(f, "pets-ae"),
            Method::Random => write!(f, "random"),
            Method::Hucrl { train_task_id } => write!(f, "hucrl:{train_task_id}"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softae" => Ok(Method::SoftAE),
            "mean-ae" => Ok(Method::MeanAE),
            "pets-ae" => Ok(Method::PetsAE),
            "random" => Ok(Method::Random),
            other => {
                if let Some(task) = other.strip_prefix("hucrl:") {
                    if task.is_empty() {
                        return Err(Error::InvalidConfig(
                            "hucrl needs a train task: hucrl:<task_id>".into(),
                        ));
                    }
                    Ok(Method::Hucrl {
                        train_task_id: task.to_string(),
                    })
                } else {
                    Err(Error::InvalidConfig(format!(
                        "unknown method '{other}' (softae | mean-ae | pets-ae | random | hucrl:<task_id>)"
                    )))
                }
            }
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ensemble model settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub ensemble_size: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub beta: f64,
    pub aleatoric_std: f64,
}

fn default_activation() -> Activation {
    Activation::Tanh
}

impl ModelSection {
    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            activation: self.activation,
        }
    }
}

/// Planner settings shared by every MPC-based method. One `beta` is used
/// for both exploration and task planning; it lives in the model section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSection {
    pub horizon: usize,
    #[serde(default)]
    pub noise_seed: u64,
}

/// iCEM settings; action bounds come from the environment at runtime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcemSection {
    pub samples: usize,
    pub elites: usize,
    pub colored_noise_exponent: f64,
    pub cem_iterations: usize,
    pub particles_per_candidate: usize,
    pub elite_reuse_fraction: f64,
    #[serde(default = "default_init_std_frac")]
    pub init_std_frac: f64,
}

fn default_init_std_frac() -> f64 {
    0.5
}

impl IcemSection {
    pub fn to_config(&self, action_bounds: Vec<(f64, f64)>) -> ICemConfig {
        ICemConfig {
            samples: self.samples,
            elites: self.elites,
            colored_noise_exponent: self.colored_noise_exponent,
            cem_iterations: self.cem_iterations,
            particles_per_candidate: self.particles_per_candidate,
            elite_reuse_fraction: self.elite_reuse_fraction,
            init_std_frac: self.init_std_frac,
            action_bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub method: Method,
    /// Exploration episodes N.
    pub episodes: usize,
    /// Environment steps per exploration episode T.
    pub rollout_horizon: usize,
    pub seeds: Vec<u64>,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub env: EnvSpec,
    pub tasks: Vec<TaskSpec>,
    pub model: ModelSection,
    pub fit: FitConfig,
    pub planner: PlannerSection,
    pub icem: IcemSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: CONFIG_SCHEMA_VERSION,
                found: self.schema_version,
            });
        }
        self.env.validate()?;
        if self.run.seeds.is_empty() {
            return Err(Error::InvalidConfig("run.seeds must be non-empty".into()));
        }
        if self.planner.horizon == 0 {
            return Err(Error::InvalidConfig("planner.horizon must be >= 1".into()));
        }
        if self.model.ensemble_size < 2 {
            return Err(Error::InvalidConfig("model.ensemble_size must be >= 2".into()));
        }
        self.icem.to_config(self.env.action_bounds()).validate()?;
        for task in &self.tasks {
            if !task.matches_env(&self.env) {
                return Err(Error::TaskEnvMismatch {
                    task: task.task_id.clone(),
                    env: self.env.kind_name().into(),
                });
            }
            // reach targets must lie inside the arm's workspace disk
            if let (
                crate::envs::RewardForm::ReachShaped { target, .. },
                crate::envs::EnvKind::ElasticArm(arm),
            ) = (&task.reward, &self.env.kind)
            {
                let r = (target[0] * target[0] + target[1] * target[1]).sqrt();
                if r > arm.max_reach() {
                    return Err(Error::InvalidConfig(format!(
                        "task '{}' target {target:?} lies outside the {:.3} m workspace",
                        task.task_id,
                        arm.max_reach()
                    )));
                }
            }
        }
        if let Method::Hucrl { train_task_id } = &self.run.method {
            if !self.tasks.iter().any(|t| &t.task_id == train_task_id) {
                return Err(Error::UnknownTask(train_task_id.clone()));
            }
        }
        Ok(())
    }

    /// Desk-scale elastic-arm experiment: completes a full exploration run
    /// in minutes on a laptop-class machine.
    pub fn desk_arm() -> Self {
        let arm = ArmParams::default();
        let close = crate::envs::reach_target(&arm, 0.25);
        let far = crate::envs::reach_target(&arm, 0.9);
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: EnvSpec::elastic_arm(arm),
            tasks: vec![
                TaskSpec {
                    task_id: "reach_close".into(),
                    reward: RewardForm::ReachShaped {
                        target: close,
                        kappa: crate::envs::DEFAULT_REACH_KAPPA,
                    },
                    episode_horizon: 100,
                },
                TaskSpec {
                    task_id: "reach_far".into(),
                    reward: RewardForm::ReachShaped {
                        target: far,
                        kappa: crate::envs::DEFAULT_REACH_KAPPA,
                    },
                    episode_horizon: 100,
                },
            ],
            model: ModelSection {
                ensemble_size: 5,
                hidden_layers: 3,
                hidden_width: 64,
                activation: Activation::Tanh,
                beta: 2.0,
                aleatoric_std: 1e-3,
            },
            fit: FitConfig {
                epochs: 5,
                batch_size: 64,
                learning_rate: 1e-3,
                max_gradient_steps: 200,
            },
            planner: PlannerSection {
                horizon: 5,
                noise_seed: 0,
            },
            icem: IcemSection {
                samples: 12,
                elites: 3,
                colored_noise_exponent: 0.25,
                cem_iterations: 3,
                particles_per_candidate: 4,
                elite_reuse_fraction: 0.3,
                init_std_frac: 0.5,
            },
            run: RunSection {
                method: Method::SoftAE,
                episodes: 30,
                rollout_horizon: 200,
                seeds: vec![0, 1, 2, 3, 4],
                output_dir: "out".into(),
            },
        }
    }

    /// Full-scale arm preset: 4x256 ensemble nets trained at lr 5e-5 for
    /// 50 epochs capped at 5000 gradient steps, and iCEM with 200 samples,
    /// 20 elites, 5 iterations. An order of magnitude slower than
    /// [`desk_arm`](Self::desk_arm).
    pub fn full_arm() -> Self {
        let mut cfg = Self::desk_arm();
        cfg.model.hidden_layers = 4;
        cfg.model.hidden_width = 256;
        cfg.fit = FitConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 5e-5,
            max_gradient_steps: 5000,
        };
        cfg.planner.horizon = 10;
        cfg.icem = IcemSection {
            samples: 200,
            elites: 20,
            colored_noise_exponent: 0.25,
            cem_iterations: 5,
            particles_per_candidate: 10,
            elite_reuse_fraction: 0.3,
            init_std_frac: 0.5,
        };
        cfg
    }

    /// Desk-scale delayed-cart experiment with the velocity tasks.
    pub fn desk_cart() -> Self {
        let mut cfg = Self::desk_arm();
        cfg.env = EnvSpec::delayed_cart(CartParams::default());
        cfg.tasks = vec![
            TaskSpec {
                task_id: "move_pos_x".into(),
                reward: RewardForm::VelocityAlong { sign: 1 },
                episode_horizon: 100,
            },
            TaskSpec {
                task_id: "move_neg_x".into(),
                reward: RewardForm::VelocityAlong { sign: -1 },
                episode_horizon: 100,
            },
        ];
        cfg
    }
}
