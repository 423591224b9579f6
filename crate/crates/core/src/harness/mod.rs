//! Experiment harness: the episodic exploration loop, the evaluation
//! protocol (held-out normalized MSE, coverage heatmaps, zero-shot task
//! returns), persistence, and configuration.

pub mod config;
pub mod eval;
pub mod heatmap;
pub mod heldout;
pub mod persist;
pub mod run;

pub use config::{ExperimentConfig, IcemSection, Method, ModelSection, PlannerSection, RunSection};
pub use eval::{evaluate_model_mse, evaluate_zero_shot, probe_pairs, probe_sigma, MseReport, TaskEvalResult};
pub use heatmap::{coverage_entropy, coverage_heatmap, GridBounds, HeatmapGrid};
pub use heldout::{generate_heldout, HeldoutReport};
pub use run::{run_experiment, EpisodeRow, ExperimentRecord, RunOutput};
