//! Uncertainty-aware dynamics learning for nonlinear control systems.
//!
//! The crate learns probabilistic ensemble dynamics models through active
//! exploration and uses them for zero-shot model-predictive control:
//!
//! - [`nn`], [`optim`], [`transform`]: a small dense network with exact
//!   reverse-mode gradients, an adaptive-moment optimizer, and the
//!   symlog/symexp observation transforms. Generic over the scalar type.
//! - [`ensemble`]: particle ensembles served as mean + epistemic std.
//! - [`envs`]: desk-scale surrogate environments and task rewards.
//! - [`planning`]: uncertainty/task objectives, three propagation schemes,
//!   the iCEM trajectory optimizer, and the receding-horizon controller.
//! - [`harness`]: the episodic exploration loop, evaluation protocol,
//!   persistence, and experiment configuration.

pub mod error;
pub mod scalar;
pub mod seed;

pub mod nn;
pub mod optim;
pub mod transform;

pub mod dataset;
pub mod ensemble;
pub mod envs;
pub mod harness;
pub mod planning;

pub use error::{Error, Result};
pub use scalar::Scalar;


/// Concrete aliases for the generic numeric core. The systems layers
/// (ensemble, planning, harness) are pinned to the 64-bit variants.
pub type Mlp64 = nn::MlpParams<f64>;
pub type Mlp32 = nn::MlpParams<f32>;
pub type MlpGrads64 = nn::MlpGrads<f64>;
pub type AdamState64 = optim::AdamState<f64>;
