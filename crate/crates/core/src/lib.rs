//! Semiparametric preference optimization over finite action spaces.
//!
//! Policies are small ReLU networks; their implied potentials `h_θ` are
//! trained from pairwise preferences by DPO, profiled-likelihood (PSPO),
//! orthogonalized kernel (OSPO) or rank-based (RSPO) objectives, and turned
//! into deployable policies by tilting the reference at a calibrated β.

pub mod calibration;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fdiv;
pub mod link;
pub mod policy;
pub mod rng;
pub mod synthgen;
pub mod trainers;

pub use error::{Result, SpoError};
pub use fdiv::{FDivergence, ProbabilityRow};
pub use policy::{MlpPolicy, Reference};
pub use trainers::{Method, TrainConfig};
