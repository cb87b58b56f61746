//! Adversarial actor/disturber training under an H-infinity constraint.
//!
//! The crate trains a Gaussian actor against a learnable disturber that
//! injects external forces, while a Lagrangian dual update keeps the ratio
//! between tracking cost and disturbance intensity bounded. Everything runs
//! on desk-scale environments (a planar point mass, a linear-quadratic
//! plant, and small tabular games) with analytic oracles that make the
//! training machinery checkable on a laptop CPU:
//!
//! - [`envkit`] — the three environments plus episode-level domain
//!   randomization,
//! - [`rewards`] — the locomotion/standing reward tables and the cost map,
//! - [`approx`] — small MLPs with exact reverse-mode gradients,
//! - [`rollout`] — vectorized trajectory collection and advantage
//!   estimation,
//! - [`hinf`] — the constrained trainer (clipped surrogate + Lagrangian
//!   constraint + dual update + ratio-bound EMA),
//! - [`oracle`] — game Riccati recursion, min-max value iteration, and the
//!   empirical ratio estimator,
//! - [`evalkit`] — disturbance regimes, attack training, and the ablation
//!   suite,
//! - [`cli`] — the `hinf` command-line entry point.

pub mod approx;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod envkit;
pub mod error;
pub mod evalkit;
pub mod hinf;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod rewards;
pub mod rng;
pub mod rollout;

pub use error::{Error, Result};
