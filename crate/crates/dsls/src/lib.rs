//! Distributed sparse least-squares identification over sensor networks.
//!
//! A network of sensors jointly identifies an unknown sparse parameter
//! vector from scalar observations `y = phi' theta + noise`, where no single
//! sensor's regressors are rich enough to identify `theta` alone. Each round,
//! every sensor fuses its neighbors' information-form least-squares state
//! through a doubly stochastic consensus matrix, then solves a small
//! adaptively weighted L1 problem whose exact zeros estimate the support of
//! `theta`.
//!
//! Crate layout:
//! - [`graph`]: communication topologies and Metropolis consensus weights;
//! - [`model`]: the true parameter, regressor drivers, and noise;
//! - [`estimator`]: the consensus LS recursion and the sparse round;
//! - [`solver`]: the weighted-L1 coordinate-descent solver and its
//!   proximal-gradient cross-check;
//! - [`metrics`]: regret, excitation ledgers, error bounds, set agreement;
//! - [`harness`]: config, seeded experiment orchestration, CSV output;
//! - [`rng`]: seed derivation and per-sensor substreams.
//!
//! The `dsls` binary exposes the harness as a CLI (`run`, `compare`,
//! `diagnose`).

pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
