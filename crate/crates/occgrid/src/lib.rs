//! Bayesian occupancy-grid estimation with statistically dependent cells.
//!
//! The sensor is modeled as a network of binary asymmetric channels whose
//! outputs are OR'd into each measurement bit, which keeps the joint
//! likelihood of a measurement factorized over cells and makes exact
//! posterior updates over cell subsets tractable by enumeration. On top of
//! that model the crate provides:
//!
//! * [`estimators`] - the exact joint update (`gf`), its cone- and
//!   range-gate-restricted special cases (`co`, `rgo`), and two
//!   per-cell-independence baselines (`im`, `cm`);
//! * [`grid`] - plan-view grid geometry, cone membership, range gates;
//! * [`channel`] - transition models and the OR-gate likelihood;
//! * [`scenario`] - seeded synthetic data generators and scenario files;
//! * [`metrics`] - map similarity, summed Jensen-Shannon distance, and
//!   probability-of-error threshold sweeps;
//! * [`oracle`] - brute-force references used by tests and `selfcheck`;
//! * [`config`] / [`runner`] - the config-driven experiment runner behind
//!   the `occgrid` binary.

// validation uses negated comparisons (`!(x > 0.0)`) so NaN parameters fail
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;

pub mod config;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod image;
pub mod metrics;
pub mod oracle;
pub mod runner;
pub mod scenario;

pub use channel::{BacEntry, BacTable, TransitionModel};
pub use error::{Error, Result};
pub use estimators::{
    co_update, cm_update, final_field, gf_marginal, gf_update, im_update, rgo_update,
    run_sequence, JointPosterior, MarginalField, Method, MethodParams, OccupancyMap, Ping,
};
pub use grid::{cells_in_cone, make_range_gates, ConeFov, GridSpec, RangeGate, SensorPose};
pub use metrics::{error_sweep, similarity_rho, sjsd, MetricsReport};
pub use scenario::{Scenario, ScenarioKind, VehiclePath};
