//! Recursive reconstruction of time-varying sparse signals from noisy linear
//! measurements.
//!
//! The crate provides a ramp-based sparse signal generator, Gaussian
//! measurement models, a partial-ℓ1 solver, three support-tracking recursions
//! (modified-CS, modified-CS with add-LS-del, LS-CS), exact restricted
//! isometry/orthogonality constants for small matrices, closed-form error
//! bounds, stability-condition certificates and a Monte-Carlo harness.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod l1;
pub mod measurement;
pub mod signal;
pub mod support;
pub mod trackers;

pub use error::{Error, Result};
pub use experiment::{run_monte_carlo, run_trial, AggregateRecord, ExperimentConfig, Fig1Regime};
pub use l1::{kkt_residual, restricted_least_squares, solve_partial_l1, PartialL1Solver, SolveResult, SolverConfig};
pub use measurement::{gaussian_matrix, measure, noise_bound, uniform_noise, MeasurementModel};
pub use signal::{init_signal, step_signal, ModelParams, SignalState, TransitionSets};
pub use support::Support;
pub use trackers::{Algorithm, StepTrace, Thresholds, TrackerState};
