//! Synchronous federated local SGD on synthetic convex tasks.
//!
//! Devices run their local steps in parallel; every random draw comes from a
//! stream keyed by `(seed, device, round)`, so traces do not depend on the
//! thread count.

mod bound;
mod engine;
mod task;

pub use bound::{bound_check, time_to_target, BoundReport};
pub use engine::{
    aggregate, device_rng, initial_model, local_sgd, run_defl, run_defl_partial, sample_stochastic_gradient,
    LocalRun, RoundRecord, SimConfig, SimTrace, StepSize,
};
pub use task::{Dataset, LogisticSpec, LogisticTask, QuadraticSpec, QuadraticTask, SyntheticTask};
