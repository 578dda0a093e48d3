//! Delay-efficient federated learning over mobile edge devices.
//!
//! * [`system_model`]: per-device compute and uplink latency, fleet maxima.
//! * [`delay_model`]: local rounds, round time, rounds to converge, overall
//!   time and the local-SGD convergence bound.
//! * [`planner`]: closed-form and brute-force minimization of overall time,
//!   with a KKT certificate.
//! * [`sim`]: synchronous local-SGD simulator on synthetic convex tasks.
//! * [`config`] and [`commands`]: JSON experiment configs and the
//!   plan / simulate / sweep / compare reports behind the `defl` binary.

pub mod commands;
pub mod config;
pub mod delay_model;
pub mod error;
pub mod planner;
pub mod sim;
pub mod system_model;

pub use error::{DeflError, Result};
