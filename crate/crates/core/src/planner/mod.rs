//! Overall-time minimization over batch size `b` and local accuracy
//! `alpha = ln(1/theta)`.
//!
//! The compute-time constraint `T_cp >= G_m b / f_m` always binds (the
//! objective is increasing in `T_cp`), so every search here runs over
//! `(b, alpha)` with `T_cp = b * max_m(G_m / f_m)`.
//!
//! Two solvers are provided: [`closed_form_plan`], which evaluates the
//! published stationary point at the bottleneck device, and [`oracle_plan`],
//! a brute-force grid search with coordinate refinement that serves as ground
//! truth. [`kkt_residuals`] certifies any candidate point against the
//! Lagrangian stationarity and complementary-slackness conditions.

mod closed_form;
mod kkt;
mod objective;
mod oracle;

pub use closed_form::{closed_form_plan, round_batch};
pub use kkt::{kkt_residuals, Feasibility, KktCertificate};
pub use objective::{objective_eval, objective_terms, ObjectiveTerms};
pub use oracle::{oracle_plan, OracleGrid, OracleOutcome};

use serde::Serialize;

use crate::delay_model::{self, LearningParams, LocalAccuracy};
use crate::error::{ensure, DeflError, Result};
use crate::system_model::{self, Fleet};

/// Everything the planner needs from the fleet and the learning setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanInputs {
    /// Straggler-bound uplink time per round, seconds.
    pub t_cm: f64,
    /// `G_m / f_m` per device, seconds per sample per step.
    pub ratios: Vec<f64>,
    pub learning: LearningParams,
}

impl PlanInputs {
    pub fn new(t_cm: f64, ratios: Vec<f64>, learning: LearningParams) -> Result<Self> {
        let inputs = Self { t_cm, ratios, learning };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Derives `T_cm` and the per-device ratios from a fleet.
    pub fn from_fleet(fleet: &Fleet, epsilon: f64, nu: f64, c: f64) -> Result<Self> {
        fleet.validate()?;
        let learning = LearningParams::new(epsilon, nu, c, fleet.len())?;
        Self::new(system_model::fleet_comm_time(fleet)?, fleet.compute_ratios()?, learning)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t_cm.is_finite() && self.t_cm > 0.0, || {
            DeflError::Domain(format!("T_cm must be positive, got {}", self.t_cm))
        })?;
        ensure(!self.ratios.is_empty(), || DeflError::EmptyFleet)?;
        ensure(self.ratios.iter().all(|r| r.is_finite() && *r > 0.0), || {
            DeflError::Domain("every compute ratio G_m/f_m must be positive".into())
        })?;
        self.learning.validate()?;
        ensure(self.learning.devices == self.ratios.len(), || DeflError::DimensionMismatch {
            expected: self.learning.devices,
            got: self.ratios.len(),
        })
    }

    /// Index of the bottleneck device (largest ratio, lowest index on ties).
    pub fn bottleneck(&self) -> usize {
        let mut best = 0;
        for (i, r) in self.ratios.iter().enumerate() {
            if *r > self.ratios[best] {
                best = i;
            }
        }
        best
    }

    pub fn r_max(&self) -> f64 {
        self.ratios[self.bottleneck()]
    }

    /// Compute time of one local step at (real) batch size `b`.
    pub fn t_cp(&self, b: f64) -> f64 {
        b * self.r_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    ClosedForm,
    Oracle,
    Baseline,
}

impl std::fmt::Display for PlanSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanSource::ClosedForm => "closed_form",
            PlanSource::Oracle => "oracle",
            PlanSource::Baseline => "baseline",
        })
    }
}

/// A fully evaluated operating point of the delay model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanPoint {
    pub b: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Real-valued local rounds `nu * alpha`.
    pub v: f64,
    pub t_cm: f64,
    pub t_cp: f64,
    pub rounds: f64,
    pub round_time: f64,
    pub overall_time: f64,
}

impl PlanPoint {
    /// Evaluates the point through the delay model (`H`, `T`, then `H * T`).
    pub fn evaluate(b: f64, alpha: f64, inputs: &PlanInputs) -> Result<Self> {
        let acc = LocalAccuracy::from_alpha(alpha)?;
        let learning = &inputs.learning;
        let rounds = delay_model::rounds_to_converge(learning, acc, b)?;
        let v = learning.nu * alpha;
        let t_cp = inputs.t_cp(b);
        let round_time = delay_model::round_time(inputs.t_cm, v, t_cp)?;
        Ok(Self {
            b,
            alpha,
            theta: acc.theta(),
            v,
            t_cm: inputs.t_cm,
            t_cp,
            rounds,
            round_time,
            overall_time: delay_model::overall_time(rounds, round_time)?,
        })
    }
}

/// Planner output: the continuous optimum and its power-of-two projection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub source: PlanSource,
    /// Optimum over real `b >= 1`.
    pub continuous: PlanPoint,
    /// Optimum with `b` restricted to powers of two.
    pub projected: PlanPoint,
}

impl Plan {
    pub fn alpha_star(&self) -> f64 {
        self.continuous.alpha
    }

    pub fn theta_star(&self) -> f64 {
        self.continuous.theta
    }

    pub fn b_cont(&self) -> f64 {
        self.continuous.b
    }

    pub fn b_rounded(&self) -> u64 {
        self.projected.b as u64
    }

    /// Integer `(b, V, H)` for simulating the projected point.
    pub fn simulation_schedule(&self) -> (u64, usize, usize) {
        (
            self.b_rounded(),
            delay_model::integer_local_rounds(self.projected.v),
            delay_model::integer_rounds(self.projected.rounds),
        )
    }
}

/// `(closed - oracle) / oracle` for the continuous optima.
pub fn gap_ratio(closed: &Plan, oracle: &Plan) -> f64 {
    (closed.continuous.overall_time - oracle.continuous.overall_time) / oracle.continuous.overall_time
}
