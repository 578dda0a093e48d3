use serde::Serialize;

use super::PlanInputs;
use crate::error::{ensure, DeflError, Result};

/// Overall time at `(b, alpha)` with `T_cp` at its lower bound:
///
/// `(c / (b^2 eps^2 M nu alpha) + c M / (b eps)) * (T_cm + nu alpha b r_max)`.
pub fn objective_eval(b: f64, alpha: f64, inputs: &PlanInputs) -> Result<f64> {
    check_domain(b, alpha)?;
    let l = &inputs.learning;
    let m = l.devices as f64;
    let eps = l.epsilon;
    let rounds = l.c / (b * b * eps * eps * m * l.nu * alpha) + l.c * m / (b * eps);
    Ok(rounds * (inputs.t_cm + l.nu * alpha * b * inputs.r_max()))
}

pub(crate) fn check_domain(b: f64, alpha: f64) -> Result<()> {
    ensure(b.is_finite() && b >= 1.0, || DeflError::InvalidBatch(b))?;
    ensure(alpha.is_finite() && alpha > 0.0, || {
        DeflError::Domain(format!("alpha must be positive, got {alpha}"))
    })
}

/// The four summands of the expanded objective with `T_cp` free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveTerms {
    /// `c T_cm / (b^2 eps^2 M nu alpha)`
    pub comm_over_local: f64,
    /// `c M T_cm / (b eps)`
    pub comm_direct: f64,
    /// `c T_cp / (b^2 eps^2 M)`
    pub compute_over_local: f64,
    /// `c M nu alpha T_cp / (b eps)`
    pub compute_direct: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.comm_over_local + self.comm_direct + self.compute_over_local + self.compute_direct
    }
}

/// Expanded objective with an explicit `T_cp`.
pub fn objective_terms(b: f64, alpha: f64, t_cp: f64, inputs: &PlanInputs) -> Result<ObjectiveTerms> {
    check_domain(b, alpha)?;
    let l = &inputs.learning;
    let (c, m, eps, nu) = (l.c, l.devices as f64, l.epsilon, l.nu);
    let t_cm = inputs.t_cm;
    Ok(ObjectiveTerms {
        comm_over_local: c * t_cm / (b * b * eps * eps * m * nu * alpha),
        comm_direct: c * m * t_cm / (b * eps),
        compute_over_local: c * t_cp / (b * b * eps * eps * m),
        compute_direct: c * m * nu * alpha * t_cp / (b * eps),
    })
}
