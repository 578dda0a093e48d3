//! Round-level and end-to-end timing, plus the local-SGD convergence bound.
//!
//! Everything here is real-valued. `V` and `H` are only integerized at the
//! simulation boundary via [`integer_local_rounds`] and [`integer_rounds`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure, DeflError, Result};

/// Learning-side constants of the delay model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    /// Target expected optimality gap, in (0, 1].
    pub epsilon: f64,
    /// Local-rounds constant: `V = nu * ln(1/theta)`.
    pub nu: f64,
    /// Constant standing in for the big-O of the rounds estimate.
    pub c: f64,
    /// Number of devices.
    pub devices: usize,
}

impl LearningParams {
    pub fn new(epsilon: f64, nu: f64, c: f64, devices: usize) -> Result<Self> {
        let p = Self { epsilon, nu, c, devices };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.epsilon > 0.0 && self.epsilon <= 1.0, || {
            DeflError::Domain(format!("epsilon must lie in (0, 1], got {}", self.epsilon))
        })?;
        ensure(self.nu.is_finite() && self.nu > 0.0, || {
            DeflError::Domain(format!("nu must be positive, got {}", self.nu))
        })?;
        ensure(self.c.is_finite() && self.c > 0.0, || {
            DeflError::Domain(format!("c must be positive, got {}", self.c))
        })?;
        ensure(self.devices >= 1, || DeflError::Domain("device count must be at least 1".into()))
    }
}

/// Relative local error `theta` together with `alpha = ln(1/theta)`.
/// `alpha` is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalAccuracy {
    alpha: f64,
}

impl LocalAccuracy {
    pub fn from_theta(theta: f64) -> Result<Self> {
        ensure(theta > 0.0 && theta <= 1.0, || {
            DeflError::Domain(format!("theta must lie in (0, 1], got {theta}"))
        })?;
        Ok(Self { alpha: -theta.ln() })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        ensure(alpha.is_finite() && alpha >= 0.0, || {
            DeflError::Domain(format!("alpha must be finite and non-negative, got {alpha}"))
        })?;
        Ok(Self { alpha })
    }

    /// Inverts `V = nu * alpha`.
    pub fn from_local_rounds(v: f64, nu: f64) -> Result<Self> {
        ensure(nu > 0.0, || DeflError::Domain("nu must be positive".into()))?;
        Self::from_alpha(v / nu)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        (-self.alpha).exp()
    }
}

/// `V = nu * ln(1/theta)`.
pub fn local_rounds(theta: f64, nu: f64) -> Result<f64> {
    ensure(theta > 0.0, || {
        DeflError::Domain(format!("theta must be positive (V is unbounded at 0), got {theta}"))
    })?;
    ensure(theta <= 1.0, || DeflError::Domain(format!("theta must be at most 1, got {theta}")))?;
    ensure(nu > 0.0, || DeflError::Domain(format!("nu must be positive, got {nu}")))?;
    Ok(nu * (1.0 / theta).ln())
}

/// Simulation-side integer local rounds: `max(1, round(V))`.
pub fn integer_local_rounds(v: f64) -> usize {
    (v.round() as usize).max(1)
}

/// Wall-clock of one communication round, `T_cm + V T_cp`.
pub fn round_time(t_cm: f64, v: f64, t_cp: f64) -> Result<f64> {
    ensure(t_cm >= 0.0 && v >= 0.0 && t_cp >= 0.0, || {
        DeflError::Domain(format!(
            "round time inputs must be non-negative (T_cm={t_cm}, V={v}, T_cp={t_cp})"
        ))
    })?;
    Ok(t_cm + v * t_cp)
}

/// Communication rounds to reach the target gap:
/// `c / (b^2 eps^2 M nu alpha) + c M / (b eps)`.
pub fn rounds_to_converge(params: &LearningParams, accuracy: LocalAccuracy, batch: f64) -> Result<f64> {
    params.validate()?;
    ensure(batch >= 1.0, || DeflError::InvalidBatch(batch))?;
    let alpha = accuracy.alpha();
    ensure(alpha > 0.0, || {
        DeflError::Divergent("alpha = 0 (theta = 1) gives no local progress".into())
    })?;
    let LearningParams { epsilon, nu, c, devices } = *params;
    let m = devices as f64;
    Ok(c / (batch * batch * epsilon * epsilon * m * nu * alpha) + c * m / (batch * epsilon))
}

/// Simulation-side integer round count: `ceil(H)`.
pub fn integer_rounds(h: f64) -> usize {
    (h.ceil() as usize).max(1)
}

/// Overall time `H * T`.
pub fn overall_time(rounds: f64, per_round: f64) -> Result<f64> {
    ensure(rounds > 0.0 && per_round > 0.0, || {
        DeflError::Domain(format!("overall time needs positive H and T, got H={rounds}, T={per_round}"))
    })?;
    Ok(rounds * per_round)
}

/// Constant step size `sqrt(M) / (4 L sqrt(K))`.
pub fn stepsize(smoothness: f64, devices: usize, steps: usize) -> Result<f64> {
    ensure(smoothness > 0.0, || DeflError::Domain("smoothness must be positive".into()))?;
    ensure(devices >= 1 && steps >= devices, || {
        DeflError::Domain(format!("need K >= M >= 1, got K={steps}, M={devices}"))
    })?;
    Ok((devices as f64).sqrt() / (4.0 * smoothness * (steps as f64).sqrt()))
}

/// Inputs to [`convergence_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// Per-sample gradient-noise variance bound.
    pub sigma_sq: f64,
    /// `||w0 - w*||^2`.
    pub dist0_sq: f64,
    pub devices: usize,
    /// Total gradient steps `K`.
    pub steps: usize,
    pub local_rounds: usize,
    pub batch: u64,
}

impl ConvergenceParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.smoothness > 0.0, || DeflError::Domain("smoothness must be positive".into()))?;
        ensure(self.sigma_sq >= 0.0 && self.dist0_sq >= 0.0, || {
            DeflError::Domain("variance and initial distance must be non-negative".into())
        })?;
        ensure(self.devices >= 1 && self.steps >= self.devices, || {
            DeflError::Domain(format!("need K >= M >= 1, got K={}, M={}", self.steps, self.devices))
        })?;
        ensure(self.local_rounds >= 1 && self.steps.is_multiple_of(self.local_rounds), || {
            DeflError::Domain(format!(
                "K={} must be a positive multiple of V={}",
                self.steps, self.local_rounds
            ))
        })?;
        ensure(self.batch >= 1, || DeflError::InvalidBatch(self.batch as f64))
    }
}

/// Expected optimality-gap bound for mini-batch local SGD on identical data
/// with the [`stepsize`] schedule:
///
/// `8 d0 / sqrt(MK) + s2 / (2 b L sqrt(MK)) + s2 M (V - 1) / (b L K)`.
pub fn convergence_bound(p: &ConvergenceParams) -> Result<f64> {
    p.validate()?;
    let m = p.devices as f64;
    let k = p.steps as f64;
    let b = p.batch as f64;
    let v = p.local_rounds as f64;
    let l = p.smoothness;
    let root_mk = (m * k).sqrt();
    Ok(8.0 * p.dist0_sq / root_mk
        + p.sigma_sq / (2.0 * b * l * root_mk)
        + p.sigma_sq * m * (v - 1.0) / (b * l * k))
}
