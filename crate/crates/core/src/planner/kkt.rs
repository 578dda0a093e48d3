//! KKT certificate for a candidate `(b, alpha, T_cp)`.
//!
//! Lagrangian (constraints `b >= 1`, `alpha >= 0`, `T_cp >= G_m b / f_m`,
//! and optionally a search cap `b <= b_max`):
//!
//! ```text
//! L = f(b, alpha, T_cp) - l1 (b - 1) - l2 alpha
//!     - sum_m mu_m (T_cp - G_m b / f_m) - lcap (b_max - b)
//! ```
//!
//! Duals are recovered from stationarity on the active constraints and
//! complementary slackness on the inactive ones; whatever stationarity is
//! left over is reported as a residual. A dual that would come out negative
//! is set to zero and its stationarity residual reported instead, so every
//! certificate carries nonnegative duals.

use serde::Serialize;

use super::objective::{check_domain, objective_terms};
use super::PlanInputs;
use crate::error::{DeflError, Result};

/// Relative slack below which a constraint counts as active.
const ACTIVE_TOL: f64 = 1e-9;
/// Allowed disagreement between analytic and finite-difference gradients.
const FD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub batch_at_least_one: bool,
    pub alpha_nonnegative: bool,
    pub compute_time_covers_all: bool,
    pub batch_within_cap: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.batch_at_least_one && self.alpha_nonnegative && self.compute_time_covers_all && self.batch_within_cap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    pub b: f64,
    pub alpha: f64,
    pub t_cp: f64,
    pub objective: f64,
    /// Dual of `b >= 1`.
    pub lambda1: f64,
    /// Dual of `alpha >= 0`.
    pub lambda2: f64,
    /// Per-device duals of the compute-time constraints.
    pub mu: Vec<f64>,
    /// Dual of the optional search cap `b <= b_max` (zero when absent).
    pub lambda_cap: f64,
    pub batch_cap: Option<f64>,
    /// Raw residuals of `dL/db`, `dL/dalpha`, `dL/dT_cp`.
    pub stationarity: [f64; 3],
    /// Residuals scaled by `|x| / f`, dimensionless.
    pub stationarity_scaled: [f64; 3],
    /// Scaled `dL/dalpha` residual using the published second term
    /// `c T_cm M nu / (b eps)` in place of `c T_cp M nu / (b eps)`.
    pub alpha_residual_printed_variant: f64,
    /// `l1 (b-1)`, `l2 alpha`, `mu_m (T_cp - G_m b/f_m)`..., `lcap (b_max - b)`.
    pub complementarity: Vec<f64>,
    pub feasibility: Feasibility,
    /// Worst analytic-vs-finite-difference gradient disagreement, relative to
    /// the magnitude of the summands.
    pub fd_discrepancy: f64,
}

impl KktCertificate {
    pub fn max_scaled_residual(&self) -> f64 {
        self.stationarity_scaled.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn duals_nonnegative(&self) -> bool {
        self.lambda1 >= 0.0 && self.lambda2 >= 0.0 && self.lambda_cap >= 0.0 && self.mu.iter().all(|m| *m >= 0.0)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.feasibility.all() && self.duals_nonnegative() && self.max_scaled_residual() <= tol
    }
}

/// Partial derivatives of the objective part, each returned with the sum of
/// absolute values of its summands (for relative comparisons).
struct Partials {
    db: (f64, f64),
    dalpha: (f64, f64),
    dalpha_printed: f64,
    dtcp: (f64, f64),
}

fn partials(b: f64, alpha: f64, t_cp: f64, inputs: &PlanInputs) -> Partials {
    let l = &inputs.learning;
    let (c, m, eps, nu) = (l.c, l.devices as f64, l.epsilon, l.nu);
    let t_cm = inputs.t_cm;
    let e2 = eps * eps;
    let db = [
        -2.0 * c * t_cm / (b.powi(3) * e2 * m * nu * alpha),
        -c * t_cm * m / (b * b * eps),
        -2.0 * c * t_cp / (b.powi(3) * e2 * m),
        -c * m * t_cp * nu * alpha / (b * b * eps),
    ];
    let da = [
        -c * t_cm / (b * b * e2 * m * nu * alpha * alpha),
        c * t_cp * m * nu / (b * eps),
    ];
    let dt = [c / (b * b * e2 * m), c * m * nu * alpha / (b * eps)];
    let sum = |xs: &[f64]| xs.iter().sum::<f64>();
    let mag = |xs: &[f64]| xs.iter().map(|x| x.abs()).sum::<f64>();
    Partials {
        db: (sum(&db), mag(&db)),
        dalpha: (sum(&da), mag(&da)),
        dalpha_printed: da[0] + c * t_cm * m * nu / (b * eps),
        dtcp: (sum(&dt), mag(&dt)),
    }
}

/// Builds the certificate at `(b, alpha, t_cp)`. With `batch_cap = Some(b_max)`
/// the search-box bound `b <= b_max` joins the constraint set.
pub fn kkt_residuals(
    b: f64,
    alpha: f64,
    t_cp: f64,
    inputs: &PlanInputs,
    batch_cap: Option<f64>,
) -> Result<KktCertificate> {
    inputs.validate()?;
    check_domain(b, alpha)?;
    if !(t_cp.is_finite() && t_cp > 0.0) {
        return Err(DeflError::Domain(format!("T_cp must be positive, got {t_cp}")));
    }
    let objective = objective_terms(b, alpha, t_cp, inputs)?.total();
    let p = partials(b, alpha, t_cp, inputs);

    let slack: Vec<f64> = inputs.ratios.iter().map(|r| t_cp - r * b).collect();
    let feasibility = Feasibility {
        batch_at_least_one: b >= 1.0,
        alpha_nonnegative: alpha >= 0.0,
        compute_time_covers_all: slack.iter().all(|s| *s >= -ACTIVE_TOL * t_cp),
        batch_within_cap: batch_cap.is_none_or(|cap| b <= cap),
    };

    // T_cp stationarity: sum of active mu equals df/dT_cp. The whole mass goes
    // to the lowest-index active device.
    let mut mu = vec![0.0; inputs.ratios.len()];
    let active = slack.iter().position(|s| s.abs() <= ACTIVE_TOL * t_cp);
    let res_t = match active {
        Some(i) if p.dtcp.0 >= 0.0 => {
            mu[i] = p.dtcp.0;
            0.0
        }
        _ => p.dtcp.0,
    };
    let mu_r: f64 = mu.iter().zip(&inputs.ratios).map(|(m, r)| m * r).sum();

    // b stationarity: df/db + sum mu_m r_m - l1 + lcap = 0.
    let grad_b = p.db.0 + mu_r;
    let at_floor = (b - 1.0).abs() <= ACTIVE_TOL;
    let at_cap = batch_cap.is_some_and(|cap| (cap - b).abs() <= ACTIVE_TOL * cap);
    let (mut lambda1, mut lambda_cap, mut res_b) = (0.0, 0.0, grad_b);
    if at_floor && grad_b > 0.0 {
        lambda1 = grad_b;
        res_b = 0.0;
    } else if at_cap && grad_b < 0.0 {
        lambda_cap = -grad_b;
        res_b = 0.0;
    }

    // alpha > 0 on the domain, so l2 = 0.
    let lambda2 = 0.0;
    let res_a = p.dalpha.0;

    let scale = |r: f64, x: f64| r.abs() * x.abs() / objective.abs();
    let stationarity = [res_b, res_a, res_t];
    let stationarity_scaled = [scale(res_b, b), scale(res_a, alpha), scale(res_t, t_cp)];

    let mut complementarity = vec![lambda1 * (b - 1.0), lambda2 * alpha];
    complementarity.extend(mu.iter().zip(&slack).map(|(m, s)| m * s));
    if let Some(cap) = batch_cap {
        complementarity.push(lambda_cap * (cap - b));
    }

    let cert = KktCertificate {
        b,
        alpha,
        t_cp,
        objective,
        lambda1,
        lambda2,
        mu,
        lambda_cap,
        batch_cap,
        stationarity,
        stationarity_scaled,
        alpha_residual_printed_variant: scale(p.dalpha_printed, alpha),
        complementarity,
        feasibility,
        fd_discrepancy: 0.0,
    };
    let fd_discrepancy = finite_difference_check(&cert, inputs, &p)?;
    if fd_discrepancy > FD_TOL {
        return Err(DeflError::Consistency(format!(
            "analytic Lagrangian gradient disagrees with finite differences by {fd_discrepancy:.3e}"
        )));
    }
    Ok(KktCertificate { fd_discrepancy, ..cert })
}

fn lagrangian(cert: &KktCertificate, inputs: &PlanInputs, b: f64, alpha: f64, t_cp: f64) -> Result<f64> {
    let f = objective_terms(b, alpha, t_cp, inputs)?.total();
    let coupling: f64 = cert.mu.iter().zip(&inputs.ratios).map(|(m, r)| m * (t_cp - r * b)).sum();
    let cap = cert.batch_cap.map_or(0.0, |c| cert.lambda_cap * (c - b));
    Ok(f - cert.lambda1 * (b - 1.0) - cert.lambda2 * alpha - coupling - cap)
}

/// Central differences of the Lagrangian against the analytic gradient.
fn finite_difference_check(cert: &KktCertificate, inputs: &PlanInputs, p: &Partials) -> Result<f64> {
    let step = |x: f64| 1e-6 * x.abs().max(1.0);
    let (b, a, t) = (cert.b, cert.alpha, cert.t_cp);
    let mu_sum: f64 = cert.mu.iter().sum();
    let mu_r: f64 = cert.mu.iter().zip(&inputs.ratios).map(|(m, r)| m * r).sum();

    // Stay inside b >= 1 and alpha > 0 with a one-sided stencil if needed.
    let diff = |f: &dyn Fn(f64) -> Result<f64>, x: f64, h: f64, lower: f64| -> Result<f64> {
        if x - h > lower {
            Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
        } else {
            Ok((-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
        }
    };
    let fd_b = diff(&|x| lagrangian(cert, inputs, x, a, t), b, step(b), 1.0)?;
    let fd_a = diff(&|x| lagrangian(cert, inputs, b, x, t), a, step(a), 0.0)?;
    let fd_t = diff(&|x| lagrangian(cert, inputs, b, a, x), t, step(t), 0.0)?;

    let an_b = p.db.0 - cert.lambda1 + mu_r + cert.lambda_cap;
    let an_a = p.dalpha.0 - cert.lambda2;
    let an_t = p.dtcp.0 - mu_sum;
    let mag_b = p.db.1 + cert.lambda1 + mu_r.abs() + cert.lambda_cap;
    let mag_a = p.dalpha.1 + cert.lambda2;
    let mag_t = p.dtcp.1 + mu_sum.abs();

    Ok([(an_b, fd_b, mag_b), (an_a, fd_a, mag_a), (an_t, fd_t, mag_t)]
        .iter()
        .map(|(an, fd, mag)| (an - fd).abs() / mag.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}
