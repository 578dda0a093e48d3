use rayon::prelude::*;
use serde::Serialize;

use super::engine::{run_defl, SimConfig, StepSize};
use super::task::SyntheticTask;
use crate::delay_model::{convergence_bound, ConvergenceParams};
use crate::error::{ensure, DeflError, Result};

/// Empirical mean gap against the analytic bound over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n_seeds: usize,
    pub steps: usize,
    pub eta: f64,
    pub per_seed_gaps: Vec<f64>,
    pub mean_gap: f64,
    /// Mean over seeds of the per-seed bound (each uses its own `||w0 - w*||^2`).
    pub bound: f64,
    pub pass: bool,
}

/// Runs seeds `cfg.seed, cfg.seed + 1, ...` with the theorem step size and
/// compares the mean final gap of the running average with the bound.
pub fn bound_check(task: &SyntheticTask, cfg: &SimConfig, n_seeds: usize) -> Result<BoundReport> {
    let SyntheticTask::Quadratic(q) = task else {
        return Err(DeflError::UnsupportedTask("bound check needs a known minimizer".into()));
    };
    ensure(task.identical_data(), || {
        DeflError::UnsupportedTask("bound check needs identical local objectives".into())
    })?;
    ensure(n_seeds >= 1, || DeflError::Domain("need at least one seed".into()))?;
    let m = cfg.fleet.len();
    let steps = cfg.total_steps();
    ensure(steps >= m, || DeflError::Domain(format!("need K >= M, got K={steps}, M={m}")))?;

    let base = SimConfig { step_size: StepSize::Theorem1, stop_at_gap: None, ..cfg.clone() };
    let runs: Vec<Result<(f64, f64, f64)>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let c = SimConfig { seed: cfg.seed.wrapping_add(i), ..base.clone() };
            let trace = run_defl(task, &c)?;
            let gap = trace.final_gap().ok_or_else(|| DeflError::UnsupportedTask("no gap".into()))?;
            let dist0_sq = trace.dist0_sq.unwrap_or_default();
            let bound = convergence_bound(&ConvergenceParams {
                smoothness: q.smoothness,
                sigma_sq: q.noise_sigma_sq,
                dist0_sq,
                devices: m,
                steps,
                local_rounds: c.local_rounds,
                batch: c.batch,
            })?;
            Ok((gap, bound, trace.eta))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let n = n_seeds as f64;
    let per_seed_gaps: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let mean_gap = per_seed_gaps.iter().sum::<f64>() / n;
    let bound = runs.iter().map(|r| r.1).sum::<f64>() / n;
    Ok(BoundReport {
        n_seeds,
        steps,
        eta: runs[0].2,
        per_seed_gaps,
        mean_gap,
        bound,
        pass: mean_gap <= bound,
    })
}

/// Simulated wall-clock at the first round whose running-average gap is at
/// most `target`, or `None` if the run ends first.
pub fn time_to_target(task: &SyntheticTask, cfg: &SimConfig, target: f64) -> Result<Option<(usize, f64)>> {
    let c = SimConfig { stop_at_gap: Some(target), ..cfg.clone() };
    Ok(run_defl(task, &c)?.time_to_gap(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::task::{LogisticSpec, LogisticTask, QuadraticSpec, QuadraticTask};
    use crate::system_model::{DeviceProfile, Fleet, WirelessSystem};

    fn cfg(m: usize, b: u64, v: usize, h: usize) -> SimConfig {
        let devices = (0..m).map(|i| DeviceProfile::with_frequency(format!("d{i}"), 2e9, 3e7)).collect();
        let system = WirelessSystem { bandwidth_hz: 2e7, noise_power_w: 1e-13, update_bits: 1e6 };
        SimConfig {
            batch: b,
            local_rounds: v,
            rounds: h,
            step_size: StepSize::Theorem1,
            seed: 100,
            stop_at_gap: None,
            fleet: Fleet::new(devices, system).unwrap(),
        }
    }

    fn quad(sigma_sq: f64) -> SyntheticTask {
        let spec = QuadraticSpec { dimension: 10, noise_sigma_sq: sigma_sq, ..Default::default() };
        SyntheticTask::Quadratic(QuadraticTask::generate(&spec, &[], 42).unwrap())
    }

    #[test]
    fn noiseless_two_term_bound() {
        let r = bound_check(&quad(0.0), &cfg(10, 1, 1, 200), 5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn noisy_bound_holds() {
        let r = bound_check(&quad(1.0), &cfg(10, 4, 2, 100), 30).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.steps, 200);
    }

    #[test]
    fn larger_batch_within_predicted_difference() {
        let task = quad(1.0);
        let small = bound_check(&task, &cfg(10, 1, 2, 100), 30).unwrap();
        let large = bound_check(&task, &cfg(10, 16, 2, 100), 30).unwrap();
        assert!(large.bound < small.bound);
        assert!(large.mean_gap <= small.mean_gap + (small.bound - large.bound), "{small:?} {large:?}");
    }

    #[test]
    fn unsupported_tasks_rejected() {
        let l = LogisticTask::generate(&LogisticSpec::default(), &[5; 10], true, 0).unwrap();
        assert!(matches!(
            bound_check(&SyntheticTask::Logistic(l), &cfg(10, 1, 1, 20), 2),
            Err(DeflError::UnsupportedTask(_))
        ));
        assert!(bound_check(&quad(1.0), &cfg(10, 1, 1, 5), 2).is_err());
    }

    #[test]
    fn target_reached_in_wall_clock() {
        let c = SimConfig { step_size: StepSize::Fixed(0.5), ..cfg(2, 1, 1, 400) };
        let (round, wall) = time_to_target(&quad(0.0), &c, 1e-2).unwrap().unwrap();
        assert_eq!(wall, round as f64 * c.round_seconds().unwrap());
        assert!(time_to_target(&quad(0.0), &c, 0.0).unwrap().is_none());
    }
}
