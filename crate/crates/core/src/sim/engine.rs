use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::task::SyntheticTask;
use crate::delay_model::{round_time, stepsize};
use crate::error::{ensure, DeflError, Result};
use crate::system_model::{fleet_comm_time, fleet_compute_time, Fleet};

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Fixed(f64),
    /// `sqrt(M) / (4 L sqrt(K))` with `K = H V`.
    Theorem1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub batch: u64,
    pub local_rounds: usize,
    pub rounds: usize,
    pub step_size: StepSize,
    pub seed: u64,
    /// Stop early once the optimality gap of the running average reaches
    /// this value.
    pub stop_at_gap: Option<f64>,
    pub fleet: Fleet,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.batch >= 1, || DeflError::InvalidBatch(self.batch as f64))?;
        ensure(self.local_rounds >= 1, || DeflError::Domain("local rounds must be at least 1".into()))?;
        ensure(self.rounds >= 1, || DeflError::Domain("communication rounds must be at least 1".into()))?;
        if let StepSize::Fixed(eta) = self.step_size {
            ensure(eta.is_finite() && eta >= 0.0, || DeflError::Domain(format!("step size {eta} must be non-negative")))?;
        }
        self.fleet.validate()
    }

    /// Total local steps `K = H V`.
    pub fn total_steps(&self) -> usize {
        self.rounds * self.local_rounds
    }

    pub fn resolve_step_size(&self, task: &SyntheticTask) -> Result<f64> {
        match self.step_size {
            StepSize::Fixed(eta) => Ok(eta),
            StepSize::Theorem1 => stepsize(task.smoothness(), self.fleet.len(), self.total_steps()),
        }
    }

    /// Simulated seconds per communication round.
    pub fn round_seconds(&self) -> Result<f64> {
        let t_cm = fleet_comm_time(&self.fleet)?;
        let t_cp = fleet_compute_time(&self.fleet, self.batch)?;
        round_time(t_cm, self.local_rounds as f64, t_cp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub wall_clock: f64,
    pub global_loss: f64,
    /// `F(w_bar) - F(w*)` for the running average; `None` when `w*` is unknown.
    pub opt_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<RoundRecord>,
    pub eta: f64,
    pub round_seconds: f64,
    /// `||w0 - w*||^2`, when `w*` is known.
    pub dist0_sq: Option<f64>,
    /// Final global model.
    pub w: DVector<f64>,
    /// Running average of per-step global averages.
    pub w_bar: DVector<f64>,
}

impl SimTrace {
    pub fn final_gap(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.opt_gap)
    }

    /// First round whose gap is at or below `target`, with its wall-clock.
    pub fn time_to_gap(&self, target: f64) -> Option<(usize, f64)> {
        self.rows
            .iter()
            .find(|r| r.opt_gap.is_some_and(|g| g <= target))
            .map(|r| (r.round, r.wall_clock))
    }
}

const INIT_STREAM: u64 = u64::MAX;

/// Counter-based stream for one device in one round.
pub fn device_rng(seed: u64, device: usize, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((device as u64) << 32) | round as u64);
    rng
}

/// `w0` with entries uniform in `[-1, 1]`.
pub fn initial_model(seed: u64, dim: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0))
}

pub fn sample_stochastic_gradient<R: Rng>(
    task: &SyntheticTask,
    device: usize,
    w: &DVector<f64>,
    batch: u64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    task.stochastic_gradient(device, w, batch, rng)
}

/// Result of one device's local pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRun {
    pub w: DVector<f64>,
    /// Sum of the iterates after each step.
    pub iterate_sum: DVector<f64>,
}

/// `steps` SGD updates `w <- w - eta g` on `device`. `round` only labels a
/// divergence error.
#[allow(clippy::too_many_arguments)]
pub fn local_sgd<R: Rng>(
    task: &SyntheticTask,
    device: usize,
    round: usize,
    w_in: &DVector<f64>,
    steps: usize,
    batch: u64,
    eta: f64,
    rng: &mut R,
) -> Result<LocalRun> {
    ensure(steps >= 1, || DeflError::Domain("local rounds must be at least 1".into()))?;
    let mut w = w_in.clone();
    let mut iterate_sum = DVector::zeros(w.len());
    for _ in 0..steps {
        let g = sample_stochastic_gradient(task, device, &w, batch, rng)?;
        w.axpy(-eta, &g, 1.0);
        if !w.iter().all(|x| x.is_finite()) {
            return Err(DeflError::Diverged { round, device });
        }
        iterate_sum += &w;
    }
    Ok(LocalRun { w, iterate_sum })
}

/// Weighted average `sum (D_m / D) w_m`, accumulated in device order as
/// `w_0 + sum p_m (w_m - w_0)` so identical inputs return exactly.
pub fn aggregate(states: &[DVector<f64>], weights: &[f64]) -> Result<DVector<f64>> {
    let first = states.first().ok_or(DeflError::EmptyFleet)?;
    ensure(weights.len() == states.len(), || DeflError::DimensionMismatch {
        expected: states.len(),
        got: weights.len(),
    })?;
    let total: f64 = weights.iter().sum();
    ensure(total > 0.0 && weights.iter().all(|w| *w >= 0.0), || {
        DeflError::Domain("aggregation weights must be non-negative with positive sum".into())
    })?;
    let mut acc = first.clone();
    for (w, &p) in states.iter().zip(weights).skip(1) {
        ensure(w.len() == first.len(), || DeflError::DimensionMismatch {
            expected: first.len(),
            got: w.len(),
        })?;
        acc.axpy(p / total, &(w - first), 1.0);
    }
    Ok(acc)
}

/// Runs the synchronous loop and returns the trace together with the error
/// that stopped it early, if any. Rows up to the failing round are kept.
pub fn run_defl_partial(task: &SyntheticTask, cfg: &SimConfig) -> Result<(SimTrace, Option<DeflError>)> {
    cfg.validate()?;
    let m = cfg.fleet.len();
    task.check_devices(m)?;
    let eta = cfg.resolve_step_size(task)?;
    let round_seconds = cfg.round_seconds()?;
    let weights: Vec<f64> = cfg.fleet.sample_counts().iter().map(|&d| d as f64).collect();

    let mut w = initial_model(cfg.seed, task.dim());
    let dist0_sq = task.minimizer().map(|ws| (&w - ws).norm_squared());
    let mut sum_hat = DVector::zeros(task.dim());
    let mut w_bar = w.clone();
    let mut rows = Vec::with_capacity(cfg.rounds);
    let mut failure = None;

    for h in 1..=cfg.rounds {
        let runs: Vec<Result<LocalRun>> = (0..m)
            .into_par_iter()
            .map(|dev| {
                let mut rng = device_rng(cfg.seed, dev, h);
                local_sgd(task, dev, h, &w, cfg.local_rounds, cfg.batch, eta, &mut rng)
            })
            .collect();
        let runs: Vec<LocalRun> = match runs.into_iter().collect() {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let finals: Vec<DVector<f64>> = runs.iter().map(|r| r.w.clone()).collect();
        let sums: Vec<DVector<f64>> = runs.into_iter().map(|r| r.iterate_sum).collect();
        w = aggregate(&finals, &weights)?;
        sum_hat += aggregate(&sums, &weights)?;
        w_bar = &sum_hat / (h * cfg.local_rounds) as f64;

        let opt_gap = task.optimality_gap(&w_bar);
        rows.push(RoundRecord {
            round: h,
            wall_clock: h as f64 * round_seconds,
            global_loss: task.global_loss(&w),
            opt_gap,
        });
        if let (Some(target), Some(gap)) = (cfg.stop_at_gap, opt_gap) {
            if gap <= target {
                break;
            }
        }
    }
    Ok((
        SimTrace {
            rows,
            eta,
            round_seconds,
            dist0_sq,
            w,
            w_bar,
        },
        failure,
    ))
}

/// [`run_defl_partial`] with divergence turned into an error.
pub fn run_defl(task: &SyntheticTask, cfg: &SimConfig) -> Result<SimTrace> {
    match run_defl_partial(task, cfg)? {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::task::{QuadraticSpec, QuadraticTask};
    use crate::system_model::{DeviceProfile, WirelessSystem};
    use nalgebra::DMatrix;

    fn fleet(m: usize) -> Fleet {
        let devices = (0..m)
            .map(|i| DeviceProfile::with_frequency(format!("d{i}"), 2e9, 3e7))
            .collect();
        Fleet::new(devices, WirelessSystem { bandwidth_hz: 2e7, noise_power_w: 1e-13, update_bits: 1e6 }).unwrap()
    }

    fn scalar_task(sigma_sq: f64) -> SyntheticTask {
        SyntheticTask::Quadratic(QuadraticTask {
            a: DMatrix::from_element(1, 1, 2.0),
            u: DVector::from_element(1, 0.0),
            w_star: DVector::from_element(1, 0.0),
            smoothness: 2.0,
            noise_sigma_sq: sigma_sq,
            shifts: vec![],
        })
    }

    fn quad(d: usize, sigma_sq: f64, seed: u64) -> SyntheticTask {
        let spec = QuadraticSpec { dimension: d, noise_sigma_sq: sigma_sq, ..Default::default() };
        SyntheticTask::Quadratic(QuadraticTask::generate(&spec, &[], seed).unwrap())
    }

    fn cfg(m: usize, b: u64, v: usize, h: usize, eta: StepSize) -> SimConfig {
        SimConfig {
            batch: b,
            local_rounds: v,
            rounds: h,
            step_size: eta,
            seed: 11,
            stop_at_gap: None,
            fleet: fleet(m),
        }
    }

    #[test]
    fn hand_iteration() {
        let t = scalar_task(0.0);
        let mut rng = device_rng(0, 0, 1);
        let out = local_sgd(&t, 0, 1, &DVector::from_element(1, 1.0), 2, 1, 0.25, &mut rng).unwrap();
        assert_eq!(out.w[0], 0.25);
        assert_eq!(out.iterate_sum[0], 0.75);
    }

    #[test]
    fn noiseless_gradient_and_single_step() {
        let t = quad(5, 0.0, 2);
        let SyntheticTask::Quadratic(q) = &t else { unreachable!() };
        let w = DVector::from_element(5, 0.4);
        let mut rng = device_rng(0, 0, 1);
        let g = sample_stochastic_gradient(&t, 0, &w, 8, &mut rng).unwrap();
        assert_eq!(g, &q.a * &w - &q.u);
        let at_min = sample_stochastic_gradient(&t, 0, &q.w_star, 1, &mut rng).unwrap();
        assert!(at_min.amax() < 1e-14);
        let step = local_sgd(&t, 0, 1, &w, 1, 1, 0.1, &mut rng).unwrap();
        assert_eq!(step.w, &w - (&q.a * &w - &q.u) * 0.1);
        let frozen = local_sgd(&t, 0, 1, &w, 3, 1, 0.0, &mut rng).unwrap();
        assert_eq!(frozen.w, w);
        assert!(sample_stochastic_gradient(&t, 0, &w, 0, &mut rng).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let s = |x: f64| DVector::from_element(1, x);
        assert_eq!(aggregate(&[s(0.0), s(2.0)], &[1.0, 1.0]).unwrap()[0], 1.0);
        assert_eq!(aggregate(&[s(0.0), s(4.0)], &[1.0, 3.0]).unwrap()[0], 3.0);
        assert_eq!(aggregate(&[s(7.5)], &[3.0]).unwrap()[0], 7.5);
        let bad = aggregate(&[s(0.0), DVector::zeros(2)], &[1.0, 1.0]);
        assert!(matches!(bad, Err(DeflError::DimensionMismatch { .. })));
        assert!(aggregate(&[], &[]).is_err());
    }

    #[test]
    fn divergence_names_round() {
        let t = scalar_task(0.0);
        let c = cfg(1, 1, 1, 2000, StepSize::Fixed(10.0));
        let (trace, err) = run_defl_partial(&t, &c).unwrap();
        let Some(DeflError::Diverged { round, device }) = err else { panic!("{err:?}") };
        assert_eq!(device, 0);
        assert_eq!(trace.rows.len(), round - 1);
        assert!(run_defl(&t, &c).is_err());
    }

    #[test]
    fn degenerate_loop_is_one_gradient_step() {
        let t = quad(3, 0.0, 4);
        let SyntheticTask::Quadratic(q) = &t else { unreachable!() };
        let c = cfg(1, 1, 1, 1, StepSize::Fixed(0.2));
        let tr = run_defl(&t, &c).unwrap();
        let w0 = initial_model(c.seed, 3);
        assert_eq!(tr.w, &w0 - (&q.a * &w0 - &q.u) * 0.2);
        assert_eq!(tr.rows.len(), 1);
        assert_eq!(tr.rows[0].round, 1);
    }

    #[test]
    fn wall_clock_is_exact_multiple() {
        let t = quad(4, 1.0, 1);
        let c = cfg(3, 8, 5, 20, StepSize::Theorem1);
        let tr = run_defl(&t, &c).unwrap();
        let t_cm = fleet_comm_time(&c.fleet).unwrap();
        let t_cp = fleet_compute_time(&c.fleet, 8).unwrap();
        let per = round_time(t_cm, 5.0, t_cp).unwrap();
        for (i, r) in tr.rows.iter().enumerate() {
            assert_eq!(r.round, i + 1);
            assert_eq!(r.wall_clock, (i + 1) as f64 * per);
        }
        assert!(tr.rows.windows(2).all(|p| p[1].wall_clock > p[0].wall_clock));
    }

    #[test]
    fn identical_noiseless_devices_are_redundant() {
        let t = quad(6, 0.0, 5);
        let one = run_defl(&t, &cfg(1, 4, 3, 15, StepSize::Fixed(0.3))).unwrap();
        let ten = run_defl(&t, &cfg(10, 4, 3, 15, StepSize::Fixed(0.3))).unwrap();
        assert_eq!(one.rows, ten.rows);
        assert_eq!(one.w_bar, ten.w_bar);
    }

    #[test]
    fn noiseless_loss_descends() {
        let t = quad(8, 0.0, 6);
        let tr = run_defl(&t, &cfg(2, 1, 2, 50, StepSize::Fixed(1.0))).unwrap();
        assert!(tr.rows.windows(2).all(|p| p[1].global_loss <= p[0].global_loss));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let t = quad(10, 1.0, 3);
        let c = cfg(10, 4, 2, 30, StepSize::Theorem1);
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| run_defl(&t, &c).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, run_defl(&t, &c).unwrap());
    }

    #[test]
    fn stop_at_gap_truncates() {
        let t = quad(4, 0.0, 8);
        let mut c = cfg(2, 1, 1, 500, StepSize::Fixed(0.5));
        let full = run_defl(&t, &c).unwrap();
        let (round, _) = full.time_to_gap(1e-3).unwrap();
        c.stop_at_gap = Some(1e-3);
        let short = run_defl(&t, &c).unwrap();
        assert_eq!(short.rows.len(), round);
        assert_eq!(short.rows[..], full.rows[..round]);
    }
}
