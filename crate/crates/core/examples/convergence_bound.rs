// Empirical optimality gap of local SGD against the analytic bound.

use defl::sim::{bound_check, QuadraticSpec, QuadraticTask, SimConfig, StepSize, SyntheticTask};
use defl::system_model::{DeviceProfile, Fleet, WirelessSystem};

pub fn run_example() -> defl::Result<()> {
    let devices = (0..10).map(|i| DeviceProfile::with_frequency(format!("d{i}"), 2e9, 3e7)).collect();
    let system = WirelessSystem { bandwidth_hz: 2e7, noise_power_w: 8e-14, update_bits: 1e6 };
    let fleet = Fleet::new(devices, system)?;
    let spec = QuadraticSpec { dimension: 10, noise_sigma_sq: 1.0, ..Default::default() };
    let task = SyntheticTask::Quadratic(QuadraticTask::generate(&spec, &[], 1)?);

    for (k, b, v) in [(200, 1, 1), (200, 4, 2), (400, 16, 4)] {
        let cfg = SimConfig {
            batch: b,
            local_rounds: v,
            rounds: k / v,
            step_size: StepSize::Theorem1,
            seed: 0,
            stop_at_gap: None,
            fleet: fleet.clone(),
        };
        let r = bound_check(&task, &cfg, 30)?;
        println!(
            "K={k:<4} b={b:<3} V={v}: mean gap {:.4e} <= bound {:.4e}: {}",
            r.mean_gap, r.bound, r.pass
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
