// Per-device compute and uplink latency for a small mixed fleet.

use defl::system_model::{
    bottleneck_device, effective_frequency, fleet_comm_time, fleet_compute_time, local_step_time,
    noise_power_from_density, uplink_time, ComputeSpeed, DeviceProfile, Fleet, GpuClockModel, WirelessSystem,
};

pub fn run_example() -> defl::Result<()> {
    let clock = GpuClockModel { a_s: 0.0, a_c: 0.8, f_c: 1.5e9, a_m: 0.2, f_m: 5e9 };
    println!("clock-model GPU runs at {:.3e} Hz", effective_frequency(&clock)?);

    let bandwidth = 2e7;
    let system = WirelessSystem {
        bandwidth_hz: bandwidth,
        noise_power_w: noise_power_from_density(-174.0, bandwidth),
        update_bits: 1e6,
    };
    let mut fast = DeviceProfile::with_frequency("phone-a", 2e9, 3e7);
    fast.tx_power_w = 0.1;
    fast.channel_gain = 1e-9;
    let slow = DeviceProfile {
        id: "tablet-b".into(),
        speed: ComputeSpeed::Clock(clock),
        cycles_per_sample: 3e7,
        samples: 4000,
        tx_power_w: 0.05,
        channel_gain: 4e-10,
    };
    let fleet = Fleet::new(vec![fast, slow], system)?;

    for d in &fleet.devices {
        println!(
            "{:<9} step(b=32) {:.4} s, uplink {:.4e} s",
            d.id,
            local_step_time(d, 32)?,
            uplink_time(d, &fleet.system)?
        );
    }
    let b = bottleneck_device(&fleet)?;
    println!("bottleneck: {} (G/f = {:.3e} s/sample)", b.id, b.ratio);
    println!(
        "fleet round pieces: T_cm = {:.4e} s, T_cp(b=32) = {:.4} s",
        fleet_comm_time(&fleet)?,
        fleet_compute_time(&fleet, 32)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> defl::Result<()> {
    run_example()
}
