//! Per-device compute and uplink latency, and the synchronous fleet-level
//! round times that follow from them.
//!
//! Every device runs mini-batch SGD on a GPU whose effective clock is
//! `1 / (a_s + a_c/f_c + a_M/f_M)`. One local step over a batch of `b`
//! samples costs `G_m * b / f_m` seconds. Uploading a model update of `s`
//! bits over a Shannon-rate link takes `s / (B log2(1 + p h / N))` seconds.
//! Rounds are synchronous, so the fleet waits for its slowest member in both
//! phases. The downlink broadcast is free.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, DeflError, Result};

/// GPU clock model: static, core and memory terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpuClockModel {
    /// Static term, seconds.
    pub a_s: f64,
    /// Core coefficient.
    pub a_c: f64,
    /// Core frequency, Hz.
    pub f_c: f64,
    /// Memory coefficient.
    pub a_m: f64,
    /// Memory frequency, Hz.
    pub f_m: f64,
}

impl GpuClockModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.a_s, self.a_c, self.f_c, self.a_m, self.f_m];
        ensure(fields.iter().all(|v| v.is_finite()), || {
            DeflError::InvalidClockModel("all coefficients must be finite".into())
        })?;
        ensure(self.f_c > 0.0 && self.f_m > 0.0, || {
            DeflError::InvalidClockModel("core and memory frequencies must be positive".into())
        })?;
        ensure(self.a_s >= 0.0 && self.a_c >= 0.0 && self.a_m >= 0.0, || {
            DeflError::InvalidClockModel("coefficients must be non-negative".into())
        })
    }

    /// Denominator of the effective-frequency formula, in seconds per cycle.
    fn seconds_per_cycle(&self) -> f64 {
        self.a_s + self.a_c / self.f_c + self.a_m / self.f_m
    }
}

/// Effective GPU frequency `1 / (a_s + a_c/f_c + a_M/f_M)`.
pub fn effective_frequency(clock: &GpuClockModel) -> Result<f64> {
    clock.validate()?;
    let denom = clock.seconds_per_cycle();
    ensure(denom.is_finite() && denom > 0.0, || {
        DeflError::InvalidClockModel(format!("seconds-per-cycle must be positive, got {denom}"))
    })?;
    let f = 1.0 / denom;
    ensure(f.is_finite(), || {
        DeflError::InvalidClockModel("effective frequency overflows".into())
    })?;
    Ok(f)
}

/// How a device's compute speed is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeSpeed {
    /// Effective frequency given directly, Hz.
    Fixed { hz: f64 },
    /// Effective frequency derived from a clock model.
    Clock(GpuClockModel),
}

impl ComputeSpeed {
    pub fn frequency_hz(&self) -> Result<f64> {
        match self {
            ComputeSpeed::Fixed { hz } => {
                ensure(hz.is_finite() && *hz > 0.0, || {
                    DeflError::InvalidClockModel(format!("frequency must be positive, got {hz}"))
                })?;
                Ok(*hz)
            }
            ComputeSpeed::Clock(clock) => effective_frequency(clock),
        }
    }
}

/// Cycles needed per sample when the workload is quoted per bit of input.
pub fn cycles_per_sample(cycles_per_bit: f64, bits_per_sample: f64) -> f64 {
    cycles_per_bit * bits_per_sample
}

/// Converts a noise spectral density in dBm/Hz to a linear noise power in
/// watts over `bandwidth_hz`.
pub fn noise_power_from_density(dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    10f64.powf((dbm_per_hz - 30.0) / 10.0) * bandwidth_hz
}

/// One edge device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub id: String,
    pub speed: ComputeSpeed,
    /// GPU cycles per sample per local step (`G_m`).
    pub cycles_per_sample: f64,
    /// Local dataset size (`D_m`).
    pub samples: u64,
    /// Transmit power, watts.
    pub tx_power_w: f64,
    /// Linear channel gain.
    pub channel_gain: f64,
}

impl DeviceProfile {
    pub fn with_frequency(id: impl Into<String>, hz: f64, cycles_per_sample: f64) -> Self {
        Self {
            id: id.into(),
            speed: ComputeSpeed::Fixed { hz },
            cycles_per_sample,
            samples: 1,
            tx_power_w: 1.0,
            channel_gain: 1.0,
        }
    }

    pub fn frequency_hz(&self) -> Result<f64> {
        self.speed.frequency_hz()
    }

    /// Seconds per sample per local step, `G_m / f_m`.
    pub fn compute_ratio(&self) -> Result<f64> {
        Ok(self.cycles_per_sample / self.frequency_hz()?)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        self.frequency_hz()?;
        ensure(self.cycles_per_sample.is_finite() && self.cycles_per_sample > 0.0, || {
            DeflError::InvalidDevice(format!("{id}: cycles per sample must be positive"))
        })?;
        ensure(self.samples >= 1, || {
            DeflError::InvalidDevice(format!("{id}: dataset must hold at least one sample"))
        })?;
        ensure(self.tx_power_w.is_finite() && self.tx_power_w > 0.0, || {
            DeflError::InvalidDevice(format!("{id}: transmit power must be positive"))
        })?;
        ensure(self.channel_gain.is_finite() && self.channel_gain > 0.0, || {
            DeflError::InvalidDevice(format!("{id}: channel gain must be positive"))
        })
    }
}

/// Shared uplink parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirelessSystem {
    pub bandwidth_hz: f64,
    /// Linear noise power, watts.
    pub noise_power_w: f64,
    /// Model update size, bits.
    pub update_bits: f64,
}

impl WirelessSystem {
    pub fn validate(&self) -> Result<()> {
        ensure(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0, || {
            DeflError::InvalidLink("bandwidth must be positive".into())
        })?;
        ensure(self.noise_power_w.is_finite() && self.noise_power_w > 0.0, || {
            DeflError::InvalidLink("noise power must be positive".into())
        })?;
        ensure(self.update_bits.is_finite() && self.update_bits > 0.0, || {
            DeflError::InvalidLink("update size must be positive".into())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub devices: Vec<DeviceProfile>,
    pub system: WirelessSystem,
}

impl Fleet {
    pub fn new(devices: Vec<DeviceProfile>, system: WirelessSystem) -> Result<Self> {
        let fleet = Self { devices, system };
        fleet.validate()?;
        Ok(fleet)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.devices.is_empty(), || DeflError::EmptyFleet)?;
        self.system.validate()?;
        let mut seen = HashSet::new();
        for d in &self.devices {
            d.validate()?;
            ensure(seen.insert(d.id.as_str()), || {
                DeflError::InvalidDevice(format!("duplicate device id {}", d.id))
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Dataset sizes in device order.
    pub fn sample_counts(&self) -> Vec<u64> {
        self.devices.iter().map(|d| d.samples).collect()
    }

    /// `G_m / f_m` for every device, in device order.
    pub fn compute_ratios(&self) -> Result<Vec<f64>> {
        self.devices.iter().map(DeviceProfile::compute_ratio).collect()
    }
}

/// Time for one local mini-batch step, `G_m b / f_m`.
pub fn local_step_time(device: &DeviceProfile, batch: u64) -> Result<f64> {
    ensure(batch >= 1, || DeflError::InvalidBatch(batch as f64))?;
    Ok(device.cycles_per_sample * batch as f64 / device.frequency_hz()?)
}

/// Straggler-bound compute time of one local step across the fleet.
pub fn fleet_compute_time(fleet: &Fleet, batch: u64) -> Result<f64> {
    max_over(fleet, |d| local_step_time(d, batch))
}

/// Uplink time of one model update, `s / (B log2(1 + p h / N))`.
pub fn uplink_time(device: &DeviceProfile, system: &WirelessSystem) -> Result<f64> {
    system.validate()?;
    let snr = device.tx_power_w * device.channel_gain / system.noise_power_w;
    ensure(snr.is_finite() && snr > 0.0, || {
        DeflError::InvalidLink(format!("{}: SNR must be positive, got {snr}", device.id))
    })?;
    let rate = system.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2;
    ensure(rate > 0.0, || {
        DeflError::InvalidLink(format!("{}: uplink rate underflows", device.id))
    })?;
    Ok(system.update_bits / rate)
}

/// Straggler-bound uplink time per communication round.
pub fn fleet_comm_time(fleet: &Fleet) -> Result<f64> {
    max_over(fleet, |d| uplink_time(d, &fleet.system))
}

fn max_over(fleet: &Fleet, f: impl Fn(&DeviceProfile) -> Result<f64>) -> Result<f64> {
    ensure(!fleet.devices.is_empty(), || DeflError::EmptyFleet)?;
    let mut best = f64::NEG_INFINITY;
    for d in &fleet.devices {
        best = best.max(f(d)?);
    }
    Ok(best)
}

/// The device with the largest `G_m / f_m`, i.e. the one whose compute-time
/// constraint binds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bottleneck {
    pub index: usize,
    pub id: String,
    pub ratio: f64,
}

/// Argmax of `G_m / f_m`; ties go to the lowest index.
pub fn bottleneck_device(fleet: &Fleet) -> Result<Bottleneck> {
    ensure(!fleet.devices.is_empty(), || DeflError::EmptyFleet)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in fleet.devices.iter().enumerate() {
        let r = d.compute_ratio()?;
        if best.is_none_or(|(_, br)| r > br) {
            best = Some((i, r));
        }
    }
    let (index, ratio) = best.expect("non-empty fleet");
    Ok(Bottleneck {
        index,
        id: fleet.devices[index].id.clone(),
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn link(bits: f64, bw: f64) -> WirelessSystem {
        WirelessSystem {
            bandwidth_hz: bw,
            noise_power_w: 1.0,
            update_bits: bits,
        }
    }

    fn radio(id: &str, snr: f64) -> DeviceProfile {
        DeviceProfile {
            tx_power_w: snr,
            ..DeviceProfile::with_frequency(id, 2e9, 3e7)
        }
    }

    fn fleet_of(ratios: &[f64]) -> Fleet {
        let devices = ratios
            .iter()
            .enumerate()
            .map(|(i, r)| DeviceProfile::with_frequency(format!("d{i}"), 1e9, r * 1e9))
            .collect();
        Fleet::new(devices, link(1e6, 2e7)).unwrap()
    }

    #[test]
    fn effective_frequency_core_only() {
        let clock = GpuClockModel { a_s: 0.0, a_c: 1.0, f_c: 2e9, a_m: 0.0, f_m: 1.0 };
        assert!(rel(effective_frequency(&clock).unwrap(), 2e9) < 1e-12);
    }

    #[test]
    fn effective_frequency_mixed_terms() {
        let clock = GpuClockModel { a_s: 1e-10, a_c: 0.5, f_c: 5e9, a_m: 0.5, f_m: 5e9 };
        // 1 / 3e-10 evaluated at 40 digits.
        let expected = 3_333_333_333.333_333_3;
        assert!(rel(effective_frequency(&clock).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn effective_frequency_zero_denominator() {
        let clock = GpuClockModel { a_s: 0.0, a_c: 0.0, f_c: 1e9, a_m: 0.0, f_m: 1e9 };
        assert!(matches!(effective_frequency(&clock), Err(DeflError::InvalidClockModel(_))));
    }

    #[test]
    fn step_time_examples() {
        let unit = DeviceProfile::with_frequency("a", 2e9, 2e9);
        assert_eq!(local_step_time(&unit, 1).unwrap(), 1.0);
        let d = DeviceProfile::with_frequency("a", 2e9, 3e7);
        assert!(rel(local_step_time(&d, 32).unwrap(), 0.48) < 1e-12);
        assert_eq!(local_step_time(&d, 0), Err(DeflError::InvalidBatch(0.0)));
    }

    #[test]
    fn fleet_compute_is_max() {
        let f = fleet_of(&[0.48, 0.30, 0.10]);
        assert!(rel(fleet_compute_time(&f, 1).unwrap(), 0.48) < 1e-12);
        let single = fleet_of(&[1.0]);
        assert_eq!(fleet_compute_time(&single, 1).unwrap(), 1.0);
        let twins = fleet_of(&[0.3, 0.3]);
        assert_eq!(
            fleet_compute_time(&twins, 4).unwrap(),
            fleet_compute_time(&fleet_of(&[0.3]), 4).unwrap()
        );
    }

    #[test]
    fn empty_fleet_errors() {
        let f = Fleet { devices: vec![], system: link(1.0, 1.0) };
        assert_eq!(fleet_compute_time(&f, 1), Err(DeflError::EmptyFleet));
        assert_eq!(fleet_comm_time(&f), Err(DeflError::EmptyFleet));
        assert_eq!(bottleneck_device(&f), Err(DeflError::EmptyFleet));
        assert_eq!(f.validate(), Err(DeflError::EmptyFleet));
    }

    #[test]
    fn uplink_examples() {
        let sys = link(1e6, 2e7);
        assert!(rel(uplink_time(&radio("a", 1.0), &sys).unwrap(), 0.05) < 1e-12);
        assert!(rel(uplink_time(&radio("a", 1023.0), &sys).unwrap(), 5e-3) < 1e-12);
    }

    #[test]
    fn uplink_rejects_dead_link() {
        let mut d = radio("a", 1.0);
        d.channel_gain = 0.0;
        assert!(matches!(uplink_time(&d, &link(1e6, 2e7)), Err(DeflError::InvalidLink(_))));
    }

    #[test]
    fn paper_noise_floor() {
        // -174 dBm/Hz over 20 MHz, 40-digit reference.
        let n = noise_power_from_density(-174.0, 2e7);
        assert!(rel(n, 7.962_143_411_069_945e-14) < 1e-12);
    }

    #[test]
    fn comm_time_is_max() {
        let sys = link(1e6, 2e7);
        let fleet = Fleet::new(vec![radio("a", 1023.0), radio("b", 1.0)], sys).unwrap();
        assert!(rel(fleet_comm_time(&fleet).unwrap(), 0.05) < 1e-12);
        let solo = Fleet::new(vec![radio("a", 1023.0)], sys).unwrap();
        assert_eq!(fleet_comm_time(&solo).unwrap(), uplink_time(&solo.devices[0], &sys).unwrap());
    }

    #[test]
    fn bottleneck_selection() {
        let b = bottleneck_device(&fleet_of(&[15e-3, 20e-3, 5e-3])).unwrap();
        assert_eq!(b.index, 1);
        assert_eq!(b.id, "d1");
        assert_eq!(bottleneck_device(&fleet_of(&[1e-3, 1e-3, 1e-3])).unwrap().index, 0);
        assert_eq!(bottleneck_device(&fleet_of(&[7e-3])).unwrap().index, 0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let d = DeviceProfile::with_frequency("x", 1e9, 1.0);
        assert!(Fleet::new(vec![d.clone(), d], link(1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn frequency_monotone(
            a_s in 0.0f64..1e-9, a_c in 0.0f64..2.0, a_m in 0.0f64..2.0,
            f_c in 1e8f64..5e9, f_m in 1e8f64..5e9, k in 1.0f64..4.0,
        ) {
            prop_assume!(a_s + a_c + a_m > 0.0);
            let base = GpuClockModel { a_s, a_c, f_c, a_m, f_m };
            let f0 = effective_frequency(&base).unwrap();
            let faster_core = GpuClockModel { f_c: f_c * k, ..base };
            let faster_mem = GpuClockModel { f_m: f_m * k, ..base };
            let heavier = GpuClockModel { a_c: a_c * k, a_m: a_m * k, a_s: a_s * k, ..base };
            prop_assert!(effective_frequency(&faster_core).unwrap() >= f0);
            prop_assert!(effective_frequency(&faster_mem).unwrap() >= f0);
            prop_assert!(effective_frequency(&heavier).unwrap() <= f0);
        }

        #[test]
        fn step_time_linear(g in 1.0f64..1e9, f in 1e6f64..1e10, b in 1u64..4096) {
            let d = DeviceProfile::with_frequency("a", f, g);
            prop_assert_eq!(local_step_time(&d, 2 * b).unwrap(), 2.0 * local_step_time(&d, b).unwrap());
            let fast = DeviceProfile::with_frequency("a", 2.0 * f, g);
            prop_assert_eq!(local_step_time(&fast, b).unwrap(), 0.5 * local_step_time(&d, b).unwrap());
        }

        #[test]
        fn fleet_max_dominates(ratios in proptest::collection::vec(1e-6f64..1.0, 1..12), b in 1u64..64) {
            let fleet = fleet_of(&ratios);
            let t = fleet_compute_time(&fleet, b).unwrap();
            let each: Vec<f64> = fleet.devices.iter().map(|d| local_step_time(d, b).unwrap()).collect();
            prop_assert!(each.iter().all(|&x| x <= t));
            prop_assert!(each.contains(&t));
        }

        #[test]
        fn uplink_monotone(
            bits in 1e3f64..1e9, bw in 1e5f64..1e8, snr in 1e-3f64..1e6, k in 1.01f64..3.0,
        ) {
            let sys = link(bits, bw);
            let d = radio("a", snr);
            let t = uplink_time(&d, &sys).unwrap();
            prop_assert!(uplink_time(&d, &link(bits, bw * k)).unwrap() < t);
            prop_assert!(uplink_time(&d, &link(bits * k, bw)).unwrap() > t);
            prop_assert!(uplink_time(&radio("a", snr * k), &sys).unwrap() < t);
            let gain = DeviceProfile { channel_gain: k, ..d.clone() };
            prop_assert!(uplink_time(&gain, &sys).unwrap() < t);
            let noisy = WirelessSystem { noise_power_w: k, ..sys };
            prop_assert!(uplink_time(&d, &noisy).unwrap() > t);
        }
    }
}
