//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delay_model::LearningParams;
use crate::error::{ensure, DeflError, Result};
use crate::planner::{OracleGrid, PlanInputs};
use crate::sim::{LogisticSpec, LogisticTask, QuadraticSpec, QuadraticTask, StepSize, SyntheticTask};
use crate::system_model::{
    cycles_per_sample, noise_power_from_density, ComputeSpeed, DeviceProfile, Fleet, GpuClockModel, WirelessSystem,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub devices: Vec<DeviceSpec>,
    pub wireless: WirelessSpec,
    pub learning: LearningSpec,
    #[serde(default)]
    pub planner: OracleGrid,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<BaselineSpec>,
}

/// One device. The workload is either `cycles_per_sample` or
/// `cycles_per_bit` times `bits_per_sample`; the speed is either
/// `frequency_hz` or a `clock` model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles_per_sample: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles_per_bit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_sample: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<GpuClockModel>,
    pub tx_power_w: f64,
    pub channel_gain: f64,
    pub samples: u64,
}

impl DeviceSpec {
    pub fn resolve(&self) -> Result<DeviceProfile> {
        let id = &self.id;
        let g = match (self.cycles_per_sample, self.cycles_per_bit, self.bits_per_sample) {
            (Some(g), None, None) => g,
            (None, Some(cpb), Some(bps)) => cycles_per_sample(cpb, bps),
            _ => {
                return Err(DeflError::Config(format!(
                    "device {id}: give either cycles_per_sample or both cycles_per_bit and bits_per_sample"
                )))
            }
        };
        let speed = match (self.frequency_hz, self.clock) {
            (Some(hz), None) => ComputeSpeed::Fixed { hz },
            (None, Some(clock)) => ComputeSpeed::Clock(clock),
            _ => {
                return Err(DeflError::Config(format!(
                    "device {id}: give exactly one of frequency_hz or clock"
                )))
            }
        };
        let device = DeviceProfile {
            id: id.clone(),
            speed,
            cycles_per_sample: g,
            samples: self.samples,
            tx_power_w: self.tx_power_w,
            channel_gain: self.channel_gain,
        };
        device.validate()?;
        Ok(device)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    DbmPerHz(f64),
    Watts(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirelessSpec {
    pub bandwidth_hz: f64,
    pub noise: NoiseSpec,
    pub update_bits: f64,
}

impl WirelessSpec {
    pub fn resolve(&self) -> Result<WirelessSystem> {
        ensure(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0, || {
            DeflError::InvalidLink("bandwidth must be positive".into())
        })?;
        let noise_power_w = match self.noise {
            NoiseSpec::DbmPerHz(d) => noise_power_from_density(d, self.bandwidth_hz),
            NoiseSpec::Watts(w) => w,
        };
        let system = WirelessSystem {
            bandwidth_hz: self.bandwidth_hz,
            noise_power_w,
            update_bits: self.update_bits,
        };
        system.validate()?;
        Ok(system)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningSpec {
    pub epsilon: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "one")]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    Quadratic(QuadraticSpec),
    Logistic(LogisticSpec),
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::Quadratic(QuadraticSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub task: TaskSpec,
    pub identical_data: bool,
    /// Seeds `seed, seed + 1, ...` used by multi-seed studies.
    pub seeds: usize,
    /// Overrides for the planned schedule.
    pub batch: Option<u64>,
    pub local_rounds: Option<usize>,
    pub rounds: Option<usize>,
    pub step_size: StepSize,
    /// Target optimality gap for time-to-target studies; defaults to epsilon.
    pub target_gap: Option<f64>,
    /// Round cap for time-to-target studies.
    pub max_rounds: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            task: TaskSpec::default(),
            identical_data: true,
            seeds: 30,
            batch: None,
            local_rounds: None,
            rounds: None,
            step_size: StepSize::Theorem1,
            target_gap: None,
            max_rounds: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    B,
    Theta,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::B => "b",
            SweepAxis::Theta => "theta",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A fixed `(b, V)` schedule to compare against. Without `theta`, local
/// accuracy is backed out of `V` as `theta = exp(-V / nu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub name: String,
    pub batch: u64,
    pub local_rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

fn default_baselines() -> Vec<BaselineSpec> {
    vec![
        BaselineSpec { name: "FedAvg".into(), batch: 10, local_rounds: 20, theta: None },
        BaselineSpec { name: "Rand".into(), batch: 16, local_rounds: 15, theta: None },
    ]
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.schema_version == SCHEMA_VERSION, || {
            DeflError::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ))
        })?;
        self.plan_inputs()?;
        self.planner.validate()?;
        let sim = &self.sim;
        ensure(sim.seeds >= 1 && sim.max_rounds >= 1, || {
            DeflError::Config("sim.seeds and sim.max_rounds must be at least 1".into())
        })?;
        ensure(sim.batch.is_none_or(|b| b >= 1), || DeflError::Config("sim.batch must be at least 1".into()))?;
        ensure(sim.local_rounds.is_none_or(|v| v >= 1) && sim.rounds.is_none_or(|h| h >= 1), || {
            DeflError::Config("sim.local_rounds and sim.rounds must be at least 1".into())
        })?;
        ensure(sim.target_gap.is_none_or(|g| g.is_finite() && g > 0.0), || {
            DeflError::Config("sim.target_gap must be positive".into())
        })?;
        if let StepSize::Fixed(eta) = sim.step_size {
            ensure(eta.is_finite() && eta > 0.0, || DeflError::Config("step size must be positive".into()))?;
        }
        if let TaskSpec::Quadratic(q) = sim.task {
            ensure(!(sim.identical_data && q.heterogeneity > 0.0), || {
                DeflError::Config("identical_data excludes quadratic heterogeneity > 0".into())
            })?;
        }
        self.build_task(0)?;
        if let Some(sweep) = &self.sweep {
            ensure(!sweep.values.is_empty(), || DeflError::Config("sweep.values is empty".into()))?;
        }
        for b in &self.baselines {
            ensure(b.batch >= 1 && b.local_rounds >= 1, || {
                DeflError::Config(format!("baseline {}: batch and local_rounds must be at least 1", b.name))
            })?;
            ensure(b.theta.is_none_or(|t| t > 0.0 && t < 1.0), || {
                DeflError::Config(format!("baseline {}: theta must lie in (0, 1)", b.name))
            })?;
        }
        Ok(())
    }

    pub fn fleet(&self) -> Result<Fleet> {
        let devices = self.devices.iter().map(DeviceSpec::resolve).collect::<Result<Vec<_>>>()?;
        Fleet::new(devices, self.wireless.resolve()?)
    }

    pub fn learning(&self) -> Result<LearningParams> {
        let l = &self.learning;
        LearningParams::new(l.epsilon, l.nu, l.c, self.devices.len())
    }

    pub fn plan_inputs(&self) -> Result<PlanInputs> {
        let l = &self.learning;
        PlanInputs::from_fleet(&self.fleet()?, l.epsilon, l.nu, l.c)
    }

    /// Target gap for time-to-target studies.
    pub fn target_gap(&self) -> f64 {
        self.sim.target_gap.unwrap_or(self.learning.epsilon)
    }

    /// Synthetic task for the configured fleet, generated from `seed`.
    pub fn build_task(&self, seed: u64) -> Result<SyntheticTask> {
        let sizes: Vec<u64> = self.devices.iter().map(|d| d.samples).collect();
        match self.sim.task {
            TaskSpec::Quadratic(q) => {
                let weights: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
                QuadraticTask::generate(&q, &weights, seed).map(SyntheticTask::Quadratic)
            }
            TaskSpec::Logistic(l) => {
                LogisticTask::generate(&l, &sizes, self.sim.identical_data, seed).map(SyntheticTask::Logistic)
            }
        }
    }
}

/// Parses and validates a config held in memory. `origin` labels errors.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        DeflError::Config(format!("{origin}: {e}"))
    })?;
    cfg.validate().map_err(|e| match e {
        DeflError::Config(_) => e,
        other => DeflError::Config(format!("{origin}: {other}")),
    })?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| DeflError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "devices": [
            {"id": "a", "cycles_per_bit": 30, "bits_per_sample": 1e6, "frequency_hz": 2e9,
             "tx_power_w": 0.1, "channel_gain": 1e-9, "samples": 100}
        ],
        "wireless": {"bandwidth_hz": 2e7, "noise": {"dbm_per_hz": -174}, "update_bits": 1e6},
        "learning": {"epsilon": 0.01}
    }"#;

    #[test]
    fn defaults_resolved() {
        let cfg = parse_config(MINIMAL, "mem").unwrap();
        assert_eq!(cfg.learning.c, 1.0);
        assert_eq!(cfg.learning.nu, 1.0);
        assert_eq!(cfg.baselines[0].batch, 10);
        assert_eq!(cfg.sim.seeds, 30);
        let echoed = serde_json::to_string(&cfg).unwrap();
        assert!(echoed.contains("\"c\":1.0"));
        assert_eq!(cfg.fleet().unwrap().devices[0].cycles_per_sample, 3e7);
    }

    #[test]
    fn zero_bandwidth_rejected() {
        let text = MINIMAL.replace("\"bandwidth_hz\": 2e7", "\"bandwidth_hz\": 0");
        let err = parse_config(&text, "mem").unwrap_err();
        assert!(err.to_string().contains("bandwidth must be positive"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_rejected_with_position() {
        let text = MINIMAL.replace("\"epsilon\": 0.01", "\"epsilon\": 0.01, \"eps\": 2");
        let err = parse_config(&text, "mem").unwrap_err().to_string();
        assert!(err.contains("unknown field `eps`"), "{err}");
        assert!(err.contains("at line 8 column"), "{err}");
        let task = MINIMAL.replace(
            "\"learning\"",
            "\"sim\": {\"task\": {\"kind\": \"quadratic\", \"dim\": 3}}, \"learning\"",
        );
        assert!(parse_config(&task, "mem").is_err());
    }

    #[test]
    fn ambiguous_device_rejected() {
        let text = MINIMAL.replace("\"cycles_per_bit\": 30,", "\"cycles_per_sample\": 5, \"cycles_per_bit\": 30,");
        assert!(parse_config(&text, "mem").unwrap_err().to_string().contains("cycles_per_sample"));
    }

    #[test]
    fn task_variants_parse() {
        let text = MINIMAL.replace(
            "\"learning\"",
            "\"sim\": {\"task\": {\"kind\": \"logistic\", \"dimension\": 3}, \"step_size\": {\"fixed\": 0.1}}, \"learning\"",
        );
        let cfg = parse_config(&text, "mem").unwrap();
        assert!(matches!(cfg.sim.task, TaskSpec::Logistic(LogisticSpec { dimension: 3, .. })));
        assert_eq!(cfg.sim.step_size, StepSize::Fixed(0.1));
        assert!(matches!(cfg.build_task(1).unwrap(), SyntheticTask::Logistic(_)));
    }
}
