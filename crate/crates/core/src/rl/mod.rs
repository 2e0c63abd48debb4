//! Learned allocation: a one-step (contextual bandit) environment over the
//! cloud, a Gaussian MLP policy and PPO training.
//!
//! The state is the job size followed by `(free qubits, error score, CLOPS)`
//! for each device slot, normalized and zero-padded to a fixed number of
//! slots. The action is one unnormalized weight per slot; negative weights
//! count as zero and the rest are turned into integer qubit shares. The
//! reward is the mean fidelity of the devices the allocation uses.

mod mlp;
mod policy;
mod ppo;

pub use mlp::{Adam, Dense, Mlp, Trace};
pub use policy::{gaussian_entropy, gaussian_log_prob, Policy, FORMAT_VERSION};
pub use ppo::{ppo_loss, train_ppo, BatchLog, LossOutput, Sample, TrainingLog};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{DeviceProfile, DeviceSnapshot, ErrorScoreWeights, ProfileError};
use crate::metrics::{final_fidelity, MetricsConfig};
use crate::scheduler::{partition_from_fractions, plan_device_fidelities, AllocationPlan};
use crate::sim::SimTime;
use crate::workload::QJob;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("{devices} devices exceed the policy's {slots} device slots")]
    TooManyDevices { devices: usize, slots: usize },
    #[error("state has {got} values, policy expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("policy shape mismatch: {0}")]
    Shape(String),
    #[error("policy file is malformed at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(
        "training loss became non-finite at batch {batch}; try a smaller learning_rate \
         (currently {learning_rate})"
    )]
    NonFiniteLoss { batch: usize, learning_rate: f64 },
    #[error("invalid training setup: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub timesteps: usize,
    pub learning_rate: f64,
    pub clip_ratio: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub batch_size: usize,
    pub epochs_per_batch: usize,
    pub hidden_sizes: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            timesteps: 100_000,
            learning_rate: 3e-4,
            clip_ratio: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            batch_size: 64,
            epochs_per_batch: 10,
            hidden_sizes: vec![64, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub q_max: f64,
    pub capacity_norm: f64,
    pub clops_norm: f64,
    pub num_device_slots: usize,
    pub epsilon: f64,
    /// Multiply the reward by `phi^(k-1)` like the reported fidelity.
    pub reward_includes_penalty: bool,
    pub training: TrainingConfig,
    pub seed: u64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            q_max: 50.0,
            capacity_norm: 150.0,
            clops_norm: 1e6,
            num_device_slots: 5,
            epsilon: 1e-8,
            reward_includes_penalty: false,
            training: TrainingConfig::default(),
            seed: 0,
        }
    }
}

impl RlConfig {
    pub fn state_dim(&self) -> usize {
        1 + 3 * self.num_device_slots
    }

    pub fn actor_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.state_dim()];
        s.extend(&self.training.hidden_sizes);
        s.push(self.num_device_slots);
        s
    }

    pub fn critic_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.state_dim()];
        s.extend(&self.training.hidden_sizes);
        s.push(1);
        s
    }
}

/// Normalized observation handed to the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `[q/q_max, then per slot (level/capacity_norm, error_score, clops/clops_norm)]`,
/// unused slots zero. Values are not clamped.
pub fn build_state(
    job: &QJob,
    devices: &[DeviceSnapshot],
    cfg: &RlConfig,
) -> Result<StateVector, RlError> {
    if devices.len() > cfg.num_device_slots {
        return Err(RlError::TooManyDevices {
            devices: devices.len(),
            slots: cfg.num_device_slots,
        });
    }
    let mut v = vec![0.0; cfg.state_dim()];
    v[0] = job.num_qubits as f64 / cfg.q_max;
    for (i, d) in devices.iter().enumerate() {
        v[1 + 3 * i] = d.level as f64 / cfg.capacity_norm;
        v[2 + 3 * i] = d.error_score;
        v[3 + 3 * i] = d.clops / cfg.clops_norm;
    }
    Ok(StateVector(v))
}

/// Negative and non-finite action entries become zero weight.
pub fn action_weights(raw: &[f64]) -> Vec<f64> {
    raw.iter()
        .map(|&x| if x.is_finite() && x > 0.0 { x } else { 0.0 })
        .collect()
}

/// Ranges jobs are drawn from during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDistribution {
    pub qubit_range: [u32; 2],
    pub depth_range: [u32; 2],
    pub shots_range: [u64; 2],
    /// Absent: `[q*d/4, q*d/2]` per job.
    #[serde(default)]
    pub two_qubit_range: Option<[u64; 2]>,
}

impl JobDistribution {
    /// Job ranges of the standard 1,000-job workload.
    pub fn standard() -> Self {
        Self {
            qubit_range: [130, 250],
            depth_range: [5, 20],
            shots_range: [10_000, 100_000],
            two_qubit_range: None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, id: usize) -> QJob {
        let q = rng.random_range(self.qubit_range[0]..=self.qubit_range[1]);
        let d = rng.random_range(self.depth_range[0]..=self.depth_range[1]);
        let s = rng.random_range(self.shots_range[0]..=self.shots_range[1]);
        let [lo, hi] = self.two_qubit_range.unwrap_or_else(|| {
            let area = q as u64 * d as u64;
            [area / 4, area / 2]
        });
        QJob {
            job_id: format!("train{id}"),
            num_qubits: q,
            depth: d,
            num_shots: s,
            two_qubit_gates: rng.random_range(lo..=hi),
            arrival_time: SimTime::ZERO,
        }
    }

    fn validate(&self) -> Result<(), RlError> {
        let ok = self.qubit_range[0] >= 1
            && self.qubit_range[0] <= self.qubit_range[1]
            && self.depth_range[0] <= self.depth_range[1]
            && self.shots_range[0] >= 1
            && self.shots_range[0] <= self.shots_range[1]
            && self.two_qubit_range.is_none_or(|[a, b]| a <= b);
        if ok {
            Ok(())
        } else {
            Err(RlError::Config(format!(
                "job distribution ranges are invalid: {self:?}"
            )))
        }
    }
}

/// Devices (all idle) and a job distribution for bandit episodes.
#[derive(Debug, Clone)]
pub struct TrainingEnv {
    pub profiles: Vec<DeviceProfile>,
    pub snapshots: Vec<DeviceSnapshot>,
    pub jobs: JobDistribution,
    pub metrics: MetricsConfig,
}

impl TrainingEnv {
    pub fn new(
        profiles: Vec<DeviceProfile>,
        jobs: JobDistribution,
        metrics: MetricsConfig,
        weights: &ErrorScoreWeights,
    ) -> Result<Self, RlError> {
        jobs.validate()?;
        if profiles.is_empty() {
            return Err(RlError::Config("at least one device is required".into()));
        }
        let snapshots = profiles
            .iter()
            .map(|p| DeviceSnapshot::idle(p, weights))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            profiles,
            snapshots,
            jobs,
            metrics,
        })
    }

    pub fn caps(&self) -> Vec<u32> {
        self.snapshots.iter().map(|d| d.capacity).collect()
    }
}

/// Result of one bandit episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// `None` when no allocation could be formed.
    pub plan: Option<AllocationPlan>,
    pub device_fidelities: Vec<f64>,
    pub infeasible: bool,
    pub done: bool,
}

/// Allocates `job` from a raw action and scores it.
pub fn env_step(job: &QJob, env: &TrainingEnv, raw_action: &[f64], cfg: &RlConfig) -> StepOutcome {
    let n = env.profiles.len();
    let infeasible = StepOutcome {
        reward: 0.0,
        plan: None,
        device_fidelities: Vec::new(),
        infeasible: true,
        done: true,
    };
    if raw_action.len() < n {
        return infeasible;
    }
    let weights = action_weights(&raw_action[..n]);
    let plan = match partition_from_fractions(job.num_qubits, &env.caps(), &weights, cfg.epsilon) {
        Ok(p) => p,
        Err(_) => return infeasible,
    };
    let profiles: Vec<&DeviceProfile> = env.profiles.iter().collect();
    let fids = plan_device_fidelities(job, &plan, &profiles, &env.metrics);
    let phi = if cfg.reward_includes_penalty {
        env.metrics.phi
    } else {
        1.0
    };
    let reward = final_fidelity(&fids, phi).unwrap_or(0.0);
    StepOutcome {
        reward,
        plan: Some(plan),
        device_fidelities: fids,
        infeasible: false,
        done: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use approx::assert_relative_eq;

    fn job(q: u32) -> QJob {
        QJob {
            job_id: "j".into(),
            num_qubits: q,
            depth: 10,
            num_shots: 1000,
            two_qubit_gates: 200,
            arrival_time: SimTime::ZERO,
        }
    }

    #[test]
    fn state_with_no_devices_is_padding() {
        let s = build_state(&job(50), &[], &RlConfig::default()).unwrap();
        let mut expected = [0.0; 16];
        expected[0] = 1.0;
        assert_eq!(s.values(), &expected[..]);
    }

    #[test]
    fn state_normalizes_device_features() {
        let dev = DeviceSnapshot {
            capacity: 127,
            level: 127,
            clops: 220_000.0,
            quantum_volume: 127,
            error_score: 0.02,
        };
        let s = build_state(&job(150), &[dev], &RlConfig::default()).unwrap();
        let v = s.values();
        assert_eq!(v.len(), 16);
        assert_relative_eq!(v[0], 3.0);
        assert_relative_eq!(v[1], 127.0 / 150.0, max_relative = 1e-15);
        assert!((v[1] - 0.84667).abs() < 1e-5);
        assert_eq!(v[2], 0.02);
        assert_relative_eq!(v[3], 0.22, max_relative = 1e-15);
        assert!(v[4..].iter().all(|&x| x == 0.0));

        let five = build_state(&job(150), &[dev; 5], &RlConfig::default()).unwrap();
        for slot in 1..5 {
            assert_eq!(
                five.values()[1..4],
                five.values()[1 + 3 * slot..4 + 3 * slot]
            );
        }
        assert!(matches!(
            build_state(&job(150), &[dev; 6], &RlConfig::default()),
            Err(RlError::TooManyDevices {
                devices: 6,
                slots: 5
            })
        ));
    }

    fn perfect_env() -> TrainingEnv {
        let profiles = (0..3)
            .map(|i| synthetic::uniform_profile(&format!("p{i}"), 127, 100_000.0, 0.0, 0.0, 0.0))
            .collect();
        TrainingEnv::new(
            profiles,
            JobDistribution::standard(),
            MetricsConfig::default(),
            &ErrorScoreWeights::default(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_devices_give_unit_reward() {
        let env = perfect_env();
        let out = env_step(&job(200), &env, &[0.3, -1.0, 2.0], &RlConfig::default());
        assert!(!out.infeasible && out.done);
        assert_eq!(out.reward, 1.0);
    }

    #[test]
    fn reward_is_mean_device_fidelity() {
        // two single-qubit-error-only devices: F = (1 - e)^depth
        let e_a = 1.0 - 0.8f64.powf(0.1);
        let e_b = 1.0 - 0.6f64.powf(0.1);
        let profiles = vec![
            synthetic::uniform_profile("a", 127, 1.0, 0.0, e_a, 0.0),
            synthetic::uniform_profile("b", 127, 1.0, 0.0, e_b, 0.0),
        ];
        let env = TrainingEnv::new(
            profiles,
            JobDistribution::standard(),
            MetricsConfig::default(),
            &ErrorScoreWeights::default(),
        )
        .unwrap();
        let out = env_step(&job(200), &env, &[1.0, 1.0], &RlConfig::default());
        assert_eq!(out.plan.as_ref().unwrap().k(), 2);
        assert_relative_eq!(out.reward, 0.7, max_relative = 1e-12);

        let single = env_step(&job(100), &env, &[1.0, -3.0], &RlConfig::default());
        assert_eq!(single.plan.as_ref().unwrap().k(), 1);
        assert_relative_eq!(single.reward, 0.8, max_relative = 1e-12);
    }

    #[test]
    fn oversized_job_is_infeasible() {
        let env = perfect_env();
        let out = env_step(&job(1000), &env, &[1.0, 1.0, 1.0], &RlConfig::default());
        assert!(out.infeasible);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn negative_weights_are_clamped() {
        assert_eq!(action_weights(&[-1.0, 0.5, f64::NAN]), vec![0.0, 0.5, 0.0]);
    }
}
