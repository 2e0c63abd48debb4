//! Gaussian actor-critic policy and its JSON persistence.

use std::f64::consts::{E, PI};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::{RlConfig, RlError, StateVector};

pub const FORMAT_VERSION: u32 = 1;

/// Actor means, a state-independent log standard deviation per action
/// dimension, and a critic estimating the expected reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    config: RlConfig,
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    format_version: u32,
    config: RlConfig,
    actor: Mlp,
    log_std: Vec<f64>,
    critic: Mlp,
}

impl Policy {
    pub fn new<R: Rng + ?Sized>(config: RlConfig, rng: &mut R) -> Self {
        let actor = Mlp::new(&config.actor_sizes(), 0.01, rng);
        let critic = Mlp::new(&config.critic_sizes(), 1.0, rng);
        let log_std = vec![0.0; config.num_device_slots];
        Self {
            config,
            actor,
            log_std,
            critic,
        }
    }

    pub fn config(&self) -> &RlConfig {
        &self.config
    }

    fn check_state(&self, state: &StateVector) -> Result<(), RlError> {
        if state.len() != self.actor.input_dim() {
            return Err(RlError::DimensionMismatch {
                expected: self.actor.input_dim(),
                got: state.len(),
            });
        }
        Ok(())
    }

    pub fn mean(&self, state: &StateVector) -> Result<Vec<f64>, RlError> {
        self.check_state(state)?;
        Ok(self.actor.forward(state.values()))
    }

    /// The mean action; used for scheduling decisions.
    pub fn act_deterministic(&self, state: &StateVector) -> Result<Vec<f64>, RlError> {
        self.mean(state)
    }

    /// Draws an action and returns it with its log-density.
    pub fn sample_action<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64), RlError> {
        let mean = self.mean(state)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let z: f64 = rng.sample(StandardNormal);
                m + ls.exp() * z
            })
            .collect();
        let lp = gaussian_log_prob(&action, &mean, &self.log_std);
        Ok((action, lp))
    }

    pub fn log_prob(&self, state: &StateVector, action: &[f64]) -> Result<f64, RlError> {
        let mean = self.mean(state)?;
        Ok(gaussian_log_prob(action, &mean, &self.log_std))
    }

    pub fn value(&self, state: &StateVector) -> Result<f64, RlError> {
        self.check_state(state)?;
        Ok(self.critic.forward(state.values())[0])
    }

    /// Differential entropy of the action distribution.
    pub fn entropy(&self) -> f64 {
        gaussian_entropy(&self.log_std)
    }

    pub fn num_params(&self) -> usize {
        self.actor.num_params() + self.log_std.len() + self.critic.num_params()
    }

    /// Actor layers, then `log_std`, then critic layers.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        self.actor.write_params(&mut v);
        v.extend_from_slice(&self.log_std);
        self.critic.write_params(&mut v);
        v
    }

    pub fn set_params(&mut self, src: &[f64]) {
        assert_eq!(src.len(), self.num_params());
        let mut off = self.actor.read_params(src);
        let n = self.log_std.len();
        self.log_std.copy_from_slice(&src[off..off + n]);
        off += n;
        self.critic.read_params(&src[off..]);
    }

    /// Errors unless the network shapes agree with `config`.
    pub fn check_compatible(&self, config: &RlConfig) -> Result<(), RlError> {
        let expect_actor = config.actor_sizes();
        let expect_critic = config.critic_sizes();
        if !self.actor.has_shape(&expect_actor) {
            return Err(RlError::Shape(format!(
                "actor layers do not match sizes {expect_actor:?} (state dim {}, {} device slots)",
                config.state_dim(),
                config.num_device_slots
            )));
        }
        if self.log_std.len() != config.num_device_slots {
            return Err(RlError::Shape(format!(
                "log_std has {} entries but config has {} device slots",
                self.log_std.len(),
                config.num_device_slots
            )));
        }
        if !self.critic.has_shape(&expect_critic) {
            return Err(RlError::Shape(format!(
                "critic layers do not match sizes {expect_critic:?}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = PolicyFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            actor: self.actor.clone(),
            log_std: self.log_std.clone(),
            critic: self.critic.clone(),
        };
        serde_json::to_string_pretty(&file).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RlError> {
        let file: PolicyFile = serde_json::from_str(text).map_err(|e| RlError::Parse {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        if file.format_version != FORMAT_VERSION {
            return Err(RlError::Shape(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let policy = Self {
            config: file.config,
            actor: file.actor,
            log_std: file.log_std,
            critic: file.critic,
        };
        policy.check_compatible(&policy.config)?;
        Ok(policy)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RlError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| RlError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RlError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Loads a policy and checks it against the caller's configuration.
    pub fn load_for(path: impl AsRef<Path>, config: &RlConfig) -> Result<Self, RlError> {
        let policy = Self::load(path)?;
        policy.check_compatible(config)?;
        Ok(policy)
    }
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Joint log-density of independent normals.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), ls)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

/// `sum_i (log_std_i + 0.5 * ln(2 * pi * e))`.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    let c = 0.5 * (2.0 * PI * E).ln();
    log_std.iter().map(|ls| ls + c).sum()
}
