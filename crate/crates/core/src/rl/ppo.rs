//! Clipped-surrogate PPO for one-step episodes.
//!
//! With a single decision per episode the return is the reward itself and
//! the advantage is `reward - V(state)`; there is no discounting or
//! bootstrapping.

use rand::SeedableRng;
use rand_pcg::Pcg64;

use super::{build_state, env_step, Adam, Policy, RlConfig, RlError, StateVector, TrainingEnv};

/// One collected episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: StateVector,
    pub action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// dLoss/dParams in [`Policy::params`] order.
    pub grad: Vec<f64>,
}

/// `policy_loss + value_coef * value_loss - entropy_coef * entropy` with
/// `policy_loss = -mean(min(r A, clip(r, 1 - c, 1 + c) A))` and
/// `value_loss = mean((V(s) - reward)^2)`.
pub fn ppo_loss(policy: &Policy, batch: &[Sample], cfg: &RlConfig) -> Result<LossOutput, RlError> {
    let t = &cfg.training;
    let n = batch.len() as f64;
    let actor_n = policy.actor.num_params();
    let dims = policy.log_std.len();
    let mut grad = vec![0.0; policy.num_params()];
    let (g_actor, rest) = grad.split_at_mut(actor_n);
    let (g_log_std, g_critic) = rest.split_at_mut(dims);

    let sigma: Vec<f64> = policy.log_std.iter().map(|l| l.exp()).collect();
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    for s in batch {
        if s.state.len() != policy.actor.input_dim() {
            return Err(RlError::DimensionMismatch {
                expected: policy.actor.input_dim(),
                got: s.state.len(),
            });
        }
        let trace = policy.actor.trace(s.state.values());
        let mean = &trace.output;
        let lp = super::gaussian_log_prob(&s.action, mean, &policy.log_std);
        let ratio = (lp - s.old_log_prob).exp();
        let a = s.advantage;
        let clipped = ratio.clamp(1.0 - t.clip_ratio, 1.0 + t.clip_ratio);
        policy_loss -= (ratio * a).min(clipped * a) / n;

        // the clipped branch is flat in the parameters
        let active =
            !((a >= 0.0 && ratio > 1.0 + t.clip_ratio) || (a < 0.0 && ratio < 1.0 - t.clip_ratio));
        if active {
            let coef = -a * ratio / n;
            let mut d_mean = vec![0.0; dims];
            for i in 0..dims {
                let diff = s.action[i] - mean[i];
                let var = sigma[i] * sigma[i];
                d_mean[i] = coef * diff / var;
                g_log_std[i] += coef * (diff * diff / var - 1.0);
            }
            policy.actor.backward(&trace, &d_mean, g_actor);
        }

        let vtrace = policy.critic.trace(s.state.values());
        let err = vtrace.output[0] - s.reward;
        value_loss += err * err / n;
        policy
            .critic
            .backward(&vtrace, &[t.value_coef * 2.0 * err / n], g_critic);
    }
    let entropy = policy.entropy();
    for g in g_log_std.iter_mut() {
        *g -= t.entropy_coef;
    }
    Ok(LossOutput {
        loss: policy_loss + t.value_coef * value_loss - t.entropy_coef * entropy,
        policy_loss,
        value_loss,
        entropy,
        grad,
    })
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLog {
    pub batch: usize,
    pub mean_reward: f64,
    pub entropy: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub batches: Vec<BatchLog>,
}

impl TrainingLog {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "batch",
            "mean_reward",
            "entropy",
            "policy_loss",
            "value_loss",
        ])?;
        for b in &self.batches {
            w.write_record([
                b.batch.to_string(),
                b.mean_reward.to_string(),
                b.entropy.to_string(),
                b.policy_loss.to_string(),
                b.value_loss.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean reward over the first and last tenth of the batches (at least
    /// one batch each).
    pub fn decile_means(&self) -> Option<(f64, f64)> {
        let n = self.batches.len();
        if n == 0 {
            return None;
        }
        let m = (n / 10).max(1);
        let avg = |bs: &[BatchLog]| bs.iter().map(|b| b.mean_reward).sum::<f64>() / bs.len() as f64;
        Some((avg(&self.batches[..m]), avg(&self.batches[n - m..])))
    }
}

/// Trains a fresh policy seeded from `cfg.seed`. The same inputs always
/// produce the same parameters.
pub fn train_ppo(env: &TrainingEnv, cfg: &RlConfig) -> Result<(Policy, TrainingLog), RlError> {
    let t = &cfg.training;
    if env.profiles.len() > cfg.num_device_slots {
        return Err(RlError::TooManyDevices {
            devices: env.profiles.len(),
            slots: cfg.num_device_slots,
        });
    }
    if t.batch_size == 0 {
        return Err(RlError::Config("batch_size must be positive".into()));
    }
    if !(t.learning_rate.is_finite() && t.learning_rate > 0.0) {
        return Err(RlError::Config("learning_rate must be positive".into()));
    }
    let mut rng = Pcg64::seed_from_u64(cfg.seed);
    let mut policy = Policy::new(cfg.clone(), &mut rng);
    let mut opt = Adam::new(policy.num_params(), t.learning_rate);
    let mut log = TrainingLog::default();
    let mut params = policy.params();
    let mut steps = 0;
    while steps < t.timesteps {
        let n = t.batch_size.min(t.timesteps - steps);
        let mut batch = Vec::with_capacity(n);
        for i in 0..n {
            let job = env.jobs.sample(&mut rng, steps + i);
            let state = build_state(&job, &env.snapshots, cfg)?;
            let (action, lp) = policy.sample_action(&state, &mut rng)?;
            let reward = env_step(&job, env, &action, cfg).reward;
            let baseline = policy.value(&state)?;
            batch.push(Sample {
                state,
                action,
                old_log_prob: lp,
                advantage: reward - baseline,
                reward,
            });
        }
        steps += n;
        let batch_no = log.batches.len();
        let mut first: Option<LossOutput> = None;
        for _ in 0..t.epochs_per_batch.max(1) {
            let out = ppo_loss(&policy, &batch, cfg)?;
            if !out.loss.is_finite() || out.grad.iter().any(|g| !g.is_finite()) {
                return Err(RlError::NonFiniteLoss {
                    batch: batch_no,
                    learning_rate: t.learning_rate,
                });
            }
            opt.step(&mut params, &out.grad);
            policy.set_params(&params);
            if first.is_none() {
                first = Some(out);
            }
        }
        let first = first.expect("at least one epoch");
        log.batches.push(BatchLog {
            batch: batch_no,
            mean_reward: batch.iter().map(|s| s.reward).sum::<f64>() / n as f64,
            entropy: first.entropy,
            policy_loss: first.policy_loss,
            value_loss: first.value_loss,
        });
    }
    Ok((policy, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::ErrorScoreWeights;
    use crate::metrics::MetricsConfig;
    use crate::rl::JobDistribution;
    use crate::synthetic;

    fn tiny_env() -> TrainingEnv {
        TrainingEnv::new(
            synthetic::reference_profiles(),
            JobDistribution::standard(),
            MetricsConfig::default(),
            &ErrorScoreWeights::default(),
        )
        .unwrap()
    }

    #[test]
    fn zero_timesteps_returns_initial_policy() {
        let mut cfg = RlConfig::default();
        cfg.training.timesteps = 0;
        let (p, log) = train_ppo(&tiny_env(), &cfg).unwrap();
        let fresh = Policy::new(cfg.clone(), &mut Pcg64::seed_from_u64(cfg.seed));
        assert_eq!(p, fresh);
        assert!(log.batches.is_empty());
    }

    #[test]
    fn training_is_reproducible_and_logs_entropy() {
        let mut cfg = RlConfig::default();
        cfg.training.timesteps = 256;
        cfg.training.hidden_sizes = vec![16, 16];
        cfg.seed = 11;
        let (a, log_a) = train_ppo(&tiny_env(), &cfg).unwrap();
        let (b, log_b) = train_ppo(&tiny_env(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
        assert_eq!(log_a.batches.len(), 4);
        assert!(log_a
            .batches
            .iter()
            .all(|b| (0.0..=1.0).contains(&b.mean_reward)));
        // last logged entropy belongs to the policy before the last batch's
        // updates; the final policy's entropy follows the closed form
        let h = crate::rl::gaussian_entropy(&a.log_std);
        assert_eq!(a.entropy(), h);
    }

    #[test]
    fn huge_learning_rate_is_reported() {
        let mut cfg = RlConfig::default();
        cfg.training.timesteps = 64;
        cfg.training.learning_rate = f64::INFINITY;
        assert!(matches!(
            train_ppo(&tiny_env(), &cfg),
            Err(RlError::Config(_))
        ));
    }

    #[test]
    fn divergence_aborts_with_guidance() {
        let mut cfg = RlConfig::default();
        cfg.training.timesteps = 256;
        cfg.training.hidden_sizes = vec![8];
        cfg.training.learning_rate = 1e300;
        let err = train_ppo(&tiny_env(), &cfg).unwrap_err();
        assert!(matches!(err, RlError::NonFiniteLoss { .. }), "{err}");
        assert!(err.to_string().contains("learning_rate"));
    }

    #[test]
    fn log_csv_header() {
        let log = TrainingLog {
            batches: vec![BatchLog {
                batch: 0,
                mean_reward: 0.5,
                entropy: 7.0,
                policy_loss: 0.1,
                value_loss: 0.2,
            }],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "batch,mean_reward,entropy,policy_loss,value_loss\n0,0.5,7,0.1,0.2\n"
        );
        assert_eq!(log.decile_means(), Some((0.5, 0.5)));
    }
}
