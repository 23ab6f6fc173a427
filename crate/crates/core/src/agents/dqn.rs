//! Deep Q-learning with experience replay and a periodically synced target
//! network. Exploration and bootstrapping both respect the action mask.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::dist::masked_argmax;
use super::mlp::Mlp;
use super::ppo::common_jobs;
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metrics::RunLog;
use crate::policy::{Policy, PolicyRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    pub total_steps: u64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Environment steps between target-network syncs.
    pub target_sync: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps over which epsilon decays linearly; half of `total_steps` when
    /// absent.
    pub epsilon_decay_steps: Option<u64>,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            total_steps: 100_000,
            buffer_capacity: 50_000,
            batch_size: 64,
            lr: 5e-4,
            gamma: 1.0,
            target_sync: 500,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: None,
            max_grad_norm: 10.0,
            hidden: vec![64, 64],
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("total_steps", self.total_steps as f64),
            ("buffer_capacity", self.buffer_capacity as f64),
            ("batch_size", self.batch_size as f64),
            ("lr", self.lr),
            ("target_sync", self.target_sync as f64),
        ] {
            if !(value > 0.0) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", "must lie in (0, 1]"));
        }
        for (field, value) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        if !(self.max_grad_norm >= 0.0 && self.max_grad_norm.is_finite()) {
            return Err(Error::config("max_grad_norm", "must be finite and non-negative"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer sizes must be positive"));
        }
        Ok(())
    }

    /// Linear decay from start to end, then constant.
    pub fn epsilon(&self, step: u64) -> f64 {
        let decay = self
            .epsilon_decay_steps
            .unwrap_or(self.total_steps / 2)
            .max(1);
        let frac = (step as f64 / decay as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub next_mask: Vec<bool>,
    pub done: bool,
}

/// Fixed-capacity ring buffer; the oldest experience is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Experience>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, experience: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(experience);
        } else {
            self.items[self.next] = experience;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// `n` uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<&Experience> {
        (0..n)
            .map(|_| &self.items[rng.gen_range(0..self.items.len() as u64) as usize])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnAgent {
    pub q: Mlp,
}

impl DqnAgent {
    pub fn new(obs_dim: usize, actions: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut rng = PolicyRng::seed_from_u64(seed);
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(actions);
        Ok(DqnAgent {
            q: Mlp::random(&dims, 1.0, &mut rng)?,
        })
    }

    pub fn greedy_action(&self, observation: &[f64], mask: &[bool]) -> Result<usize> {
        masked_argmax(&self.q.forward(observation)?, mask)
    }
}

impl Policy for DqnAgent {
    fn name(&self) -> String {
        "dqn".into()
    }

    fn select(
        &mut self,
        _state: &EnvState,
        observation: &[f64],
        mask: &[bool],
        _rng: &mut PolicyRng,
    ) -> Result<usize> {
        self.greedy_action(observation, mask)
    }
}

/// TD target `r + gamma * max_{valid a'} Q_target(s', a')`, with no bootstrap
/// at episode end.
pub fn td_target(target: &Mlp, experience: &Experience, gamma: f64) -> Result<f64> {
    if experience.done {
        return Ok(experience.reward);
    }
    let q = target.forward(&experience.next_observation)?;
    let best = masked_argmax(&q, &experience.next_mask)?;
    Ok(experience.reward + gamma * q[best])
}

/// Mean of `0.5 * (Q(s, a) - y)^2` over `batch`; its gradient is added to
/// `grad`.
pub fn td_loss_gradient(
    online: &Mlp,
    batch: &[&Experience],
    targets: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut upstream = vec![0.0; online.output_dim()];
    for (e, &y) in batch.iter().zip(targets) {
        let acts = online.forward_cached(&e.observation)?;
        let err = acts.output()[e.action] - y;
        loss += 0.5 * err * err * scale;
        upstream.iter_mut().for_each(|u| *u = 0.0);
        upstream[e.action] = err * scale;
        online.accumulate_gradient(&acts, &upstream, grad)?;
    }
    Ok(loss)
}

/// Trains from scratch, one gradient step per environment step once the
/// buffer holds a full batch. One event per episode goes to `log`. Episodes
/// always run to the end, so training may overshoot `total_steps` by less
/// than one episode.
pub fn train_dqn(
    instances: &[Arc<Instance>],
    make_env: &dyn Fn(Arc<Instance>) -> EnvState,
    config: &DqnConfig,
    log: &mut RunLog,
) -> Result<DqnAgent> {
    config.validate()?;
    let jobs = common_jobs(instances)?;
    let obs_dim = crate::env::observation_len(jobs);
    let mut agent = DqnAgent::new(obs_dim, jobs, &config.hidden, config.seed)?;
    let mut target = agent.q.clone();
    let mut adam = Adam::new(agent.q.num_params(), config.lr);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut rng = PolicyRng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut grad = vec![0.0; agent.q.num_params()];

    let mut steps = 0u64;
    let mut episodes = 0u64;
    while steps < config.total_steps {
        let instance = &instances[(episodes % instances.len() as u64) as usize];
        let mut env = make_env(Arc::clone(instance));
        let mut observation = env.observe();
        let mut mask = env.action_mask();
        let (mut episode_return, mut loss_sum, mut updates) = (0.0, 0.0, 0u64);
        let epsilon = config.epsilon(steps);
        loop {
            let action = if rng.gen::<f64>() < config.epsilon(steps) {
                let valid: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
                valid[rng.gen_range(0..valid.len() as u64) as usize]
            } else {
                agent.greedy_action(&observation, &mask)?
            };
            let step = env.step(action)?;
            steps += 1;
            episode_return += step.reward;
            let done = step.done;
            let makespan = step.info.makespan;
            buffer.push(Experience {
                observation: std::mem::replace(&mut observation, step.observation.clone()),
                action,
                reward: step.reward,
                next_observation: step.observation,
                next_mask: step.mask.clone(),
                done,
            });
            mask = step.mask;

            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng);
                let targets = batch
                    .iter()
                    .map(|e| td_target(&target, e, config.gamma))
                    .collect::<Result<Vec<f64>>>()?;
                grad.iter_mut().for_each(|g| *g = 0.0);
                let loss = td_loss_gradient(&agent.q, &batch, &targets, &mut grad)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite {
                        update: (steps - 1) as usize,
                        detail: format!("td loss = {loss} in episode {episodes}"),
                    });
                }
                clip_grad_norm(&mut grad, config.max_grad_norm);
                adam.step(agent.q.params_mut(), &grad);
                loss_sum += loss;
                updates += 1;
            }
            if steps.is_multiple_of(config.target_sync) {
                target = agent.q.clone();
            }
            if done {
                episodes += 1;
                let mean_loss = if updates > 0 { loss_sum / updates as f64 } else { 0.0 };
                log.record(
                    steps,
                    episodes,
                    [
                        ("return", episode_return),
                        ("makespan", f64::from(makespan)),
                        ("epsilon", epsilon),
                        ("loss", mean_loss),
                    ],
                );
                break;
            }
        }
    }
    Ok(agent)
}
