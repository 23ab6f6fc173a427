//! Proximal policy optimization with separate policy and value networks.
//!
//! Rollouts are whole episodes over the training instances in round-robin
//! order, so every batch ends on an episode boundary and advantages never
//! need a bootstrap value.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, Adam};
use super::dist::{entropy, masked_argmax, masked_softmax, sample};
use super::mlp::Mlp;
use super::normalize::ObsNormalizer;
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metrics::RunLog;
use crate::policy::{Policy, PolicyRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub total_steps: u64,
    pub steps_per_update: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub lr: f64,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    /// Standardize observations with running statistics.
    pub normalize_observations: bool,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            total_steps: 100_000,
            steps_per_update: 2048,
            epochs: 10,
            minibatch_size: 64,
            clip: 0.2,
            gamma: 1.0,
            gae_lambda: 0.95,
            value_coef: 0.5,
            entropy_coef: 0.01,
            lr: 3e-4,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            normalize_observations: true,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("total_steps", self.total_steps as f64),
            ("steps_per_update", self.steps_per_update as f64),
            ("minibatch_size", self.minibatch_size as f64),
            ("lr", self.lr),
        ];
        for (field, value) in positive {
            if !(value > 0.0) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        for (field, value) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::config(field, "must lie in (0, 1]"));
            }
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::config("clip", "must lie in (0, 1)"));
        }
        for (field, value) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(field, "must be finite and non-negative"));
            }
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer sizes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
    pub value: f64,
    pub log_prob: f64,
}

/// Episode-aligned transitions; `done` marks each episode's last step.
pub type Trajectory = Vec<Transition>;

/// Generalized advantage estimates and value targets. A `done` step has no
/// successor value; the step after it starts a fresh episode.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_value = 0.0;
    let mut running = 0.0;
    for t in (0..n).rev() {
        if dones[t] {
            next_value = 0.0;
            running = 0.0;
        }
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lambda * running;
        advantages[t] = running;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoAgent {
    pub policy: Mlp,
    pub value: Mlp,
    /// Applied to raw observations before both networks.
    pub normalizer: ObsNormalizer,
}

impl PpoAgent {
    pub fn new(obs_dim: usize, actions: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut rng = PolicyRng::seed_from_u64(seed);
        let dims = |out: usize| {
            let mut d = vec![obs_dim];
            d.extend_from_slice(hidden);
            d.push(out);
            d
        };
        Ok(PpoAgent {
            policy: Mlp::random(&dims(actions), 0.01, &mut rng)?,
            value: Mlp::random(&dims(1), 1.0, &mut rng)?,
            normalizer: ObsNormalizer::identity(obs_dim),
        })
    }

    pub fn action_probs(&self, observation: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        masked_softmax(&self.policy.forward(&self.normalizer.apply(observation))?, mask)
    }

    pub fn state_value(&self, observation: &[f64]) -> Result<f64> {
        Ok(self.value.forward(&self.normalizer.apply(observation))?[0])
    }

    pub fn greedy_action(&self, observation: &[f64], mask: &[bool]) -> Result<usize> {
        masked_argmax(&self.policy.forward(&self.normalizer.apply(observation))?, mask)
    }
}

impl Policy for PpoAgent {
    fn name(&self) -> String {
        "ppo".into()
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

/// Plays one episode with sampled actions, appending to `batch`. Returns the
/// episode return and final makespan.
fn collect_episode(
    agent: &PpoAgent,
    mut env: EnvState,
    rng: &mut PolicyRng,
    batch: &mut Trajectory,
) -> Result<(f64, u32)> {
    let mut observation = env.observe();
    let mut mask = env.action_mask();
    let mut total = 0.0;
    loop {
        let probs = agent.action_probs(&observation, &mask)?;
        let action = sample(&probs, rng);
        let value = agent.state_value(&observation)?;
        let step = env.step(action)?;
        total += step.reward;
        batch.push(Transition {
            observation: std::mem::replace(&mut observation, step.observation),
            mask: std::mem::replace(&mut mask, step.mask),
            action,
            reward: step.reward,
            done: step.done,
            value,
            log_prob: probs[action].ln(),
        });
        if step.done {
            return Ok((total, step.info.makespan));
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    /// Largest `|ratio - 1|` on the first minibatch, before any step.
    pub first_ratio_deviation: f64,
    pub minibatches: usize,
}

/// Per-sample sums over one minibatch.
#[derive(Debug, Default, Clone, Copy)]
pub struct MinibatchTerms {
    pub surrogate: f64,
    pub value_error: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clipped: usize,
    pub max_ratio_deviation: f64,
}

impl MinibatchTerms {
    /// The two objectives being minimized: the policy loss
    /// `-(surrogate + entropy_coef * entropy)` and the value loss
    /// `value_coef * 0.5 * err^2`, both averaged over `n` samples.
    pub fn losses(&self, n: usize, config: &PpoConfig) -> (f64, f64) {
        let n = n as f64;
        (
            -(self.surrogate + config.entropy_coef * self.entropy) / n,
            config.value_coef * self.value_error / n,
        )
    }
}

/// Adds the gradients of [`MinibatchTerms::losses`] over `indices` to
/// `grad_pi` and `grad_v`.
#[allow(clippy::too_many_arguments)]
pub fn minibatch_gradient(
    agent: &PpoAgent,
    batch: &[Transition],
    indices: &[usize],
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
    grad_pi: &mut [f64],
    grad_v: &mut [f64],
) -> Result<MinibatchTerms> {
    let mut terms = MinibatchTerms::default();
    let scale = 1.0 / indices.len() as f64;
    for &i in indices {
        let t = &batch[i];
        let adv = advantages[i];
        let input = agent.normalizer.apply(&t.observation);
        let acts = agent.policy.forward_cached(&input)?;
        let probs = masked_softmax(acts.output(), &t.mask)?;
        let log_prob = probs[t.action].ln();
        let ratio = (log_prob - t.log_prob).exp();
        let clipped = ratio.clamp(1.0 - config.clip, 1.0 + config.clip);
        let h = entropy(&probs);
        terms.surrogate += (ratio * adv).min(clipped * adv);
        terms.entropy += h;
        terms.approx_kl += t.log_prob - log_prob;
        terms.max_ratio_deviation = terms.max_ratio_deviation.max((ratio - 1.0).abs());
        if (ratio - 1.0).abs() > config.clip {
            terms.clipped += 1;
        }

        // The surrogate's gradient flows only through the unclipped branch,
        // and only when that branch is the min.
        let coef = if ratio * adv <= clipped * adv { -adv * ratio } else { 0.0 };
        let upstream: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                if !t.mask[k] {
                    return 0.0;
                }
                let indicator = if k == t.action { 1.0 } else { 0.0 };
                let d_surrogate = coef * (indicator - p);
                let d_entropy = config.entropy_coef * p * (p.ln() + h);
                (d_surrogate + d_entropy) * scale
            })
            .collect();
        agent.policy.accumulate_gradient(&acts, &upstream, grad_pi)?;

        let vacts = agent.value.forward_cached(&input)?;
        let err = vacts.output()[0] - returns[i];
        terms.value_error += 0.5 * err * err;
        agent
            .value
            .accumulate_gradient(&vacts, &[config.value_coef * err * scale], grad_v)?;
    }
    Ok(terms)
}

/// Advantages normalized to zero mean and unit variance, plus value targets.
pub fn advantage_targets(batch: &[Transition], config: &PpoConfig) -> (Vec<f64>, Vec<f64>) {
    let rewards: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = batch.iter().map(|t| t.value).collect();
    let dones: Vec<bool> = batch.iter().map(|t| t.done).collect();
    let (mut advantages, returns) = gae(&rewards, &values, &dones, config.gamma, config.gae_lambda);
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let std = (advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    advantages.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
    (advantages, returns)
}

/// Folds the batch into the observation statistics, then recomputes the
/// stored log-probabilities and values under the refreshed inputs so the
/// update starts from the policy that is actually being optimized.
fn refresh_normalizer(agent: &mut PpoAgent, batch: &mut [Transition]) -> Result<()> {
    agent
        .normalizer
        .update(batch.iter().map(|t| t.observation.as_slice()));
    for t in batch.iter_mut() {
        t.log_prob = agent.action_probs(&t.observation, &t.mask)?[t.action].ln();
        t.value = agent.state_value(&t.observation)?;
    }
    Ok(())
}

/// Runs the optimization epochs on one batch.
pub fn ppo_update(
    agent: &mut PpoAgent,
    optimizers: &mut (Adam, Adam),
    batch: &mut [Transition],
    config: &PpoConfig,
    rng: &mut PolicyRng,
) -> Result<UpdateStats> {
    if config.normalize_observations {
        refresh_normalizer(agent, batch)?;
    }
    let batch: &[Transition] = batch;
    let (advantages, returns) = advantage_targets(batch, config);
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut grad_pi = vec![0.0; agent.policy.num_params()];
    let mut grad_v = vec![0.0; agent.value.num_params()];
    let mut samples = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            grad_pi.iter_mut().for_each(|g| *g = 0.0);
            grad_v.iter_mut().for_each(|g| *g = 0.0);
            let terms = minibatch_gradient(
                agent, batch, chunk, &advantages, &returns, config, &mut grad_pi, &mut grad_v,
            )?;
            if stats.minibatches == 0 {
                stats.first_ratio_deviation = terms.max_ratio_deviation;
            }
            stats.policy_loss -= terms.surrogate;
            stats.value_loss += terms.value_error;
            stats.entropy += terms.entropy;
            stats.approx_kl += terms.approx_kl;
            stats.clip_fraction += terms.clipped as f64;
            samples += chunk.len();
            clip_grad_norm(&mut grad_pi, config.max_grad_norm);
            clip_grad_norm(&mut grad_v, config.max_grad_norm);
            optimizers.0.step(agent.policy.params_mut(), &grad_pi);
            optimizers.1.step(agent.value.params_mut(), &grad_v);
            stats.minibatches += 1;
        }
    }
    if samples > 0 {
        let s = samples as f64;
        stats.policy_loss /= s;
        stats.value_loss /= s;
        stats.entropy /= s;
        stats.approx_kl /= s;
        stats.clip_fraction /= s;
    }
    Ok(stats)
}

fn check_finite(update: usize, agent: &PpoAgent, stats: &UpdateStats) -> Result<()> {
    let losses = [
        ("policy_loss", stats.policy_loss),
        ("value_loss", stats.value_loss),
        ("entropy", stats.entropy),
    ];
    if let Some((name, value)) = losses.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            update,
            detail: format!("{name} = {value}"),
        });
    }
    for (name, net) in [("policy", &agent.policy), ("value", &agent.value)] {
        if let Some(i) = net.params().iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                update,
                detail: format!("{name} coefficient {i} = {}", net.params()[i]),
            });
        }
    }
    Ok(())
}

/// Checks that every instance shares the first one's job count and returns it.
pub(crate) fn common_jobs(instances: &[Arc<Instance>]) -> Result<usize> {
    let first = instances
        .first()
        .ok_or_else(|| Error::Precondition("training needs at least one instance".into()))?;
    for inst in instances {
        if inst.num_jobs != first.num_jobs {
            return Err(Error::Dimension {
                expected: first.num_jobs,
                got: inst.num_jobs,
            });
        }
    }
    Ok(first.num_jobs)
}

/// Trains from scratch. `make_env` builds a fresh episode for an instance,
/// fixing the reward mode and any environment variant. One event per update
/// goes to `log`. Episodes always run to the end, so training may overshoot
/// `total_steps` by less than one episode.
pub fn train_ppo(
    instances: &[Arc<Instance>],
    make_env: &dyn Fn(Arc<Instance>) -> EnvState,
    config: &PpoConfig,
    log: &mut RunLog,
) -> Result<PpoAgent> {
    config.validate()?;
    let jobs = common_jobs(instances)?;
    let obs_dim = crate::env::observation_len(jobs);
    let mut agent = PpoAgent::new(obs_dim, jobs, &config.hidden, config.seed)?;
    let mut optimizers = (
        Adam::new(agent.policy.num_params(), config.lr),
        Adam::new(agent.value.num_params(), config.lr),
    );
    let mut rng = PolicyRng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut steps = 0u64;
    let mut episodes = 0u64;
    let mut update = 0usize;
    while steps < config.total_steps {
        let mut batch = Trajectory::with_capacity(config.steps_per_update);
        let (mut return_sum, mut makespan_sum, mut batch_episodes) = (0.0, 0.0, 0u64);
        while batch.len() < config.steps_per_update && steps < config.total_steps {
            let instance = &instances[(episodes % instances.len() as u64) as usize];
            let before = batch.len();
            let (ret, makespan) = collect_episode(&agent, make_env(Arc::clone(instance)), &mut rng, &mut batch)?;
            steps += (batch.len() - before) as u64;
            episodes += 1;
            batch_episodes += 1;
            return_sum += ret;
            makespan_sum += f64::from(makespan);
        }
        let stats = ppo_update(&mut agent, &mut optimizers, &mut batch, config, &mut rng)?;
        check_finite(update, &agent, &stats)?;
        let k = batch_episodes as f64;
        log.record(
            steps,
            episodes,
            [
                ("mean_return", return_sum / k),
                ("mean_makespan", makespan_sum / k),
                ("policy_loss", stats.policy_loss),
                ("value_loss", stats.value_loss),
                ("entropy", stats.entropy),
                ("clip_fraction", stats.clip_fraction),
                ("approx_kl", stats.approx_kl),
                ("first_ratio_deviation", stats.first_ratio_deviation),
            ],
        );
        update += 1;
    }
    Ok(agent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{reset, RewardMode};
    use crate::metrics::Clock;

    fn env(mode: RewardMode) -> impl Fn(Arc<Instance>) -> EnvState {
        move |inst| EnvState::new(inst, mode)
    }

    #[test]
    fn gae_lambda_one_zero_values_is_return_to_go() {
        let rewards = [1.0, 2.0, 3.0, -1.0, 4.0];
        let dones = [false, false, true, false, true];
        let gamma = 0.9;
        let (adv, ret) = gae(&rewards, &[0.0; 5], &dones, gamma, 1.0);
        // Hand-unrolled discounted returns within each episode.
        let expected = [
            1.0 + gamma * 2.0 + gamma * gamma * 3.0,
            2.0 + gamma * 3.0,
            3.0,
            -1.0 + gamma * 4.0,
            4.0,
        ];
        for i in 0..5 {
            assert!((adv[i] - expected[i]).abs() < 1e-12);
            assert!((ret[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_single_step_td() {
        // λ = 0 reduces to the one-step TD error.
        let (adv, _) = gae(&[1.0, 2.0], &[0.5, 0.25], &[false, true], 1.0, 0.0);
        assert!((adv[0] - (1.0 + 0.25 - 0.5)).abs() < 1e-15);
        assert!((adv[1] - (2.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn loss_gradients_match_central_differences() {
        let instances = small(5);
        let mut agent = PpoAgent::new(13, 3, &[8, 8], 3).unwrap();
        // Perturb the policy so the old log-probs differ and ratios leave 1.
        let mut rng = PolicyRng::seed_from_u64(1);
        let mut batch = Trajectory::new();
        collect_episode(&agent, EnvState::new(instances[0].clone(), RewardMode::Dense), &mut rng, &mut batch)
            .unwrap();
        for (i, p) in agent.policy.params_mut().iter_mut().enumerate() {
            *p += 1.5 * ((i as f64) * 0.37).sin();
        }
        let config = PpoConfig { entropy_coef: 0.05, clip: 0.3, ..PpoConfig::default() };
        let (adv, ret) = advantage_targets(&batch, &config);
        let indices: Vec<usize> = (0..batch.len()).collect();
        let losses = |agent: &PpoAgent| {
            let mut gp = vec![0.0; agent.policy.num_params()];
            let mut gv = vec![0.0; agent.value.num_params()];
            let terms =
                minibatch_gradient(agent, &batch, &indices, &adv, &ret, &config, &mut gp, &mut gv)
                    .unwrap();
            (terms.losses(indices.len(), &config), gp, gv, terms.clipped)
        };
        let (_, gp, gv, clipped) = losses(&agent);
        assert!(clipped > 0, "fixture should exercise the clipped branch");
        let h = 1e-5;
        let mut worst = 0.0f64;
        for head in 0..2 {
            let n = if head == 0 { agent.policy.num_params() } else { agent.value.num_params() };
            for i in 0..n {
                let eval = |delta: f64| {
                    let mut shifted = agent.clone();
                    let net = if head == 0 { &mut shifted.policy } else { &mut shifted.value };
                    net.params_mut()[i] += delta;
                    let (l, ..) = losses(&shifted);
                    if head == 0 { l.0 } else { l.1 }
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let analytic = if head == 0 { gp[i] } else { gv[i] };
                let scale = numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max((numeric - analytic).abs() / scale);
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        let bad = PpoConfig { clip: 1.0, ..PpoConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config { field, .. }) if field == "clip"));
        let bad = PpoConfig { gamma: 0.0, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
        let bad = PpoConfig { lr: 0.0, ..PpoConfig::default() };
        assert!(bad.validate().is_err());
    }

    fn small(seed: u64) -> Vec<Arc<Instance>> {
        crate::instance::generate_batch(&crate::instance::GeneratorConfig::jssp(3, 3, 3, seed).count(4))
            .unwrap()
            .into_iter()
            .map(Arc::new)
            .collect()
    }

    fn quick() -> PpoConfig {
        PpoConfig {
            total_steps: 600,
            steps_per_update: 120,
            epochs: 2,
            minibatch_size: 32,
            hidden: vec![16, 16],
            seed: 9,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn zero_epochs_leave_parameters_unchanged() {
        let instances = small(1);
        let config = PpoConfig { epochs: 0, ..quick() };
        let initial = PpoAgent::new(13, 3, &config.hidden, config.seed).unwrap();
        let mut log = RunLog::new("t", Clock::Frozen);
        let trained = train_ppo(&instances, &env(RewardMode::Dense), &config, &mut log).unwrap();
        assert_eq!(trained.policy, initial.policy);
        assert_eq!(trained.value, initial.value);
        // Observation statistics still accumulate; they are not trained weights.
        assert!(trained.normalizer.count() > 0.0);
        assert_eq!(log.events().len(), 5);
    }

    #[test]
    fn first_minibatch_ratios_are_one() {
        let instances = small(2);
        let mut log = RunLog::new("t", Clock::Frozen);
        train_ppo(&instances, &env(RewardMode::Dense), &quick(), &mut log).unwrap();
        for event in log.events() {
            assert!(event.scalars["first_ratio_deviation"] < 1e-6);
        }
    }

    #[test]
    fn training_is_deterministic_and_steps_increase() {
        let instances = small(3);
        let run = || {
            let mut log = RunLog::new("t", Clock::Frozen);
            let agent = train_ppo(&instances, &env(RewardMode::Sparse), &quick(), &mut log).unwrap();
            (agent, log.into_events())
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert!(la.windows(2).all(|w| w[0].step < w[1].step));
        let last = la.last().unwrap().step;
        assert!((600..609).contains(&last));
    }

    #[test]
    fn single_task_family_reaches_forced_optimum() {
        let inst = Arc::new(Instance::from_jobs(1, 0, &[vec![(0, 4, None)]]).unwrap());
        let config = PpoConfig { total_steps: 50, steps_per_update: 10, ..quick() };
        let mut log = RunLog::new("t", Clock::Frozen);
        let mut agent = train_ppo(&[inst.clone()], &env(RewardMode::Dense), &config, &mut log).unwrap();
        let (obs, mask, mut state) = reset(inst, RewardMode::Dense);
        let mut rng = PolicyRng::seed_from_u64(0);
        let a = agent.select(&state, &obs, &mask, &mut rng).unwrap();
        assert_eq!(state.step(a).unwrap().info.makespan, 4);
    }

    #[test]
    fn rejects_mixed_job_counts() {
        let mut instances = small(4);
        instances.push(Arc::new(Instance::from_jobs(1, 0, &[vec![(0, 4, None)]]).unwrap()));
        let mut log = RunLog::new("t", Clock::Frozen);
        assert!(matches!(
            train_ppo(&instances, &env(RewardMode::Dense), &quick(), &mut log),
            Err(Error::Dimension { .. })
        ));
    }
}
