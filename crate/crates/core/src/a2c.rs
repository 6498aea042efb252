//! Multi-agent advantage actor-critic over continuous velocity commands.
//!
//! Every drone owns an actor and a critic; nothing is shared. Actors emit a
//! diagonal Gaussian with a state-dependent mean and state-independent
//! learnable log standard deviations. Targets are one-step Bellman backups
//! computed with the critic before the update, and advantages are treated as
//! constants in the actor gradient.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{self, Action, DoneReason, EnvConfig};
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, Cache, Layout, Mlp, Optimizer, OptimizerKind};
use crate::vec3::Vec3;

pub const ACTION_DIM: usize = 3;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub mu: Vec3,
    pub sigma: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub mean: Mlp,
    /// `sigma = exp(log_std)` per action dimension.
    pub log_std: [f64; ACTION_DIM],
}

impl Actor {
    pub fn new<R: Rng>(obs_dim: usize, hidden: &[usize], init_sigma: f64, rng: &mut R) -> Self {
        Self {
            mean: Mlp::glorot(Layout::new(obs_dim, hidden.to_vec(), ACTION_DIM), 0.1, rng),
            log_std: [init_sigma.ln(); ACTION_DIM],
        }
    }

    pub fn sigma(&self) -> Vec3 {
        Vec3::from(self.log_std.map(f64::exp))
    }

    pub fn forward(&self, obs: &[f64]) -> Result<PolicyOutput> {
        let mut cache = Cache::default();
        self.forward_cached(obs, &mut cache)
    }

    pub fn forward_cached(&self, obs: &[f64], cache: &mut Cache) -> Result<PolicyOutput> {
        let m = self.mean.forward_cached(obs, cache)?;
        Ok(PolicyOutput {
            mu: Vec3::new(m[0], m[1], m[2]),
            sigma: self.sigma(),
        })
    }

    pub fn param_count(&self) -> usize {
        self.mean.params.len() + ACTION_DIM
    }

    /// Mean-network parameters followed by the log standard deviations.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.mean.params.clone();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let n = self.mean.params.len();
        self.mean.params.copy_from_slice(&p[..n]);
        self.log_std.copy_from_slice(&p[n..n + ACTION_DIM]);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
}

impl Critic {
    pub fn new<R: Rng>(obs_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        Self {
            net: Mlp::glorot(Layout::new(obs_dim, hidden.to_vec(), 1), 1.0, rng),
        }
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        let mut cache = Cache::default();
        self.value_cached(obs, &mut cache)
    }

    pub fn value_cached(&self, obs: &[f64], cache: &mut Cache) -> Result<f64> {
        Ok(self.net.forward_cached(obs, cache)?[0])
    }
}

/// Draws `a ~ N(mu, diag(sigma²))`. The environment applies the speed limit.
pub fn sample_action<R: RngCore + ?Sized>(out: &PolicyOutput, rng: &mut R) -> Action {
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    let (nx, ny, nz) = (n(), n(), n());
    Action::new(Vec3::new(
        out.mu.x + out.sigma.x * nx,
        out.mu.y + out.sigma.y * ny,
        out.mu.z + out.sigma.z * nz,
    ))
}

/// Gaussian log-density of `a` and the policy entropy, both summed over the
/// three action dimensions.
pub fn log_prob_and_entropy(a: &Action, out: &PolicyOutput) -> Result<(f64, f64)> {
    let a = a.velocity.to_array();
    let mu = out.mu.to_array();
    let sigma = out.sigma.to_array();
    let mut logp = 0.0;
    let mut entropy = 0.0;
    for k in 0..ACTION_DIM {
        let s = sigma[k];
        if !(s > 0.0) {
            return Err(Error::Domain(format!("sigma must be > 0, got {s}")));
        }
        let var = s * s;
        let d = a[k] - mu[k];
        logp += -d * d / (2.0 * var) - 0.5 * (LN_2PI + var.ln());
        entropy += 0.5 * (LN_2PI + var.ln() + 1.0);
    }
    Ok((logp, entropy))
}

/// One-step Bellman target `r + gamma * v_next`, without bootstrap past a
/// terminal transition.
pub fn td_target(r: f64, v_next: f64, done: bool, gamma_discount: f64) -> f64 {
    if done {
        r
    } else {
        r + gamma_discount * v_next
    }
}

/// Experience for one agent. `values` and `targets` are filled by
/// [`fill_values_and_targets`] before the update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionBatch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    /// Terminal transitions: no bootstrap from the next state.
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TransitionBatch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Validation("empty transition batch".into()));
        }
        if self.values.len() != n || self.targets.len() != n {
            return Err(Error::Validation(format!(
                "batch of {n} states has {} values and {} targets",
                self.values.len(),
                self.targets.len()
            )));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("non-finite value target".into()));
        }
        Ok(())
    }

    /// `V* - V_pi`, optionally standardized to zero mean and unit variance.
    pub fn advantages(&self, normalize: bool) -> Vec<f64> {
        let mut adv: Vec<f64> = self.targets.iter().zip(&self.values).map(|(t, v)| t - v).collect();
        if normalize && adv.len() > 1 {
            let n = adv.len() as f64;
            let mean = adv.iter().sum::<f64>() / n;
            let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            let sd = var.sqrt().max(1e-8);
            adv.iter_mut().for_each(|a| *a = (*a - mean) / sd);
        }
        adv
    }
}

/// Evaluates the critic on every state and next state and stores `V_pi` and
/// the Bellman targets in the batch.
pub fn fill_values_and_targets(critic: &Critic, batch: &mut TransitionBatch, gamma_discount: f64) -> Result<()> {
    let mut cache = Cache::default();
    batch.values.clear();
    batch.targets.clear();
    for i in 0..batch.len() {
        let v = critic.value_cached(&batch.states[i], &mut cache)?;
        let v_next = if batch.dones[i] {
            0.0
        } else {
            critic.value_cached(&batch.next_states[i], &mut cache)?
        };
        batch.values.push(v);
        batch
            .targets
            .push(td_target(batch.rewards[i], v_next, batch.dones[i], gamma_discount));
    }
    Ok(())
}

/// Mean squared error between the stored targets and current values.
pub fn critic_loss(batch: &TransitionBatch) -> Result<f64> {
    batch.check()?;
    let n = batch.len() as f64;
    Ok(batch
        .targets
        .iter()
        .zip(&batch.values)
        .map(|(t, v)| (t - v) * (t - v))
        .sum::<f64>()
        / n)
}

/// Critic loss evaluated through `critic` (targets held fixed) and its
/// gradient with respect to the critic parameters.
pub fn critic_loss_and_grad(critic: &Critic, batch: &TransitionBatch) -> Result<(f64, Vec<f64>)> {
    batch.check()?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.net.params.len()];
    let mut cache = Cache::default();
    let mut loss = 0.0;
    for (s, t) in batch.states.iter().zip(&batch.targets) {
        let v = critic.value_cached(s, &mut cache)?;
        let err = t - v;
        loss += err * err;
        critic.net.backward(&mut cache, &[-2.0 * err / n], &mut grad);
    }
    Ok((loss / n, grad))
}

/// `-mean(logp * A) - beta * mean(entropy)`, where `A = V* - V_pi` from the
/// batch.
pub fn actor_loss(actor: &Actor, batch: &TransitionBatch, beta: f64) -> Result<f64> {
    actor_loss_with(actor, batch, beta, false)
}

pub fn actor_loss_with(actor: &Actor, batch: &TransitionBatch, beta: f64, normalize: bool) -> Result<f64> {
    batch.check()?;
    let adv = batch.advantages(normalize);
    let n = batch.len() as f64;
    let mut pg = 0.0;
    let mut ent = 0.0;
    for ((s, a), adv) in batch.states.iter().zip(&batch.actions).zip(&adv) {
        let out = actor.forward(s)?;
        let (logp, h) = log_prob_and_entropy(a, &out)?;
        pg += logp * adv;
        ent += h;
    }
    Ok(-pg / n - beta * ent / n)
}

/// Actor loss and its gradient, laid out like [`Actor::flat_params`].
pub fn actor_loss_and_grad(
    actor: &Actor,
    batch: &TransitionBatch,
    beta: f64,
    normalize: bool,
) -> Result<(f64, Vec<f64>)> {
    batch.check()?;
    let adv = batch.advantages(normalize);
    let n = batch.len() as f64;
    let n_mean = actor.mean.params.len();
    let mut grad = vec![0.0; actor.param_count()];
    let mut cache = Cache::default();
    let sigma = actor.sigma().to_array();
    let mut loss = 0.0;
    let mut d_log_std = [0.0; ACTION_DIM];
    for ((s, a), &adv) in batch.states.iter().zip(&batch.actions).zip(&adv) {
        let out = actor.forward_cached(s, &mut cache)?;
        let (logp, h) = log_prob_and_entropy(a, &out)?;
        loss += -logp * adv / n - beta * h / n;
        let a = a.velocity.to_array();
        let mu = out.mu.to_array();
        let mut d_mu = [0.0; ACTION_DIM];
        for k in 0..ACTION_DIM {
            let z = (a[k] - mu[k]) / sigma[k];
            // d logp / d mu = (a - mu) / sigma², d logp / d log_std = z² - 1
            d_mu[k] = -adv * z / sigma[k] / n;
            d_log_std[k] += -adv * (z * z - 1.0) / n;
        }
        actor.mean.backward(&mut cache, &d_mu, &mut grad[..n_mean]);
    }
    for k in 0..ACTION_DIM {
        // d entropy / d log_std = 1 per dimension.
        grad[n_mean + k] = d_log_std[k] - beta;
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNet {
    pub actor: Actor,
    pub critic: Critic,
}

/// Actor and critic for every drone of the swarm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNets {
    pub obs_dim: usize,
    pub hidden: Vec<usize>,
    pub agents: Vec<AgentNet>,
}

const WEIGHTS_FORMAT: &str = "archery-a2c-weights";
const WEIGHTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    nets: AgentNets,
}

impl AgentNets {
    pub fn new<R: Rng>(n_agents: usize, obs_dim: usize, hidden: &[usize], init_sigma: f64, rng: &mut R) -> Self {
        let agents = (0..n_agents)
            .map(|_| AgentNet {
                actor: Actor::new(obs_dim, hidden, init_sigma, rng),
                critic: Critic::new(obs_dim, hidden, rng),
            })
            .collect();
        Self {
            obs_dim,
            hidden: hidden.to_vec(),
            agents,
        }
    }

    /// Checks the networks against an environment's agent count and
    /// observation size.
    pub fn check_compatible(&self, env: &EnvConfig) -> Result<()> {
        if self.agents.len() != env.n_agents {
            return Err(Error::LayoutMismatch(format!(
                "weights hold {} agents, environment has {}",
                self.agents.len(),
                env.n_agents
            )));
        }
        if self.obs_dim != env.obs_dim() {
            return Err(Error::LayoutMismatch(format!(
                "weights expect {} observation values, environment produces {}",
                self.obs_dim,
                env.obs_dim()
            )));
        }
        Ok(())
    }

    fn check_layouts(&self) -> Result<()> {
        let actor = Layout::new(self.obs_dim, self.hidden.clone(), ACTION_DIM);
        let critic = Layout::new(self.obs_dim, self.hidden.clone(), 1);
        for (i, a) in self.agents.iter().enumerate() {
            if a.actor.mean.layout != actor || a.critic.net.layout != critic {
                return Err(Error::LayoutMismatch(format!("agent {i} layout differs from header")));
            }
            if a.actor.mean.params.len() != actor.param_count() || a.critic.net.params.len() != critic.param_count() {
                return Err(Error::LayoutMismatch(format!(
                    "agent {i} parameter count differs from layout"
                )));
            }
            let finite = a
                .actor
                .flat_params()
                .iter()
                .chain(&a.critic.net.params)
                .all(|p| p.is_finite());
            if !finite {
                return Err(Error::Validation(format!("agent {i} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let file = WeightsFile {
            format: WEIGHTS_FORMAT.into(),
            version: WEIGHTS_VERSION,
            nets: self.clone(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: WeightsFile = serde_json::from_reader(r)?;
        if file.format != WEIGHTS_FORMAT {
            return Err(Error::Validation(format!(
                "not a weights file (format `{}`)",
                file.format
            )));
        }
        if file.version != WEIGHTS_VERSION {
            return Err(Error::Validation(format!(
                "unsupported weights version {}",
                file.version
            )));
        }
        file.nets.check_layouts()?;
        Ok(file.nets)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_json(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_json(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Environment steps collected per epoch (one state per agent each).
    pub batch_size: usize,
    pub gamma_discount: f64,
    /// Entropy bonus weight.
    pub beta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub init_sigma: f64,
    pub optimizer: OptimizerKind,
    pub normalize_advantages: bool,
    /// Global gradient-norm clip per network; 0 disables.
    pub max_grad_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 10_000,
            gamma_discount: 0.5,
            beta: 0.001,
            epochs: 1000,
            seed: 0,
            hidden: vec![64, 64],
            init_sigma: 0.3,
            optimizer: OptimizerKind::Adam,
            normalize_advantages: false,
            max_grad_norm: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be finite and >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma_discount) {
            return Err(Error::config("train.gamma_discount", "must lie in [0, 1]"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("train.beta", "must be finite and >= 0"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config(
                "train.hidden",
                "needs at least one non-empty hidden layer",
            ));
        }
        if !(self.init_sigma > 0.0 && self.init_sigma.is_finite()) {
            return Err(Error::config("train.init_sigma", "must be finite and > 0"));
        }
        if !(self.max_grad_norm >= 0.0) {
            return Err(Error::config("train.max_grad_norm", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean length of the episodes finished during this epoch's rollouts.
    pub mean_episode_duration: f64,
    pub episodes: usize,
    /// Averaged over agents, before the update.
    pub actor_loss: f64,
    pub critic_loss: f64,
}

/// Writes `epoch,mean_episode_duration,actor_loss,critic_loss,episodes`.
pub fn write_metrics_csv<W: Write>(w: W, metrics: &[EpochMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "epoch",
        "mean_episode_duration",
        "actor_loss",
        "critic_loss",
        "episodes",
    ])?;
    for m in metrics {
        w.write_record(&[
            m.epoch.to_string(),
            m.mean_episode_duration.to_string(),
            m.actor_loss.to_string(),
            m.critic_loss.to_string(),
            m.episodes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nets: AgentNets,
    pub metrics: Vec<EpochMetrics>,
}

/// Steps the swarm with the current stochastic actors until `n_steps`
/// environment steps are gathered. Episodes cut off by the batch boundary
/// bootstrap from their last state.
pub fn collect_rollouts<R: RngCore>(
    nets: &AgentNets,
    config: &EnvConfig,
    n_steps: usize,
    rng: &mut R,
) -> Result<(Vec<TransitionBatch>, Vec<usize>)> {
    let n_agents = config.n_agents;
    let mut batches = vec![TransitionBatch::default(); n_agents];
    for b in &mut batches {
        b.states.reserve(n_steps);
        b.next_states.reserve(n_steps);
    }
    let mut lengths = Vec::new();
    let mut cache = Cache::default();
    let mut state = env::reset(config, rng.next_u64())?;
    let mut obs = state.observation();
    let mut actions = vec![Action::default(); n_agents];
    for _ in 0..n_steps {
        for (i, agent) in nets.agents.iter().enumerate() {
            let out = agent.actor.forward_cached(&obs, &mut cache)?;
            actions[i] = sample_action(&out, rng);
        }
        let result = env::step(&state, &actions, config)?;
        let next_obs = result.state.observation();
        let terminal = result.reason == Some(DoneReason::Collision);
        for (i, b) in batches.iter_mut().enumerate() {
            b.states.push(obs.clone());
            b.actions.push(actions[i]);
            b.rewards.push(result.rewards[i]);
            b.next_states.push(next_obs.clone());
            b.dones.push(terminal);
        }
        if result.done {
            lengths.push(result.state.t_step);
            state = env::reset(config, rng.next_u64())?;
            obs = state.observation();
        } else {
            state = result.state;
            obs = next_obs;
        }
    }
    Ok((batches, lengths))
}

/// Trains fresh networks.
pub fn train(env_config: &EnvConfig, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(env_config, config, |_| {})
}

/// Trains fresh networks, reporting each epoch to `on_epoch`.
pub fn train_with(
    env_config: &EnvConfig,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    env_config.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut nets = AgentNets::new(
        env_config.n_agents,
        env_config.obs_dim(),
        &config.hidden,
        config.init_sigma,
        &mut rng,
    );
    let mut actor_opts: Vec<Optimizer> = nets
        .agents
        .iter()
        .map(|a| Optimizer::new(config.optimizer, a.actor.param_count()))
        .collect();
    let mut critic_opts: Vec<Optimizer> = nets
        .agents
        .iter()
        .map(|a| Optimizer::new(config.optimizer, a.critic.net.params.len()))
        .collect();
    let mut metrics = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let (mut batches, lengths) = collect_rollouts(&nets, env_config, config.batch_size, &mut rng)?;
        let mut actor_total = 0.0;
        let mut critic_total = 0.0;
        for (i, batch) in batches.iter_mut().enumerate() {
            let agent = &mut nets.agents[i];
            fill_values_and_targets(&agent.critic, batch, config.gamma_discount)?;
            let (c_loss, mut c_grad) = critic_loss_and_grad(&agent.critic, batch)?;
            let (a_loss, mut a_grad) =
                actor_loss_and_grad(&agent.actor, batch, config.beta, config.normalize_advantages)?;
            if !c_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    what: "critic loss",
                });
            }
            if !a_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    what: "actor loss",
                });
            }
            if config.max_grad_norm > 0.0 {
                clip_grad_norm(&mut c_grad, config.max_grad_norm);
                clip_grad_norm(&mut a_grad, config.max_grad_norm);
            }
            critic_opts[i].step(&mut agent.critic.net.params, &c_grad, config.learning_rate);
            let mut flat = agent.actor.flat_params();
            actor_opts[i].step(&mut flat, &a_grad, config.learning_rate);
            if flat.iter().chain(&agent.critic.net.params).any(|p| !p.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    what: "network parameter",
                });
            }
            agent.actor.set_flat_params(&flat);
            actor_total += a_loss;
            critic_total += c_loss;
        }
        let n = env_config.n_agents as f64;
        let mean_episode_duration = if lengths.is_empty() {
            config.batch_size as f64
        } else {
            lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
        };
        let m = EpochMetrics {
            epoch,
            mean_episode_duration,
            episodes: lengths.len(),
            actor_loss: actor_total / n,
            critic_loss: critic_total / n,
        };
        on_epoch(&m);
        metrics.push(m);
    }
    Ok(TrainOutcome { nets, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn out(mu: [f64; 3], sigma: [f64; 3]) -> PolicyOutput {
        PolicyOutput {
            mu: mu.into(),
            sigma: sigma.into(),
        }
    }

    #[test]
    fn zero_actor_outputs_zero_mean_unit_sigma() {
        let actor = Actor {
            mean: Mlp::zeros(Layout::new(12, vec![8], 3)),
            log_std: [0.0; 3],
        };
        let o = actor.forward(&[0.7; 12]).unwrap();
        assert_eq!(o.mu, Vec3::ZERO);
        assert_eq!(o.sigma, Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(actor.forward(&[0.7; 12]).unwrap(), o);
        assert!(matches!(actor.forward(&[0.0; 5]), Err(Error::Validation(_))));
    }

    #[test]
    fn log_prob_at_mode() {
        let s = (1.0 / std::f64::consts::TAU).sqrt();
        let (lp, h) =
            log_prob_and_entropy(&Action::new(Vec3::new(0.2, -0.1, 0.3)), &out([0.2, -0.1, 0.3], [s; 3])).unwrap();
        assert!(lp.abs() < 1e-15);
        assert!((h - 1.5).abs() < 1e-15);
        let (lp, _) = log_prob_and_entropy(&Action::default(), &out([0.0; 3], [1.0; 3])).unwrap();
        assert!((lp / 3.0 + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn entropy_increases_with_sigma_and_bad_sigma_errors() {
        let h = |s: f64| {
            log_prob_and_entropy(&Action::default(), &out([0.0; 3], [s; 3]))
                .unwrap()
                .1
        };
        assert!(h(0.1) < h(0.2) && h(0.2) < h(1.0) && h(1.0) < h(3.0));
        assert!(log_prob_and_entropy(&Action::default(), &out([0.0; 3], [1.0, 0.0, 1.0])).is_err());
        assert!(log_prob_and_entropy(&Action::default(), &out([0.0; 3], [1.0, -1.0, 1.0])).is_err());
    }

    #[test]
    fn td_targets() {
        assert_eq!(td_target(1.0, 2.0, false, 0.5), 2.0);
        assert_eq!(td_target(-1.0, 123.0, true, 0.5), -1.0);
        assert_eq!(td_target(0.3, 9.0, false, 0.0), 0.3);
    }

    fn batch_of(pairs: &[(f64, f64)]) -> TransitionBatch {
        TransitionBatch {
            states: vec![vec![0.0]; pairs.len()],
            actions: vec![Action::default(); pairs.len()],
            rewards: vec![0.0; pairs.len()],
            next_states: vec![vec![0.0]; pairs.len()],
            dones: vec![false; pairs.len()],
            targets: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    #[test]
    fn critic_loss_examples() {
        assert_eq!(critic_loss(&batch_of(&[(0.4, 0.4), (-1.0, -1.0)])).unwrap(), 0.0);
        assert_eq!(critic_loss(&batch_of(&[(1.0, 0.0)])).unwrap(), 1.0);
        assert_eq!(critic_loss(&batch_of(&[(1.0, 0.0), (0.0, 1.0)])).unwrap(), 1.0);
        assert!(matches!(critic_loss(&batch_of(&[])), Err(Error::Validation(_))));
    }

    #[test]
    fn actor_loss_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = Actor::new(1, &[2], 0.5, &mut rng);
        let zero_adv = batch_of(&[(0.3, 0.3), (1.0, 1.0)]);
        assert_eq!(actor_loss(&actor, &zero_adv, 0.0).unwrap(), 0.0);
        assert!(actor_loss(&actor, &batch_of(&[]), 0.0).is_err());
        let mut one = batch_of(&[(1.5, 0.25)]);
        one.actions[0] = Action::new(Vec3::new(0.1, -0.2, 0.4));
        let (logp, _) = log_prob_and_entropy(&one.actions[0], &actor.forward(&one.states[0]).unwrap()).unwrap();
        assert_eq!(actor_loss(&actor, &one, 0.0).unwrap(), -logp * 1.25);
    }

    #[test]
    fn entropy_bonus_has_slope_minus_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actor = Actor::new(1, &[2], 0.5, &mut rng);
        let b = batch_of(&[(0.0, 0.0)]);
        let (_, g) = actor_loss_and_grad(&actor, &b, 0.01, false).unwrap();
        let n = actor.mean.params.len();
        assert_eq!(&g[n..], &[-0.01; 3]);
        // Larger sigma lowers the loss when advantages vanish.
        let mut wide = actor.clone();
        wide.log_std = [0.5; 3];
        assert!(actor_loss(&wide, &b, 0.01).unwrap() < actor_loss(&actor, &b, 0.01).unwrap());
    }

    #[test]
    fn advantage_normalization_standardizes() {
        let b = batch_of(&[(1.0, 0.0), (3.0, 0.0), (5.0, 0.0)]);
        let a = b.advantages(true);
        assert!(a.iter().sum::<f64>().abs() < 1e-12);
        let var = a.iter().map(|x| x * x).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert_eq!(b.advantages(false), vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn weights_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let nets = AgentNets::new(3, 12, &[16, 16], 0.3, &mut rng);
        let mut buf = Vec::new();
        nets.write_json(&mut buf).unwrap();
        let back = AgentNets::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, nets);
        let obs: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.3).collect();
        for (a, b) in nets.agents.iter().zip(&back.agents) {
            assert_eq!(a.actor.forward(&obs).unwrap(), b.actor.forward(&obs).unwrap());
            assert_eq!(a.critic.value(&obs).unwrap(), b.critic.value(&obs).unwrap());
        }
    }

    #[test]
    fn weights_with_wrong_layout_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut nets = AgentNets::new(2, 9, &[4], 0.3, &mut rng);
        assert!(matches!(
            nets.check_compatible(&EnvConfig::default()),
            Err(Error::LayoutMismatch(_))
        ));
        nets.agents[1].critic.net.params.pop();
        let mut buf = Vec::new();
        nets.write_json(&mut buf).unwrap();
        assert!(matches!(
            AgentNets::read_json(buf.as_slice()),
            Err(Error::LayoutMismatch(_))
        ));
        assert!(AgentNets::read_json(&b"{\"format\":\"x\",\"version\":1}"[..]).is_err());
    }

    fn tiny_train() -> TrainConfig {
        TrainConfig {
            batch_size: 300,
            epochs: 3,
            hidden: vec![8],
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic() {
        let env = EnvConfig::default();
        let a = train(&env, &tiny_train()).unwrap();
        let b = train(&env, &tiny_train()).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.nets, b.nets);
        assert_eq!(a.metrics.len(), 3);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let env = EnvConfig::default();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..tiny_train()
        };
        let trained = train(&env, &cfg).unwrap().nets;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let fresh = AgentNets::new(3, env.obs_dim(), &cfg.hidden, cfg.init_sigma, &mut rng);
        assert_eq!(trained, fresh);
    }

    #[test]
    fn metrics_csv_format() {
        let m = vec![EpochMetrics {
            epoch: 0,
            mean_episode_duration: 50.0,
            episodes: 2,
            actor_loss: -0.5,
            critic_loss: 0.25,
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &m).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,mean_episode_duration,actor_loss,critic_loss,episodes\n0,50,-0.5,0.25,2\n"
        );
    }
}
