//! Swappable swarm controllers plus evaluation and latency measurement.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::a2c::{sample_action, AgentNets};
use crate::apf::{apf_velocity, ApfParams};
use crate::env::{self, Action, DoneReason, EnvConfig, EnvState};
use crate::error::{Error, Result};
use crate::nn::Cache;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Drl,
    Apf,
    Random,
    Zero,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Drl => "drl",
            PolicyKind::Apf => "apf",
            PolicyKind::Random => "random",
            PolicyKind::Zero => "zero",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drl" => Ok(PolicyKind::Drl),
            "apf" => Ok(PolicyKind::Apf),
            "random" => Ok(PolicyKind::Random),
            "zero" => Ok(PolicyKind::Zero),
            _ => Err(Error::Validation(format!(
                "unknown policy `{s}` (drl, apf, random, zero)"
            ))),
        }
    }
}

/// One decision per drone per control step.
pub trait SwarmPolicy {
    fn kind(&self) -> PolicyKind;

    /// Velocity command for `agent`. `obs` is `state.observation()`.
    fn decide(&mut self, state: &EnvState, obs: &[f64], agent: usize, config: &EnvConfig) -> Result<Action>;

    /// Restarts any internal randomness. Called at every episode start.
    fn reseed(&mut self, _seed: u64) {}

    fn act(&mut self, state: &EnvState, config: &EnvConfig) -> Result<Vec<Action>> {
        let obs = state.observation();
        (0..state.n_agents())
            .map(|i| self.decide(state, &obs, i, config))
            .collect()
    }
}

pub struct ZeroPolicy;

impl SwarmPolicy for ZeroPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Zero
    }

    fn decide(&mut self, _: &EnvState, _: &[f64], _: usize, _: &EnvConfig) -> Result<Action> {
        Ok(Action::default())
    }
}

/// Same command for every drone at every step.
pub struct ConstantPolicy(pub Vec3);

impl SwarmPolicy for ConstantPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Zero
    }

    fn decide(&mut self, _: &EnvState, _: &[f64], _: usize, _: &EnvConfig) -> Result<Action> {
        Ok(Action::new(self.0))
    }
}

/// Uniform velocities inside the speed-limit ball.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl SwarmPolicy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn decide(&mut self, _: &EnvState, _: &[f64], _: usize, config: &EnvConfig) -> Result<Action> {
        loop {
            let v = Vec3::new(
                self.rng.random_range(-1.0..=1.0),
                self.rng.random_range(-1.0..=1.0),
                self.rng.random_range(-1.0..=1.0),
            );
            if v.norm_squared() <= 1.0 {
                return Ok(Action::new(v * config.v_max));
            }
        }
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

/// Trained actors. Samples from the Gaussian unless `use_mean` is set.
pub struct DrlPolicy {
    pub nets: AgentNets,
    pub use_mean: bool,
    rng: ChaCha8Rng,
    cache: Cache,
}

impl DrlPolicy {
    pub fn new(nets: AgentNets, seed: u64) -> Self {
        Self {
            nets,
            use_mean: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cache: Cache::default(),
        }
    }
}

impl SwarmPolicy for DrlPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Drl
    }

    fn decide(&mut self, _: &EnvState, obs: &[f64], agent: usize, _: &EnvConfig) -> Result<Action> {
        let actor = &self
            .nets
            .agents
            .get(agent)
            .ok_or_else(|| Error::LayoutMismatch(format!("no actor for agent {agent}")))?
            .actor;
        let out = actor.forward_cached(obs, &mut self.cache)?;
        Ok(if self.use_mean {
            Action::new(out.mu)
        } else {
            sample_action(&out, &mut self.rng)
        })
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

pub struct ApfPolicy(pub ApfParams);

impl SwarmPolicy for ApfPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Apf
    }

    fn decide(&mut self, state: &EnvState, _: &[f64], agent: usize, config: &EnvConfig) -> Result<Action> {
        apf_velocity(state, agent, config, &self.0)
    }
}

/// Deterministic outcome of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: PolicyKind,
    pub seed: u64,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_episode_duration: f64,
    pub collisions: usize,
    /// Steps of every episode, in order.
    pub durations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LatencyStats {
    pub decisions: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl LatencyStats {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
        Self {
            decisions: n,
            mean_ms: mean,
            std_ms: var.sqrt(),
        }
    }
}

/// Seed of episode `k` of an evaluation started with `seed`. The same across
/// policies so their runs are paired.
fn episode_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Runs `n_episodes` and times every single-drone decision.
pub fn evaluate(
    policy: &mut dyn SwarmPolicy,
    config: &EnvConfig,
    n_episodes: usize,
    seed: u64,
) -> Result<(EvalReport, LatencyStats)> {
    config.validate()?;
    let mut durations = Vec::with_capacity(n_episodes);
    let mut successes = 0;
    let mut collisions = 0;
    let mut timings = Vec::with_capacity(n_episodes * config.max_steps * config.n_agents);
    let mut actions = vec![Action::default(); config.n_agents];
    for ep_seed in episode_seeds(seed, n_episodes) {
        policy.reseed(ep_seed.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15);
        let mut state = env::reset(config, ep_seed)?;
        loop {
            let obs = state.observation();
            for (i, a) in actions.iter_mut().enumerate() {
                let t0 = Instant::now();
                *a = policy.decide(&state, &obs, i, config)?;
                timings.push(t0.elapsed().as_secs_f64() * 1e3);
            }
            let r = env::step(&state, &actions, config)?;
            if r.done {
                durations.push(r.state.t_step);
                match r.reason {
                    Some(DoneReason::Collision) => collisions += 1,
                    Some(reason) if reason.is_success() => successes += 1,
                    _ => {}
                }
                break;
            }
            state = r.state;
        }
    }
    let mean_episode_duration = if n_episodes == 0 {
        0.0
    } else {
        durations.iter().sum::<usize>() as f64 / n_episodes as f64
    };
    let report = EvalReport {
        policy: policy.kind(),
        seed,
        episodes: n_episodes,
        successes,
        success_rate: if n_episodes == 0 {
            0.0
        } else {
            successes as f64 / n_episodes as f64
        },
        mean_episode_duration,
        collisions,
        durations,
    };
    Ok((report, LatencyStats::from_samples(&timings)))
}

/// Mean and spread of single-drone decision time over `n_steps` decisions,
/// after a warm-up of `n_steps / 10`.
pub fn bench_policy_latency(
    policy: &mut dyn SwarmPolicy,
    config: &EnvConfig,
    n_steps: usize,
    seed: u64,
) -> Result<LatencyStats> {
    if n_steps < 1000 {
        return Err(Error::Validation(format!(
            "latency benchmark needs >= 1000 steps, got {n_steps}"
        )));
    }
    config.validate()?;
    let warmup = n_steps / 10;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut state = env::reset(config, seeds.next_u64())?;
    policy.reseed(seeds.next_u64());
    let mut obs = state.observation();
    let mut actions = vec![Action::default(); config.n_agents];
    let mut samples = Vec::with_capacity(n_steps);
    let mut done = 0;
    while done < warmup + n_steps {
        for (i, a) in actions.iter_mut().enumerate() {
            let t0 = Instant::now();
            *a = policy.decide(&state, &obs, i, config)?;
            let ms = t0.elapsed().as_secs_f64() * 1e3;
            if done >= warmup && samples.len() < n_steps {
                samples.push(ms);
            }
            done += 1;
        }
        let r = env::step(&state, &actions, config)?;
        state = if r.done {
            env::reset(config, seeds.next_u64())?
        } else {
            r.state
        };
        obs = state.observation();
    }
    Ok(LatencyStats::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::AimMode;

    #[test]
    fn zero_policy_survives_arrow_aimed_away() {
        let mut c = EnvConfig::default();
        c.arrow.aim = AimMode::Away;
        let (r, lat) = evaluate(&mut ZeroPolicy, &c, 20, 1).unwrap();
        assert_eq!(r.successes, 20);
        assert_eq!(r.success_rate, 1.0);
        assert!(r.durations.iter().all(|&d| d == c.max_steps));
        assert_eq!(lat.decisions, 20 * 50 * 3);
    }

    #[test]
    fn full_speed_into_a_wall_always_fails() {
        let c = EnvConfig::default();
        let (r, _) = evaluate(&mut ConstantPolicy(Vec3::new(100.0, 0.0, 0.0)), &c, 20, 1).unwrap();
        assert_eq!(r.successes, 0);
        assert_eq!(r.collisions, 20);
    }

    #[test]
    fn random_policy_stays_in_speed_ball_and_is_reproducible() {
        let c = EnvConfig::default();
        let s = env::reset(&c, 0).unwrap();
        let mut p = RandomPolicy::new(5);
        let a = p.act(&s, &c).unwrap();
        assert!(a.iter().all(|a| a.velocity.norm() <= c.v_max));
        p.reseed(5);
        assert_eq!(p.act(&s, &c).unwrap(), a);
        let (r1, _) = evaluate(&mut RandomPolicy::new(0), &c, 30, 2).unwrap();
        let (r2, _) = evaluate(&mut RandomPolicy::new(99), &c, 30, 2).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn policy_kind_parses() {
        for k in [PolicyKind::Drl, PolicyKind::Apf, PolicyKind::Random, PolicyKind::Zero] {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("dqn".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn latency_bench_needs_enough_steps() {
        let c = EnvConfig::default();
        assert!(bench_policy_latency(&mut ZeroPolicy, &c, 10, 0).is_err());
        let s = bench_policy_latency(&mut ZeroPolicy, &c, 1000, 0).unwrap();
        assert_eq!(s.decisions, 1000);
        assert!(s.mean_ms >= 0.0 && s.mean_ms < 1.0);
    }
}
