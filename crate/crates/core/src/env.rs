//! Discrete-time arena with `N` target drones and one ballistic arrow.
//!
//! Drones integrate clipped velocity commands with explicit Euler; the arrow
//! is evaluated analytically on its launch trajectory so its position at step
//! `k` is exactly `trajectory_point(k * dt)` while it is in flight.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ballistics::{trajectory_point, TrajectoryParams, GRAVITY};
use crate::error::{Error, Result};
use crate::vec3::{Aabb, Vec3};

/// Velocity command for one drone, m/s. Clipped to the speed limit on use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub velocity: Vec3,
}

impl Action {
    pub fn new(velocity: Vec3) -> Self {
        Self { velocity }
    }

    pub fn clipped(&self, v_max: f64) -> Vec3 {
        self.velocity.clamp_norm(v_max)
    }
}

/// Where the arrow is pointed at launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AimMode {
    /// At the formation centroid.
    #[default]
    Formation,
    /// Mirrored through the launch point, away from the formation.
    Away,
}

/// Randomized arrow launches used for training and evaluation episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrowLaunch {
    pub origin: Vec3,
    /// Half-width of the uniform box around `origin`, m.
    pub origin_jitter: f64,
    pub aim: AimMode,
    /// Nominal flight time to the aim point, s.
    pub time_to_target: f64,
    /// Half-angle of the uniform cone around the nominal direction, degrees.
    pub cone_half_angle_deg: f64,
    /// Relative half-width of the uniform speed perturbation.
    pub speed_jitter: f64,
}

impl Default for ArrowLaunch {
    fn default() -> Self {
        Self {
            origin: Vec3::new(0.0, -1.75, 1.2),
            origin_jitter: 0.05,
            aim: AimMode::Formation,
            time_to_target: 0.8,
            cone_half_angle_deg: 1.0,
            speed_jitter: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub n_agents: usize,
    pub dt: f64,
    pub max_steps: usize,
    pub arena: Aabb,
    pub r_emergency: f64,
    pub r_formation: f64,
    pub r_collide: f64,
    pub v_max: f64,
    pub g: f64,
    pub formation: Vec<Vec3>,
    pub arrow: ArrowLaunch,
    /// Pay the formation bonus inside `r_formation` instead of outside it.
    pub formation_reward_inverted: bool,
    /// Count arena faces among the collision-penalty objects.
    pub borders_as_obstacles: bool,
    /// End the episode as soon as the arrow leaves the arena.
    pub end_on_arrow_exit: bool,
    /// Sub-intervals per step for the swept drone/arrow distance.
    pub collision_substeps: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_agents: 3,
            dt: 0.1,
            max_steps: 50,
            arena: Aabb::new(Vec3::new(-2.0, -2.0, 0.0), Vec3::new(2.0, 2.0, 3.0)),
            r_emergency: 0.3,
            r_formation: 0.1,
            r_collide: 0.1,
            v_max: 0.5,
            g: GRAVITY,
            formation: line_formation(3, 0.8, Vec3::new(0.0, 0.5, 1.5)),
            arrow: ArrowLaunch::default(),
            formation_reward_inverted: false,
            borders_as_obstacles: true,
            end_on_arrow_exit: false,
            collision_substeps: 10,
        }
    }
}

/// `n` slots on a line along `x`, `spacing` apart, centered on `center`.
pub fn line_formation(n: usize, spacing: f64, center: Vec3) -> Vec<Vec3> {
    let half = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| center + Vec3::new((i as f64 - half) * spacing, 0.0, 0.0))
        .collect()
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.n_agents == 0 {
            return Err(Error::config("env.n_agents", "must be >= 1"));
        }
        positive("env.dt", self.dt)?;
        if self.max_steps == 0 {
            return Err(Error::config("env.max_steps", "must be >= 1"));
        }
        if !self.arena.is_valid() {
            return Err(Error::config("env.arena", "min must be below max on every axis"));
        }
        positive("env.r_collide", self.r_collide)?;
        positive("env.r_formation", self.r_formation)?;
        positive("env.v_max", self.v_max)?;
        positive("env.g", self.g)?;
        if !(self.r_emergency > self.r_collide) {
            return Err(Error::config(
                "env.r_emergency",
                format!("must exceed r_collide ({} <= {})", self.r_emergency, self.r_collide),
            ));
        }
        if self.formation.len() != self.n_agents {
            return Err(Error::config(
                "env.formation",
                format!("has {} slots for {} agents", self.formation.len(), self.n_agents),
            ));
        }
        for (i, p) in self.formation.iter().enumerate() {
            if !p.is_finite() || !self.arena.contains(*p) {
                return Err(Error::config(format!("env.formation[{i}]"), "outside the arena"));
            }
        }
        if !self.arena.contains(self.arrow.origin) {
            return Err(Error::config("env.arrow.origin", "outside the arena"));
        }
        positive("env.arrow.time_to_target", self.arrow.time_to_target)?;
        for (field, v) in [
            ("env.arrow.origin_jitter", self.arrow.origin_jitter),
            ("env.arrow.cone_half_angle_deg", self.arrow.cone_half_angle_deg),
            ("env.arrow.speed_jitter", self.arrow.speed_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        if self.arrow.cone_half_angle_deg > 180.0 {
            return Err(Error::config("env.arrow.cone_half_angle_deg", "must be <= 180"));
        }
        if self.arrow.speed_jitter >= 1.0 {
            return Err(Error::config("env.arrow.speed_jitter", "must be < 1"));
        }
        if self.collision_substeps == 0 {
            return Err(Error::config("env.collision_substeps", "must be >= 1"));
        }
        Ok(())
    }

    /// Length of the flattened observation: every drone then the arrow.
    pub fn obs_dim(&self) -> usize {
        3 * (self.n_agents + 1)
    }

    pub fn centroid(&self) -> Vec3 {
        self.formation.iter().fold(Vec3::ZERO, |a, &p| a + p) / self.formation.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent_pos: Vec<Vec3>,
    pub arrow_pos: Vec3,
    pub arrow_active: bool,
    pub arrow: TrajectoryParams,
    /// Per-drone closest approach to the arrow during the last step.
    pub arrow_clearance: Vec<f64>,
    pub t_step: usize,
    pub done: bool,
}

impl EnvState {
    pub fn n_agents(&self) -> usize {
        self.agent_pos.len()
    }

    /// Flattened drone positions followed by the arrow position.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(3 * (self.agent_pos.len() + 1));
        self.write_observation(&mut obs);
        obs
    }

    pub fn write_observation(&self, obs: &mut Vec<f64>) {
        obs.clear();
        for p in self.agent_pos.iter().chain(std::iter::once(&self.arrow_pos)) {
            obs.extend_from_slice(&p.to_array());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Collision,
    ArrowPassed,
    MaxSteps,
}

impl DoneReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DoneReason::Collision => "collision",
            DoneReason::ArrowPassed => "arrow_passed",
            DoneReason::MaxSteps => "max_steps",
        }
    }

    /// The swarm survived the episode.
    pub fn is_success(self) -> bool {
        !matches!(self, DoneReason::Collision)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: EnvState,
    /// `collision_rewards[i] + formation_rewards[i]`
    pub rewards: Vec<f64>,
    pub collision_rewards: Vec<f64>,
    pub formation_rewards: Vec<f64>,
    pub done: bool,
    pub reason: Option<DoneReason>,
    /// Drones involved in a terminal collision.
    pub collided: Vec<usize>,
}

/// Nominal arrow launch velocity that reaches `target` after `time`.
pub fn aim_velocity(origin: Vec3, target: Vec3, time: f64, g: f64) -> Vec3 {
    (target - origin) / time + Vec3::new(0.0, 0.0, 0.5 * g * time)
}

/// Uniform random direction inside a cone of half-angle `half_angle` around
/// the unit vector `axis`.
fn jitter_in_cone<R: Rng>(axis: Vec3, half_angle: f64, rng: &mut R) -> Vec3 {
    let cos_max = half_angle.cos();
    let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let helper = if axis.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let u = axis.cross(helper).try_normalize(0.0).unwrap_or(Vec3::Z);
    let w = axis.cross(u);
    axis * cos_t + u * (sin_t * phi.cos()) + w * (sin_t * phi.sin())
}

/// Draws one arrow launch from the configured distribution.
pub fn sample_arrow<R: Rng>(config: &EnvConfig, rng: &mut R) -> TrajectoryParams {
    let a = &config.arrow;
    let mut jitter = || (rng.random::<f64>() * 2.0 - 1.0) * a.origin_jitter;
    let origin = config.arena.clamp(a.origin + Vec3::new(jitter(), jitter(), jitter()));
    let centroid = config.centroid();
    let target = match a.aim {
        AimMode::Formation => centroid,
        AimMode::Away => {
            let d = centroid - origin;
            origin + Vec3::new(-d.x, -d.y, d.z)
        }
    };
    let nominal = aim_velocity(origin, target, a.time_to_target, config.g);
    let speed = nominal.norm() * (1.0 + (rng.random::<f64>() * 2.0 - 1.0) * a.speed_jitter);
    let dir = nominal.try_normalize(0.0).unwrap_or(Vec3::Y);
    let dir = jitter_in_cone(dir, a.cone_half_angle_deg.to_radians(), rng);
    TrajectoryParams::from_velocity(origin, dir * speed, config.g)
}

/// Starts an episode: drones on their formation slots, arrow at its launch
/// point with a freshly drawn trajectory.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<EnvState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arrow = sample_arrow(config, &mut rng);
    Ok(reset_with_arrow(config, arrow))
}

/// Starts an episode with a caller-supplied arrow flight.
pub fn reset_with_arrow(config: &EnvConfig, arrow: TrajectoryParams) -> EnvState {
    let arrow_pos = trajectory_point(&arrow, 0.0);
    let agent_pos = config.formation.clone();
    let arrow_clearance = agent_pos.iter().map(|p| p.distance(arrow_pos)).collect();
    EnvState {
        agent_pos,
        arrow_pos,
        arrow_active: config.arena.contains(arrow_pos),
        arrow,
        arrow_clearance,
        t_step: 0,
        done: false,
    }
}

/// Collision penalty: `-1` when any object is within `r_emergency`.
/// Objects are the other drones, the arrow while active (using the closest
/// approach over the last step) and the arena faces.
pub fn reward_collision(state: &EnvState, agent: usize, config: &EnvConfig) -> f64 {
    let p = state.agent_pos[agent];
    let r = config.r_emergency;
    let near_drone = state
        .agent_pos
        .iter()
        .enumerate()
        .any(|(j, &q)| j != agent && p.distance(q) <= r);
    let near_arrow = state.arrow_active && (p.distance(state.arrow_pos) <= r || state.arrow_clearance[agent] <= r);
    let near_border = config.borders_as_obstacles && config.arena.face_distance(p) <= r;
    if near_drone || near_arrow || near_border {
        -1.0
    } else {
        0.0
    }
}

/// Formation term: `0` inside `r_formation` of the slot and `0.01` at or
/// beyond it, or the reverse when `formation_reward_inverted` is set.
pub fn reward_formation(state: &EnvState, agent: usize, config: &EnvConfig) -> f64 {
    let d_f = state.agent_pos[agent].distance(config.formation[agent]);
    let inside = d_f < config.r_formation;
    if inside != config.formation_reward_inverted {
        0.0
    } else {
        0.01
    }
}

/// Closest approach between a drone moving linearly from `p0` to `p1` and the
/// arrow over `[t0, t0 + dt]`, sampled on `substeps` sub-intervals.
fn swept_arrow_distance(arrow: &TrajectoryParams, t0: f64, dt: f64, p0: Vec3, p1: Vec3, substeps: usize) -> f64 {
    (0..=substeps)
        .map(|j| {
            let s = j as f64 / substeps as f64;
            p0.lerp(p1, s).distance(trajectory_point(arrow, t0 + s * dt))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Advances the episode by one control period.
pub fn step(state: &EnvState, actions: &[Action], config: &EnvConfig) -> Result<StepResult> {
    if state.done {
        return Err(Error::EpisodeDone);
    }
    if actions.len() != state.n_agents() {
        return Err(Error::Validation(format!(
            "expected {} actions, got {}",
            state.n_agents(),
            actions.len()
        )));
    }
    if let Some(i) = actions.iter().position(|a| !a.velocity.is_finite()) {
        return Err(Error::Validation(format!("action {i} is not finite")));
    }

    let t0 = state.t_step as f64 * config.dt;
    let next_step = state.t_step + 1;
    let agent_pos: Vec<Vec3> = state
        .agent_pos
        .iter()
        .zip(actions)
        .map(|(&p, a)| config.arena.clamp(p + a.clipped(config.v_max) * config.dt))
        .collect();

    let arrow_clearance: Vec<f64> = if state.arrow_active {
        state
            .agent_pos
            .iter()
            .zip(&agent_pos)
            .map(|(&p0, &p1)| swept_arrow_distance(&state.arrow, t0, config.dt, p0, p1, config.collision_substeps))
            .collect()
    } else {
        vec![f64::INFINITY; agent_pos.len()]
    };

    let (arrow_pos, arrow_active) = if state.arrow_active {
        let p = trajectory_point(&state.arrow, next_step as f64 * config.dt);
        if config.arena.contains(p) {
            (p, true)
        } else {
            (config.arena.clamp(p), false)
        }
    } else {
        (state.arrow_pos, false)
    };
    let arrow_exited = state.arrow_active && !arrow_active;

    let mut collided = Vec::new();
    for i in 0..agent_pos.len() {
        let hit_drone = agent_pos
            .iter()
            .enumerate()
            .any(|(j, q)| j != i && agent_pos[i].distance(*q) <= config.r_collide);
        if hit_drone || arrow_clearance[i] <= config.r_collide {
            collided.push(i);
        }
    }

    let reason = if !collided.is_empty() {
        Some(DoneReason::Collision)
    } else if arrow_exited && config.end_on_arrow_exit {
        Some(DoneReason::ArrowPassed)
    } else if next_step >= config.max_steps {
        Some(DoneReason::MaxSteps)
    } else {
        None
    };
    let done = reason.is_some();

    let next = EnvState {
        agent_pos,
        arrow_pos,
        // A hit arrow is reported as still active so the penalty applies.
        arrow_active: arrow_active || (state.arrow_active && !collided.is_empty()),
        arrow: state.arrow,
        arrow_clearance,
        t_step: next_step,
        done,
    };
    let collision_rewards: Vec<f64> = (0..next.n_agents())
        .map(|i| reward_collision(&next, i, config))
        .collect();
    let formation_rewards: Vec<f64> = (0..next.n_agents())
        .map(|i| reward_formation(&next, i, config))
        .collect();
    let rewards = collision_rewards
        .iter()
        .zip(&formation_rewards)
        .map(|(c, f)| c + f)
        .collect();
    Ok(StepResult {
        state: next,
        rewards,
        collision_rewards,
        formation_rewards,
        done,
        reason,
        collided,
    })
}

/// CSV writer for per-step episode logs.
pub struct EpisodeLog<W: Write> {
    w: csv::Writer<W>,
    n_agents: usize,
}

impl<W: Write> EpisodeLog<W> {
    pub fn new(writer: W, n_agents: usize) -> Result<Self> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string()];
        for i in 0..n_agents {
            header.extend(["x", "y", "z"].map(|c| format!("agent{i}_{c}")));
        }
        header.extend(["arrow_x", "arrow_y", "arrow_z", "arrow_active"].map(String::from));
        header.extend((0..n_agents).map(|i| format!("reward{i}")));
        header.push("done_reason".into());
        w.write_record(&header)?;
        Ok(Self { w, n_agents })
    }

    pub fn record(&mut self, result: &StepResult) -> Result<()> {
        let s = &result.state;
        debug_assert_eq!(s.n_agents(), self.n_agents);
        let mut rec = vec![s.t_step.to_string()];
        for p in &s.agent_pos {
            rec.extend(p.to_array().map(|v| v.to_string()));
        }
        rec.extend(s.arrow_pos.to_array().map(|v| v.to_string()));
        rec.push(s.arrow_active.to_string());
        rec.extend(result.rewards.iter().map(|r| r.to_string()));
        rec.push(result.reason.map(DoneReason::as_str).unwrap_or("").to_string());
        self.w.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.w.flush()?;
        self.w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(n: usize) -> Vec<Action> {
        vec![Action::default(); n]
    }

    /// Arrow parked far below the floor so it never matters.
    fn quiet_state(config: &EnvConfig) -> EnvState {
        let arrow = TrajectoryParams {
            v0: 0.0,
            theta: 0.0,
            gamma_azimuth: 0.0,
            g: config.g,
            origin: Vec3::new(0.0, -1.9, 0.05),
        };
        reset_with_arrow(config, arrow)
    }

    #[test]
    fn reset_is_deterministic_and_uses_fixed_formation() {
        let c = EnvConfig::default();
        let a = reset(&c, 11).unwrap();
        assert_eq!(a, reset(&c, 11).unwrap());
        assert_eq!(a.n_agents(), 3);
        assert_eq!(a.agent_pos, c.formation);
        assert_eq!(a.t_step, 0);
        assert!(a.arrow_active);
        assert_ne!(a.arrow, reset(&c, 12).unwrap().arrow);
    }

    #[test]
    fn reset_rejects_formation_outside_arena() {
        let mut c = EnvConfig::default();
        c.formation[1] = Vec3::new(0.0, 0.0, 5.0);
        assert!(matches!(reset(&c, 0), Err(Error::Config { .. })));
    }

    #[test]
    fn zero_actions_keep_positions_and_pay_formation_term() {
        let c = EnvConfig::default();
        let s = quiet_state(&c);
        let r = step(&s, &zeros(3), &c).unwrap();
        assert_eq!(r.state.agent_pos, s.agent_pos);
        // On the slot: verbatim formation term is 0, nothing nearby.
        assert_eq!(r.rewards, vec![0.0; 3]);
        assert_eq!(r.collision_rewards, vec![0.0; 3]);
    }

    #[test]
    fn velocity_is_clipped_before_the_euler_step() {
        let c = EnvConfig::default();
        let s = quiet_state(&c);
        let mut acts = zeros(3);
        acts[0] = Action::new(Vec3::new(1.0, 0.0, 0.0));
        let r = step(&s, &acts, &c).unwrap();
        let d = r.state.agent_pos[0] - s.agent_pos[0];
        assert!((d - Vec3::new(0.05, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn close_drones_terminate_with_collision() {
        let mut c = EnvConfig::default();
        c.formation = vec![
            Vec3::new(0.0, 0.5, 1.5),
            Vec3::new(c.r_collide / 2.0, 0.5, 1.5),
            Vec3::new(1.0, 0.5, 1.5),
        ];
        let s = quiet_state(&c);
        let r = step(&s, &zeros(3), &c).unwrap();
        assert!(r.done);
        assert_eq!(r.reason, Some(DoneReason::Collision));
        assert_eq!(r.collided, vec![0, 1]);
        assert!(matches!(step(&r.state, &zeros(3), &c), Err(Error::EpisodeDone)));
    }

    #[test]
    fn non_finite_and_wrong_length_actions_are_rejected() {
        let c = EnvConfig::default();
        let s = quiet_state(&c);
        let mut acts = zeros(3);
        acts[2] = Action::new(Vec3::new(f64::NAN, 0.0, 0.0));
        assert!(matches!(step(&s, &acts, &c), Err(Error::Validation(_))));
        assert!(matches!(step(&s, &zeros(2), &c), Err(Error::Validation(_))));
    }

    #[test]
    fn collision_reward_branches() {
        let c = EnvConfig::default();
        let mut s = quiet_state(&c);
        s.arrow_active = false;
        assert_eq!(reward_collision(&s, 1, &c), 0.0);
        // Neighbour exactly at the emergency radius.
        s.agent_pos[0] = s.agent_pos[1] + Vec3::new(c.r_emergency, 0.0, 0.0);
        assert_eq!(s.agent_pos[0].distance(s.agent_pos[1]), c.r_emergency);
        assert_eq!(reward_collision(&s, 1, &c), -1.0);
        // On an arena face.
        let mut s = quiet_state(&c);
        s.arrow_active = false;
        s.agent_pos[2] = Vec3::new(c.arena.max.x, 0.5, 1.5);
        assert_eq!(reward_collision(&s, 2, &c), -1.0);
        let mut c2 = c.clone();
        c2.borders_as_obstacles = false;
        assert_eq!(reward_collision(&s, 2, &c2), 0.0);
    }

    #[test]
    fn formation_reward_branches() {
        let c = EnvConfig {
            r_formation: 0.25,
            ..EnvConfig::default()
        };
        let mut s = quiet_state(&c);
        assert_eq!(reward_formation(&s, 0, &c), 0.0);
        s.agent_pos[0] = c.formation[0] + Vec3::new(0.0, 0.0, 2.0 * c.r_formation);
        assert_eq!(reward_formation(&s, 0, &c), 0.01);
        s.agent_pos[0] = c.formation[0] + Vec3::new(0.0, 0.0, c.r_formation);
        assert_eq!(s.agent_pos[0].distance(c.formation[0]), c.r_formation);
        assert_eq!(reward_formation(&s, 0, &c), 0.01);
        let mut inv = c.clone();
        inv.formation_reward_inverted = true;
        assert_eq!(reward_formation(&s, 0, &inv), 0.0);
        assert_eq!(reward_formation(&quiet_state(&c), 0, &inv), 0.01);
    }

    #[test]
    fn still_swarm_survives_to_max_steps_when_arrow_aims_away() {
        let mut c = EnvConfig::default();
        c.arrow.aim = AimMode::Away;
        let mut s = reset(&c, 3).unwrap();
        let mut n = 0;
        loop {
            let r = step(&s, &zeros(3), &c).unwrap();
            n += 1;
            s = r.state;
            if r.done {
                assert_eq!(r.reason, Some(DoneReason::MaxSteps));
                break;
            }
        }
        assert_eq!(n, 50);
    }

    #[test]
    fn arrow_aimed_at_still_formation_hits_middle_drone() {
        let c = EnvConfig::default();
        let mut hits = 0;
        for seed in 0..50 {
            let mut s = reset(&c, seed).unwrap();
            loop {
                let r = step(&s, &zeros(3), &c).unwrap();
                s = r.state;
                if r.done {
                    if r.reason == Some(DoneReason::Collision) {
                        assert_eq!(r.collided, vec![1]);
                        assert_eq!(r.collision_rewards[1], -1.0);
                        hits += 1;
                    }
                    break;
                }
            }
        }
        assert!(hits >= 45, "only {hits}/50 hits");
    }

    #[test]
    fn arrow_exit_can_end_the_episode() {
        let mut c = EnvConfig::default();
        c.arrow.aim = AimMode::Away;
        c.end_on_arrow_exit = true;
        let mut s = reset(&c, 1).unwrap();
        let reason = loop {
            let r = step(&s, &zeros(3), &c).unwrap();
            s = r.state;
            if r.done {
                break r.reason.unwrap();
            }
        };
        assert_eq!(reason, DoneReason::ArrowPassed);
        assert!(s.t_step < 50);
        assert!(reason.is_success());
    }

    #[test]
    fn episode_log_writes_one_row_per_step() {
        let c = EnvConfig::default();
        let s = reset(&c, 0).unwrap();
        let mut log = EpisodeLog::new(Vec::new(), 3).unwrap();
        let r = step(&s, &zeros(3), &c).unwrap();
        log.record(&r).unwrap();
        let text = String::from_utf8(log.finish().unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("step,agent0_x,agent0_y,agent0_z"));
        assert!(lines[0].ends_with("reward2,done_reason"));
        assert_eq!(lines[1].split(',').count(), lines[0].split(',').count());
    }
}
